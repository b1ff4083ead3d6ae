// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "disprec/experiment.hpp"

namespace disprec {

// Resolved config as an ordered key-value list, embedded verbatim in every
// report so a run can be re-derived from its own header.
inline std::vector<std::pair<std::string, std::string>> config_provenance(
    const ExperimentConfig& cfg) {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("algorithm", algorithm_label(cfg.algorithm));
  kv.emplace_back("scheme", scheme_label(cfg.scheme.variant));
  kv.emplace_back("scheme_threshold", fmt(cfg.scheme.threshold));
  kv.emplace_back("scheme_separate_no_positive",
                  cfg.scheme.separate_no_positive_group ? "true" : "false");
  kv.emplace_back("folds", std::to_string(cfg.folds));
  kv.emplace_back("master_seed", std::to_string(cfg.master_seed));
  kv.emplace_back("eval_k", std::to_string(cfg.eval.k));
  kv.emplace_back("eval_relevance_threshold", fmt(cfg.eval.relevance_threshold));
  kv.emplace_back("eval_padding_ratio", fmt(cfg.eval.padding_ratio));
  kv.emplace_back("eval_graded_gains", cfg.eval.graded_gains ? "true" : "false");
  kv.emplace_back("knn_min_k", std::to_string(cfg.knn.min_k));
  kv.emplace_back("knn_max_k", std::to_string(cfg.knn.max_k));
  kv.emplace_back("knn_min_support", std::to_string(cfg.knn.min_support));
  kv.emplace_back("knn_clamp", cfg.knn.clamp ? "true" : "false");
  kv.emplace_back("svd_n_factors", std::to_string(cfg.svd.n_factors));
  kv.emplace_back("svd_n_epochs", std::to_string(cfg.svd.n_epochs));
  kv.emplace_back("svd_learning_rate", fmt(cfg.svd.learning_rate));
  kv.emplace_back("svd_regularization", fmt(cfg.svd.regularization));
  kv.emplace_back("svd_init_std", fmt(cfg.svd.init_std));
  kv.emplace_back("svd_clamp", cfg.svd.clamp ? "true" : "false");
  return kv;
}

namespace detail {

inline std::string metric_cell(const MetricPair& mp) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  if (std::isnan(mp.partitioned_mean)) return "n/a";
  os << mp.partitioned_mean;
  if (mp.improved) os << " *improved*";
  if (mp.p_adjusted < 0.05) {
    os << " †p=" << std::setprecision(3) << mp.p_adjusted;
  }
  return os.str();
}

}  // namespace detail

// Human-readable aligned-column table, one block per group.
inline void write_report_table(const ComparisonReport& report, std::ostream& out) {
  out << "# pooled vs partitioned comparison\n";
  for (const auto& [k, v] : config_provenance(report.config))
    out << "# " << k << " = " << v << '\n';
  out << "# dataset: " << report.n_ratings << " ratings, " << report.n_users
      << " users\n\n";

  out << std::left << std::setw(26) << "group" << std::setw(9) << "users"
      << std::setw(12) << "metric" << std::setw(10) << "pooled"
      << std::setw(28) << "partitioned" << std::setw(10) << "t"
      << std::setw(10) << "p" << "p(adj)" << '\n';
  out << std::string(104, '-') << '\n';
  std::ostringstream num;
  for (const GroupResult& gr : report.groups) {
    for (std::size_t m = 0; m < 3; ++m) {
      const MetricPair& mp = gr.metrics[m];
      out << std::left << std::setw(26) << (m == 0 ? gr.label : "")
          << std::setw(9) << (m == 0 ? std::to_string(gr.n_users) : "")
          << std::setw(12) << kMetricNames[m];
      auto fixed3 = [](double v) {
        if (std::isnan(v)) return std::string("n/a");
        std::ostringstream os;
        os << std::fixed << std::setprecision(3) << v;
        return os.str();
      };
      out << std::setw(10) << fixed3(mp.pooled_mean) << std::setw(28)
          << detail::metric_cell(mp);
      if (gr.excluded) {
        out << std::setw(10) << "n/a" << std::setw(10) << "n/a" << "n/a";
      } else {
        out << std::setw(10) << fixed3(mp.t) << std::setw(10)
            << fixed3(mp.p_raw) << fixed3(mp.p_adjusted);
      }
      out << '\n';
    }
  }
  if (!report.warnings.empty()) {
    out << "\n# warnings\n";
    for (const std::string& w : report.warnings) out << "# " << w << '\n';
  }
}

inline void write_report_csv(const ComparisonReport& report, std::ostream& out) {
  for (const auto& [k, v] : config_provenance(report.config))
    out << "# " << k << " = " << v << '\n';
  out << "group,nUsers,metric,pooledMean,partitionedMean,t,pRaw,pAdjusted,improved,excluded";
  for (int f = 0; f < report.config.folds; ++f)
    out << ",pooledFold" << f << ",partitionedFold" << f;
  out << '\n';
  std::ostringstream os;
  os << std::setprecision(17);
  for (const GroupResult& gr : report.groups) {
    for (std::size_t m = 0; m < 3; ++m) {
      const MetricPair& mp = gr.metrics[m];
      os.str("");
      os << gr.label << ',' << gr.n_users << ',' << kMetricNames[m] << ','
         << mp.pooled_mean << ',' << mp.partitioned_mean << ',' << mp.t << ','
         << mp.p_raw << ',' << mp.p_adjusted << ','
         << (mp.improved ? "true" : "false") << ','
         << (gr.excluded ? "true" : "false");
      for (std::size_t f = 0; f < mp.pooled.size(); ++f)
        os << ',' << mp.pooled[f] << ',' << mp.partitioned[f];
      out << os.str() << '\n';
    }
  }
}

inline nlohmann::json report_to_json(const ComparisonReport& report) {
  nlohmann::json j;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_provenance(report.config)) cfg[k] = v;
  j["config"] = cfg;
  j["dataset"] = {{"n_ratings", report.n_ratings}, {"n_users", report.n_users}};
  j["warnings"] = report.warnings;
  j["groups"] = nlohmann::json::array();
  for (const GroupResult& gr : report.groups) {
    nlohmann::json g;
    g["label"] = gr.label;
    g["n_users"] = gr.n_users;
    g["excluded"] = gr.excluded;
    g["warnings"] = gr.warnings;
    for (std::size_t m = 0; m < 3; ++m) {
      const MetricPair& mp = gr.metrics[m];
      nlohmann::json mj;
      auto num = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
      };
      mj["pooled_folds"] = nlohmann::json::array();
      mj["partitioned_folds"] = nlohmann::json::array();
      for (double v : mp.pooled) mj["pooled_folds"].push_back(num(v));
      for (double v : mp.partitioned) mj["partitioned_folds"].push_back(num(v));
      mj["pooled_mean"] = num(mp.pooled_mean);
      mj["partitioned_mean"] = num(mp.partitioned_mean);
      if (!gr.excluded) {
        mj["t"] = num(mp.t);
        mj["p_raw"] = num(mp.p_raw);
        mj["p_adjusted"] = num(mp.p_adjusted);
      }
      mj["improved"] = mp.improved;
      g[kMetricNames[m]] = mj;
    }
    j["groups"].push_back(g);
  }
  return j;
}

inline void write_report_json(const ComparisonReport& report, std::ostream& out) {
  out << report_to_json(report).dump(2) << '\n';
}

}  // namespace disprec
