// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <vector>

#include "disprec/model.hpp"
#include "disprec/ratings.hpp"
#include "disprec/rng.hpp"

namespace disprec {

struct SvdParams {
  int n_factors = 10;
  int n_epochs = 20;
  double learning_rate = 0.005;
  double regularization = 0.02;
  double init_std = 0.1;
  std::uint64_t seed = 0;
  bool clamp = true;

  void validate() const {
    if (n_factors < 1) throw InputError("svd: n_factors must be >= 1");
    if (n_epochs < 0) throw InputError("svd: n_epochs must be >= 0");
    if (learning_rate <= 0.0 || regularization < 0.0 || init_std < 0.0)
      throw InputError("svd: learning_rate must be positive, regularization and init_std non-negative");
  }
};

// Biased latent-factor model: estimate = mu + b_u + b_i + q_i . p_u.
class SvdModel : public Recommender {
 public:
  SvdModel(std::shared_ptr<const Dataset> train, SvdParams params,
           std::vector<double> user_bias, std::vector<double> item_bias,
           std::vector<double> user_factors, std::vector<double> item_factors)
      : train_(std::move(train)),
        params_(params),
        user_bias_(std::move(user_bias)),
        item_bias_(std::move(item_bias)),
        user_factors_(std::move(user_factors)),
        item_factors_(std::move(item_factors)) {}

  const SvdParams& params() const { return params_; }
  const Dataset& train() const { return *train_; }
  std::shared_ptr<const Dataset> train_handle() const { return train_; }
  const std::vector<double>& user_bias() const { return user_bias_; }
  const std::vector<double>& item_bias() const { return item_bias_; }
  const std::vector<double>& user_factors() const { return user_factors_; }
  const std::vector<double>& item_factors() const { return item_factors_; }

  Prediction predict(std::int64_t user_id, std::int64_t item_id) const override {
    const Dataset& ds = *train_;
    const int u = ds.user_index(user_id);
    const int i = ds.item_index(item_id);
    Prediction p;
    double est = ds.global_mean();
    if (u < 0 && i < 0) {
      p.fallback_level = FallbackLevel::GlobalMean;
    } else if (u < 0 || i < 0) {
      // Unknown entity drops its bias and the interaction term.
      est += u >= 0 ? user_bias_[u] : item_bias_[i];
      p.fallback_level = FallbackLevel::AxisMeanOnly;
    } else {
      est += user_bias_[u] + item_bias_[i];
      const int f = params_.n_factors;
      const double* pu = &user_factors_[static_cast<std::size_t>(u) * f];
      const double* qi = &item_factors_[static_cast<std::size_t>(i) * f];
      double dot = 0.0;
      for (int t = 0; t < f; ++t) dot += pu[t] * qi[t];
      est += dot;
      p.fallback_level = FallbackLevel::Full;
    }
    p.estimate = params_.clamp ? clamp_rating(est) : est;
    return p;
  }

 private:
  std::shared_ptr<const Dataset> train_;
  SvdParams params_;
  std::vector<double> user_bias_, item_bias_;
  std::vector<double> user_factors_, item_factors_;
};

// Regularized squared loss over the training set for the given parameters;
// used by the convergence and gradient checks.
inline double svd_regularized_loss(const Dataset& ds, int n_factors, double reg,
                                   const std::vector<double>& bu,
                                   const std::vector<double>& bi,
                                   const std::vector<double>& pu,
                                   const std::vector<double>& qi) {
  double loss = 0.0;
  const double mu = ds.global_mean();
  for (const Rating& r : ds.ratings()) {
    const int u = ds.user_index(r.user_id);
    const int i = ds.item_index(r.item_id);
    double dot = 0.0;
    for (int t = 0; t < n_factors; ++t)
      dot += pu[static_cast<std::size_t>(u) * n_factors + t] *
             qi[static_cast<std::size_t>(i) * n_factors + t];
    const double e = r.value - (mu + bu[u] + bi[i] + dot);
    loss += e * e;
  }
  double penalty = 0.0;
  for (double v : bu) penalty += v * v;
  for (double v : bi) penalty += v * v;
  for (double v : pu) penalty += v * v;
  for (double v : qi) penalty += v * v;
  return loss + reg * penalty;
}

// Funk SVD by per-rating SGD. Factors are initialized from a seeded normal
// (users first, then items, factor-major); each epoch visits ratings in a
// fresh seeded shuffle order. Factor updates use the pre-update p_u.
// Optional per-epoch loss trace for convergence checks.
inline SvdModel fit_svd(std::shared_ptr<const Dataset> train, SvdParams params,
                        std::vector<double>* loss_trace = nullptr) {
  params.validate();
  if (!train || train->empty()) throw InputError("fit_svd: empty training set");
  const Dataset& ds = *train;
  const int nu = static_cast<int>(ds.n_users());
  const int ni = static_cast<int>(ds.n_items());
  const int f = params.n_factors;

  std::vector<double> bu(nu, 0.0), bi(ni, 0.0);
  std::vector<double> pu(static_cast<std::size_t>(nu) * f);
  std::vector<double> qi(static_cast<std::size_t>(ni) * f);
  Rng init_rng(derive_seed(params.seed, 0xF0));
  for (double& v : pu) v = params.init_std * init_rng.gaussian();
  for (double& v : qi) v = params.init_std * init_rng.gaussian();

  if (loss_trace)
    loss_trace->push_back(svd_regularized_loss(ds, f, params.regularization,
                                               bu, bi, pu, qi));

  const double lr = params.learning_rate;
  const double reg = params.regularization;
  std::vector<int> order(ds.n_ratings());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pu_old(f);
  const double mu = ds.global_mean();

  for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(params.seed, 0xE0, epoch));
    shuffle(order, shuffle_rng);
    for (int ridx : order) {
      const Rating& r = ds.rating(ridx);
      const int u = ds.user_index(r.user_id);
      const int i = ds.item_index(r.item_id);
      double* pv = &pu[static_cast<std::size_t>(u) * f];
      double* qv = &qi[static_cast<std::size_t>(i) * f];
      double dot = 0.0;
      for (int t = 0; t < f; ++t) dot += pv[t] * qv[t];
      const double e = r.value - (mu + bu[u] + bi[i] + dot);
      if (!std::isfinite(e)) throw std::runtime_error("fit_svd: training diverged");
      bu[u] += lr * (e - reg * bu[u]);
      bi[i] += lr * (e - reg * bi[i]);
      for (int t = 0; t < f; ++t) pu_old[t] = pv[t];
      for (int t = 0; t < f; ++t) pv[t] += lr * (e * qv[t] - reg * pv[t]);
      for (int t = 0; t < f; ++t) qv[t] += lr * (e * pu_old[t] - reg * qv[t]);
    }
    if (loss_trace)
      loss_trace->push_back(svd_regularized_loss(ds, f, reg, bu, bi, pu, qi));
  }
  return SvdModel(std::move(train), params, std::move(bu), std::move(bi),
                  std::move(pu), std::move(qi));
}

}  // namespace disprec
