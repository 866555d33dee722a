#include "fprobe/probes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "fprobe/error.hpp"
#include "fprobe/rng.hpp"
#include "parallel.hpp"
#include "probe_internal.hpp"

namespace fprobe {

std::string to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::linear: return "linear";
    case ProbeKind::mlp: return "mlp";
    case ProbeKind::circular: return "circular";
  }
  return "unknown";
}

ProbeKind parse_probe_kind(std::string_view name) {
  if (name == "linear") return ProbeKind::linear;
  if (name == "mlp") return ProbeKind::mlp;
  if (name == "circular") return ProbeKind::circular;
  throw DomainError("unknown probe kind '" + std::string(name) + "'");
}

double cohen_kappa(double accuracy, std::size_t period) {
  if (period < 2) throw DomainError("cohen_kappa needs T >= 2");
  const double chance = 1.0 / static_cast<double>(period);
  return 100.0 * (accuracy - chance) / (1.0 - chance);
}

std::vector<std::size_t> stratified_folds(std::span<const std::size_t> labels,
                                          std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw DomainError("n_folds must be >= 2");
  // Group indices by class, classes ordered by first appearance.
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> slot_of_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t label = labels[i];
    if (label >= slot_of_label.size()) slot_of_label.resize(label + 1, SIZE_MAX);
    if (slot_of_label[label] == SIZE_MAX) {
      slot_of_label[label] = members.size();
      members.emplace_back();
    }
    members[slot_of_label[label]].push_back(i);
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> fold_of(labels.size(), 0);
  std::size_t counter = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& group = members[c];
    if (group.size() < 2) {
      throw DomainError("fold missing a class: class with first member " +
                        std::to_string(group.front()) + " has a single sample");
    }
    rng.shuffle(std::span(group));
    for (auto index : group) fold_of[index] = counter++ % n_folds;
  }
  return fold_of;
}

namespace detail {

Standardizer Standardizer::fit(const RowMatrix& x, bool enabled) {
  Standardizer s;
  const auto d = x.cols();
  if (!enabled) {
    s.mean = Eigen::RowVectorXd::Zero(d);
    s.scale = Eigen::RowVectorXd::Ones(d);
    return s;
  }
  s.mean = x.colwise().mean();
  s.scale = ((x.rowwise() - s.mean).array().square().colwise().sum() /
             static_cast<double>(x.rows()))
                .sqrt()
                .matrix();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

RowMatrix Standardizer::apply(const RowMatrix& x) const {
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

std::vector<std::size_t> argmax_rows(const RowMatrix& scores) {
  std::vector<std::size_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

namespace {

// Objective and gradient of the multinomial logistic loss over packed
// parameters [vec(W) (column-major d x T), b].
struct LogisticObjective {
  const RowMatrix& x;
  std::span<const std::size_t> labels;
  Eigen::Index d;
  Eigen::Index t;
  double l2;

  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), d, t);
    const Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + d * t, t);
    RowMatrix z = (x * w).rowwise() + b;
    const Eigen::VectorXd row_max = z.rowwise().maxCoeff();
    z.colwise() -= row_max;
    RowMatrix p = z.array().exp().matrix();
    const Eigen::VectorXd sums = p.rowwise().sum();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
      loss += std::log(sums(i)) - z(i, y);
      p.row(i) /= sums(i);
      p(i, y) -= 1.0;
    }
    loss += 0.5 * l2 * w.squaredNorm();
    grad.resize(theta.size());
    Eigen::Map<Eigen::MatrixXd> gw(grad.data(), d, t);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + d * t, t);
    gw.noalias() = x.transpose() * p;
    gw += l2 * w;
    gb = p.colwise().sum();
    return loss;
  }
};

}  // namespace

LogisticModel fit_logistic(const RowMatrix& x, std::span<const std::size_t> labels,
                           std::size_t n_classes, const ProbeConfig& config) {
  const Eigen::Index d = x.cols();
  const auto t = static_cast<Eigen::Index>(n_classes);
  const LogisticObjective objective{x, labels, d, t, config.l2};

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d * t + t);
  Eigen::VectorXd grad;
  double f = objective(theta, grad);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  LogisticModel model;
  Eigen::VectorXd trial_grad;
  std::size_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    if (grad.norm() <= config.tolerance) {
      model.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, grad.norm());
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad / std::max(1.0, grad.norm());
      slope = grad.dot(direction);
    }
    // Backtracking Armijo line search.
    double step = 1.0;
    Eigen::VectorXd trial;
    double f_trial = f;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      trial = theta + step * direction;
      f_trial = objective(trial, trial_grad);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = trial - theta;
    Eigen::VectorXd y = trial_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > config.lbfgs_history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(trial);
    grad = trial_grad;
    f = f_trial;
  }
  if (!model.converged && grad.norm() <= config.tolerance) model.converged = true;
  model.iterations = iter;
  model.gradient_norm = grad.norm();
  model.weights = Eigen::Map<const Eigen::MatrixXd>(theta.data(), d, t);
  model.bias = Eigen::Map<const Eigen::RowVectorXd>(theta.data() + d * t, t);
  return model;
}

namespace {

struct MlpParams {
  Eigen::MatrixXd w1;  // d x H
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;  // H x T
  Eigen::RowVectorXd b2;
};

RowMatrix mlp_logits(const MlpParams& p, const RowMatrix& x) {
  RowMatrix hidden = ((x * p.w1).rowwise() + p.b1).cwiseMax(0.0);
  return (hidden * p.w2).rowwise() + p.b2;
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;

  template <typename P, typename G>
  void update(P& param, const G& grad, P& m, P& v) const {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

MlpParams fit_mlp(const RowMatrix& x, std::span<const std::size_t> labels,
                  std::size_t n_classes, const ProbeConfig& config, SplitMix64& rng) {
  const Eigen::Index d = x.cols();
  const auto h = static_cast<Eigen::Index>(config.mlp_hidden);
  const auto t = static_cast<Eigen::Index>(n_classes);
  MlpParams p;
  p.w1.resize(d, h);
  p.w2.resize(h, t);
  const double s1 = std::sqrt(2.0 / static_cast<double>(d));
  const double s2 = std::sqrt(2.0 / static_cast<double>(h + t));
  for (Eigen::Index j = 0; j < h; ++j)
    for (Eigen::Index i = 0; i < d; ++i) p.w1(i, j) = s1 * rng.normal();
  for (Eigen::Index j = 0; j < t; ++j)
    for (Eigen::Index i = 0; i < h; ++i) p.w2(i, j) = s2 * rng.normal();
  p.b1 = Eigen::RowVectorXd::Zero(h);
  p.b2 = Eigen::RowVectorXd::Zero(t);

  MlpParams m{Eigen::MatrixXd::Zero(d, h), Eigen::RowVectorXd::Zero(h),
              Eigen::MatrixXd::Zero(h, t), Eigen::RowVectorXd::Zero(t)};
  MlpParams v = m;
  Adam adam{config.mlp_learning_rate};

  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, config.mlp_batch);
  for (std::size_t epoch = 0; epoch < config.mlp_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      RowMatrix xb(rows, d);
      for (Eigen::Index i = 0; i < rows; ++i) {
        xb.row(i) = x.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]));
      }
      const RowMatrix pre = (xb * p.w1).rowwise() + p.b1;
      const RowMatrix hidden = pre.cwiseMax(0.0);
      RowMatrix delta = softmax_rows((hidden * p.w2).rowwise() + p.b2);
      for (Eigen::Index i = 0; i < rows; ++i) {
        delta(i, static_cast<Eigen::Index>(labels[order[start + static_cast<std::size_t>(i)]])) -=
            1.0;
      }
      delta /= static_cast<double>(rows);
      const Eigen::MatrixXd g_w2 = hidden.transpose() * delta + config.mlp_weight_decay * p.w2;
      const Eigen::RowVectorXd g_b2 = delta.colwise().sum();
      RowMatrix back = delta * p.w2.transpose();
      back = back.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
      const Eigen::MatrixXd g_w1 = xb.transpose() * back + config.mlp_weight_decay * p.w1;
      const Eigen::RowVectorXd g_b1 = back.colwise().sum();
      ++adam.step;
      adam.update(p.w1, g_w1, m.w1, v.w1);
      adam.update(p.b1, g_b1, m.b1, v.b1);
      adam.update(p.w2, g_w2, m.w2, v.w2);
      adam.update(p.b2, g_b2, m.b2, v.b2);
    }
  }
  return p;
}

RowMatrix select_rows(const RowMatrix& x, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

RunOutcome train_and_predict(const RowMatrix& x_train, std::span<const std::size_t> y_train,
                             const RowMatrix& x_test, std::size_t n_classes,
                             const ProbeConfig& config, SplitMix64& rng) {
  RunOutcome out;
  switch (config.kind) {
    case ProbeKind::linear: {
      const auto model = fit_logistic(x_train, y_train, n_classes, config);
      out.predictions = argmax_rows((x_test * model.weights).rowwise() + model.bias);
      out.converged = model.converged;
      out.gradient_norm = model.gradient_norm;
      break;
    }
    case ProbeKind::mlp: {
      const auto params = fit_mlp(x_train, y_train, n_classes, config, rng);
      out.predictions = argmax_rows(mlp_logits(params, x_test));
      break;
    }
    case ProbeKind::circular: {
      const auto probe = fit_circular(x_train, y_train, n_classes, config, rng);
      const RowMatrix projected = probe.project(x_test);
      for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        if (projected.row(i).isZero(0.0)) ++out.degenerate_points;
      }
      out.predictions = probe.classify(x_test);
      break;
    }
  }
  return out;
}

void check_config(const ProbeConfig& config, std::size_t n_tokens) {
  if (config.period < 2) throw DomainError("probe period must be >= 2");
  if (config.n_seeds < 1) throw DomainError("n_seeds must be >= 1");
  if (config.n_folds < 2) throw DomainError("n_folds must be >= 2");
  if (n_tokens < 2 * config.period) {
    throw DomainError("probe needs N >= 2T (N = " + std::to_string(n_tokens) +
                      ", T = " + std::to_string(config.period) + ")");
  }
  if (config.kind == ProbeKind::circular && config.circular_anchors != 0 &&
      config.circular_anchors != config.period) {
    throw DomainError("circular probe anchor count must equal T");
  }
}

}  // namespace
}  // namespace detail

ProbeResult run_probe(const EmbeddingTable& table, std::span<const std::size_t> labels_in,
                      const ProbeConfig& config) {
  detail::check_config(config, table.n_tokens());
  if (labels_in.size() != table.n_tokens()) throw DomainError("one label per token required");
  for (auto l : labels_in) {
    if (l >= config.period) throw DomainError("label outside [0, T)");
  }
  // Classes are renumbered by first appearance, so a relabeled input trains
  // exactly the same models (the MLP init would otherwise tie to label ids).
  std::vector<std::size_t> slot(config.period, SIZE_MAX);
  std::size_t next_slot = 0;
  for (auto l : labels_in) {
    if (slot[l] == SIZE_MAX) slot[l] = next_slot++;
  }
  for (auto& v : slot) {
    if (v == SIZE_MAX) v = next_slot++;
  }
  std::vector<std::size_t> labels(labels_in.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = slot[labels_in[i]];

  std::vector<std::vector<std::size_t>> folds_by_seed;
  for (std::size_t s = 0; s < config.n_seeds; ++s) {
    folds_by_seed.push_back(stratified_folds(
        labels, config.n_folds, SplitMix64::derive(config.base_seed + s, 0)));
  }

  ProbeResult result;
  result.config = config;
  result.runs.resize(config.n_seeds * config.n_folds);
  const RowMatrix& x = table.values();
  detail::parallel_for(result.runs.size(), [&](std::size_t task) {
    const std::size_t s = task / config.n_folds;
    const std::size_t fold = task % config.n_folds;
    const std::uint64_t seed = config.base_seed + s;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (folds_by_seed[s][i] == fold ? test : train).push_back(i);
    }
    std::vector<std::size_t> y_train(train.size()), y_test(test.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = labels[train[i]];
    for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = labels[test[i]];

    const RowMatrix raw_train = detail::select_rows(x, train);
    const auto standardizer = detail::Standardizer::fit(raw_train, config.standardize);
    const RowMatrix x_train = standardizer.apply(raw_train);
    const RowMatrix x_test = standardizer.apply(detail::select_rows(x, test));

    SplitMix64 rng(SplitMix64::derive(seed, fold + 1));
    const auto outcome =
        detail::train_and_predict(x_train, y_train, x_test, config.period, config, rng);

    ProbeRun& run = result.runs[task];
    run.seed = seed;
    run.fold = fold;
    run.n_test = test.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) correct += outcome.predictions[i] == y_test[i];
    run.accuracy = test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
    run.converged = outcome.converged;
    run.final_gradient_norm = outcome.gradient_norm;
    run.degenerate_points = outcome.degenerate_points;
  });

  double sum = 0.0;
  for (const auto& run : result.runs) sum += run.accuracy;
  result.accuracy = sum / static_cast<double>(result.runs.size());
  result.kappa = cohen_kappa(result.accuracy, config.period);
  return result;
}

namespace {

std::vector<std::size_t> residue_labels(std::size_t n, std::size_t period) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % period;
  return labels;
}

}  // namespace

ProbeResult linear_probe(const EmbeddingTable& table, ProbeConfig config) {
  config.kind = ProbeKind::linear;
  if (config.period < 2) throw DomainError("probe period must be >= 2");
  return run_probe(table, residue_labels(table.n_tokens(), config.period), config);
}

ProbeResult mlp_probe(const EmbeddingTable& table, ProbeConfig config) {
  config.kind = ProbeKind::mlp;
  if (config.period < 2) throw DomainError("probe period must be >= 2");
  return run_probe(table, residue_labels(table.n_tokens(), config.period), config);
}

CircularProbeReport circular_probe(const EmbeddingTable& table, ProbeConfig config) {
  config.kind = ProbeKind::circular;
  if (config.period < 2) throw DomainError("probe period must be >= 2");
  const auto labels = residue_labels(table.n_tokens(), config.period);
  CircularProbeReport report;
  report.result = run_probe(table, labels, config);

  const auto standardizer = detail::Standardizer::fit(table.values(), config.standardize);
  SplitMix64 rng(SplitMix64::derive(config.base_seed, 0xC1DCu));
  report.probe = detail::fit_circular(standardizer.apply(table.values()), labels,
                                      config.period, config, rng);
  report.probe.feature_mean = standardizer.mean.transpose();
  report.probe.feature_scale = standardizer.scale.transpose();
  report.projections = report.probe.project(table.values());
  return report;
}

std::vector<SweepCell> probe_sweep(const EmbeddingTable& table,
                                   std::span<const std::size_t> periods,
                                   std::span<const ProbeKind> kinds, const ProbeConfig& base) {
  std::vector<SweepCell> cells;
  for (auto period : periods) {
    for (auto kind : kinds) {
      SweepCell cell;
      cell.period = period;
      cell.kind = kind;
      ProbeConfig config = base;
      config.period = period;
      config.kind = kind;
      try {
        if (period < 2) throw DomainError("probe period must be >= 2");
        cell.result = kind == ProbeKind::circular
                          ? circular_probe(table, config).result
                          : run_probe(table, residue_labels(table.n_tokens(), period), config);
      } catch (const Error& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace fprobe
