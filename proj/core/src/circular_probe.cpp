#include <cmath>
#include <numbers>

#include "fprobe/probes.hpp"
#include "probe_internal.hpp"

namespace fprobe {

namespace {

constexpr double kDegenerateNorm = 1e-8;

Eigen::MatrixXd anchor_matrix(const std::vector<double>& anchors) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(anchors.size()), 2);
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    a(static_cast<Eigen::Index>(k), 0) = std::cos(anchors[k]);
    a(static_cast<Eigen::Index>(k), 1) = std::sin(anchors[k]);
  }
  return a;
}

// Normalized projections (zero rows where ||W x|| is degenerate) and norms.
RowMatrix unit_projections(const RowMatrix& x, const Eigen::MatrixXd& w,
                           Eigen::VectorXd* norms = nullptr) {
  RowMatrix z = x * w;
  Eigen::VectorXd r = z.rowwise().norm();
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (r(i) < kDegenerateNorm) {
      z.row(i).setZero();
    } else {
      z.row(i) /= r(i);
    }
  }
  if (norms) *norms = std::move(r);
  return z;
}

struct CircularFit {
  Eigen::MatrixXd w;
  double loss = 0.0;
};

CircularFit train(const RowMatrix& x, std::span<const std::size_t> labels,
                  const Eigen::MatrixXd& anchors, Eigen::MatrixXd w, const ProbeConfig& config) {
  const double tau = config.circular_temperature;
  const double lr = config.circular_learning_rate;
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  Eigen::MatrixXd v = m;
  const auto n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (std::size_t step = 1; step <= config.circular_epochs + 1; ++step) {
    Eigen::VectorXd r;
    const RowMatrix u = unit_projections(x, w, &r);
    const RowMatrix logits = u * anchors.transpose() / tau;
    RowMatrix p = detail::softmax_rows(logits);
    loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
      loss -= std::log(std::max(p(i, y), 1e-300));
      p(i, y) -= 1.0;
    }
    loss /= n;
    if (step > config.circular_epochs) break;  // final pass only measures the loss
    const RowMatrix grad_u = p * anchors / (tau * n);
    RowMatrix grad_z(u.rows(), 2);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (r(i) < kDegenerateNorm) {
        grad_z.row(i).setZero();
        continue;
      }
      const double radial = grad_u.row(i).dot(u.row(i));
      grad_z.row(i) = (grad_u.row(i) - radial * u.row(i)) / r(i);
    }
    const Eigen::MatrixXd g = x.transpose() * grad_z;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
  return {std::move(w), loss};
}

}  // namespace

RowMatrix CircularProbe::project(const RowMatrix& x) const {
  RowMatrix standardized = x;
  if (feature_mean.size() == x.cols()) {
    standardized = ((x.rowwise() - feature_mean.transpose()).array().rowwise() /
                    feature_scale.transpose().array())
                       .matrix();
  }
  return unit_projections(standardized, projection);
}

std::vector<std::size_t> CircularProbe::classify(const RowMatrix& x) const {
  return detail::argmax_rows(project(x) * anchor_matrix(anchors).transpose());
}

namespace detail {

CircularProbe fit_circular(const RowMatrix& x, std::span<const std::size_t> labels,
                           std::size_t n_classes, const ProbeConfig& config,
                           SplitMix64& rng) {
  const std::size_t m = config.circular_anchors == 0 ? n_classes : config.circular_anchors;
  CircularProbe probe;
  probe.temperature = config.circular_temperature;
  for (std::size_t k = 0; k < m; ++k) {
    probe.anchors.push_back(2.0 * std::numbers::pi * static_cast<double>(k) /
                            static_cast<double>(m));
  }
  const Eigen::MatrixXd anchors = anchor_matrix(probe.anchors);

  // A 2-D projection cannot change orientation without passing through a
  // degenerate map, so both handednesses of the initial W are trained.
  const double sd = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  Eigen::MatrixXd w0(x.cols(), 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < x.cols(); ++i) w0(i, j) = sd * rng.normal();
  Eigen::MatrixXd mirrored = w0;
  mirrored.col(1) *= -1.0;

  auto best = train(x, labels, anchors, w0, config);
  auto other = train(x, labels, anchors, mirrored, config);
  if (other.loss < best.loss) best = std::move(other);
  probe.projection = std::move(best.w);
  probe.feature_mean = Eigen::VectorXd::Zero(x.cols());
  probe.feature_scale = Eigen::VectorXd::Ones(x.cols());
  return probe;
}

}  // namespace detail

}  // namespace fprobe
