#include "gram.hpp"

#include <cmath>
#include <stdexcept>

namespace matrixrl {

namespace {
constexpr double kIneqSlack = 1e-9;  // absorbs float noise on tight inequalities
}

GramState::GramState(int dim, double lambda, int target_cols)
    : dim_(dim), lambda_(lambda) {
  if (dim < 1) throw std::invalid_argument("GramState: dim must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("GramState: lambda must be > 0");
  if (target_cols < 0) throw std::invalid_argument("GramState: target_cols must be >= 0");
  sigma_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
  chol_ = std::sqrt(lambda) * Eigen::MatrixXd::Identity(dim, dim);
  target_ = Eigen::MatrixXd::Zero(dim, target_cols);
}

GramState GramState::from_parts(Eigen::MatrixXd sigma, Eigen::MatrixXd target, double lambda,
                                double target_sq_norm, int count) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != target.rows())
    throw std::invalid_argument("GramState::from_parts: dimension mismatch");
  if (count < 0) throw std::invalid_argument("GramState::from_parts: negative count");
  GramState g(static_cast<int>(sigma.rows()), lambda, static_cast<int>(target.cols()));
  if ((sigma - sigma.transpose()).norm() > 1e-12 * (1.0 + sigma.norm()))
    throw std::invalid_argument("GramState::from_parts: sigma not symmetric");
  g.sigma_ = std::move(sigma);
  g.target_ = std::move(target);
  g.target_sq_ = target_sq_norm;
  g.count_ = count;
  g.refactor();
  return g;
}

void GramState::refactor() {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("GramState: Cholesky factorization failed");
  chol_ = llt.matrixL();
}

void GramState::absorb(const Eigen::Ref<const Eigen::VectorXd>& phi,
                       const Eigen::Ref<const Eigen::VectorXd>& psi_tilde) {
  if (phi.size() != dim_) throw std::invalid_argument("GramState::absorb: phi dimension mismatch");
  if (target_.cols() == 0) {
    if (psi_tilde.size() < 1)
      throw std::invalid_argument("GramState::absorb: psi_tilde must be nonempty");
    target_ = Eigen::MatrixXd::Zero(dim_, psi_tilde.size());
  } else if (psi_tilde.size() != target_.cols()) {
    throw std::invalid_argument("GramState::absorb: psi_tilde dimension mismatch");
  }
  sigma_.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
  sigma_ = sigma_.selfadjointView<Eigen::Lower>();  // keep full symmetric storage
  target_.noalias() += phi * psi_tilde.transpose();
  target_sq_ += psi_tilde.squaredNorm();
  ++count_;
  refactor();
}

Eigen::MatrixXd GramState::ridge_solve() const {
  if (target_.cols() == 0) return Eigen::MatrixXd::Zero(dim_, 0);
  Eigen::MatrixXd y = chol_.triangularView<Eigen::Lower>().solve(target_);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double GramState::inv_norm(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw std::invalid_argument("GramState::inv_norm: dimension mismatch");
  return chol_.triangularView<Eigen::Lower>().solve(x).norm();
}

double GramState::quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw std::invalid_argument("GramState::quad_form: dimension mismatch");
  return x.dot(sigma_ * x);
}

double GramState::weighted_sq_frobenius(const Eigen::Ref<const Eigen::MatrixXd>& delta) const {
  if (delta.rows() != dim_)
    throw std::invalid_argument("GramState::weighted_sq_frobenius: dimension mismatch");
  return (chol_.transpose() * delta).squaredNorm();
}

double GramState::log_det() const {
  return 2.0 * chol_.diagonal().array().log().sum();
}

namespace {

double max_norm(const std::vector<Eigen::VectorXd>& xs) {
  double mx = 0.0;
  for (const auto& x : xs) mx = std::max(mx, x.norm());
  return mx;
}

}  // namespace

DetLemmaReport check_det_lemma(const std::vector<Eigen::VectorXd>& xs, double lambda, double b) {
  if (!(lambda > 0.0)) throw std::invalid_argument("check_det_lemma: lambda must be > 0");
  if (!(b > 0.0)) throw std::invalid_argument("check_det_lemma: b must be > 0");
  DetLemmaReport rep;
  if (xs.empty()) return rep;  // lhs = 0, holds trivially

  const int d = static_cast<int>(xs.front().size());
  const double L = max_norm(xs);
  const auto m = static_cast<double>(xs.size());

  GramState running(d, lambda);
  const Eigen::VectorXd zero_target = Eigen::VectorXd::Zero(1);
  const double base_logdet = running.log_det();
  for (const auto& x : xs) {
    if (x.size() != d) throw std::invalid_argument("check_det_lemma: inconsistent dimensions");
    const double w = running.inv_norm(x);
    rep.lhs += std::min(b, w * w);
    running.absorb(x, zero_target);
  }
  rep.logdet_lhs = running.log_det() - base_logdet;
  rep.logdet_rhs = d * std::log1p(m * L * L / (lambda * d));
  rep.rhs = (1.0 + b) * rep.logdet_rhs;
  rep.holds =
      rep.lhs <= rep.rhs + kIneqSlack && rep.logdet_lhs <= rep.logdet_rhs + kIneqSlack;
  return rep;
}

LazyLemmaReport check_lazy_lemma(const std::vector<Eigen::VectorXd>& xs, double lambda,
                                 int horizon) {
  if (!(lambda > 0.0)) throw std::invalid_argument("check_lazy_lemma: lambda must be > 0");
  if (horizon < 1) throw std::invalid_argument("check_lazy_lemma: horizon must be >= 1");
  if (xs.size() % static_cast<std::size_t>(horizon) != 0)
    throw std::invalid_argument("check_lazy_lemma: sequence length must be N * horizon");
  LazyLemmaReport rep;
  if (xs.empty()) return rep;

  const int d = static_cast<int>(xs.front().size());
  const double L = max_norm(xs);
  const auto n_episodes = xs.size() / static_cast<std::size_t>(horizon);

  GramState stepwise(d, lambda);  // D_{n,h}, updated every step
  GramState frozen(d, lambda);    // D_n, refreshed at episode boundaries
  const Eigen::VectorXd zero_target = Eigen::VectorXd::Zero(1);
  const double base_logdet = stepwise.log_det();

  std::size_t idx = 0;
  for (std::size_t n = 0; n < n_episodes; ++n) {
    frozen = stepwise;
    for (int h = 0; h < horizon; ++h, ++idx) {
      const auto& x = xs[idx];
      if (x.size() != d) throw std::invalid_argument("check_lazy_lemma: inconsistent dimensions");
      rep.lhs += frozen.inv_norm(x);
      rep.rhs += 2.0 * stepwise.inv_norm(x);
      stepwise.absorb(x, zero_target);
    }
  }
  rep.logdet_term =
      (2.0 * horizon * L / std::sqrt(lambda)) * (stepwise.log_det() - base_logdet);
  rep.rhs += rep.logdet_term;
  rep.holds = rep.lhs <= rep.rhs + kIneqSlack;
  return rep;
}

QuadDetReport check_quad_det(const Eigen::MatrixXd& big, const Eigen::MatrixXd& small,
                             int n_probes, Rng& rng) {
  if (big.rows() != big.cols() || small.rows() != small.cols() || big.rows() != small.rows())
    throw std::invalid_argument("check_quad_det: matrices must be square and same size");
  if (n_probes < 1) throw std::invalid_argument("check_quad_det: n_probes must be >= 1");
  const int d = static_cast<int>(big.rows());

  Eigen::LLT<Eigen::MatrixXd> llt_big(big), llt_small(small);
  if (llt_big.info() != Eigen::Success || llt_small.info() != Eigen::Success)
    throw std::invalid_argument("check_quad_det: inputs must be positive definite");

  QuadDetReport rep;
  rep.log_det_gap = 2.0 * Eigen::MatrixXd(llt_big.matrixL()).diagonal().array().log().sum() -
                    2.0 * Eigen::MatrixXd(llt_small.matrixL()).diagonal().array().log().sum();

  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_probes; ++i) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    const double num = x.dot(big * x);
    const double den = x.dot(small * x);
    worst = std::max(worst, std::log(num) - std::log(den));
  }
  rep.max_log_ratio = worst;
  // ratio <= det ratio + slack, compared on the ratio scale without overflow
  if (rep.log_det_gap > 700.0) {
    rep.holds = true;
  } else {
    rep.holds = std::exp(rep.max_log_ratio) <= std::exp(rep.log_det_gap) + kIneqSlack;
  }
  return rep;
}

}  // namespace matrixrl
