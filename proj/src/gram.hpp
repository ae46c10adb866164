#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rng.hpp"

namespace matrixrl {

/// Regularized design matrix with accumulated regression targets.
///
/// Maintains sigma = lambda*I + sum_i phi_i phi_i^T together with a cached
/// lower Cholesky factor (refreshed on every absorb; full refactorization,
/// dimensions here are tiny) and target = sum_i phi_i psi_tilde_i^T.
/// Single-writer semantics: absorb mutates, everything else is const and
/// safe to call concurrently on an unchanging state.
class GramState {
 public:
  // target_cols may be 0, in which case the target width is fixed by the
  // first absorb.
  GramState(int dim, double lambda, int target_cols = 0);

  /// Rebuilds a state from serialized statistics; sigma must be symmetric
  /// positive definite.
  static GramState from_parts(Eigen::MatrixXd sigma, Eigen::MatrixXd target, double lambda,
                              double target_sq_norm, int count);

  void absorb(const Eigen::Ref<const Eigen::VectorXd>& phi,
              const Eigen::Ref<const Eigen::VectorXd>& psi_tilde);

  /// sigma^{-1} * target via Cholesky solves. Zero matrix before any absorb.
  Eigen::MatrixXd ridge_solve() const;

  /// sqrt(x^T sigma^{-1} x) via a single triangular solve.
  double inv_norm(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// x^T sigma x.
  double quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// ||sigma^{1/2} delta||_F^2 = ||L^T delta||_F^2.
  double weighted_sq_frobenius(const Eigen::Ref<const Eigen::MatrixXd>& delta) const;

  double log_det() const;

  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& chol() const { return chol_; }  // lower triangular
  const Eigen::MatrixXd& target() const { return target_; }
  /// Accumulated sum of ||psi_tilde||^2; constant part of the ridge objective.
  double target_sq_norm() const { return target_sq_; }
  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  int count() const { return count_; }
  int cols() const { return static_cast<int>(target_.cols()); }

 private:
  void refactor();

  int dim_;
  double lambda_;
  int count_ = 0;
  double target_sq_ = 0.0;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  Eigen::MatrixXd target_;
};

/// Two-sided report for the elliptical potential ("determinant lemma") bound
/// on a vector sequence: sum_q min(b, ||x_q||^2_{D_q^{-1}}) against
/// (1+b) d log(1 + M L^2 / (lambda d)), plus the log-det ratio bound
/// log det(D_{M+1}) - log det(lambda I) against d log(1 + M L^2 / (lambda d)).
/// L is taken as the max norm over the sequence.
struct DetLemmaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double logdet_lhs = 0.0;
  double logdet_rhs = 0.0;
  bool holds = true;
};

DetLemmaReport check_det_lemma(const std::vector<Eigen::VectorXd>& xs, double lambda, double b);

/// Lazy variant over N episodes of H steps: compares episode-frozen inverse
/// norms against twice the step-updated ones plus (2HL/sqrt(lambda)) times
/// the log-det ratio. xs.size() must be a multiple of horizon.
struct LazyLemmaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double logdet_term = 0.0;
  bool holds = true;
};

LazyLemmaReport check_lazy_lemma(const std::vector<Eigen::VectorXd>& xs, double lambda,
                                 int horizon);

/// Quadratic-form vs determinant-ratio inequality for B >= C > 0:
/// max over probes of (x^T B x)/(x^T C x) <= det(B)/det(C). Evaluated in log
/// space; `holds` uses an additive 1e-9 slack on the ratio scale.
struct QuadDetReport {
  double max_log_ratio = 0.0;
  double log_det_gap = 0.0;
  bool holds = true;
};

QuadDetReport check_quad_det(const Eigen::MatrixXd& big, const Eigen::MatrixXd& small,
                             int n_probes, Rng& rng);

}  // namespace matrixrl
