#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "entropy_triage/error.hpp"
#include "entropy_triage/stats/special_functions.hpp"

namespace entropy_triage::stats {

/// Dense column-major design matrix: columns()[j] is the j-th regressor.
struct Design {
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t cols() const { return columns.size(); }

  void add(std::string name, std::vector<double> column) {
    if (!columns.empty() && column.size() != rows()) {
      throw DomainError("design column '" + name + "' has mismatched length");
    }
    names.push_back(std::move(name));
    columns.push_back(std::move(column));
  }
};

struct OlsFit {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> t_statistics;
  std::vector<double> p_values;
  std::vector<double> residuals;
  double residual_variance = 0.0;
  std::size_t residual_df = 0;
};

namespace detail {

/// Householder QR of the design, kept in compact form. Rank deficiency is
/// detected by a relative threshold on |R_jj|.
class HouseholderQr {
 public:
  explicit HouseholderQr(const Design& x) : n_(x.rows()), p_(x.cols()), a_(x.columns) {
    if (p_ > n_) throw SingularityError("more regressors than observations");
    double scale = 0.0;
    for (const auto& c : a_)
      for (double v : c) scale = std::max(scale, std::fabs(v));
    tau_.assign(p_, 0.0);
    for (std::size_t k = 0; k < p_; ++k) {
      auto& col = a_[k];
      double norm = 0.0;
      for (std::size_t i = k; i < n_; ++i) norm += col[i] * col[i];
      norm = std::sqrt(norm);
      if (norm <= 1e-10 * std::max(scale, 1.0) * std::sqrt(static_cast<double>(n_))) {
        throw SingularityError("design matrix is rank deficient at column " +
                               (k < x.names.size() ? "'" + x.names[k] + "'" : std::to_string(k)));
      }
      const double alpha = col[k] > 0 ? -norm : norm;
      // v = col[k:] - alpha e_k, stored in place; tau = 2 / (v'v)
      col[k] -= alpha;
      double vtv = 0.0;
      for (std::size_t i = k; i < n_; ++i) vtv += col[i] * col[i];
      tau_[k] = 2.0 / vtv;
      for (std::size_t j = k + 1; j < p_; ++j) apply(k, a_[j]);
      diag_.push_back(alpha);
    }
  }

  /// Applies H_k to a vector of length n.
  void apply(std::size_t k, std::vector<double>& y) const {
    const auto& v = a_[k];
    double s = 0.0;
    for (std::size_t i = k; i < n_; ++i) s += v[i] * y[i];
    s *= tau_[k];
    for (std::size_t i = k; i < n_; ++i) y[i] -= s * v[i];
  }

  std::vector<double> solve(std::vector<double> y) const {
    for (std::size_t k = 0; k < p_; ++k) apply(k, y);
    std::vector<double> beta(p_, 0.0);
    for (std::size_t k = p_; k-- > 0;) {
      double s = y[k];
      for (std::size_t j = k + 1; j < p_; ++j) s -= r(k, j) * beta[j];
      beta[k] = s / diag_[k];
    }
    return beta;
  }

  double r(std::size_t i, std::size_t j) const { return i == j ? diag_[i] : a_[j][i]; }

  /// Diagonal of (R'R)^{-1} = (X'X)^{-1}.
  std::vector<double> inverse_gram_diagonal() const {
    // Rinv is upper triangular; (X'X)^{-1} = Rinv Rinv'.
    std::vector<std::vector<double>> rinv(p_, std::vector<double>(p_, 0.0));
    for (std::size_t j = 0; j < p_; ++j) {
      rinv[j][j] = 1.0 / diag_[j];
      for (std::size_t i = j; i-- > 0;) {
        double s = 0.0;
        for (std::size_t k = i + 1; k <= j; ++k) s += r(i, k) * rinv[k][j];
        rinv[i][j] = -s / diag_[i];
      }
    }
    std::vector<double> d(p_, 0.0);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = i; j < p_; ++j) d[i] += rinv[i][j] * rinv[i][j];
    return d;
  }

 private:
  std::size_t n_, p_;
  std::vector<std::vector<double>> a_;
  std::vector<double> tau_;
  std::vector<double> diag_;
};

}  // namespace detail

/// Residuals of y after least-squares projection onto the design columns.
inline std::vector<double> ols_residuals(const Design& x, std::span<const double> y) {
  if (y.size() != x.rows()) throw DomainError("response length does not match design");
  detail::HouseholderQr qr(x);
  const auto beta = qr.solve({y.begin(), y.end()});
  std::vector<double> res(y.begin(), y.end());
  for (std::size_t j = 0; j < x.cols(); ++j)
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= beta[j] * x.columns[j][i];
  return res;
}

/// Ordinary least squares with classical standard errors and two-sided
/// t-test p-values per coefficient.
inline OlsFit ols(const Design& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw DomainError("response length does not match design");
  if (n <= p) throw SingularityError("OLS needs more observations than regressors");
  detail::HouseholderQr qr(x);
  OlsFit fit;
  fit.names = x.names;
  fit.coefficients = qr.solve({y.begin(), y.end()});
  fit.residuals.assign(y.begin(), y.end());
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) fit.residuals[i] -= fit.coefficients[j] * x.columns[j][i];
  double rss = 0.0;
  for (double r : fit.residuals) rss += r * r;
  fit.residual_df = n - p;
  fit.residual_variance = rss / static_cast<double>(fit.residual_df);
  const auto inv_diag = qr.inverse_gram_diagonal();
  for (std::size_t j = 0; j < p; ++j) {
    const double se = std::sqrt(fit.residual_variance * inv_diag[j]);
    fit.standard_errors.push_back(se);
    const double t = se > 0.0 ? fit.coefficients[j] / se
                              : (fit.coefficients[j] == 0.0 ? 0.0 : INFINITY);
    fit.t_statistics.push_back(t);
    fit.p_values.push_back(student_t_two_sided(t, static_cast<double>(fit.residual_df)));
  }
  return fit;
}

}  // namespace entropy_triage::stats
