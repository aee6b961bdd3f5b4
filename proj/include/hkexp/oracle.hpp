#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hkexp/mehler.hpp"
#include "hkexp/polynomial.hpp"

namespace hkexp::oracle {

/// Normalized Hermite functions psi_0..psi_{count-1} at u, by the three-term recurrence
///   psi_{k+1} = sqrt(2/(k+1)) u psi_k - sqrt(k/(k+1)) psi_{k-1}.
inline void hermite_functions(double u, int count, std::span<double> out) {
  if (count <= 0) return;
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u * u);
  if (count == 1) return;
  out[1] = std::sqrt(2.0) * u * out[0];
  for (int k = 1; k + 1 < count; ++k)
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * u * out[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
}

/// Eigenfunctions of the one-dimensional A: phi_k(x) = hbar^{-1/4} psi_k(x / sqrt(hbar)).
inline std::vector<double> oscillator_functions(double x, double hbar, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  hermite_functions(x / std::sqrt(hbar), count, out);
  const double scale = std::pow(hbar, -0.25);
  for (double& v : out) v *= scale;
  return out;
}

/// Matrix of x in the eigenbasis of the one-dimensional A: sqrt(hbar/2) (a + a^dagger).
inline Eigen::MatrixXd position_matrix(int size, double hbar) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(size, size);
  const double c = std::sqrt(0.5 * hbar);
  for (int k = 0; k + 1 < size; ++k) x(k, k + 1) = x(k + 1, k) = c * std::sqrt(static_cast<double>(k + 1));
  return x;
}

/// Matrices of x^0 .. x^d on states 0..size-1, exact: products are formed in a basis extended by d
/// and then truncated, so no truncation error enters the retained block.
inline std::vector<Eigen::MatrixXd> position_powers(int size, int d, double hbar) {
  const int ext = size + d;
  const Eigen::MatrixXd x = position_matrix(ext, hbar);
  std::vector<Eigen::MatrixXd> out;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(ext, ext);
  out.push_back(p.topLeftCorner(size, size));
  for (int k = 1; k <= d; ++k) {
    // p has bandwidth k - 1; multiply by the tridiagonal x band-wise.
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(ext, ext);
    for (int c = 0; c < ext; ++c)
      for (int r = std::max(0, c - k); r <= std::min(ext - 1, c + k); ++r) {
        double v = 0.0;
        if (c > 0) v += p(r, c - 1) * x(c - 1, c);
        if (c + 1 < ext) v += p(r, c + 1) * x(c + 1, c);
        next(r, c) = v;
      }
    p = std::move(next);
    out.push_back(p.topLeftCorner(size, size));
  }
  return out;
}

/// Gauss-Hermite rule (weight e^{-u^2}) by Golub-Welsch; returns nodes and the scaled weights
/// w_i e^{u_i^2} = 1 / sum_k psi_k(u_i)^2, which stay finite for large nodes.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> scaled_weights;
};

inline GaussHermiteRule gauss_hermite(int points) {
  if (points < 1) throw DomainError("Gauss-Hermite rule needs at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi, Eigen::EigenvaluesOnly);
  GaussHermiteRule rule;
  std::vector<double> psi(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double u = es.eigenvalues()(i);
    hermite_functions(u, points, psi);
    double sum = 0.0;
    for (double v : psi) sum += v * v;
    rule.nodes.push_back(u);
    rule.scaled_weights.push_back(1.0 / sum);
  }
  return rule;
}

/// Largest dense basis the oracle will diagonalize (memory grows as the square, time as the cube).
inline constexpr int kMaxBasisStates = 4096;

/// Basis of A-eigenstates with total quantum number below `levels`, for n = 1 or 2.
struct OscillatorBasis {
  int dim = 1;
  int levels = 0;
  std::vector<std::array<int, 2>> states;

  OscillatorBasis() = default;
  OscillatorBasis(int n, int k) : dim(n), levels(k) {
    if (n < 1 || n > 2) throw DomainError("the spectral oracle supports n = 1 or 2");
    if (k < 1) throw DomainError("basis must have at least one level");
    const long size = n == 1 ? k : static_cast<long>(k) * (k + 1) / 2;
    if (size > kMaxBasisStates)
      throw ResourceLimit("basis of " + std::to_string(size) + " states exceeds the limit of " +
                          std::to_string(kMaxBasisStates));
    for (int total = 0; total < k; ++total)
      for (int a = total; a >= 0; --a) {
        if (n == 1 && a != total) continue;
        states.push_back({a, total - a});
      }
  }
  int size() const { return static_cast<int>(states.size()); }
};

/// Eigen-decomposition of H = A + hbar^2 V in a truncated A-eigenbasis.
struct SpectralModel {
  double hbar = 0.0;
  OscillatorBasis basis;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal

  int dim() const { return basis.dim; }
  int levels() const { return basis.levels; }

  /// max |Q^T Q - I| over the eigenvector matrix.
  double orthogonality_defect() const {
    const Eigen::MatrixXd g = eigenvectors.transpose() * eigenvectors;
    return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }
};

namespace detail {

inline SpectralModel diagonalize(Eigen::MatrixXd h, double hbar, OscillatorBasis basis) {
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw InternalError("symmetric eigensolver did not converge");
  return {hbar, std::move(basis), es.eigenvalues(), es.eigenvectors()};
}

inline void require_hbar(double hbar) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw DomainError("hbar must be positive");
}

}  // namespace detail

/// Levels needed so that the free spectral weight beyond the basis, e^{-t hbar K}, is below eps.
inline int suggested_levels(double t, double hbar, double eps = 1e-16, int minimum = 16) {
  const double k = std::log(1.0 / eps) / (t * hbar);
  return std::max(minimum, static_cast<int>(std::ceil(k)) + 8);
}

/// H = A + hbar^2 V with A = diag(hbar |k|) and V built from exact ladder-operator powers.
inline SpectralModel build_hamiltonian(const Polynomial& potential, double hbar, int levels) {
  detail::require_hbar(hbar);
  if (levels < 16) throw DomainError("basis must have at least 16 levels");
  if (potential.degree() > 8) throw DomainError("oracle supports potentials of degree <= 8");
  const int n = potential.dim();
  OscillatorBasis basis(n, levels);
  const int d = std::max(potential.degree(), 0);
  const auto xp = position_powers(levels, d, hbar);
  const int size = basis.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) h(i, i) = hbar * (basis.states[i][0] + basis.states[i][1]);
  for (const auto& [alpha, c] : potential.terms()) {
    const double w = hbar * hbar * c.get_d();
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        const auto& si = basis.states[i];
        const auto& sj = basis.states[j];
        double v = xp[alpha[0]](si[0], sj[0]);
        if (n == 2) v *= xp[alpha[1]](si[1], sj[1]);
        h(i, j) += w * v;
      }
  }
  return detail::diagonalize(std::move(h), hbar, std::move(basis));
}

/// n = 1 with a pointwise potential; matrix elements by Gauss-Hermite quadrature.
inline SpectralModel build_hamiltonian(const std::function<double(double)>& potential, double hbar, int levels,
                                       int quadrature_points = 0) {
  detail::require_hbar(hbar);
  if (levels < 16) throw DomainError("basis must have at least 16 levels");
  const int points = quadrature_points > 0 ? quadrature_points : 2 * levels + 40;
  const GaussHermiteRule rule = gauss_hermite(points);
  OscillatorBasis basis(1, levels);
  Eigen::MatrixXd psi(levels, points);
  std::vector<double> buf(static_cast<std::size_t>(levels));
  Eigen::VectorXd weight(points);
  for (int q = 0; q < points; ++q) {
    hermite_functions(rule.nodes[q], levels, buf);
    for (int k = 0; k < levels; ++k) psi(k, q) = buf[k];
    weight(q) = rule.scaled_weights[q] * potential(std::sqrt(hbar) * rule.nodes[q]);
  }
  Eigen::MatrixXd h = hbar * hbar * (psi * weight.asDiagonal() * psi.transpose());
  for (int k = 0; k < levels; ++k) h(k, k) += hbar * k;
  return detail::diagonalize(std::move(h), hbar, std::move(basis));
}

/// Free spectral weight outside the basis: sum over states with total level >= K of e^{-t hbar N}.
inline double free_trace_tail(const SpectralModel& model, double t) {
  const double q = std::exp(-t * model.hbar);
  const double qk = std::pow(q, model.levels());
  const double k = model.levels();
  if (model.dim() == 1) return qk / (1.0 - q);
  // sum_{N >= K} (N + 1) q^N
  return qk * ((k + 1.0) / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
}

/// sum_j e^{-t lambda_j} over the retained eigenvalues only.
inline double heat_trace_truncated(const SpectralModel& model, double t) {
  if (!(t > 0.0)) throw DomainError("t must be positive");
  // Smallest terms first for a stable sum.
  double sum = 0.0;
  for (int j = static_cast<int>(model.eigenvalues.size()) - 1; j >= 0; --j) sum += std::exp(-t * model.eigenvalues(j));
  return sum;
}

/// Trace of e^{-tH}: retained eigenvalues plus the free-spectrum tail beyond the basis.
inline double heat_trace(const SpectralModel& model, double t) {
  return heat_trace_truncated(model, t) + free_trace_tail(model, t);
}

/// Basis functions of the model at a point.
inline Eigen::VectorXd basis_values(const SpectralModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim()) throw DimensionMismatch("point dimension differs from model");
  const int k = model.levels();
  const auto f0 = oscillator_functions(x[0], model.hbar, k);
  std::vector<double> f1;
  if (model.dim() == 2) f1 = oscillator_functions(x[1], model.hbar, k);
  Eigen::VectorXd out(model.basis.size());
  for (int i = 0; i < model.basis.size(); ++i) {
    const auto& s = model.basis.states[i];
    out(i) = f0[s[0]] * (model.dim() == 2 ? f1[s[1]] : 1.0);
  }
  return out;
}

/// e^{-tH}(x, x) = sum_j e^{-t lambda_j} |phi_j(x)|^2 over the retained eigenpairs.
inline double heat_kernel_diag(const SpectralModel& model, double t, std::span<const double> x) {
  if (!(t > 0.0)) throw DomainError("t must be positive");
  const Eigen::VectorXd amplitudes = model.eigenvectors.transpose() * basis_values(model, x);
  double sum = 0.0;
  for (int j = static_cast<int>(amplitudes.size()) - 1; j >= 0; --j)
    sum += std::exp(-t * model.eigenvalues(j)) * amplitudes(j) * amplitudes(j);
  return sum;
}

inline std::vector<double> heat_kernel_diag(const SpectralModel& model, double t,
                                            const std::vector<std::vector<double>>& xs) {
  std::vector<double> out;
  for (const auto& x : xs) out.push_back(heat_kernel_diag(model, t, x));
  return out;
}

/// Free kernel weight at x outside the basis: exact Mehler value minus the retained free modes.
inline double free_kernel_tail(const SpectralModel& model, double t, std::span<const double> x) {
  const Eigen::VectorXd phi = basis_values(model, x);
  double sum = 0.0;
  for (int i = model.basis.size() - 1; i >= 0; --i) {
    const auto& s = model.basis.states[i];
    sum += std::exp(-t * model.hbar * (s[0] + s[1])) * phi(i) * phi(i);
  }
  return std::max(0.0, mehler::kernel_at_time(x, x, t, model.hbar) - sum);
}

/// One hbar sample of the normalized on-diagonal defect.
struct DefectSample {
  double hbar = 0.0;
  double s = 0.0;
  std::vector<double> x;
  double defect = 0.0;      // [e^{-tA}(x,x) - e^{-tH}(x,x)] / P(s, hbar)
  double kernel_tail = 0.0; // free tail outside the basis, same normalization
  int levels = 0;
};

/// Fit of D(hbar) = c_1 hbar^2 + c_2 hbar^4 + ... at one point.
struct PointFit {
  std::vector<double> x;
  std::vector<double> coefficients;  // c_1, c_2, ...
  std::vector<double> residuals;     // per hbar sample
  std::vector<double> uncertainty;   // |c_k(full) - c_k(one term fewer)|
};

struct HSweepFit {
  double s = 0.0;
  std::vector<double> hbars;
  std::vector<DefectSample> samples;
  std::vector<PointFit> points;
  double condition_number = 0.0;
  double max_kernel_tail = 0.0;
};

struct FitOptions {
  int terms = 3;          // number of hbar^{2k} coefficients fitted
  int levels = 0;         // 0: chosen from t and hbar
  double tail_eps = 1e-16;
};

namespace detail {

/// Least squares of y_i / h_i^2 against 1, h_i^2, h_i^4, ...; returns coefficients.
inline Eigen::VectorXd fit_even_powers(const std::vector<double>& h, const std::vector<double>& y, int terms,
                                       double* condition = nullptr) {
  const int m = static_cast<int>(h.size());
  Eigen::MatrixXd a(m, terms);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    const double h2 = h[i] * h[i];
    for (int k = 0; k < terms; ++k) a(i, k) = std::pow(h2, k);
    b(i) = y[i] / h2;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (condition) {
    const auto& sv = svd.singularValues();
    *condition = sv(0) / sv(sv.size() - 1);
  }
  return svd.solve(b);
}

}  // namespace detail

/// Normalized defect of a pointwise potential model at one hbar (n = dim of points).
inline DefectSample defect_sample(const SpectralModel& model, double s, std::span<const double> x) {
  const double t = mehler::t_of_s(s, model.hbar);
  const double p = mehler::prefactor(s, model.hbar, static_cast<int>(x.size()));
  DefectSample out;
  out.hbar = model.hbar;
  out.s = s;
  out.x.assign(x.begin(), x.end());
  out.defect = (mehler::kernel_diag(x, s, model.hbar) - heat_kernel_diag(model, t, x)) / p;
  out.kernel_tail = free_kernel_tail(model, t, x) / p;
  out.levels = model.levels();
  return out;
}

/// hbar-sweep of the normalized defect D = [e^{-tA}(x,x) - e^{-tH}(x,x)] / P(s, hbar) and a least-squares
/// fit of D = c_1 hbar^2 + c_2 hbar^4 (+ c_3 hbar^6 ...).
inline HSweepFit fit_expansion(const Polynomial& potential, double s, const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& hbars, const FitOptions& options = {}) {
  if (hbars.size() < 3) throw DomainError("fit_expansion needs at least 3 hbar values");
  if (options.terms < 1 || options.terms > static_cast<int>(hbars.size()))
    throw DomainError("number of fitted terms must be between 1 and the number of hbar values");
  std::vector<double> sorted = hbars;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double ratio = sorted[1] / sorted[0];
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i] > 0.0)) throw DomainError("hbar values must be positive");
    if (std::abs(sorted[i] / sorted[i - 1] - ratio) > 1e-9 * ratio)
      throw DomainError("hbar values must form a geometric progression");
  }
  if (ratio >= 1.0) throw DomainError("hbar values must be distinct");
  if (!(sorted.front() * s < 0.5)) throw DomainError("fit_expansion needs max(hbar) * s < 0.5");
  for (const auto& x : xs)
    if (static_cast<int>(x.size()) != potential.dim()) throw DimensionMismatch("fit point dimension differs from V");

  HSweepFit fit;
  fit.s = s;
  fit.hbars = sorted;
  std::vector<std::vector<double>> defects(xs.size());
  for (double h : sorted) {
    const double t = mehler::t_of_s(s, h);
    const int levels = options.levels > 0 ? options.levels : suggested_levels(t, h, options.tail_eps);
    const SpectralModel model = build_hamiltonian(potential, h, levels);
    for (std::size_t p = 0; p < xs.size(); ++p) {
      DefectSample d = defect_sample(model, s, xs[p]);
      fit.max_kernel_tail = std::max(fit.max_kernel_tail, d.kernel_tail);
      defects[p].push_back(d.defect);
      fit.samples.push_back(std::move(d));
    }
  }
  for (std::size_t p = 0; p < xs.size(); ++p) {
    PointFit pf;
    pf.x = xs[p];
    double cond = 0.0;
    const Eigen::VectorXd c = detail::fit_even_powers(sorted, defects[p], options.terms, &cond);
    fit.condition_number = std::max(fit.condition_number, cond);
    pf.coefficients.assign(c.data(), c.data() + c.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      double model_value = 0.0;
      const double h2 = sorted[i] * sorted[i];
      for (int k = 0; k < options.terms; ++k) model_value += c(k) * std::pow(h2, k + 1);
      pf.residuals.push_back(defects[p][i] - model_value);
    }
    if (options.terms > 1) {
      // Same fit on the smallest hbar values with one term fewer.
      const std::vector<double> h_sub(sorted.end() - (options.terms - 1), sorted.end());
      const std::vector<double> d_sub(defects[p].end() - (options.terms - 1), defects[p].end());
      const Eigen::VectorXd c_low = detail::fit_even_powers(h_sub, d_sub, options.terms - 1);
      for (int k = 0; k < options.terms; ++k)
        pf.uncertainty.push_back(k < options.terms - 1 ? std::abs(c(k) - c_low(k)) : std::abs(c(k)));
    } else {
      pf.uncertainty.assign(1, std::numeric_limits<double>::quiet_NaN());
    }
    fit.points.push_back(std::move(pf));
  }
  return fit;
}

}  // namespace hkexp::oracle
