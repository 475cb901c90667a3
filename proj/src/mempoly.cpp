// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/mempoly.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dpdsim/errors.hpp"

namespace dpdsim {

namespace {

void check_shape(int order, int memory_depth) {
  if (order < 1) throw std::invalid_argument("mempoly: order K must be >= 1");
  if (memory_depth < 0) throw std::invalid_argument("mempoly: memory depth Q must be >= 0");
}

}  // namespace

MemoryPolynomial MemoryPolynomial::zeros(int order, int memory_depth) {
  check_shape(order, memory_depth);
  MemoryPolynomial m;
  m.order = order;
  m.memory_depth = memory_depth;
  m.coeffs.zeros(static_cast<arma::uword>(order) * (memory_depth + 1));
  return m;
}

MemoryPolynomial MemoryPolynomial::identity(int order, int memory_depth, double gain) {
  MemoryPolynomial m = zeros(order, memory_depth);
  m.coeffs(m.index(1, 0)) = gain;
  return m;
}

void MemoryPolynomial::validate() const {
  check_shape(order, memory_depth);
  if (coeffs.n_elem != static_cast<arma::uword>(order) * (memory_depth + 1))
    throw std::invalid_argument("mempoly: coefficient length != K*(Q+1)");
  if (!coeffs.is_finite()) throw std::invalid_argument("mempoly: non-finite coefficients");
}

arma::cx_mat regressor_matrix(const arma::cx_vec& x, int order, int memory_depth) {
  check_shape(order, memory_depth);
  if (x.n_elem <= static_cast<arma::uword>(memory_depth))
    throw std::invalid_argument("regressor_matrix: input shorter than memory depth");

  const arma::uword n = x.n_elem;
  const arma::uword k_count = static_cast<arma::uword>(order);
  arma::cx_mat r(n, k_count * (memory_depth + 1), arma::fill::zeros);
  for (int q = 0; q <= memory_depth; ++q) {
    const arma::uword col0 = static_cast<arma::uword>(q) * k_count;
    for (arma::uword row = static_cast<arma::uword>(q); row < n; ++row) {
      const std::complex<double> xd = x(row - q);
      const double mag = std::abs(xd);
      std::complex<double> basis = xd;  // |x|^{k-1} x, built up by k
      for (int k = 1; k <= order; ++k) {
        r(row, col0 + k - 1) = basis;
        basis *= mag;
      }
    }
  }
  return r;
}

arma::cx_vec mp_apply(const arma::cx_vec& x, const MemoryPolynomial& model) {
  model.validate();
  const arma::uword n = x.n_elem;
  const int order = model.order;
  arma::cx_vec y(n, arma::fill::zeros);
  for (int q = 0; q <= model.memory_depth; ++q) {
    const std::complex<double>* w = model.coeffs.memptr() +
                                    static_cast<arma::uword>(q) * static_cast<arma::uword>(order);
    for (arma::uword i = static_cast<arma::uword>(q); i < n; ++i) {
      const std::complex<double> xd = x(i - q);
      const double mag = std::abs(xd);
      // w_1 + |x| (w_2 + |x| (w_3 + ...)), then one multiply by x(n-q)
      std::complex<double> acc = w[order - 1];
      for (int k = order - 1; k >= 1; --k) acc = w[k - 1] + mag * acc;
      y(i) += acc * xd;
    }
  }
  return y;
}

arma::cx_vec mp_apply_via_regressors(const arma::cx_vec& x, const MemoryPolynomial& model) {
  model.validate();
  return regressor_matrix(x, model.order, model.memory_depth) * model.coeffs;
}

LsFit ls_fit(const arma::cx_mat& regressors, const arma::cx_vec& y) {
  if (regressors.n_rows < regressors.n_cols)
    throw std::invalid_argument("ls_fit: need rows >= cols");
  if (regressors.n_rows != y.n_elem)
    throw std::invalid_argument("ls_fit: row count != length(y)");
  if (!regressors.is_finite() || !y.is_finite())
    throw std::invalid_argument("ls_fit: non-finite input");

  arma::cx_mat u, v;
  arma::vec s;
  if (!arma::svd_econ(u, s, v, regressors))
    throw std::runtime_error("ls_fit: SVD failed");

  LsFit fit;
  const double smax = s.max();
  const double tol = smax * static_cast<double>(std::max(regressors.n_rows, regressors.n_cols)) *
                     std::numeric_limits<double>::epsilon();
  arma::vec inv_s(s.n_elem, arma::fill::zeros);
  double smin_kept = smax;
  for (arma::uword i = 0; i < s.n_elem; ++i) {
    if (s(i) > tol) {
      inv_s(i) = 1.0 / s(i);
      smin_kept = std::min(smin_kept, s(i));
      ++fit.rank;
    }
  }
  fit.condition = (fit.rank < s.n_elem) ? std::numeric_limits<double>::infinity()
                                        : smax / smin_kept;
  fit.ill_conditioned = fit.rank < s.n_elem || fit.condition > 1e12;
  fit.coeffs = v * (inv_s % (u.t() * y));
  return fit;
}

LmsState lms_step(const LmsState& state, const arma::cx_mat& regressor_block,
                  const arma::cx_vec& y_block) {
  if (regressor_block.n_cols != state.weights.n_elem)
    throw std::invalid_argument("lms_step: regressor width != weight length");
  if (regressor_block.n_rows != y_block.n_elem)
    throw std::invalid_argument("lms_step: block row count != length(y)");

  LmsState next = state;
  const arma::cx_vec error = y_block - regressor_block * state.weights;
  next.weights = state.weights + state.step_size * (regressor_block.t() * error);
  next.last_error_norm = arma::norm(error, 2);
  next.iteration = state.iteration + 1;
  if (!next.weights.is_finite())
    throw DivergenceError("lms_step: weights diverged", next.iteration);
  return next;
}

LmsState lms_run_samples(LmsState state, const arma::cx_mat& regressors,
                         const arma::cx_vec& y) {
  if (regressors.n_cols != state.weights.n_elem)
    throw std::invalid_argument("lms_run_samples: regressor width != weight length");
  if (regressors.n_rows != y.n_elem)
    throw std::invalid_argument("lms_run_samples: row count != length(y)");

  const arma::uword n = regressors.n_rows;
  const arma::uword c = regressors.n_cols;
  // transpose so each sample's regressor row is contiguous
  const arma::cx_mat rt = arma::strans(regressors);
  std::complex<double>* w = state.weights.memptr();
  const double mu = state.step_size;
  double err_norm = 0.0;
  for (arma::uword i = 0; i < n; ++i) {
    const std::complex<double>* ri = rt.colptr(i);
    std::complex<double> pred = 0.0;
    for (arma::uword j = 0; j < c; ++j) pred += ri[j] * w[j];
    const std::complex<double> e = y(i) - pred;
    err_norm += std::norm(e);
    for (arma::uword j = 0; j < c; ++j) w[j] += mu * std::conj(ri[j]) * e;
    ++state.iteration;
  }
  state.last_error_norm = std::sqrt(err_norm);
  if (!state.weights.is_finite())
    throw DivergenceError("lms_run_samples: weights diverged", state.iteration);
  return state;
}

FlopReport flops(int order, int memory_depth, int num_antennas) {
  if (order < 1 || memory_depth < 1 || num_antennas < 1)
    throw std::invalid_argument("flops: all arguments must be positive");
  FlopReport rep;
  rep.order = order;
  rep.memory_depth = memory_depth;
  rep.num_antennas = num_antennas;
  rep.flops = static_cast<long long>(4 * order + 2) * memory_depth * num_antennas;
  return rep;
}

long long flop_savings(int order_conventional, int order_proposed,
                       int memory_depth, int num_antennas) {
  if (order_conventional < order_proposed)
    throw std::invalid_argument("flop_savings: K_C must be >= K_P");
  if (order_proposed < 1 || memory_depth < 1 || num_antennas < 1)
    throw std::invalid_argument("flop_savings: all arguments must be positive");
  return 4LL * (order_conventional - order_proposed) * memory_depth * num_antennas;
}

void save_coeffs(std::ostream& os, const MemoryPolynomial& model) {
  model.validate();
  char buf[128];
  for (int k = 1; k <= model.order; ++k) {
    for (int q = 0; q <= model.memory_depth; ++q) {
      const std::complex<double> w = model.coeffs(model.index(k, q));
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", k, q, w.real(), w.imag());
      os << buf;
    }
  }
}

MemoryPolynomial load_coeffs(std::istream& is) {
  std::map<std::pair<int, int>, std::complex<double>> entries;
  int max_k = 0, max_q = -1;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int k = 0, q = 0;
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lg,%lg", &k, &q, &re, &im) != 4)
      throw std::invalid_argument("load_coeffs: malformed line: " + line);
    entries[{k, q}] = {re, im};
    max_k = std::max(max_k, k);
    max_q = std::max(max_q, q);
  }
  if (entries.empty()) throw std::invalid_argument("load_coeffs: no rows");
  MemoryPolynomial m = MemoryPolynomial::zeros(max_k, max_q);
  for (const auto& [kq, w] : entries) m.coeffs(m.index(kq.first, kq.second)) = w;
  return m;
}

}  // namespace dpdsim
