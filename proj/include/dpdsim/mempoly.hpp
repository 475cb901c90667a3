// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <armadillo>
#include <cstdint>
#include <iosfwd>

namespace dpdsim {

// Memory polynomial y(n) = sum_q sum_k w_{k,q} |x(n-q)|^{k-1} x(n-q),
// k = 1..K (even and odd orders), q = 0..Q, zero-padded history.
//
// Coefficient layout: index(k, q) = q*K + (k-1) — delay-blocked with the
// polynomial order running fastest, matching the regressor column order.
struct MemoryPolynomial {
  arma::cx_vec coeffs;  // length K*(Q+1)
  int order = 1;        // K
  int memory_depth = 0;  // Q

  static MemoryPolynomial zeros(int order, int memory_depth);
  // neutral predistorter: w_{1,0} = gain, everything else 0
  static MemoryPolynomial identity(int order, int memory_depth, double gain = 1.0);

  arma::uword num_coeffs() const { return coeffs.n_elem; }
  arma::uword index(int k, int q) const {
    return static_cast<arma::uword>(q) * static_cast<arma::uword>(order) +
           static_cast<arma::uword>(k - 1);
  }
  void validate() const;
};

// N x K(Q+1) regressor matrix; column (k,q) holds |x(n-q)|^{k-1} x(n-q)
// with zero-padded history, so N = length(x).
arma::cx_mat regressor_matrix(const arma::cx_vec& x, int order, int memory_depth);

// Horner-recursion evaluation (one pass per delay, no regressor matrix).
arma::cx_vec mp_apply(const arma::cx_vec& x, const MemoryPolynomial& model);
// Reference path: regressor_matrix(x) * coeffs. Agrees with mp_apply to
// 1e-12 relative.
arma::cx_vec mp_apply_via_regressors(const arma::cx_vec& x, const MemoryPolynomial& model);

struct LsFit {
  arma::cx_vec coeffs;
  double condition = 0.0;      // singular-value ratio of the regressor matrix
  bool ill_conditioned = false;
  arma::uword rank = 0;
};

// Least squares min ||y - R w|| via SVD; minimum-norm solution when R is
// rank deficient (flagged with the condition estimate).
LsFit ls_fit(const arma::cx_mat& regressors, const arma::cx_vec& y);

struct LmsState {
  arma::cx_vec weights;
  double step_size = 0.01;  // mu
  long iteration = 0;       // m
  double last_error_norm = 0.0;
};

// One complex-LMS gradient step on a block:
//   e = y_m - R_m w;  w <- w + mu * R_m^H e
// Per-sample adaptation is a 1-row block. Throws DivergenceError if the
// update produces non-finite weights.
LmsState lms_step(const LmsState& state, const arma::cx_mat& regressor_block,
                  const arma::cx_vec& y_block);

// Sequential per-sample LMS over all rows of R (identical numerics to
// folding lms_step over 1-row blocks; hand-rolled for speed).
LmsState lms_run_samples(LmsState state, const arma::cx_mat& regressors,
                         const arma::cx_vec& y);

struct FlopReport {
  int order = 0;        // K
  int memory_depth = 0;  // Q
  int num_antennas = 0;  // N_t
  long long flops = 0;   // (4K+2)*Q*N_t
};

FlopReport flops(int order, int memory_depth, int num_antennas);
// 4*(K_C - K_P)*Q*N_t; equals flops(K_C) - flops(K_P) exactly.
long long flop_savings(int order_conventional, int order_proposed,
                       int memory_depth, int num_antennas);

// Plain-text rows `k,q,re,im` with %.17g for exact round-trip.
void save_coeffs(std::ostream& os, const MemoryPolynomial& model);
MemoryPolynomial load_coeffs(std::istream& is);

}  // namespace dpdsim
