// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dpdsim/errors.hpp"
#include "dpdsim/mempoly.hpp"
#include "dpdsim/rng.hpp"
#include "dpdsim/signals.hpp"

using namespace dpdsim;

namespace {

// naive double-loop evaluation of the defining sum, used as the oracle for
// both the regressor matrix and the apply paths
std::complex<double> naive_mp_sample(const arma::cx_vec& x, const MemoryPolynomial& m,
                                     arma::uword n) {
  std::complex<double> acc = 0.0;
  for (int q = 0; q <= m.memory_depth; ++q) {
    if (n < static_cast<arma::uword>(q)) continue;
    const std::complex<double> xd = x(n - q);
    for (int k = 1; k <= m.order; ++k)
      acc += m.coeffs(m.index(k, q)) * std::pow(std::abs(xd), k - 1) * xd;
  }
  return acc;
}

arma::cx_vec random_signal(arma::uword n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  arma::cx_vec x(n);
  for (auto& v : x) v = scale * rng.standard_complex_normal();
  return x;
}

MemoryPolynomial random_model(int order, int memory_depth, std::uint64_t seed) {
  MemoryPolynomial m = MemoryPolynomial::zeros(order, memory_depth);
  Rng rng(seed);
  for (auto& c : m.coeffs) c = rng.standard_complex_normal();
  return m;
}

}  // namespace

TEST_CASE("regressor_matrix: defining-sequence entries") {
  // |2i|^2 * 2i = 8i for (k=3, q=0)
  const arma::cx_vec x{{0.0, 2.0}};
  const arma::cx_mat r = regressor_matrix(x, 3, 0);
  CHECK(std::abs(r(0, 2) - std::complex<double>(0.0, 8.0)) < 1e-15);

  // K=1, Q=0: R is x itself
  const arma::cx_vec x2 = random_signal(32, 2);
  const arma::cx_mat r2 = regressor_matrix(x2, 1, 0);
  CHECK(arma::norm(r2.col(0) - x2, 2) == 0.0);

  // hand-evaluated row with zero-padded history, K=2, Q=1
  const arma::cx_vec x3{{1.0, 0.0}, {0.5, 0.0}};
  const arma::cx_mat r3 = regressor_matrix(x3, 2, 1);
  CHECK(r3.n_rows == 2);
  CHECK(r3.n_cols == 4);
  // row 0: [x(0), |x0|x0, 0, 0]
  CHECK(std::abs(r3(0, 0) - std::complex<double>(1.0, 0)) < 1e-15);
  CHECK(std::abs(r3(0, 1) - std::complex<double>(1.0, 0)) < 1e-15);
  CHECK(std::abs(r3(0, 2)) < 1e-15);
  CHECK(std::abs(r3(0, 3)) < 1e-15);
  // row 1: [x(1), |x1|x1, x(0), |x0|x0] = [0.5, 0.25, 1, 1]
  CHECK(std::abs(r3(1, 0) - std::complex<double>(0.5, 0)) < 1e-15);
  CHECK(std::abs(r3(1, 1) - std::complex<double>(0.25, 0)) < 1e-15);
  CHECK(std::abs(r3(1, 2) - std::complex<double>(1.0, 0)) < 1e-15);
  CHECK(std::abs(r3(1, 3) - std::complex<double>(1.0, 0)) < 1e-15);

  CHECK_THROWS_AS(regressor_matrix(x3, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(regressor_matrix(x3, 2, -1), std::invalid_argument);
}

TEST_CASE("mp_apply: trivial models and the naive oracle") {
  // pure linear gain
  const arma::cx_vec x = random_signal(64, 3);
  MemoryPolynomial lin = MemoryPolynomial::identity(1, 0);
  lin.coeffs(0) = std::complex<double>(0.7, -0.3);
  const arma::cx_vec y = mp_apply(x, lin);
  CHECK(arma::norm(y - lin.coeffs(0) * x, 2) < 1e-14);

  // K=2, Q=0, w=[1, 0.5], constant unit input -> 1.5
  MemoryPolynomial m2 = MemoryPolynomial::zeros(2, 0);
  m2.coeffs(0) = 1.0;
  m2.coeffs(1) = 0.5;
  arma::cx_vec ones(16);
  ones.fill(std::complex<double>(1.0, 0.0));
  const arma::cx_vec y2 = mp_apply(ones, m2);
  for (const auto& v : y2) CHECK(std::abs(v - std::complex<double>(1.5, 0.0)) < 1e-15);

  // zero input
  const MemoryPolynomial m3 = random_model(5, 3, 7);
  CHECK(arma::norm(mp_apply(arma::cx_vec(32, arma::fill::zeros), m3), 2) == 0.0);

  // sample-by-sample naive oracle
  const arma::cx_vec x4 = random_signal(40, 11);
  const MemoryPolynomial m4 = random_model(4, 2, 13);
  const arma::cx_vec y4 = mp_apply(x4, m4);
  for (arma::uword n = 0; n < x4.n_elem; ++n)
    CHECK(std::abs(y4(n) - naive_mp_sample(x4, m4, n)) < 1e-12);
}

TEST_CASE("mp_apply: Horner path equals regressor path (1000 random models)") {
  Rng seeder(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    const int order = 1 + int(seeder.uniform_index(11));
    const int depth = int(seeder.uniform_index(6));
    const arma::uword n = 16 + seeder.uniform_index(48);
    const arma::cx_vec x = random_signal(n, 5000 + trial);
    const MemoryPolynomial m = random_model(order, depth, 9000 + trial);
    const arma::cx_vec horner = mp_apply(x, m);
    const arma::cx_vec matrix = mp_apply_via_regressors(x, m);
    const double rel = arma::norm(horner - matrix, 2) /
                       std::max(arma::norm(matrix, 2), 1e-300);
    CHECK(rel < 1e-12);
  }
}

TEST_CASE("mp_apply: linear in the coefficients") {
  const arma::cx_vec x = random_signal(128, 21);
  const MemoryPolynomial m1 = random_model(3, 2, 22);
  MemoryPolynomial m2 = random_model(3, 2, 23);
  const std::complex<double> a(0.3, 0.9), b(-1.1, 0.2);
  MemoryPolynomial mix = m1;
  mix.coeffs = a * m1.coeffs + b * m2.coeffs;
  const arma::cx_vec lhs = mp_apply(x, mix);
  const arma::cx_vec rhs = a * mp_apply(x, m1) + b * mp_apply(x, m2);
  CHECK(arma::norm(lhs - rhs, 2) / arma::norm(rhs, 2) < 1e-13);
}

TEST_CASE("ls_fit: identity, exact recovery and optimality") {
  // R = I -> w = y
  const arma::uword n = 12;
  arma::cx_mat eye(n, n, arma::fill::eye);
  const arma::cx_vec y = random_signal(n, 31);
  const LsFit idfit = ls_fit(eye, y);
  CHECK(arma::norm(idfit.coeffs - y, 2) < 1e-14);
  CHECK_FALSE(idfit.ill_conditioned);

  // exact-data recovery on a random well-conditioned system
  const arma::cx_mat r(arma::randn<arma::mat>(60, 8), arma::randn<arma::mat>(60, 8));
  const arma::cx_vec w_true = random_signal(8, 33);
  const LsFit fit = ls_fit(r, r * w_true);
  CHECK(arma::norm(fit.coeffs - w_true, 2) / arma::norm(w_true, 2) < 1e-9);

  // residual orthogonality R^H (y - R w) ~ 0
  const arma::cx_vec y2 = random_signal(60, 34);
  const LsFit fit2 = ls_fit(r, y2);
  const arma::cx_vec grad = r.t() * (y2 - r * fit2.coeffs);
  CHECK(arma::norm(grad, 2) <= 1e-8 * arma::norm(y2, 2));

  // any perturbation increases the cost
  const double base_cost = std::pow(arma::norm(y2 - r * fit2.coeffs, 2), 2);
  Rng rng(35);
  for (int t = 0; t < 20; ++t) {
    arma::cx_vec delta(8);
    for (auto& v : delta) v = 1e-3 * rng.standard_complex_normal();
    const double cost = std::pow(arma::norm(y2 - r * (fit2.coeffs + delta), 2), 2);
    CHECK(cost >= base_cost);
  }
}

TEST_CASE("ls_fit: round-trip identification oracle (K=3, Q=2)") {
  const arma::cx_vec x = random_signal(1000, 41);
  const MemoryPolynomial truth = random_model(3, 2, 42);
  const arma::cx_vec y = mp_apply(x, truth);
  const LsFit fit = ls_fit(regressor_matrix(x, 3, 2), y);
  const double err = 20.0 * std::log10(arma::norm(fit.coeffs - truth.coeffs, 2) /
                                       arma::norm(truth.coeffs, 2));
  CHECK(err < -120.0);
}

TEST_CASE("ls_fit: rank-deficient input is flagged, minimum-norm returned") {
  arma::cx_mat r(20, 3, arma::fill::zeros);
  const arma::cx_vec c = random_signal(20, 51);
  r.col(0) = c;
  r.col(1) = 2.0 * c;  // dependent
  r.col(2) = random_signal(20, 52);
  const arma::cx_vec y = random_signal(20, 53);
  const LsFit fit = ls_fit(r, y);
  CHECK(fit.ill_conditioned);
  CHECK(fit.rank == 2);
  // gradient still vanishes for the minimum-norm solution
  CHECK(arma::norm(r.t() * (y - r * fit.coeffs), 2) <= 1e-8 * arma::norm(y, 2));

  CHECK_THROWS_AS(ls_fit(arma::cx_mat(3, 5, arma::fill::ones), arma::cx_vec(3)), std::invalid_argument);
}

TEST_CASE("lms_step: fixed point, scalar update, divergence guard") {
  // converged fixed point: zero error leaves weights unchanged
  LmsState state;
  state.weights = random_signal(4, 61);
  state.step_size = 0.1;
  const arma::cx_mat r(arma::randn<arma::mat>(6, 4), arma::randn<arma::mat>(6, 4));
  const LmsState next = lms_step(state, r, r * state.weights);
  CHECK(arma::norm(next.weights - state.weights, 2) < 1e-14);
  CHECK(next.last_error_norm < 1e-13);
  CHECK(next.iteration == 1);

  // scalar case: w=0, mu=0.1, R=[1], y=[1] -> e=1, new weight 0.1
  LmsState scalar;
  scalar.weights = arma::cx_vec(1, arma::fill::zeros);
  scalar.step_size = 0.1;
  const LmsState s2 = lms_step(scalar, arma::cx_mat(1, 1, arma::fill::ones),
                               arma::cx_vec(1, arma::fill::ones));
  CHECK(std::abs(s2.weights(0) - std::complex<double>(0.1, 0.0)) < 1e-15);
  CHECK(s2.last_error_norm == doctest::Approx(1.0));

  // divergence carries the iteration index
  LmsState big;
  big.weights = arma::cx_vec(1, arma::fill::ones);
  big.step_size = 1e300;
  arma::cx_mat r1(1, 1);
  r1(0, 0) = 1e300;
  bool threw = false;
  try {
    (void)lms_step(big, r1, arma::cx_vec(1, arma::fill::ones));
  } catch (const DivergenceError& e) {
    threw = true;
    CHECK(e.iteration() == 1);
  }
  CHECK(threw);
}

TEST_CASE("lms_run_samples: identical to folding per-sample lms_step") {
  const arma::cx_mat r(arma::randn<arma::mat>(32, 5), arma::randn<arma::mat>(32, 5));
  const arma::cx_vec y = random_signal(32, 71);

  LmsState folded;
  folded.weights = arma::cx_vec(5, arma::fill::zeros);
  folded.step_size = 0.05;
  LmsState fast = folded;
  for (arma::uword i = 0; i < r.n_rows; ++i)
    folded = lms_step(folded, r.row(i), y.subvec(i, i));
  fast = lms_run_samples(fast, r, y);
  CHECK(arma::norm(fast.weights - folded.weights, 2) < 1e-14);
  CHECK(fast.iteration == folded.iteration);
}

TEST_CASE("lms: stationary identification converges (mu=0.01)") {
  // K=3, Q=2 memory-polynomial plant, 50 epochs of per-sample LMS. The
  // power-basis Gram is badly conditioned (condition ~1e3), so the output
  // fit converges far faster than the slow coefficient modes: the fit error
  // passes -60 dB while the coefficient error settles near -40 dB.
  const arma::cx_vec x = random_signal(1000, 81);
  const MemoryPolynomial truth = random_model(3, 2, 82);
  const arma::cx_vec y = mp_apply(x, truth);
  const arma::cx_mat r = regressor_matrix(x, 3, 2);

  LmsState state;
  state.weights = arma::cx_vec(truth.coeffs.n_elem, arma::fill::zeros);
  state.step_size = 0.01;
  double prev_err = 1e300;
  int non_decreasing = 0;
  for (int epoch = 0; epoch < 50; ++epoch) {
    state = lms_run_samples(state, r, y);
    if (state.last_error_norm > prev_err) ++non_decreasing;
    prev_err = state.last_error_norm;
  }
  const double fit_db = 10.0 * std::log10(
      std::pow(arma::norm(y - r * state.weights, 2), 2) / std::pow(arma::norm(y, 2), 2));
  const double weight_err_db = 20.0 * std::log10(
      arma::norm(state.weights - truth.coeffs, 2) / arma::norm(truth.coeffs, 2));
  CHECK(fit_db < -60.0);
  CHECK(weight_err_db < -30.0);
  CHECK(non_decreasing <= 5);  // decreasing in expectation
}

TEST_CASE("lms: linear-system weight error reaches -60 dB") {
  // white regressors make the Gram well conditioned, so the weights
  // themselves converge deeply (the classic LMS result)
  const arma::uword n = 1000, taps = 6;
  arma::cx_mat r(n, taps);
  Rng rng(85);
  for (auto& v : r) v = rng.standard_complex_normal();
  const arma::cx_vec w_true = random_signal(taps, 86);
  const arma::cx_vec y = r * w_true;

  LmsState state;
  state.weights = arma::cx_vec(taps, arma::fill::zeros);
  state.step_size = 0.01;
  for (int epoch = 0; epoch < 50; ++epoch) state = lms_run_samples(state, r, y);
  const double weight_err_db = 20.0 * std::log10(
      arma::norm(state.weights - w_true, 2) / arma::norm(w_true, 2));
  CHECK(weight_err_db < -60.0);
}

TEST_CASE("flops: Table-style values and savings identity") {
  CHECK(flops(3, 5, 100).flops == 7000);
  CHECK(flops(9, 5, 100).flops == 19000);
  CHECK(flops(11, 5, 100).flops == 23000);

  CHECK(flop_savings(11, 3, 5, 100) == 16000);
  CHECK(flop_savings(9, 3, 5, 100) == 12000);
  CHECK(flop_savings(3, 3, 5, 100) == 0);
  CHECK_THROWS_AS(flop_savings(3, 9, 5, 100), std::invalid_argument);
  CHECK_THROWS_AS(flops(0, 5, 100), std::invalid_argument);

  // exhaustive consistency: flops(K_C) - flops(K_P) == flop_savings
  for (int q = 1; q <= 10; ++q)
    for (int kc = 1; kc <= 15; ++kc)
      for (int kp = 1; kp <= kc; ++kp)
        CHECK(flops(kc, q, 7).flops - flops(kp, q, 7).flops == flop_savings(kc, kp, q, 7));
}

TEST_CASE("coefficient serialization round-trips exactly") {
  const MemoryPolynomial m = random_model(4, 3, 91);
  std::stringstream ss;
  save_coeffs(ss, m);
  const MemoryPolynomial back = load_coeffs(ss);
  CHECK(back.order == m.order);
  CHECK(back.memory_depth == m.memory_depth);
  CHECK(arma::norm(back.coeffs - m.coeffs, 2) == 0.0);
}
