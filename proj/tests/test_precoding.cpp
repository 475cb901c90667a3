// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "dpdsim/errors.hpp"
#include "dpdsim/mempoly.hpp"
#include "dpdsim/precoding.hpp"
#include "dpdsim/rng.hpp"

using namespace dpdsim;

namespace {

SignalFrame random_frame(arma::uword rows, arma::uword cols, std::uint64_t seed) {
  SignalFrame f;
  f.sample_rate_hz = 1.0;
  f.streams.set_size(rows, cols);
  Rng rng(seed);
  for (auto& v : f.streams) v = rng.standard_complex_normal();
  return f;
}

}  // namespace

TEST_CASE("gen_channel: statistics, determinism, rank") {
  const ChannelMatrix ch = gen_channel(10, 100, 7);
  CHECK(ch.num_users() == 10);
  CHECK(ch.num_antennas() == 100);
  const double var = arma::mean(arma::square(arma::abs(arma::vectorise(ch.h))));
  CHECK(std::abs(var - 1.0) < 0.1);

  const ChannelMatrix same = gen_channel(10, 100, 7);
  CHECK(arma::accu(arma::abs(ch.h - same.h)) == 0.0);
  const ChannelMatrix other = gen_channel(10, 100, 8);
  CHECK(arma::norm(ch.h - other.h, "fro") > 1.0);

  const ChannelMatrix tiny = gen_channel(1, 2, 123);
  CHECK(arma::rank(tiny.h) == 1);

  CHECK_THROWS_AS(gen_channel(10, 10, 1), ConfigError);
  CHECK_THROWS_AS(gen_channel(0, 10, 1), ConfigError);
}

TEST_CASE("zf_pinv: hand cases and the ZF constraint") {
  // H = [1, 1] -> P = [0.5; 0.5]
  ChannelMatrix ch;
  ch.h = arma::cx_mat(1, 2);
  ch.h(0, 0) = 1.0;
  ch.h(0, 1) = 1.0;
  const PrecodingMatrix p = zf_pinv(ch);
  CHECK(std::abs(p.p(0, 0) - std::complex<double>(0.5, 0)) < 1e-14);
  CHECK(std::abs(p.p(1, 0) - std::complex<double>(0.5, 0)) < 1e-14);

  const ChannelMatrix big = gen_channel(10, 100, 3);
  const PrecodingMatrix pb = zf_pinv(big);
  const arma::cx_mat should_be_eye = big.h * pb.p;
  const double defect = arma::norm(should_be_eye - arma::cx_mat(arma::eye<arma::mat>(10, 10),
                                                                arma::mat(10, 10, arma::fill::zeros)),
                                   "fro");
  CHECK(defect < 1e-10);
}

TEST_CASE("zf_pinv: ZF holds across 100 seeds (10x100)") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ChannelMatrix ch = gen_channel(10, 100, seed);
    const PrecodingMatrix p = zf_pinv(ch);
    const arma::cx_mat eye(arma::eye<arma::mat>(10, 10), arma::mat(10, 10, arma::fill::zeros));
    CHECK(arma::norm(ch.h * p.p - eye, "fro") <= 1e-8 * 10.0);
  }
}

TEST_CASE("zf_pinv: near-singular channel is rejected") {
  ChannelMatrix ch;
  ch.h.set_size(2, 4);
  Rng rng(5);
  for (auto& v : ch.h) v = rng.standard_complex_normal();
  ch.h.row(1) = ch.h.row(0) * std::complex<double>(1.0 + 1e-14, 0.0);
  CHECK_THROWS_AS(zf_pinv(ch), ConditioningError);
}

TEST_CASE("precode and apply_channel: composition round trip") {
  const ChannelMatrix ch = gen_channel(4, 16, 9);
  const PrecodingMatrix p = zf_pinv(ch);
  const SignalFrame s = random_frame(4, 128, 10);

  const SignalFrame x = precode(p, s);
  CHECK(x.num_paths() == 16);
  const SignalFrame r = apply_channel(ch, x, 0.0);
  CHECK(r.num_paths() == 4);
  CHECK(arma::norm(r.streams - s.streams, "fro") / arma::norm(s.streams, "fro") < 1e-8);

  // identity precoder passes through; zero in, zero out
  PrecodingMatrix eye;
  eye.p = arma::cx_mat(arma::eye<arma::mat>(4, 4), arma::mat(4, 4, arma::fill::zeros));
  const SignalFrame same = precode(eye, s);
  CHECK(arma::norm(same.streams - s.streams, "fro") == 0.0);
  SignalFrame zeros = random_frame(4, 8, 1);
  zeros.streams.zeros();
  CHECK(arma::norm(precode(p, zeros).streams, "fro") == 0.0);

  SignalFrame wrong = random_frame(5, 8, 2);
  CHECK_THROWS_AS(precode(p, wrong), std::invalid_argument);
  CHECK_THROWS_AS(apply_channel(ch, wrong, 0.0), std::invalid_argument);
}

TEST_CASE("apply_channel: noise power calibration") {
  ChannelMatrix ch;
  ch.h = arma::cx_mat(arma::eye<arma::mat>(3, 3), arma::mat(3, 3, arma::fill::zeros));
  SignalFrame z;
  z.sample_rate_hz = 1.0;
  z.streams = arma::cx_mat(3, 100000, arma::fill::zeros);

  const SignalFrame r = apply_channel(ch, z, 0.01, 999);
  for (arma::uword k = 0; k < 3; ++k) {
    const double p = arma::mean(arma::square(arma::abs(arma::strans(r.streams.row(k)))));
    CHECK(std::abs(p - 0.01) / 0.01 < 0.05);
  }
  // deterministic per seed
  const SignalFrame r2 = apply_channel(ch, z, 0.01, 999);
  CHECK(arma::accu(arma::abs(r.streams - r2.streams)) == 0.0);
  CHECK_THROWS_AS(apply_channel(ch, z, -1.0), std::invalid_argument);
}

TEST_CASE("null-space family: perturbed precoder still satisfies HP = I") {
  const ChannelMatrix ch = gen_channel(6, 24, 31);
  const PrecodingMatrix p0 = zf_pinv(ch);
  const arma::cx_mat proj = null_space_projector(ch);

  Rng rng(32);
  arma::cx_mat v(24, 6);
  for (auto& e : v) e = rng.standard_complex_normal();
  const arma::cx_mat v_null = proj * v;
  CHECK(arma::norm(v_null, "fro") > 0.1);  // the null space is 18-dimensional

  const arma::cx_mat eye(arma::eye<arma::mat>(6, 6), arma::mat(6, 6, arma::fill::zeros));
  CHECK(arma::norm(ch.h * (p0.p + v_null) - eye, "fro") <= 1e-8 * 6.0);
}

TEST_CASE("precoder_lms_step: fixed point, scalar reduction, zero step") {
  const ChannelMatrix ch = gen_channel(3, 9, 41);
  PrecoderLmsState st;
  st.p = zf_pinv(ch).p;
  st.step_size = 0.1;
  const arma::cx_mat r_blk = random_frame(3, 32, 42).streams;
  const arma::cx_mat x_blk = st.p * r_blk;  // zero error

  const PrecoderLmsState next = precoder_lms_step(st, r_blk, x_blk);
  CHECK(arma::norm(next.p - st.p, "fro") < 1e-13);
  CHECK(next.last_error_norm < 1e-12);

  // zero step size is the identity on P
  PrecoderLmsState frozen = st;
  frozen.step_size = 0.0;
  const arma::cx_mat x2 = random_frame(9, 32, 43).streams;
  CHECK(arma::norm(precoder_lms_step(frozen, r_blk, x2).p - st.p, "fro") == 0.0);

  // M_r = N_t = 1: identical numerics to the scalar LMS example
  PrecoderLmsState scalar;
  scalar.p = arma::cx_mat(1, 1, arma::fill::zeros);
  scalar.step_size = 0.1;
  const PrecoderLmsState s2 = precoder_lms_step(scalar, arma::cx_mat(1, 1, arma::fill::ones),
                                                arma::cx_mat(1, 1, arma::fill::ones));
  CHECK(std::abs(s2.p(0, 0) - std::complex<double>(0.1, 0.0)) < 1e-15);

  LmsState ref;
  ref.weights = arma::cx_vec(1, arma::fill::zeros);
  ref.step_size = 0.1;
  const LmsState lref = lms_step(ref, arma::cx_mat(1, 1, arma::fill::ones),
                                 arma::cx_vec(1, arma::fill::ones));
  CHECK(std::abs(s2.p(0, 0) - lref.weights(0)) < 1e-15);

  CHECK_THROWS_AS(precoder_lms_step(st, random_frame(4, 8, 2).streams,
                                    random_frame(9, 8, 3).streams),
                  std::invalid_argument);
}
