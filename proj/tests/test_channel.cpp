#include "doctest.h"

#include <cmath>

#include "gsmdet/channel.hpp"

using namespace gsmdet;

namespace {

CMatrix empirical_covariance(const NoiseModel& model, int n_r, int trials, Rng& rng) {
  NoiseSampler sampler(model, n_r);
  std::vector<CVector> samples(trials);
  for (CVector& s : samples) sampler.sample_into(rng, s);
  return estimate_noise_covariance(samples);
}

double trace_real(const CMatrix& m) {
  double t = 0;
  for (int i = 0; i < m.rows(); ++i) t += m(i, i).real();
  return t;
}

}  // namespace

TEST_SUITE("channel-noise") {

TEST_CASE("Rayleigh channel entries are unit-power CN(0,1)") {
  Rng rng(9, 0);
  double power = 0;
  const int trials = 6250;  // 6250 * 16 entries = 1e5 draws
  for (int t = 0; t < trials; ++t) {
    const CMatrix h = draw_channel(4, 4, rng);
    for (const cplx& e : h.data()) power += std::norm(e);
  }
  CHECK(power / (trials * 16.0) == doctest::Approx(1.0).epsilon(0.03));

  Rng a(3, 1), b(3, 1);
  CHECK(draw_channel(2, 3, a).data() == draw_channel(2, 3, b).data());

  const CMatrix h = draw_channel(4, 4, rng);
  for (const cplx& e : h.data()) {
    CHECK(std::isfinite(e.real()));
    CHECK(std::isfinite(e.imag()));
  }
}

TEST_CASE("correlation matrix structure") {
  const CMatrix i3 = correlation_matrix(3, 0.0);
  CHECK(frob_dist(i3, CMatrix::identity(3)) == 0.0);

  const CMatrix c = correlation_matrix(3, 0.4);
  CHECK(c(0, 0).real() == doctest::Approx(1.0));
  CHECK(c(0, 1).real() == doctest::Approx(0.4));
  CHECK(c(0, 2).real() == doctest::Approx(0.16));
  CHECK(c(1, 0).real() == doctest::Approx(0.4));
  CHECK(c(2, 0).real() == doctest::Approx(0.16));
  CHECK(c(1, 2).real() == doctest::Approx(0.4));

  const CMatrix ones = correlation_matrix(2, 1.0);
  for (const cplx& e : ones.data()) CHECK(e == cplx{1, 0});

  CHECK_THROWS_AS(correlation_matrix(3, 1.5), config_error);
  CHECK_THROWS_AS(correlation_matrix(3, -0.1), config_error);
}

TEST_CASE("correlation matrices stay positive definite below full correlation") {
  for (double rho : {0.0, 0.3, 0.7, 0.95}) {
    CHECK_NOTHROW(Cholesky{correlation_matrix(5, rho)});
  }
}

TEST_CASE("mixing matrix is trace-calibrated") {
  for (int n_r : {2, 4, 8}) {
    for (double rho : {0.0, 0.4, 0.9}) {
      const CMatrix m = noise_mixing_matrix(n_r, rho);
      const CMatrix cov = matmul(m, adjoint(m));
      CHECK(trace_real(cov) == doctest::Approx(double(n_r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("iid gaussian sample covariance approaches sigma2 * I") {
  Rng rng(11, 0);
  const double sigma2 = 0.5;
  const CMatrix cov =
      empirical_covariance(NoiseModel::iid_gaussian(sigma2), 4, 100000, rng);
  CMatrix target = CMatrix::identity(4);
  for (cplx& e : target.data()) e *= sigma2;
  CHECK(frob_dist(cov, target) / frob_norm(target) < 0.05);
}

TEST_CASE("correlated sample covariance matches the analytic mixing covariance") {
  Rng rng(12, 0);
  const NoiseModel model = NoiseModel::correlated(0.4, 0.8);
  const CMatrix cov = empirical_covariance(model, 4, 100000, rng);
  const CMatrix target = noise_covariance(model, 4);
  CHECK(frob_dist(cov, target) / frob_norm(target) < 0.05);

  // Scale-free structure check against the unnormalized mixing shape.
  const CMatrix nc = correlation_matrix(4, 0.4);
  CMatrix shape = matmul(nc, adjoint(nc));
  const double s = trace_real(cov) / trace_real(shape);
  for (cplx& e : shape.data()) e *= s;
  CHECK(frob_dist(cov, shape) / frob_norm(shape) < 0.05);
}

TEST_CASE("student-t noise has the right variance and heavy tails") {
  Rng rng(13, 0);
  const double sigma2 = 1.3;
  const NoiseModel model = NoiseModel::student_t(5.0, sigma2);
  NoiseSampler sampler(model, 1);
  const int trials = 100000;
  CVector v;
  double m2 = 0, m4 = 0, re2 = 0;
  for (int t = 0; t < trials; ++t) {
    sampler.sample_into(rng, v);
    m2 += std::norm(v[0]);
    const double r = v[0].real();
    re2 += r * r;
    m4 += r * r * r * r;
  }
  m2 /= trials;
  re2 /= trials;
  m4 /= trials;
  CHECK(m2 == doctest::Approx(sigma2).epsilon(0.05));
  // excess kurtosis of a t(5) real part: 6/(nu-4) = 6
  const double excess = m4 / (re2 * re2) - 3.0;
  CHECK(excess == doctest::Approx(6.0).epsilon(0.20));
}

TEST_CASE("every noise model is energy-calibrated to n_r * sigma2") {
  Rng rng(14, 0);
  const int n_r = 4;
  const double sigma2 = 0.7;
  for (const NoiseModel& model :
       {NoiseModel::iid_gaussian(sigma2), NoiseModel::correlated(0.4, sigma2),
        NoiseModel::student_t(5.0, sigma2)}) {
    const CMatrix cov = empirical_covariance(model, n_r, 100000, rng);
    CHECK(trace_real(cov) == doctest::Approx(n_r * sigma2).epsilon(0.03));
  }
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS(NoiseModel::iid_gaussian(0.0), config_error);
  CHECK_THROWS_AS(NoiseModel::correlated(1.2, 1.0), config_error);
  CHECK_THROWS_AS(NoiseModel::student_t(2.0, 1.0), config_error);
  CHECK_NOTHROW(NoiseModel::student_t(2.01, 1.0));
}

TEST_CASE("transmit reduces to Hx in the noiseless limit") {
  Rng rng(15, 0);
  const CMatrix h = draw_channel(4, 4, rng);
  const CVector x = {{1, 0}, {0, 0}, {-1, 0}, {0, 0}};
  const CVector y = transmit(h, x, NoiseModel::iid_gaussian(1e-20), rng);
  const CVector hx = cmatvec(h, x);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(y[i] - hx[i]) < 1e-8);
}

TEST_CASE("transmit advances the stream between calls") {
  Rng rng(16, 0);
  const CMatrix h = CMatrix::identity(3);
  const CVector x = {{1, 0}, {1, 0}, {0, 0}};
  const CVector y1 = transmit(h, x, NoiseModel::iid_gaussian(0.5), rng);
  const CVector y2 = transmit(h, x, NoiseModel::iid_gaussian(0.5), rng);
  CHECK(y1 != y2);
}

TEST_CASE("transmit is linear in x for a frozen noise draw") {
  Rng rng(17, 0);
  const CMatrix h = draw_channel(3, 3, rng);
  const CVector x = {{1, 0}, {0, 1}, {-1, 0}};
  CVector ax = x;
  for (cplx& e : ax) e *= 2.5;

  Rng r1(99, 4), r2(99, 4);  // identical noise draws
  const NoiseModel m = NoiseModel::iid_gaussian(0.3);
  const CVector y1 = transmit(h, x, m, r1);
  const CVector y2 = transmit(h, ax, m, r2);
  const CVector hx = cmatvec(h, x);
  for (int i = 0; i < 3; ++i) {
    const cplx noise = y1[i] - hx[i];
    CHECK(std::abs(y2[i] - (2.5 * hx[i] + noise)) < 1e-12);
  }
}

TEST_CASE("covariance estimator basics") {
  std::vector<CVector> zeros(8, CVector(4, cplx{}));
  const CMatrix z = estimate_noise_covariance(zeros);
  for (const cplx& e : z.data()) CHECK(e == cplx{});

  CHECK_THROWS_AS(estimate_noise_covariance({CVector(4, cplx{})}), std::invalid_argument);

  Rng rng(18, 0);
  std::vector<CVector> iid(100000);
  for (CVector& s : iid) s = sample_standard_complex_gaussian(rng, 3);
  const CMatrix cov = estimate_noise_covariance(iid);
  CHECK(frob_dist(cov, CMatrix::identity(3)) / frob_norm(CMatrix::identity(3)) < 0.05);
}

TEST_CASE("snr conversion and noise calibration") {
  const SnrPoint p = SnrPoint::from_db(10.0);
  CHECK(p.snr_linear == doctest::Approx(10.0));
  CHECK(SnrPoint::from_db(0.0).snr_linear == doctest::Approx(1.0));
  // with E||Hx||^2 = 8 over n_r = 4 antennas at snr 10: sigma2 = 0.2
  CHECK(noise_variance_for_snr(8.0, 4, 10.0) == doctest::Approx(0.2));
}

}  // TEST_SUITE
