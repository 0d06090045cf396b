#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "fbsnet/dynamics.hpp"
#include "support.hpp"

using namespace fbsnet;
using fbtest::rand_control;
using fbtest::rand_mat;
using fbtest::rand_params;
using fbtest::rand_vec;
using fbtest::Rng;

namespace {

Vec soft(const Vec& v, double t) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i)) - t;
    out(i) = a > 0.0 ? (v(i) > 0.0 ? a : -a) : 0.0;
  }
  return out;
}

double power_oracle(const Mat& A) {
  Rng g(99);
  Vec v = rand_vec(g, A.cols());
  double s = 0.0;
  for (int it = 0; it < 5000; ++it) {
    const Vec w = A.transpose() * (A * v);
    s = std::sqrt(w.norm());
    v = w / w.norm();
  }
  return s;
}

// exp(M) by scaling and squaring of a truncated Taylor series.
Mat expm(const Mat& M) {
  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::pow(2.0, s) > 0.25) ++s;
  const Mat X = M / std::pow(2.0, s);
  Mat term = Mat::Identity(M.rows(), M.cols());
  Mat sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

NetworkParams one_layer(const Mat& A, double alpha, double lambda, double T = 1.0) {
  return NetworkParams::constant(T, 1, A, alpha, lambda);
}

}  // namespace

TEST_CASE("fbs_step special cases") {
  Rng g(1);
  const Mat A = rand_mat(g, 4, 8);
  const Vec b = rand_vec(g, 4);
  const Vec x = rand_vec(g, 8);
  CHECK(fbs_step(A, 0.0, 0.7, 0.1, b, x, Regularizer::l1()) == x);
  const Vec plain = x - 0.1 * 0.5 * (A.transpose() * (A * x - b));
  CHECK((fbs_step(A, 0.5, 0.0, 0.1, b, x, Regularizer::l1()) - plain).norm() <= 1e-15);
}

TEST_CASE("fbs_step solves the implicit inclusion") {
  Rng g(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat A = rand_mat(g, 4, 8);
    const Vec b = rand_vec(g, 4);
    const Vec x = rand_vec(g, 8);
    const double alpha = 0.5, lam = 0.2, h = 0.1;
    const Vec xn = fbs_step(A, alpha, lam, h, b, x, Regularizer::l1());
    const Vec r = (x - xn) / (h * alpha) - A.transpose() * (A * x - b);
    for (Eigen::Index i = 0; i < xn.size(); ++i) {
      if (xn(i) != 0.0) {
        CHECK(std::abs(r(i) - lam * (xn(i) > 0 ? 1.0 : -1.0)) <= 1e-10);
      } else {
        CHECK(std::abs(r(i)) <= lam + 1e-10);
      }
    }
  }
}

TEST_CASE("fbs_step errors") {
  const Mat A = Mat::Ones(2, 3);
  CHECK_THROWS_AS(fbs_step(A, 1, 1, 0.1, Vec::Zero(3), Vec::Zero(3), Regularizer::l1()),
                  DimensionError);
  CHECK_THROWS_AS(fbs_step(A, -1, 1, 0.1, Vec::Zero(2), Vec::Zero(3), Regularizer::l1()),
                  DomainError);
  CHECK_THROWS_AS(fbs_step(A, 1, -1, 0.1, Vec::Zero(2), Vec::Zero(3), Regularizer::l1()),
                  DomainError);
  CHECK_THROWS_AS(fbs_step(A * 1e300, 1e300, 1, 1, Vec::Ones(2), Vec::Ones(3), Regularizer::l1()),
                  NumericError);
}

TEST_CASE("fbs_forward") {
  Rng g(3);
  SUBCASE("inactive layer keeps the state") {
    const Vec x0 = rand_vec(g, 5);
    const Trajectory t = fbs_forward(one_layer(rand_mat(g, 3, 5), 0.0, 0.3), x0, rand_vec(g, 3),
                                     Regularizer::l1());
    REQUIRE(t.states.size() == 2);
    CHECK(t.states[0] == x0);
    CHECK(t.states[1] == x0);
  }
  SUBCASE("fixed point when b = A x0 and lambda = 0") {
    const Mat A = rand_mat(g, 3, 5);
    const Vec x0 = rand_vec(g, 5);
    NetworkParams p = NetworkParams::constant(1.0, 6, A, 0.8, 0.0);
    for (const auto& reg : {Regularizer::l1(), Regularizer::squared_l2(), Regularizer::zero()}) {
      const Trajectory t = fbs_forward(p, x0, A * x0, reg);
      for (const auto& s : t.states) CHECK((s - x0).norm() <= 1e-15);
    }
  }
  SUBCASE("bitwise equal to a separate loop") {
    for (int trial = 0; trial < 10; ++trial) {
      const NetworkParams p = rand_params(g, 3, 4, 8, 1.3);
      const Vec x0 = rand_vec(g, 8);
      const Vec b = rand_vec(g, 4);
      const Trajectory t = fbs_forward(p, x0, b, Regularizer::l1());
      Vec x = x0;
      const double h = 1.3 / 3.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const Vec r = p.A[k] * x - b;
        const Vec grad = p.A[k].transpose() * r;
        const Vec z = x - (h * p.alpha[k]) * grad;
        x = soft(z, h * p.alpha[k] * p.lambda[k]);
        CHECK(t.states[k + 1] == x);
      }
    }
  }
  SUBCASE("errors carry the layer") {
    NetworkParams p = rand_params(g, 3, 2, 3);
    p.A[2] *= 1e300;
    p.alpha[2] = 1e300;
    try {
      fbs_forward(p, Vec::Ones(3), Vec::Ones(2), Regularizer::l1());
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
    p = rand_params(g, 2, 2, 3);
    p.alpha[1] = -1.0;
    CHECK_THROWS_AS(fbs_forward(p, Vec::Ones(3), Vec::Ones(2), Regularizer::l1()), DomainError);
  }
}

TEST_CASE("lista_forward") {
  Rng g(4);
  SUBCASE("zero weights keep the state") {
    LISTAParams l{1.0, 5, Mat::Zero(6, 6), Mat::Zero(6, 3), 0.0};
    const Vec x0 = rand_vec(g, 6);
    for (const auto& s : lista_forward(l, x0, rand_vec(g, 3)).states) CHECK(s == x0);
  }
  SUBCASE("substitution identity") {
    for (int trial = 0; trial < 10; ++trial) {
      const Mat A = rand_mat(g, 4, 8);
      const double alpha = fbtest::uniform(g, 0.1, 1.5), lam = fbtest::uniform(g, 0.0, 0.4);
      const std::size_t N = 5;
      LISTAParams l{2.0, N, alpha * A.transpose() * A, alpha * A.transpose(), alpha * lam};
      const Vec x0 = rand_vec(g, 8), b = rand_vec(g, 4);
      const Trajectory tl = lista_forward(l, x0, b);
      const Trajectory tf =
          fbs_forward(NetworkParams::constant(2.0, N, A, alpha, lam), x0, b, Regularizer::l1());
      for (std::size_t k = 0; k <= N; ++k) CHECK((tl.states[k] - tf.states[k]).norm() <= 1e-12);
    }
  }
  SUBCASE("two steps by hand") {
    // n = 2, m = 1, h = 1/2.
    Mat W1(2, 2);
    W1 << 1, 0, 0, 2;
    Mat W2(2, 1);
    W2 << 1, -1;
    const LISTAParams l{1.0, 2, W1, W2, 0.2};
    Vec x0(2);
    x0 << 1, 1;
    Vec b(1);
    b << 2;
    // step 1: z = x - 0.5 (W1 x - W2 b) = (1 - 0.5(1 - 2), 1 - 0.5(2 + 2)) = (1.5, -1)
    //         x1 = soft(z, 0.1) = (1.4, -0.9)
    // step 2: z = (1.4 - 0.5(1.4 - 2), -0.9 - 0.5(-1.8 + 2)) = (1.7, -1.0)
    //         x2 = (1.6, -0.9)
    const Trajectory t = lista_forward(l, x0, b);
    CHECK(t.states[1](0) == doctest::Approx(1.4));
    CHECK(t.states[1](1) == doctest::Approx(-0.9));
    CHECK(t.states[2](0) == doctest::Approx(1.6));
    CHECK(t.states[2](1) == doctest::Approx(-0.9));
  }
  SUBCASE("dimension mismatch") {
    LISTAParams l{1.0, 2, Mat::Zero(3, 3), Mat::Zero(3, 2), 0.1};
    CHECK_THROWS_AS(lista_forward(l, Vec::Zero(4), Vec::Zero(2)), DimensionError);
  }
}

TEST_CASE("project_control") {
  Rng g(5);
  SUBCASE("constant control") {
    const Mat A = rand_mat(g, 2, 3);
    Control u{1.0, std::vector<Mat>(6, A), std::vector<double>(6, 0.7), std::vector<double>(6, 0.2)};
    for (std::size_t N : {1, 4, 6, 7, 13}) {
      const NetworkParams p = project_control(u, N);
      for (std::size_t k = 0; k < N; ++k) {
        CHECK((p.A[k] - A).norm() <= 1e-15);
        CHECK(p.alpha[k] == doctest::Approx(0.7).epsilon(1e-15));
        CHECK(p.lambda[k] == doctest::Approx(0.2).epsilon(1e-15));
      }
    }
  }
  SUBCASE("two cells averaged into one") {
    Control u{1.0, {Mat::Zero(1, 1), Mat::Ones(1, 1)}, {0.0, 1.0}, {0.0, 0.0}};
    CHECK(project_control(u, 1).alpha[0] == 0.5);
  }
  SUBCASE("Riemann-sum oracle") {
    const Control u = rand_control(g, 64, 2, 3, 1.7);
    for (std::size_t N : {16, 5, 24}) {
      const NetworkParams p = project_control(u, N);
      const int S = 64 * 157;
      for (std::size_t k = 0; k < N; ++k) {
        const double a = 1.7 * static_cast<double>(k) / N;
        const double w = 1.7 / N;
        double alpha = 0.0;
        Mat A = Mat::Zero(2, 3);
        for (int s = 0; s < S; ++s) {
          const double t = a + w * (s + 0.5) / S;
          const std::size_t c = u.cell_of(t);
          alpha += u.alpha[c];
          A += u.A[c];
        }
        // S is a multiple of M, so every input breakpoint falls on a
        // subsample boundary.
        CHECK(std::abs(p.alpha[k] - alpha / S) <= 1e-12);
        CHECK((p.A[k] - A / S).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(project_control(rand_control(g, 3, 1, 1), 0), DomainError);
}

TEST_CASE("project after extend is the identity") {
  Rng g(6);
  for (std::size_t N : {1, 3, 16, 257}) {
    for (int trial = 0; trial < 5; ++trial) {
      const NetworkParams p = rand_params(g, N, 2, 3, 0.9);
      const Control u = extend_params(p);
      CHECK(u.grid() == N);
      CHECK(project_control(u, N) == p);
    }
  }
  const NetworkParams one = rand_params(g, 1, 2, 2);
  CHECK(extend_params(one).grid() == 1);
}

TEST_CASE("cell convention") {
  Control u{2.0, std::vector<Mat>(4, Mat::Zero(1, 1)), std::vector<double>(4, 0.0),
            std::vector<double>(4, 0.0)};
  CHECK(u.cell_of(0.0) == 0);
  CHECK(u.cell_of(0.5) == 1);
  CHECK(u.cell_of(1.999) == 3);
  CHECK(u.cell_of(2.0) == 3);
}

TEST_CASE("norms") {
  Rng g(7);
  NetworkParams zero = NetworkParams::constant(1.0, 3, Mat::Zero(2, 2), 0.0, 0.0);
  CHECK(param_norm_lp(zero, 2.0) == 0.0);
  CHECK(param_norm_lp(NetworkParams::constant(1.0, 1, Mat::Identity(2, 2), 1.0, 1.0), 1.0) ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(param_norm_lp(zero, 0.5), DomainError);

  for (int trial = 0; trial < 10; ++trial) {
    const Mat A = rand_mat(g, 4, 6);
    const double s = spectral_norm(A);
    CHECK(std::abs(s - power_oracle(A)) <= 1e-8);
    Eigen::JacobiSVD<Mat> svd(A);
    CHECK(std::abs(s - svd.singularValues()(0)) <= 1e-8);
  }

  SUBCASE("direct formula, p = 2 and infinity") {
    const NetworkParams p = rand_params(g, 5, 3, 4, 2.0);
    double sum = 0.0, mx = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      const double c = power_oracle(p.A[k]) + p.alpha[k] + p.lambda[k];
      sum += c * c;
      mx = std::max(mx, c);
    }
    CHECK(std::abs(param_norm_lp(p, 2.0) - std::sqrt(2.0 / 5.0 * sum)) <= 1e-8);
    CHECK(std::abs(param_norm_lp(p, kInfNorm) - mx) <= 1e-8);
  }
  SUBCASE("extension keeps the norm") {
    const NetworkParams p = rand_params(g, 7, 2, 3, 1.4);
    for (double q : {1.0, 2.0, 3.5}) {
      CHECK(std::abs(param_norm_lp(extend_params(p), q) - param_norm_lp(p, q)) <= 1e-12);
    }
  }
  SUBCASE("averaging contracts") {
    for (int trial = 0; trial < 20; ++trial) {
      const Control u = rand_control(g, 12, 2, 2);
      for (std::size_t N : {1, 5, 8, 12, 30}) {
        for (double q : {1.0, 2.0, kInfNorm}) {
          CHECK(param_norm_lp(extend_params(project_control(u, N)), q) <=
                param_norm_lp(u, q) + 1e-10);
        }
      }
    }
  }
}

TEST_CASE("forward bound envelope") {
  Rng g(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t N = 1 + static_cast<std::size_t>(trial % 12);
    NetworkParams p = rand_params(g, N, 3, 5, fbtest::uniform(g, 0.2, 3.0));
    for (auto& a : p.alpha) a = fbtest::uniform(g, 0.0, 4.0);
    double MA = 0.0, Ma = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      MA = std::max(MA, spectral_norm(p.A[k]));
      Ma = std::max(Ma, p.alpha[k]);
    }
    const Vec x0 = rand_vec(g, 5, -2, 2), b = rand_vec(g, 3, -2, 2);
    const double e = std::exp(Ma * MA * MA * p.T);
    const double bound = x0.norm() * e + Ma * MA * p.T * b.norm() * e;
    for (const auto& reg : {Regularizer::l1(), Regularizer::squared_l2(), Regularizer::zero()}) {
      for (const auto& s : fbs_forward(p, x0, b, reg).states) CHECK(s.norm() <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("limit_solve") {
  Rng g(9);
  SUBCASE("linear ODE against the matrix exponential") {
    const Mat A = rand_mat(g, 4, 4) + 2.0 * Mat::Identity(4, 4);
    const double alpha = 0.3, T = 1.0;
    const Vec x0 = rand_vec(g, 4), b = rand_vec(g, 4);
    Control u{T, {A}, {alpha}, {0.0}};
    const LimitSolution sol = limit_solve(u, x0, b, Regularizer::l1(), 2048);
    const Mat AtA = A.transpose() * A;
    const Mat E = expm(-alpha * T * AtA);
    const Vec exact = E * x0 + (Mat::Identity(4, 4) - E) * AtA.ldlt().solve(A.transpose() * b);
    CHECK(sol.err_est > 0.0);
    CHECK((sol.terminal - exact).norm() <= 10.0 * sol.err_est);
  }
  SUBCASE("frozen dynamics") {
    Control u = rand_control(g, 4, 2, 3);
    for (auto& a : u.alpha) a = 0.0;
    const Vec x0 = rand_vec(g, 3);
    const LimitSolution sol = limit_solve(u, x0, rand_vec(g, 2), Regularizer::l1(), 64);
    CHECK(sol.terminal == x0);
    CHECK(sol.err_est == 0.0);
  }
  SUBCASE("first-order self-convergence") {
    const Mat base = rand_mat(g, 3, 6);
    Control u;
    u.T = 1.0;
    const std::size_t M = 32;
    for (std::size_t j = 0; j < M; ++j) {
      const double t = (j + 0.5) / M;
      u.A.push_back(base * (1.0 + 0.25 * std::sin(2 * M_PI * t)));
      u.alpha.push_back(1.0 + 0.5 * std::sin(2 * M_PI * t));
      u.lambda.push_back(0.05 * (1.0 + 0.5 * std::cos(2 * M_PI * t)));
    }
    const Vec x0 = rand_vec(g, 6), b = rand_vec(g, 3);
    double prev = limit_solve(u, x0, b, Regularizer::squared_l2(0.5), 256).err_est;
    for (std::size_t N : {512, 1024, 2048}) {
      const double e = limit_solve(u, x0, b, Regularizer::squared_l2(0.5), N).err_est;
      CHECK(e / prev == doctest::Approx(0.5).epsilon(0.4));
      prev = e;
    }
  }
  SUBCASE("grid padding") {
    CHECK(effective_nref(2048, 3) % 6 == 0);
    CHECK(effective_nref(2048, 3) >= 2048);
    CHECK(effective_nref(64, 64) == 64);
    CHECK(effective_nref(64, 8) == 64);
  }
}

TEST_CASE("deep-layer consistency of the trajectories") {
  Rng g(10);
  const Mat base = rand_mat(g, 3, 6);
  const std::size_t M = 64;
  Control u;
  u.T = 1.0;
  for (std::size_t j = 0; j < M; ++j) {
    const double t = (j + 0.5) / M;
    u.A.push_back(base * (1.0 + 0.25 * std::sin(2 * M_PI * t)));
    u.alpha.push_back(1.0 + 0.5 * std::sin(2 * M_PI * t));
    u.lambda.push_back(0.1 * (1.0 + 0.5 * std::cos(2 * M_PI * t)));
  }
  const Vec x0 = rand_vec(g, 6), b = rand_vec(g, 3);
  const LimitSolution ref = limit_solve(u, x0, b, Regularizer::l1(), 2048);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t N : {8, 16, 32, 64}) {
    const Trajectory tr = fbs_forward(project_control(u, N), x0, b, Regularizer::l1());
    double worst = 0.0;
    const std::size_t K = ref.trajectory.depth();
    for (std::size_t i = 0; i <= K; i += 4) {
      const double t = static_cast<double>(i) / K;
      worst = std::max(worst, (interpolate_pl(tr, t) - ref.trajectory.states[i]).lpNorm<Eigen::Infinity>());
    }
    CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("interpolate_pl") {
  Rng g(11);
  const Trajectory t = fbs_forward(rand_params(g, 4, 2, 3, 2.0), rand_vec(g, 3), rand_vec(g, 2),
                                   Regularizer::l1());
  CHECK(interpolate_pl(t, 0.0) == t.states[0]);
  CHECK(interpolate_pl(t, 2.0) == t.states[4]);
  for (std::size_t k = 0; k < 4; ++k) {
    const double mid = 2.0 * (k + 0.5) / 4.0;
    CHECK((interpolate_pl(t, mid) - 0.5 * (t.states[k] + t.states[k + 1])).norm() <= 1e-15);
  }
  CHECK_THROWS_AS(interpolate_pl(t, -0.1), DomainError);
  CHECK_THROWS_AS(interpolate_pl(t, 2.1), DomainError);
}

TEST_CASE("shift_control") {
  Rng g(12);
  const Control u = rand_control(g, 5, 2, 2, 1.5);
  CHECK(shift_control(u, 0.0) == u);
  for (double h : {1.5, 2.0, -1.5, -7.0}) {
    const Control z = shift_control(u, h);
    CHECK(param_norm_lp(z, 1.0) == 0.0);
  }

  SUBCASE("boundary strip of a constant control") {
    Mat cA(2, 2);
    cA << 1, 2, -1, 0.5;
    const double T = 2.0;
    Control c{T, std::vector<Mat>(4, cA), std::vector<double>(4, 0.8), std::vector<double>(4, 0.3)};
    const Control s = shift_control(c, T / 4);
    const std::size_t K = s.grid() / c.grid();
    const double got = param_norm_lp(difference(s, refine_control(c, K)), 1.0);
    const double expect = T / 4 * (power_oracle(cA) + 0.8 + 0.3);
    CHECK(std::abs(got - expect) <= 1e-8);
  }
  SUBCASE("shift by whole cells moves values") {
    const Control s = shift_control(u, 1.5 / 5);
    const std::size_t K = s.grid() / u.grid();
    for (std::size_t j = 0; j + 1 < u.grid(); ++j) {
      CHECK(s.alpha[j * K] == u.alpha[j + 1]);
    }
    CHECK(s.alpha.back() == 0.0);
  }
  SUBCASE("unaligned shift keeps cell averages") {
    const Control s = shift_control(u, 0.1234567);
    CHECK(s.grid() % u.grid() == 0);
    CHECK(param_norm_lp(s, 1.0) <= param_norm_lp(u, 1.0) + 1e-12);
  }
}
