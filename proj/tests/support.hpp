#pragma once

#include <random>

#include "fbsnet/dynamics.hpp"
#include "fbsnet/learning.hpp"

namespace fbtest {

using fbsnet::Control;
using fbsnet::Mat;
using fbsnet::NetworkParams;
using fbsnet::Vec;
using Rng = std::mt19937_64;

inline double uniform(Rng& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vec rand_vec(Rng& g, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(g, lo, hi);
  return v;
}

inline Mat rand_mat(Rng& g, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  Mat A(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) A(i, j) = uniform(g, lo, hi);
  }
  return A;
}

inline NetworkParams rand_params(Rng& g, std::size_t N, Eigen::Index m, Eigen::Index n,
                                 double T = 1.0) {
  NetworkParams p;
  p.T = T;
  for (std::size_t k = 0; k < N; ++k) {
    p.A.push_back(rand_mat(g, m, n, -0.5, 0.5));
    p.alpha.push_back(uniform(g, 0.1, 1.0));
    p.lambda.push_back(uniform(g, 0.01, 0.3));
  }
  return p;
}

inline Control rand_control(Rng& g, std::size_t M, Eigen::Index m, Eigen::Index n,
                            double T = 1.0) {
  Control u;
  u.T = T;
  for (std::size_t k = 0; k < M; ++k) {
    u.A.push_back(rand_mat(g, m, n, -0.5, 0.5));
    u.alpha.push_back(uniform(g, 0.0, 2.0));
    u.lambda.push_back(uniform(g, 0.0, 0.5));
  }
  return u;
}

/// Small dataset with explicit samples, all in the training split.
inline fbsnet::Dataset rand_dataset(Rng& g, Eigen::Index m, Eigen::Index n, std::size_t J) {
  fbsnet::Dataset d;
  d.m = m;
  d.n = n;
  d.train_count = J;
  d.val_count = 0;
  d.meta.A_true = rand_mat(g, m, n);
  for (std::size_t j = 0; j < J; ++j) {
    d.b.push_back(rand_vec(g, m));
    d.y.push_back(rand_vec(g, n));
    d.x0.push_back(rand_vec(g, n, -0.2, 0.2));
  }
  return d;
}

}  // namespace fbtest
