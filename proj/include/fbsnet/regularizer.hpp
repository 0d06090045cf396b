#pragma once

#include <nlohmann/json.hpp>

#include "fbsnet/types.hpp"

namespace fbsnet {

enum class RegKind { L1, SquaredL2, Zero };

/// Which growth bound the subgradients obey: |g| <= M|x| (Linear) or
/// |g| <= M (Bounded).
enum class GrowthCase { Linear, Bounded };

struct GrowthBound {
  GrowthCase kind;
  double M;
};

/// Convex regularizer R(x) = scale * base(x) with closed-form prox.
///
/// base is |x|_1 for L1, |x|_2^2 for SquaredL2 and 0 for Zero. Every kind
/// satisfies R convex, 0 in dR(0), and one of the two growth bounds.
struct Regularizer {
  RegKind kind = RegKind::L1;
  double scale = 1.0;

  static Regularizer l1(double scale = 1.0) { return {RegKind::L1, scale}; }
  static Regularizer squared_l2(double scale = 1.0) { return {RegKind::SquaredL2, scale}; }
  static Regularizer zero() { return {RegKind::Zero, 1.0}; }

  double value(const Vec& x) const;

  /// Growth bound for subgradients on R^n. L1 needs n because
  /// |sign(x)|_2 <= sqrt(n).
  GrowthBound growth(Eigen::Index n) const;

  void validate() const;
};

/// argmin_x R(x) + |x - v|^2 / (2 rho). rho = 0 returns v unchanged.
Vec prox(const Regularizer& reg, double rho, const Vec& v);

/// One element of dR(x); zero at L1 kinks.
Vec subgrad_select(const Regularizer& reg, const Vec& x);

/// |prox(rho + drho, v) - prox(rho, v)|_2
double prox_rho_continuity_gap(const Regularizer& reg, double rho, double drho, const Vec& v);

/// Vector-Jacobian product of u = prox(reg, rho, z) with cotangent g.
/// Uses the a.e. derivative of the soft-threshold (zero on the dead zone
/// and at the kinks themselves).
struct ProxVjp {
  Vec dz;
  double drho;
};
ProxVjp prox_vjp(const Regularizer& reg, double rho, const Vec& z, const Vec& u, const Vec& g);

/// Batched variants over the columns of Z (used by the unrolled network).
Mat prox_columns(const Regularizer& reg, double rho, const Mat& Z);
/// Returns dZ and accumulates d/d rho into *drho.
Mat prox_vjp_columns(const Regularizer& reg, double rho, const Mat& Z, const Mat& U, const Mat& G,
                     double* drho);

void to_json(nlohmann::json& j, const Regularizer& reg);
void from_json(const nlohmann::json& j, Regularizer& reg);

}  // namespace fbsnet
