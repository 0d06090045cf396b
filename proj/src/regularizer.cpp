#include "fbsnet/regularizer.hpp"

#include <cmath>
#include <string>

namespace fbsnet {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite input");
  }
}

void require_rho(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw DomainError("prox: rho must be a finite nonnegative number, got " + std::to_string(rho));
  }
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

double Regularizer::value(const Vec& x) const {
  switch (kind) {
    case RegKind::L1:
      return scale * x.lpNorm<1>();
    case RegKind::SquaredL2:
      return scale * x.squaredNorm();
    case RegKind::Zero:
      return 0.0;
  }
  return 0.0;
}

GrowthBound Regularizer::growth(Eigen::Index n) const {
  switch (kind) {
    case RegKind::L1:
      return {GrowthCase::Bounded, std::sqrt(static_cast<double>(n)) * scale};
    case RegKind::SquaredL2:
      return {GrowthCase::Linear, 2.0 * scale};
    case RegKind::Zero:
      return {GrowthCase::Bounded, 0.0};
  }
  return {GrowthCase::Bounded, 0.0};
}

void Regularizer::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("regularizer scale must be positive and finite");
  }
}

Vec prox(const Regularizer& reg, double rho, const Vec& v) {
  require_rho(rho);
  require_finite(v, "prox");
  if (rho == 0.0) return v;
  switch (reg.kind) {
    case RegKind::L1: {
      const double t = rho * reg.scale;
      return v.unaryExpr([t](double x) { return soft_threshold(x, t); });
    }
    case RegKind::SquaredL2:
      return v / (1.0 + 2.0 * rho * reg.scale);
    case RegKind::Zero:
      return v;
  }
  return v;
}

Vec subgrad_select(const Regularizer& reg, const Vec& x) {
  require_finite(x, "subgrad_select");
  switch (reg.kind) {
    case RegKind::L1:
      return x.unaryExpr([s = reg.scale](double xi) {
        return xi > 0.0 ? s : (xi < 0.0 ? -s : 0.0);
      });
    case RegKind::SquaredL2:
      return 2.0 * reg.scale * x;
    case RegKind::Zero:
      return Vec::Zero(x.size());
  }
  return Vec::Zero(x.size());
}

double prox_rho_continuity_gap(const Regularizer& reg, double rho, double drho, const Vec& v) {
  if (!(rho > 0.0) || !(rho + drho > 0.0)) {
    throw DomainError("prox_rho_continuity_gap: need rho > 0 and rho + drho > 0");
  }
  return (prox(reg, rho + drho, v) - prox(reg, rho, v)).norm();
}

ProxVjp prox_vjp(const Regularizer& reg, double rho, const Vec& z, const Vec& u, const Vec& g) {
  double drho = 0.0;
  Mat dz = prox_vjp_columns(reg, rho, z, u, g, &drho);
  return {Vec(dz.col(0)), drho};
}

Mat prox_columns(const Regularizer& reg, double rho, const Mat& Z) {
  require_rho(rho);
  if (rho == 0.0) return Z;
  switch (reg.kind) {
    case RegKind::L1: {
      const double t = rho * reg.scale;
      return Z.unaryExpr([t](double x) { return soft_threshold(x, t); });
    }
    case RegKind::SquaredL2:
      return Z / (1.0 + 2.0 * rho * reg.scale);
    case RegKind::Zero:
      return Z;
  }
  return Z;
}

Mat prox_vjp_columns(const Regularizer& reg, double rho, const Mat& Z, const Mat& U, const Mat& G,
                     double* drho) {
  switch (reg.kind) {
    case RegKind::L1: {
      // u = sign(z) max(|z| - rho s, 0): du/dz = 1 on the active set,
      // du/drho = -s sign(u) there.
      const double t = rho * reg.scale;
      Mat dz(Z.rows(), Z.cols());
      double acc = 0.0;
      for (Eigen::Index c = 0; c < Z.cols(); ++c) {
        for (Eigen::Index r = 0; r < Z.rows(); ++r) {
          const double z = Z(r, c);
          if (std::abs(z) > t) {
            dz(r, c) = G(r, c);
            acc -= reg.scale * (U(r, c) > 0.0 ? 1.0 : -1.0) * G(r, c);
          } else {
            dz(r, c) = 0.0;
          }
        }
      }
      *drho += acc;
      return dz;
    }
    case RegKind::SquaredL2: {
      const double denom = 1.0 + 2.0 * rho * reg.scale;
      *drho += -2.0 * reg.scale / (denom * denom) * (Z.array() * G.array()).sum();
      return G / denom;
    }
    case RegKind::Zero:
      return G;
  }
  return G;
}

void to_json(nlohmann::json& j, const Regularizer& reg) {
  const char* kind = "l1";
  if (reg.kind == RegKind::SquaredL2) kind = "squared_l2";
  if (reg.kind == RegKind::Zero) kind = "zero";
  j = nlohmann::json{{"kind", kind}, {"scale", reg.scale}};
}

void from_json(const nlohmann::json& j, Regularizer& reg) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "l1") {
    reg.kind = RegKind::L1;
  } else if (kind == "squared_l2") {
    reg.kind = RegKind::SquaredL2;
  } else if (kind == "zero") {
    reg.kind = RegKind::Zero;
  } else {
    throw DomainError("unknown regularizer kind '" + kind + "' (expected l1, squared_l2 or zero)");
  }
  reg.scale = j.contains("scale") ? j.at("scale").get<double>() : 1.0;
  reg.validate();
}

}  // namespace fbsnet
