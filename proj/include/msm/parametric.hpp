#pragma once

#include <array>
#include <stdexcept>
#include <variant>
#include <vector>

#include "msm/covariates.hpp"
#include "msm/effects.hpp"

namespace msm {

// Proportional-hazards Weibull baseline: Lambda(t) = scale * t^shape.
// scale = 0 removes the hazard.
struct WeibullHazard {
  double shape = 1.0;
  double scale = 0.0;

  double cumulative(double t) const;
  double intensity(double t) const;
  // Smallest t with cumulative(t) = h, given h >= 0; +inf when scale is 0.
  double inverse(double h) const;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RectangularRule {
  double step = 0.5;  // midpoint rule on this grid
};
struct SimpsonRule {
  double tol = 1e-8;  // global step halving until successive estimates agree
  int max_levels = 22;
};
using Quadrature = std::variant<RectangularRule, SimpsonRule>;

// Illness-death model with known parametric intensities
//   alpha_hk(t | z) = alpha0_hk(t) exp(coef_hk' z_hk),
// the 1->2 intensity on the diagnosis clock with z built at t' = time of treatment.
class ParametricIllnessDeath final : public SurvivalModel {
 public:
  ParametricIllnessDeath(std::array<WeibullHazard, 3> hazards, CovariateSpec spec,
                         std::array<std::vector<double>, 3> coefs, Quadrature quad = SimpsonRule{});

  double p00(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const override;
  double p01(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const override;

  const WeibullHazard& hazard(Transition tr) const { return hazards_[index_of(tr)]; }
  const CovariateSpec& spec() const { return spec_; }
  const std::vector<double>& coefficients(Transition tr) const { return coefs_[index_of(tr)]; }
  const Quadrature& quadrature() const { return quad_; }
  void set_quadrature(Quadrature quad) { quad_ = quad; }

  // exp(coef' z) for the given covariate pattern; t_mediator only matters for 12.
  double relative_hazard(Transition tr, int a, double x, const std::vector<double>& c, double t_mediator) const;

 private:
  std::array<WeibullHazard, 3> hazards_;
  CovariateSpec spec_;
  std::array<std::vector<double>, 3> coefs_;
  Quadrature quad_;
};

// Composite Simpson on [lo, hi] with global step halving; throws QuadratureError.
template <class F>
double adaptive_simpson(F&& f, double lo, double hi, double tol, int max_levels);

}  // namespace msm

#include "msm/detail/simpson.hpp"
