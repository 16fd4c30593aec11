#include "msm/parametric.hpp"

#include <cmath>
#include <limits>

namespace msm {

double WeibullHazard::cumulative(double t) const {
  if (t <= 0.0 || scale == 0.0) return 0.0;
  return scale * std::pow(t, shape);
}

double WeibullHazard::intensity(double t) const {
  if (scale == 0.0) return 0.0;
  if (t <= 0.0) return shape < 1.0 ? std::numeric_limits<double>::infinity() : (shape == 1.0 ? scale : 0.0);
  return scale * shape * std::pow(t, shape - 1.0);
}

double WeibullHazard::inverse(double h) const {
  if (scale == 0.0) return std::numeric_limits<double>::infinity();
  if (h <= 0.0) return 0.0;
  return std::pow(h / scale, 1.0 / shape);
}

ParametricIllnessDeath::ParametricIllnessDeath(std::array<WeibullHazard, 3> hazards, CovariateSpec spec,
                                               std::array<std::vector<double>, 3> coefs, Quadrature quad)
    : hazards_(hazards), spec_(std::move(spec)), coefs_(std::move(coefs)), quad_(quad) {
  for (Transition tr : kTransitions) {
    const auto& hz = hazards_[index_of(tr)];
    if (!(hz.shape > 0.0) || !(hz.scale >= 0.0) || !std::isfinite(hz.scale)) {
      throw SpecError(std::string("transition ") + transition_code(tr) + ": Weibull shape must be positive and scale nonnegative");
    }
    if (coefs_[index_of(tr)].size() != spec_.width(tr)) {
      throw SpecError(std::string("transition ") + transition_code(tr) + ": expected " +
                      std::to_string(spec_.width(tr)) + " coefficients");
    }
  }
}

double ParametricIllnessDeath::relative_hazard(Transition tr, int a, double x, const std::vector<double>& c,
                                               double t_mediator) const {
  const auto z = spec_.row(tr, a, x, c, t_mediator);
  const auto& b = coefs_[index_of(tr)];
  double eta = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) eta += b[j] * z[j];
  return std::exp(eta);
}

double ParametricIllnessDeath::p00(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const {
  if (!(s > 0.0)) throw EffectsError("evaluation time must be positive");
  const double e01 = relative_hazard(Transition::DiagTreat, policy.source_exposure, prof.x, prof.c, 0.0);
  const double e02 = relative_hazard(Transition::DiagDeath, prof.a, prof.x, prof.c, 0.0);
  return std::exp(-hazards_[0].cumulative(s) * e01 - hazards_[1].cumulative(s) * e02);
}

double ParametricIllnessDeath::p01(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const {
  if (!(s > 0.0)) throw EffectsError("evaluation time must be positive");
  const double e01 = relative_hazard(Transition::DiagTreat, policy.source_exposure, prof.x, prof.c, 0.0);
  const double e02 = relative_hazard(Transition::DiagDeath, prof.a, prof.x, prof.c, 0.0);
  if (hazards_[0].scale == 0.0) return 0.0;
  const WeibullHazard& h01 = hazards_[0];
  const WeibullHazard& h02 = hazards_[1];
  const WeibullHazard& h12 = hazards_[2];
  const double lambda12_s = h12.cumulative(s);
  std::vector<double> z12(spec_.width(Transition::TreatDeath));
  const auto& b12 = coefs_[2];

  auto integrand = [&](double u) {
    spec_.fill_row(Transition::TreatDeath, prof.a, prof.x, prof.c, u, z12);
    double eta = 0.0;
    for (std::size_t j = 0; j < z12.size(); ++j) eta += b12[j] * z12[j];
    const double untreated = std::exp(-h01.cumulative(u) * e01 - h02.cumulative(u) * e02);
    return untreated * h01.intensity(u) * e01 * std::exp(-(lambda12_s - h12.cumulative(u)) * std::exp(eta));
  };

  if (const auto* rect = std::get_if<RectangularRule>(&quad_)) {
    if (!(rect->step > 0.0)) throw EffectsError("grid step must be positive");
    double total = 0.0;
    for (double lo = 0.0; lo < s; lo += rect->step) {
      const double hi = std::min(s, lo + rect->step);
      total += (hi - lo) * integrand(0.5 * (lo + hi));
    }
    return total;
  }
  const auto& simpson = std::get<SimpsonRule>(quad_);
  // u = s v^5 flattens the t^(shape-1) behaviour of the intensity at 0.
  auto smoothed = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double v4 = v * v * v * v;
    return integrand(s * v4 * v) * 5.0 * s * v4;
  };
  return adaptive_simpson(smoothed, 0.0, 1.0, simpson.tol, simpson.max_levels);
}

}  // namespace msm
