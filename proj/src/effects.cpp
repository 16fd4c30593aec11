#include "msm/effects.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "msm/csv.hpp"

namespace msm {

namespace {

void require_positive_time(double s) {
  if (!(s > 0.0)) throw EffectsError("evaluation time must be positive");
}

void require_exposure(int a) {
  if (a != 0 && a != 1) throw EffectsError("exposure must be 0 or 1");
}

CovariateProfile with_exposure(const CovariateProfile& prof, int a) {
  CovariateProfile out = prof;
  out.a = a;
  return out;
}

}  // namespace

double FittedIllnessDeath::p00(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const {
  require_positive_time(s);
  require_exposure(policy.source_exposure);
  const MultistateFit& f = *fit_;
  const CoxFit& f01 = f.fit(Transition::DiagTreat);
  const CoxFit& f02 = f.fit(Transition::DiagDeath);
  const double e01 = std::exp(f01.linear_predictor(f.spec.row(Transition::DiagTreat, policy.source_exposure, prof.x, prof.c, 0.0)));
  const double e02 = std::exp(f02.linear_predictor(f.spec.row(Transition::DiagDeath, prof.a, prof.x, prof.c, 0.0)));
  return std::exp(-f01.baseline(s) * e01 - f02.baseline(s) * e02);
}

double FittedIllnessDeath::p01(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const {
  require_positive_time(s);
  require_exposure(policy.source_exposure);
  const MultistateFit& f = *fit_;
  const CoxFit& f01 = f.fit(Transition::DiagTreat);
  const CoxFit& f02 = f.fit(Transition::DiagDeath);
  const CoxFit& f12 = f.fit(Transition::TreatDeath);
  const double e01 = std::exp(f01.linear_predictor(f.spec.row(Transition::DiagTreat, policy.source_exposure, prof.x, prof.c, 0.0)));
  const double e02 = std::exp(f02.linear_predictor(f.spec.row(Transition::DiagDeath, prof.a, prof.x, prof.c, 0.0)));
  const double lambda12_s = f12.baseline(s);
  std::vector<double> z12(f.spec.width(Transition::TreatDeath));

  const auto& times = f01.baseline.jump_times();
  const auto& cum01 = f01.baseline.cum_values();
  double total = 0.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= s; ++k) {
    const double u = times[k];
    const double untreated = std::exp(-cum01[k] * e01 - f02.baseline(u) * e02);
    const double jump = f01.baseline.jump_size(k) * e01;
    f.spec.fill_row(Transition::TreatDeath, prof.a, prof.x, prof.c, u, z12);
    const double e12 = std::exp(f12.linear_predictor(z12));
    const double stay = std::exp(-(lambda12_s - f12.baseline(u)) * e12);
    total += untreated * jump * stay;
  }
  return total;
}

double p00(const MultistateFit& fit, const CovariateProfile& prof, const InterventionPolicy& policy, double s) {
  return FittedIllnessDeath(fit).p00(prof, policy, s);
}

double p01(const MultistateFit& fit, const CovariateProfile& prof, const InterventionPolicy& policy, double s) {
  return FittedIllnessDeath(fit).p01(prof, policy, s);
}

EffectPoint effects_at(const SurvivalModel& model, double s, const CovariateProfile& prof, bool negate_sie) {
  const CovariateProfile exposed = with_exposure(prof, 1);
  const CovariateProfile unexposed = with_exposure(prof, 0);
  const double s1 = model.survival(exposed, InterventionPolicy::natural(1), s);
  const double s0 = model.survival(unexposed, InterventionPolicy::natural(0), s);
  const double s1g = model.survival(exposed, InterventionPolicy::shifted(0), s);
  EffectPoint pt;
  pt.te = s1 - s0;
  pt.sde = s1g - s0;
  pt.sie = s1 - s1g;
  if (negate_sie) pt.sie = -pt.sie;
  return pt;
}

double total_effect(const SurvivalModel& model, const CovariateProfile& prof, double s) {
  return model.survival(with_exposure(prof, 1), InterventionPolicy::natural(1), s) -
         model.survival(with_exposure(prof, 0), InterventionPolicy::natural(0), s);
}

double sde(const SurvivalModel& model, double s, const CovariateProfile& prof) {
  return effects_at(model, s, prof).sde;
}

double sie(const SurvivalModel& model, double s, const CovariateProfile& prof) {
  return effects_at(model, s, prof).sie;
}

double rmst_total_effect(const SurvivalModel& model, const CovariateProfile& prof, double r, double grid_step) {
  if (!(r > 0.0)) throw EffectsError("RMST horizon must be positive");
  if (!(grid_step > 0.0)) throw EffectsError("grid step must be positive");
  const auto n = static_cast<long>(std::ceil(r / grid_step - 1e-9));
  double total = 0.0;
  for (long k = 0; k < n; ++k) {
    const double lo = static_cast<double>(k) * grid_step;
    const double hi = std::min(r, static_cast<double>(k + 1) * grid_step);
    total += (hi - lo) * total_effect(model, prof, 0.5 * (lo + hi));
  }
  return total;
}

double proportion_eliminated(double te, double sde_value) {
  if (std::abs(te) < 1e-12) throw EffectsError("proportion eliminated is undefined: total effect is zero");
  return (te - sde_value) / te;
}

std::vector<double> effect_grid(double horizon, double grid_step) {
  if (!(horizon > 0.0)) throw EffectsError("horizon must be positive");
  if (!(grid_step > 0.0)) throw EffectsError("grid step must be positive");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor(horizon / grid_step + 1e-9));
  for (long k = 1; k <= n; ++k) grid.push_back(static_cast<double>(k) * grid_step);
  if (grid.empty() || horizon - grid.back() > 1e-9 * horizon) grid.push_back(horizon);
  return grid;
}

EffectCurve effect_curve(const SurvivalModel& model, const std::vector<double>& grid, const CovariateProfile& prof,
                         const CurveOptions& options) {
  EffectCurve curve;
  curve.grid = grid;
  for (double s : grid) {
    EffectPoint pt = effects_at(model, s, prof, options.negate_sie);
    curve.te.push_back(pt.te);
    curve.sde.push_back(pt.sde);
    curve.sie.push_back(pt.sie);
  }
  if (const auto* fitted = dynamic_cast<const FittedIllnessDeath*>(&model); fitted && !grid.empty()) {
    if (auto w = extrapolation_warning(fitted->fit(), grid.back())) curve.warnings.push_back(*w);
    for (auto& w : positivity_warnings(fitted->fit(), prof, 0)) curve.warnings.push_back(w);
  }
  return curve;
}

EffectCurve effect_curve(const SurvivalModel& model, double horizon, double grid_step, const CovariateProfile& prof,
                         const CurveOptions& options) {
  return effect_curve(model, effect_grid(horizon, grid_step), prof, options);
}

EffectCurve marginal_effect_curve(const SurvivalModel& model, const std::vector<double>& grid,
                                  const std::vector<CovariateProfile>& profiles, const CurveOptions& options) {
  if (profiles.empty()) throw EffectsError("no profiles to average over");
  EffectCurve curve;
  curve.grid = grid;
  curve.te.assign(grid.size(), 0.0);
  curve.sde.assign(grid.size(), 0.0);
  curve.sie.assign(grid.size(), 0.0);
  const double w = 1.0 / static_cast<double>(profiles.size());
  for (const auto& prof : profiles) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EffectPoint pt = effects_at(model, grid[i], prof, options.negate_sie);
      curve.te[i] += w * pt.te;
      curve.sde[i] += w * pt.sde;
      curve.sie[i] += w * pt.sie;
    }
  }
  return curve;
}

std::vector<std::string> positivity_warnings(const MultistateFit& fit, const CovariateProfile& prof, int source_exposure) {
  std::vector<std::string> out;
  if (fit.treat_events.empty()) return out;
  // Only meaningful when X enters as a discrete pattern.
  bool x_observed = false;
  for (const auto& [key, count] : fit.treat_events) x_observed |= key.second == prof.x;
  if (!x_observed) return out;
  auto it = fit.treat_events.find({source_exposure, prof.x});
  if (it == fit.treat_events.end() || it->second == 0) {
    out.push_back("positivity: no 0->1 events in exposure group " + std::to_string(source_exposure) +
                  " at x = " + format_double(prof.x));
  }
  return out;
}

std::optional<std::string> extrapolation_warning(const MultistateFit& fit, double s) {
  const double limit = fit.extrapolation_limit();
  if (s > limit) {
    return "extrapolation: s = " + format_double(s) + " exceeds the last observed event time " +
           format_double(limit) + "; cumulative hazards held constant";
  }
  return std::nullopt;
}

void write_effect_curve_csv(std::ostream& out, const EffectCurve& curve) {
  const bool bands = curve.te_band && curve.sde_band && curve.sie_band;
  std::vector<std::string> header = {"s", "te", "sde", "sie"};
  if (bands) {
    for (const char* h : {"te_lo", "te_hi", "sde_lo", "sde_hi", "sie_lo", "sie_hi"}) header.push_back(h);
  }
  write_csv_row(out, header);
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    std::vector<std::string> row = {format_double(curve.grid[i]), format_double(curve.te[i]),
                                    format_double(curve.sde[i]), format_double(curve.sie[i])};
    if (bands) {
      for (const Band* b : {&*curve.te_band, &*curve.sde_band, &*curve.sie_band}) {
        row.push_back(format_double(b->lo[i]));
        row.push_back(format_double(b->hi[i]));
      }
    }
    write_csv_row(out, row);
  }
}

}  // namespace msm
