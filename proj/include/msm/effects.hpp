#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msm/multistate.hpp"

namespace msm {

// Conditioning set (A, X, C) of the estimands. Contrasts set `a` themselves.
struct CovariateProfile {
  int a = 0;
  double x = 0.0;
  std::vector<double> c;
};

enum class PolicyTag { Natural, Shifted };

// The 0->1 intensity is taken from exposure group `source_exposure`; the
// death intensities stay at the profile's own exposure.
struct InterventionPolicy {
  int source_exposure = 0;
  PolicyTag tag = PolicyTag::Natural;

  static InterventionPolicy natural(int a) { return {a, PolicyTag::Natural}; }
  static InterventionPolicy shifted(int source) { return {source, PolicyTag::Shifted}; }
};

class EffectsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State-occupation probabilities of the illness-death model.
class SurvivalModel {
 public:
  virtual ~SurvivalModel() = default;
  // Alive and untreated at s.
  virtual double p00(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const = 0;
  // Alive and treated at s.
  virtual double p01(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const = 0;

  double survival(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const {
    return p00(prof, policy, s) + p01(prof, policy, s);
  }
};

// Plug-in estimator over a fitted MultistateFit. The 0->1 integral is a sum
// over the Breslow jumps of that transition in (0, s]; the 1->2 factor uses
// the baseline increment on (u, s].
class FittedIllnessDeath final : public SurvivalModel {
 public:
  explicit FittedIllnessDeath(const MultistateFit& fit) : fit_(&fit) {}
  double p00(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const override;
  double p01(const CovariateProfile& prof, const InterventionPolicy& policy, double s) const override;
  const MultistateFit& fit() const { return *fit_; }

 private:
  const MultistateFit* fit_;
};

double p00(const MultistateFit& fit, const CovariateProfile& prof, const InterventionPolicy& policy, double s);
double p01(const MultistateFit& fit, const CovariateProfile& prof, const InterventionPolicy& policy, double s);

// P(S > s | A = 1) - P(S > s | A = 0) at the profile's (X, C).
double total_effect(const SurvivalModel& model, const CovariateProfile& prof, double s);
// Restricted-mean difference on [0, r], midpoint rectangular rule with the given step.
double rmst_total_effect(const SurvivalModel& model, const CovariateProfile& prof, double r, double grid_step);

// {P^g00 + P^g01}(s | A = 1) - {P00 + P01}(s | A = 0), g drawn from the A = 0 0->1 intensity.
double sde(const SurvivalModel& model, double s, const CovariateProfile& prof);
// {P00 + P01}(s | A = 1) - {P^g'00 + P^g'01}(s | A = 1), g' drawn from the A = 0 0->1 intensity.
double sie(const SurvivalModel& model, double s, const CovariateProfile& prof);

// (te - sde) / te; throws EffectsError when |te| < 1e-12.
double proportion_eliminated(double te, double sde);

struct EffectPoint {
  double te = 0.0;
  double sde = 0.0;
  double sie = 0.0;
};
// All three contrasts at s from four survival evaluations.
EffectPoint effects_at(const SurvivalModel& model, double s, const CovariateProfile& prof, bool negate_sie = false);

struct Band {
  std::vector<double> lo, hi;
};

struct EffectCurve {
  std::vector<double> grid;
  std::vector<double> te, sde, sie;
  std::optional<Band> te_band, sde_band, sie_band;
  std::optional<double> rmst_horizon, rmst_te;
  std::optional<double> pe_horizon, pe;
  std::vector<std::string> warnings;
};

// {step, 2 step, ..., horizon}; horizon is appended when it is not a multiple of step.
std::vector<double> effect_grid(double horizon, double grid_step);

struct CurveOptions {
  bool negate_sie = false;
};

EffectCurve effect_curve(const SurvivalModel& model, double horizon, double grid_step,
                         const CovariateProfile& prof, const CurveOptions& options = {});
EffectCurve effect_curve(const SurvivalModel& model, const std::vector<double>& grid,
                         const CovariateProfile& prof, const CurveOptions& options = {});

// Average of the profile-specific curves over the given (X, C) profiles.
EffectCurve marginal_effect_curve(const SurvivalModel& model, const std::vector<double>& grid,
                                  const std::vector<CovariateProfile>& profiles,
                                  const CurveOptions& options = {});

// Diagnostics for fitted models.
std::vector<std::string> positivity_warnings(const MultistateFit& fit, const CovariateProfile& prof, int source_exposure);
std::optional<std::string> extrapolation_warning(const MultistateFit& fit, double s);

// s,te,sde,sie[,te_lo,te_hi,sde_lo,sde_hi,sie_lo,sie_hi]
void write_effect_curve_csv(std::ostream& out, const EffectCurve& curve);

}  // namespace msm
