#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msm/covariates.hpp"
#include "msm/dataset.hpp"
#include "msm/effects.hpp"
#include "msm/keyvalue.hpp"
#include "msm/parametric.hpp"
#include "msm/rng.hpp"

namespace msm {

struct ConfounderDistribution {
  enum class Kind { Normal, Categorical };
  Kind kind = Kind::Normal;
  double mean = 0.0;
  double sd = 1.0;
  std::vector<double> levels;
  std::vector<double> probs;

  double draw(CounterRng& rng) const;
};

// Simulation scenario read from a flat key-value file.
//
//   scenario.id            0 (custom) or 1..4; 1..4 get structural checks
//   exposure.prevalence    P(A = 1)
//   x.levels, x.probs      discrete X (probs default to uniform)
//   c.count                number of confounders
//   c.<j>.dist             normal | categorical
//   c.<j>.mean, c.<j>.sd   normal parameters
//   c.<j>.levels, c.<j>.probs
//   hazard.<tr>.shape, hazard.<tr>.scale   Weibull baselines, tr in 01/02/12
//   truth.<tr>             generating formula; coef.<tr>.<column> for every column
//   model.<tr>             analysis formula (defaults to truth.<tr>)
//   categorical.<VAR>[.ref] dummy encodings shared by truth and model
//   censoring.enabled, censoring.admin, censoring.dropout_max
//   semicompeting.target   optional; calibrated on load by the CLI
//   calibration.n, calibration.seed
//   profile.x, profile.c   covariate profile the effects condition on
//   horizon, grid_step
struct Scenario {
  int id = 0;
  std::string name;
  double exposure_prevalence = 0.5;
  std::vector<double> x_levels{1, 2, 3, 4};
  std::vector<double> x_probs{0.25, 0.25, 0.25, 0.25};
  std::vector<ConfounderDistribution> confounders;
  std::array<WeibullHazard, 3> hazards{};
  CovariateSpec truth_spec;
  std::array<std::vector<double>, 3> coefs;
  CovariateSpec analysis_spec;
  bool censoring = true;
  double admin_censoring = 24.0;
  double dropout_max = 48.0;
  std::optional<double> semicompeting_target;
  long calibration_n = 100000;
  std::uint64_t calibration_seed = 20240917;
  CovariateProfile profile;
  double horizon = 24.0;
  double grid_step = 0.5;

  static Scenario from_keyvalue(const KeyValueFile& kv);
  static Scenario load(const std::string& path);

  // Throws SpecError on bad parameters or when the structure required by `id` is violated.
  void check() const;
  ParametricIllnessDeath truth_model(Quadrature quad = SimpsonRule{}) const;
  // Every parameter, sorted, one per line; hashed into provenance.
  std::string canonical() const;
};

// Latent event times of one simulated path (no censoring).
struct LatentPath {
  double treatment = std::numeric_limits<double>::infinity();
  double death = std::numeric_limits<double>::infinity();
  bool treated() const { return std::isfinite(treatment); }
};

// Independent cause-specific clocks for 0->1 and 0->2; after treatment at u,
// death by inversion of Lambda12 on (u, inf) on the diagnosis clock.
// The 0->1 intensity uses `source_exposure`, the death intensities use `a`.
LatentPath simulate_path(const ParametricIllnessDeath& model, int source_exposure, int a, double x,
                         const std::vector<double>& c, CounterRng& rng);

std::vector<SubjectRecord> generate(const Scenario& sc, std::size_t n, std::uint64_t seed);

// Fraction of paths dying before treatment, estimated on calibration_n draws.
double semicompeting_fraction(const Scenario& sc, long n, std::uint64_t seed);
// Bisection on the 0->2 baseline scale with common random numbers until the
// fraction is within `tol` of target. Target 0 removes the 0->2 hazard.
Scenario calibrate_semicompeting(const Scenario& sc, double target, double tol = 0.005);

struct TruthTable {
  int scenario_id = 0;
  std::optional<double> semicompeting_target;
  std::vector<double> grid;
  std::vector<double> te, sde, sie;

  // Values at s, which must be a grid point.
  EffectPoint at(double s) const;
};

TruthTable true_effects(const Scenario& sc, const std::vector<double>& s_grid);

struct OccupationFrequencies {
  std::vector<double> s;
  std::vector<double> p00, p01;
  long paths = 0;
};

// Monte Carlo state-occupation frequencies at fixed covariates and policy.
OccupationFrequencies forward_occupation(const ParametricIllnessDeath& model, const CovariateProfile& prof,
                                         const InterventionPolicy& policy, const std::vector<double>& s,
                                         long paths, std::uint64_t seed);

}  // namespace msm
