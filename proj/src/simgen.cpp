#include "msm/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msm/csv.hpp"

namespace msm {

namespace {

// Substream tags keep the uses of one seed apart.
constexpr std::uint32_t kTagGenerate = 1;
constexpr std::uint32_t kTagCalibrate = 2;
constexpr std::uint32_t kTagForward = 3;

double draw_discrete(const std::vector<double>& levels, const std::vector<double>& probs, CounterRng& rng) {
  double u = rng.uniform01();
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    if (u < probs[i]) return levels[i];
    u -= probs[i];
  }
  return levels.back();
}

void check_probs(const std::vector<double>& levels, const std::vector<double>& probs, const std::string& what) {
  if (levels.empty()) throw SpecError(what + ": no levels");
  if (probs.size() != levels.size()) throw SpecError(what + ": levels and probs differ in length");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw SpecError(what + ": negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SpecError(what + ": probabilities must sum to 1");
}

std::vector<double> uniform_probs(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

bool any_nonzero(const Scenario& sc, Transition tr, bool (*pick)(TermKind)) {
  const auto& cols = sc.truth_spec.columns(tr);
  const auto& b = sc.coefs[index_of(tr)];
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (pick(cols[j].kind) && b[j] != 0.0) return true;
  }
  return false;
}

bool is_exposure_mediator(TermKind k) {
  return k == TermKind::ExposureMediator || k == TermKind::ExposureMediatorSq;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

double ConfounderDistribution::draw(CounterRng& rng) const {
  if (kind == Kind::Normal) return mean + sd * rng.normal();
  return draw_discrete(levels, probs, rng);
}

Scenario Scenario::from_keyvalue(const KeyValueFile& kv) {
  Scenario sc;
  sc.id = static_cast<int>(kv.get_int("scenario.id", 0));
  sc.name = kv.find("scenario.name").value_or("scenario " + std::to_string(sc.id));
  sc.exposure_prevalence = kv.get_double("exposure.prevalence", 0.5);
  if (kv.has("x.levels")) {
    sc.x_levels = kv.get_doubles("x.levels");
    sc.x_probs = kv.has("x.probs") ? kv.get_doubles("x.probs") : uniform_probs(sc.x_levels.size());
  }
  const long k = kv.get_int("c.count", 0);
  if (k < 0) throw SpecError("c.count must be nonnegative");
  for (long j = 1; j <= k; ++j) {
    const std::string base = "c." + std::to_string(j) + ".";
    ConfounderDistribution d;
    const std::string dist = kv.find(base + "dist").value_or("normal");
    if (dist == "normal") {
      d.mean = kv.get_double(base + "mean", 0.0);
      d.sd = kv.get_double(base + "sd", 1.0);
    } else if (dist == "categorical") {
      d.kind = ConfounderDistribution::Kind::Categorical;
      d.levels = kv.get_doubles(base + "levels");
      d.probs = kv.has(base + "probs") ? kv.get_doubles(base + "probs") : uniform_probs(d.levels.size());
    } else {
      throw SpecError(base + "dist must be normal or categorical, got '" + dist + "'");
    }
    sc.confounders.push_back(std::move(d));
  }
  for (Transition tr : kTransitions) {
    const std::string code = transition_code(tr);
    auto& hz = sc.hazards[index_of(tr)];
    hz.shape = kv.get_double("hazard." + code + ".shape");
    hz.scale = kv.get_double("hazard." + code + ".scale");
  }

  KeyValueFile model_kv = kv;
  for (Transition tr : kTransitions) {
    const std::string code = transition_code(tr);
    if (!kv.has("model." + code)) model_kv.set("model." + code, kv.find("truth." + code).value_or(""));
  }
  sc.truth_spec = CovariateSpec::from_keyvalue(kv, "truth");
  sc.analysis_spec = CovariateSpec::from_keyvalue(model_kv, "model");
  for (Transition tr : kTransitions) {
    const std::string code = transition_code(tr);
    for (const auto& name : sc.truth_spec.column_names(tr)) {
      const std::string key = "coef." + code + "." + name;
      if (!kv.has(key)) throw SpecError("missing coefficient " + key);
      sc.coefs[index_of(tr)].push_back(kv.get_double(key));
    }
  }
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("coef.", 0) != 0) continue;
    const auto parts = split(key.substr(5), '.');
    bool known = false;
    if (!parts.empty()) {
      const Transition tr = parse_transition(parts[0]);
      const std::string col = key.substr(5 + parts[0].size() + 1);
      for (const auto& name : sc.truth_spec.column_names(tr)) known |= name == col;
    }
    if (!known) throw SpecError("coefficient " + key + " names no column of the generating model");
  }

  sc.censoring = kv.get_bool("censoring.enabled", true);
  sc.admin_censoring = kv.get_double("censoring.admin", 24.0);
  sc.dropout_max = kv.get_double("censoring.dropout_max", 48.0);
  if (kv.has("semicompeting.target")) sc.semicompeting_target = kv.get_double("semicompeting.target");
  sc.calibration_n = kv.get_int("calibration.n", 100000);
  sc.calibration_seed = static_cast<std::uint64_t>(kv.get_int("calibration.seed", 20240917));
  sc.profile.a = 0;
  sc.profile.x = kv.get_double("profile.x", sc.x_levels.front());
  sc.profile.c = kv.has("profile.c") ? kv.get_doubles("profile.c") : std::vector<double>(sc.confounders.size(), 0.0);
  sc.horizon = kv.get_double("horizon", 24.0);
  sc.grid_step = kv.get_double("grid_step", 0.5);
  sc.check();
  return sc;
}

Scenario Scenario::load(const std::string& path) { return from_keyvalue(KeyValueFile::load(path)); }

void Scenario::check() const {
  if (id < 0 || id > 4) throw SpecError("scenario.id must be 0 (custom) or 1..4");
  if (!(exposure_prevalence >= 0.0 && exposure_prevalence <= 1.0)) {
    throw SpecError("exposure.prevalence must lie in [0, 1]");
  }
  check_probs(x_levels, x_probs, "x");
  for (std::size_t j = 0; j < confounders.size(); ++j) {
    const auto& d = confounders[j];
    const std::string what = "c." + std::to_string(j + 1);
    if (d.kind == ConfounderDistribution::Kind::Normal) {
      if (!(d.sd >= 0.0)) throw SpecError(what + ".sd must be nonnegative");
    } else {
      check_probs(d.levels, d.probs, what);
    }
  }
  for (Transition tr : kTransitions) {
    const auto& hz = hazards[index_of(tr)];
    const std::string code = transition_code(tr);
    if (!(hz.shape > 0.0)) throw SpecError("hazard." + code + ".shape must be positive");
    const bool may_vanish = tr == Transition::DiagDeath;
    if (may_vanish ? !(hz.scale >= 0.0) : !(hz.scale > 0.0)) {
      throw SpecError("hazard." + code + ".scale must be " + (may_vanish ? "nonnegative" : "positive"));
    }
  }
  const int needed = std::max(truth_spec.confounders_required(), analysis_spec.confounders_required());
  if (needed > static_cast<int>(confounders.size())) {
    throw SpecError("formulas reference C" + std::to_string(needed) + " but c.count is " +
                    std::to_string(confounders.size()));
  }
  if (profile.c.size() != confounders.size()) throw SpecError("profile.c must have c.count entries");
  truth_spec.check_values(profile.x, profile.c);
  if (censoring && !(admin_censoring > 0.0 && dropout_max > 0.0)) {
    throw SpecError("censoring times must be positive");
  }
  if (!(horizon > 0.0) || !(grid_step > 0.0)) throw SpecError("horizon and grid_step must be positive");
  if (semicompeting_target && !(*semicompeting_target >= 0.0 && *semicompeting_target <= 0.9)) {
    throw SpecError("semicompeting.target must lie in [0, 0.9]");
  }

  auto exposure = [](TermKind k) { return involves_exposure(k); };
  const bool a01 = any_nonzero(*this, Transition::DiagTreat, exposure);
  const bool a_death = any_nonzero(*this, Transition::DiagDeath, exposure) ||
                       any_nonzero(*this, Transition::TreatDeath, exposure);
  const bool interaction = any_nonzero(*this, Transition::TreatDeath, is_exposure_mediator);
  switch (id) {
    case 1:
      if (interaction) throw SpecError("scenario 1 has no exposure-mediator interaction");
      if (!a01 || !a_death) throw SpecError("scenario 1 needs exposure effects on 01 and on death");
      break;
    case 2:
      if (!interaction) throw SpecError("scenario 2 needs a nonzero A*T or A*T2 coefficient");
      break;
    case 3:
      if (a_death) throw SpecError("scenario 3 forbids exposure terms in transitions 02 and 12");
      break;
    case 4:
      if (a01) throw SpecError("scenario 4 forbids exposure terms in transition 01");
      break;
    default:
      break;
  }
}

ParametricIllnessDeath Scenario::truth_model(Quadrature quad) const {
  return ParametricIllnessDeath(hazards, truth_spec, coefs, quad);
}

std::string Scenario::canonical() const {
  std::ostringstream out;
  out << "scenario.id = " << id << "\n";
  out << "exposure.prevalence = " << format_double(exposure_prevalence) << "\n";
  out << "x.levels = " << join(x_levels) << "\nx.probs = " << join(x_probs) << "\n";
  for (std::size_t j = 0; j < confounders.size(); ++j) {
    const auto& d = confounders[j];
    out << "c." << j + 1 << " = ";
    if (d.kind == ConfounderDistribution::Kind::Normal) {
      out << "normal(" << format_double(d.mean) << "," << format_double(d.sd) << ")\n";
    } else {
      out << "categorical(" << join(d.levels) << ";" << join(d.probs) << ")\n";
    }
  }
  for (Transition tr : kTransitions) {
    const auto& hz = hazards[index_of(tr)];
    out << "hazard." << transition_code(tr) << " = " << format_double(hz.shape) << "," << format_double(hz.scale) << "\n";
    out << "coef." << transition_code(tr) << " = " << join(coefs[index_of(tr)]) << "\n";
  }
  out << "truth = " << truth_spec.canonical() << "\nmodel = " << analysis_spec.canonical() << "\n";
  out << "censoring = " << censoring << "," << format_double(admin_censoring) << "," << format_double(dropout_max) << "\n";
  out << "profile = " << format_double(profile.x) << ";" << join(profile.c) << "\n";
  out << "horizon = " << format_double(horizon) << "\ngrid_step = " << format_double(grid_step) << "\n";
  return out.str();
}

LatentPath simulate_path(const ParametricIllnessDeath& model, int source_exposure, int a, double x,
                         const std::vector<double>& c, CounterRng& rng) {
  const double e01 = model.relative_hazard(Transition::DiagTreat, source_exposure, x, c, 0.0);
  const double e02 = model.relative_hazard(Transition::DiagDeath, a, x, c, 0.0);
  const double t01 = model.hazard(Transition::DiagTreat).inverse(rng.exponential() / e01);
  const double t02 = model.hazard(Transition::DiagDeath).inverse(rng.exponential() / e02);
  const double e3 = rng.exponential();
  LatentPath path;
  if (t01 < t02) {
    path.treatment = t01;
    const auto& h12 = model.hazard(Transition::TreatDeath);
    const double e12 = model.relative_hazard(Transition::TreatDeath, a, x, c, t01);
    path.death = h12.inverse(h12.cumulative(t01) + e3 / e12);
  } else {
    path.death = t02;
  }
  return path;
}

std::vector<SubjectRecord> generate(const Scenario& sc, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw SpecError("n must be at least 1");
  sc.check();
  const ParametricIllnessDeath model = sc.truth_model();
  std::vector<SubjectRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<std::uint32_t>(i), kTagGenerate);
    SubjectRecord& r = out[i];
    r.id = std::to_string(i + 1);
    r.a = rng.uniform01() < sc.exposure_prevalence ? 1 : 0;
    r.x = draw_discrete(sc.x_levels, sc.x_probs, rng);
    for (const auto& d : sc.confounders) r.c.push_back(d.draw(rng));
    const LatentPath path = simulate_path(model, r.a, r.a, r.x, r.c, rng);
    const double u = rng.uniform01();
    const double k = sc.censoring ? std::min(sc.admin_censoring, u * sc.dropout_max)
                                  : std::numeric_limits<double>::infinity();
    r.y_s = std::min(path.death, k);
    r.delta_s = path.death <= k ? 1 : 0;
    if (path.treated() && path.treatment <= k) {
      r.y_t = path.treatment;
      r.delta_t = 1;
    } else {
      r.y_t = r.y_s;
      r.delta_t = 0;
    }
  }
  return out;
}

namespace {

struct CalibrationDraw {
  double t01;   // latent time to treatment
  double e02;   // relative 0->2 hazard
  double exp2;  // unit exponential driving the 0->2 clock
};

std::vector<CalibrationDraw> calibration_draws(const Scenario& sc, long n, std::uint64_t seed) {
  const ParametricIllnessDeath model = sc.truth_model();
  std::vector<CalibrationDraw> draws(static_cast<std::size_t>(n));
  std::vector<double> c(sc.confounders.size());
  for (long i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<std::uint32_t>(i), kTagCalibrate);
    const int a = rng.uniform01() < sc.exposure_prevalence ? 1 : 0;
    const double x = draw_discrete(sc.x_levels, sc.x_probs, rng);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = sc.confounders[j].draw(rng);
    const double e01 = model.relative_hazard(Transition::DiagTreat, a, x, c, 0.0);
    auto& d = draws[static_cast<std::size_t>(i)];
    d.t01 = model.hazard(Transition::DiagTreat).inverse(rng.exponential() / e01);
    d.e02 = model.relative_hazard(Transition::DiagDeath, a, x, c, 0.0);
    d.exp2 = rng.exponential();
  }
  return draws;
}

// Death first iff Lambda02(t01) * e02 exceeds the 0->2 exponential.
double fraction_at(const std::vector<CalibrationDraw>& draws, double shape, double scale) {
  if (scale == 0.0) return 0.0;
  long hits = 0;
  for (const auto& d : draws) hits += scale * std::pow(d.t01, shape) * d.e02 > d.exp2;
  return static_cast<double>(hits) / static_cast<double>(draws.size());
}

}  // namespace

double semicompeting_fraction(const Scenario& sc, long n, std::uint64_t seed) {
  if (n < 1) throw SpecError("n must be at least 1");
  const auto draws = calibration_draws(sc, n, seed);
  const auto& h02 = sc.hazards[index_of(Transition::DiagDeath)];
  return fraction_at(draws, h02.shape, h02.scale);
}

Scenario calibrate_semicompeting(const Scenario& sc, double target, double tol) {
  if (!(target >= 0.0 && target <= 0.9)) throw SpecError("semi-competing target must lie in [0, 0.9]");
  Scenario out = sc;
  out.semicompeting_target = target;
  auto& h02 = out.hazards[index_of(Transition::DiagDeath)];
  if (target == 0.0) {
    h02.scale = 0.0;
    return out;
  }
  const auto draws = calibration_draws(sc, sc.calibration_n, sc.calibration_seed);
  double lo = 0.0;
  double hi = h02.scale > 0.0 ? h02.scale : 0.01;
  while (fraction_at(draws, h02.shape, hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw SpecError("semi-competing target " + format_double(target) + " is unreachable");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = fraction_at(draws, h02.shape, mid);
    if (std::abs(f - target) <= tol) {
      h02.scale = mid;
      return out;
    }
    (f < target ? lo : hi) = mid;
  }
  throw SpecError("semi-competing calibration did not converge for target " + format_double(target));
}

EffectPoint TruthTable::at(double s) const {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - s) <= 1e-9 * std::max(1.0, std::abs(s))) return {te[i], sde[i], sie[i]};
  }
  throw EffectsError("truth table has no entry at s = " + format_double(s));
}

TruthTable true_effects(const Scenario& sc, const std::vector<double>& s_grid) {
  const ParametricIllnessDeath model = sc.truth_model(SimpsonRule{});
  TruthTable t;
  t.scenario_id = sc.id;
  t.semicompeting_target = sc.semicompeting_target;
  t.grid = s_grid;
  for (double s : s_grid) {
    const EffectPoint pt = effects_at(model, s, sc.profile);
    t.te.push_back(pt.te);
    t.sde.push_back(pt.sde);
    t.sie.push_back(pt.sie);
  }
  return t;
}

OccupationFrequencies forward_occupation(const ParametricIllnessDeath& model, const CovariateProfile& prof,
                                         const InterventionPolicy& policy, const std::vector<double>& s,
                                         long paths, std::uint64_t seed) {
  if (paths < 1) throw SpecError("paths must be at least 1");
  OccupationFrequencies f;
  f.s = s;
  f.paths = paths;
  std::vector<long> n00(s.size(), 0), n01(s.size(), 0);
  for (long i = 0; i < paths; ++i) {
    CounterRng rng(seed, static_cast<std::uint32_t>(i), kTagForward);
    const LatentPath p = simulate_path(model, policy.source_exposure, prof.a, prof.x, prof.c, rng);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (p.death <= s[k]) continue;
      if (p.treatment > s[k]) {
        ++n00[k];
      } else {
        ++n01[k];
      }
    }
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    f.p00.push_back(static_cast<double>(n00[k]) / static_cast<double>(paths));
    f.p01.push_back(static_cast<double>(n01[k]) / static_cast<double>(paths));
  }
  return f;
}

}  // namespace msm
