#include "cli.hpp"

#include <CLI11.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "msm/csv.hpp"
#include "msm/dataset.hpp"
#include "msm/effects.hpp"
#include "msm/keyvalue.hpp"
#include "msm/multistate.hpp"
#include "msm/simgen.hpp"
#include "msm/study.hpp"
#include "msm/version.hpp"

namespace msm {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string output_dir = ".";
  int threads = 0;
};

struct SimulateOptions {
  std::string scenario;
  long n = 0;
  std::uint64_t seed = 0;
  std::optional<double> semicompeting;
  std::string output = "dataset.csv";
};

struct FitOptions {
  std::string input;
  std::string spec;
  double level = 0.95;
  std::string output = "fit_report.csv";
};

struct EffectsOptions {
  std::string input;
  std::string spec;
  double horizon = 24.0;
  double step = 0.5;
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string methods = "multistate";
  std::optional<double> profile_x;
  std::optional<std::string> profile_c;
  bool pe = false;
  std::optional<double> rmst;
  bool negate_sie = false;
  bool marginal = false;
};

struct ExperimentOptions {
  std::string scenario;
  std::uint64_t seed = 0;
  long n = 2000;
  long replicates = 100;
  int bootstrap = 100;
  std::string methods = "multistate,exclude,censor";
  std::optional<std::string> semicompeting;
  std::optional<std::string> s_list;
  double level = 0.95;
  bool resume = false;
};

int resolve_threads(int flag) { return flag > 0 ? flag : default_thread_count(); }

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

// Effective option values of a subcommand, echoed into every output header.
Provenance make_provenance(const CLI::App& sub, const std::string& seed,
                           std::vector<std::pair<std::string, std::string>> extra = {}) {
  const std::string cfg = sub.config_to_str(true, false);
  std::string material = cfg;
  for (const auto& [k, v] : extra) material += k + "=" + v + "\n";
  Provenance prov;
  prov.config_hash = hex64(fnv1a64(material));
  prov.seed = seed;
  prov.extra.emplace_back("command", sub.get_name());
  std::istringstream lines(cfg);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '[' || eq == std::string::npos) continue;
    prov.extra.emplace_back("option." + trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (auto& kv : extra) prov.extra.push_back(std::move(kv));
  return prov;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& piece : split(text, ',')) out.push_back(parse_double(trim(piece), what));
  return out;
}

// --- simulate -------------------------------------------------------------

int cmd_simulate(const CLI::App& sub, const CommonOptions& common, const SimulateOptions& o, std::ostream& out) {
  Scenario sc = Scenario::load(o.scenario);
  if (o.semicompeting) {
    sc = calibrate_semicompeting(sc, *o.semicompeting);
  } else if (sc.semicompeting_target) {
    sc = calibrate_semicompeting(sc, *sc.semicompeting_target);
  }
  const auto records = generate(sc, static_cast<std::size_t>(o.n), o.seed);
  const ValidatedDataset ds = validate(records);
  const std::string scenario_hash = hex64(fnv1a64(sc.canonical()));
  const Provenance prov = make_provenance(
      sub, std::to_string(o.seed),
      {{"scenario_hash", scenario_hash},
       {"hazard.02.scale", format_double(sc.hazards[index_of(Transition::DiagDeath)].scale)}});

  const fs::path path = fs::path(common.output_dir) / o.output;
  {
    auto f = open_output(path);
    write_provenance(f, prov);
    write_dataset_csv(f, records);
  }
  {
    auto side = open_output(fs::path(path.string() + ".provenance"));
    side << "tool = " << kToolName << "\nversion = " << kVersion << "\nscenario = " << o.scenario
         << "\nscenario_hash = " << scenario_hash << "\nseed = " << o.seed << "\nn = " << o.n
         << "\nconfig_hash = " << prov.config_hash << "\nhazard.02.scale = "
         << format_double(sc.hazards[index_of(Transition::DiagDeath)].scale) << "\n";
  }
  out << "wrote " << records.size() << " records to " << path.string() << " (semi-competing fraction "
      << format_fixed(ds.counts().semi_competing_fraction, 4) << ")\n";
  return 0;
}

// Analysis spec from a spec or scenario file: model.<tr>, falling back to the
// generating formula truth.<tr>. A transition with neither is an error.
CovariateSpec load_spec(const KeyValueFile& kv, const std::string& path) {
  KeyValueFile model = kv;
  for (Transition tr : kTransitions) {
    const std::string code = transition_code(tr);
    if (model.has("model." + code)) continue;
    const auto truth = kv.find("truth." + code);
    if (!truth) throw SpecError(path + ": no model." + code + " (use model." + code + " = 1 for no covariates)");
    model.set("model." + code, *truth);
  }
  return CovariateSpec::from_keyvalue(model);
}

// --- fit --------------------------------------------------------------------

void write_coefficients(std::ostream& f, const CoxFit& fit, const std::string& model, double level) {
  const boost::math::normal_distribution<> gauss;
  const double z = boost::math::quantile(gauss, 0.5 + level / 2.0);
  const Eigen::VectorXd se = fit.standard_errors();
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double b = fit.beta.size() > jj ? fit.beta[jj] : 0.0;
    const bool estimable = fit.has_events() && !(j < fit.aliased.size() && fit.aliased[j]) && se[jj] > 0.0;
    std::vector<std::string> row = {transition_code(fit.transition), model, fit.names[j], format_double(b)};
    if (estimable) {
      const double p = std::erfc(std::abs(b / se[jj]) / std::sqrt(2.0));
      for (double v : {se[jj], std::exp(b), std::exp(b - z * se[jj]), std::exp(b + z * se[jj]), p}) {
        row.push_back(format_double(v));
      }
    } else {
      for (int k = 0; k < 5; ++k) row.push_back("NA");
    }
    row.push_back(std::to_string(fit.n_events));
    write_csv_row(f, row);
  }
}

int cmd_fit(const CLI::App& sub, const CommonOptions& common, const FitOptions& o, std::ostream& out) {
  if (!(o.level > 0.0 && o.level < 1.0)) throw CLI::ValidationError("--level", "must lie in (0, 1)");
  const ValidatedDataset ds = validate(read_dataset_csv_file(o.input));
  const CovariateSpec spec = load_spec(KeyValueFile::load(o.spec), o.spec);
  const MultistateFit full = fit_multistate(ds, spec);
  bool has_mediator = false;
  for (const Term& t : spec.terms(Transition::TreatDeath)) has_mediator |= is_mediator_term(t.kind);
  std::optional<MultistateFit> unadjusted;
  if (has_mediator) unadjusted = fit_multistate(ds, spec.without_mediator_terms());

  const Provenance prov = make_provenance(sub, "", {{"input_hash", file_hash(o.input)}, {"spec_hash", file_hash(o.spec)}});
  const fs::path report = fs::path(common.output_dir) / o.output;
  {
    auto f = open_output(report);
    write_provenance(f, prov);
    write_csv_row(f, {"transition", "model", "term", "coef", "se", "hr", "hr_lo", "hr_hi", "p_value", "n_events"});
    write_coefficients(f, full.fit(Transition::DiagTreat), "main", o.level);
    write_coefficients(f, full.fit(Transition::DiagDeath), "main", o.level);
    if (unadjusted) {
      write_coefficients(f, unadjusted->fit(Transition::TreatDeath), "unadjusted", o.level);
      write_coefficients(f, full.fit(Transition::TreatDeath), "adjusted", o.level);
    } else {
      write_coefficients(f, full.fit(Transition::TreatDeath), "main", o.level);
    }
  }
  const fs::path baseline = fs::path(common.output_dir) / "baseline.csv";
  {
    auto f = open_output(baseline);
    write_provenance(f, prov);
    write_csv_row(f, {"transition", "time", "cumulative_hazard"});
    for (Transition tr : kTransitions) {
      const CoxFit& fit = full.fit(tr);
      for (std::size_t k = 0; k < fit.baseline.size(); ++k) {
        write_csv_row(f, {transition_code(tr), format_double(fit.baseline.jump_times()[k]),
                          format_double(fit.baseline.cum_values()[k])});
      }
    }
  }
  out << "wrote " << report.string() << " and " << baseline.string() << "\n";
  for (Transition tr : kTransitions) {
    const CoxFit& fit = full.fit(tr);
    out << "transition " << transition_code(tr) << ": " << fit.n_events << " events, " << fit.names.size()
        << " coefficients" << (fit.has_events() && !fit.converged ? " (not converged)" : "") << "\n";
  }
  return 0;
}

// --- effects ----------------------------------------------------------------

CovariateProfile resolve_profile(const EffectsOptions& o, const KeyValueFile& spec_kv, std::size_t k) {
  CovariateProfile prof;
  if (o.profile_x) {
    prof.x = *o.profile_x;
  } else if (spec_kv.has("profile.x")) {
    prof.x = spec_kv.get_double("profile.x");
  } else {
    throw std::runtime_error("covariate profile: give --profile-x or profile.x in the spec file");
  }
  if (o.profile_c) {
    prof.c = parse_list(*o.profile_c, "--profile-c");
  } else if (spec_kv.has("profile.c")) {
    prof.c = spec_kv.get_doubles("profile.c");
  } else if (k > 0) {
    throw std::runtime_error("covariate profile: give --profile-c or profile.c in the spec file");
  }
  if (prof.c.size() != k) {
    throw std::runtime_error("covariate profile has " + std::to_string(prof.c.size()) + " confounders, data has " +
                             std::to_string(k));
  }
  return prof;
}

void apply_bands(EffectCurve& curve, const BootstrapCi& ci) {
  Band te, sde, sie;
  for (std::size_t i = 0; i < ci.lo.size(); ++i) {
    te.lo.push_back(ci.lo[i].te);
    te.hi.push_back(ci.hi[i].te);
    sde.lo.push_back(ci.lo[i].sde);
    sde.hi.push_back(ci.hi[i].sde);
    sie.lo.push_back(ci.lo[i].sie);
    sie.hi.push_back(ci.hi[i].sie);
  }
  curve.te_band = te;
  curve.sde_band = sde;
  curve.sie_band = sie;
}

int cmd_effects(const CLI::App& sub, const CommonOptions& common, const EffectsOptions& o, std::ostream& out,
                std::ostream& err) {
  if (!(o.level > 0.0 && o.level < 1.0)) throw CLI::ValidationError("--level", "must lie in (0, 1)");
  const ValidatedDataset ds = validate(read_dataset_csv_file(o.input));
  const KeyValueFile spec_kv = KeyValueFile::load(o.spec);
  const CovariateSpec spec = load_spec(spec_kv, o.spec);
  const CovariateProfile prof = resolve_profile(o, spec_kv, ds.confounder_count());
  spec.check_values(prof.x, prof.c);
  const std::vector<MethodId> methods = o.methods == "all" ? std::vector<MethodId>(std::begin(kAllMethods), std::end(kAllMethods))
                                                          : parse_methods(o.methods);
  const std::vector<double> grid = effect_grid(o.horizon, o.step);
  EstimateOptions est;
  est.negate_sie = o.negate_sie;

  std::vector<EffectCurve> curves;
  for (MethodId m : methods) {
    const MultistateFit fit = fit_method(m, ds, spec, est);
    const FittedIllnessDeath model(fit);
    EffectCurve curve = effect_curve(model, grid, prof, CurveOptions{o.negate_sie});
    if (o.rmst) {
      curve.rmst_horizon = *o.rmst;
      curve.rmst_te = rmst_total_effect(model, prof, *o.rmst, o.step);
    }
    if (o.pe) {
      curve.pe_horizon = grid.back();
      if (std::abs(curve.te.back()) >= 1e-12) curve.pe = proportion_eliminated(curve.te.back(), curve.sde.back());
    }
    curves.push_back(std::move(curve));
  }
  std::vector<BootstrapCi> cis;
  if (o.bootstrap > 0) {
    BootstrapOptions boot{o.bootstrap, o.seed, o.level, resolve_threads(common.threads)};
    cis = bootstrap_methods(methods, ds, spec, grid, prof, boot, est);
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (cis[i].draws.empty()) {
        throw StudyError(std::string(method_name(methods[i])) + ": all bootstrap resamples failed: " + cis[i].first_error);
      }
      apply_bands(curves[i], cis[i]);
      if (cis[i].unreliable) {
        curves[i].warnings.push_back("bootstrap: " + std::to_string(cis[i].failed) + " of " +
                                     std::to_string(cis[i].requested) + " resamples failed; interval unreliable");
      }
    }
  }

  const Provenance prov = make_provenance(sub, std::to_string(o.seed),
                                          {{"input_hash", file_hash(o.input)}, {"spec_hash", file_hash(o.spec)}});
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const fs::path path = fs::path(common.output_dir) / (std::string("effects_") + method_name(methods[i]) + ".csv");
    auto f = open_output(path);
    write_provenance(f, prov);
    for (const auto& w : curves[i].warnings) {
      f << "# warning=" << w << "\r\n";
      err << "warning (" << method_name(methods[i]) << "): " << w << "\n";
    }
    write_effect_curve_csv(f, curves[i]);
    out << "wrote " << path.string() << "\n";
  }
  if (o.marginal) {
    std::vector<CovariateProfile> profiles;
    for (const auto& r : ds.records()) profiles.push_back({0, r.x, r.c});
    for (MethodId m : methods) {
      const MultistateFit fit = fit_method(m, ds, spec, est);
      const EffectCurve curve = marginal_effect_curve(FittedIllnessDeath(fit), grid, profiles, CurveOptions{o.negate_sie});
      const fs::path path = fs::path(common.output_dir) / (std::string("effects_marginal_") + method_name(m) + ".csv");
      auto f = open_output(path);
      write_provenance(f, prov);
      f << "# averaged over the observed (x, c) of " << ds.size() << " subjects; point estimates only\r\n";
      write_effect_curve_csv(f, curve);
      out << "wrote " << path.string() << "\n";
    }
  }

  const fs::path summary = fs::path(common.output_dir) / "effects_summary.csv";
  auto f = open_output(summary);
  write_provenance(f, prov);
  write_csv_row(f, {"method", "s", "te", "te_lo", "te_hi", "sde", "sde_lo", "sde_hi", "sie", "sie_lo", "sie_hi", "pe",
                    "pe_defined", "rmst_horizon", "rmst_te", "boot_failures", "ci_unreliable"});
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const EffectCurve& c = curves[i];
    const std::size_t last = c.grid.size() - 1;
    auto band = [&](const std::optional<Band>& b, bool hi) {
      return b ? format_double(hi ? b->hi[last] : b->lo[last]) : std::string("NA");
    };
    std::string pe = "NA", pe_defined = "NA";
    if (o.pe) {
      pe = c.pe ? format_fixed(*c.pe, 4) : "undefined";
      pe_defined = c.pe ? "1" : "0";
    }
    write_csv_row(f, {method_name(methods[i]), format_double(c.grid[last]), format_double(c.te[last]),
                      band(c.te_band, false), band(c.te_band, true), format_double(c.sde[last]),
                      band(c.sde_band, false), band(c.sde_band, true), format_double(c.sie[last]),
                      band(c.sie_band, false), band(c.sie_band, true), pe, pe_defined,
                      c.rmst_horizon ? format_double(*c.rmst_horizon) : "NA",
                      c.rmst_te ? format_double(*c.rmst_te) : "NA",
                      cis.empty() ? "NA" : std::to_string(cis[i].failed),
                      cis.empty() ? "NA" : (cis[i].unreliable ? "1" : "0")});
  }
  out << "wrote " << summary.string() << "\n";
  return 0;
}

// --- experiment -------------------------------------------------------------

int cmd_experiment(const CLI::App& sub, const CommonOptions& common, const ExperimentOptions& o, std::ostream& out,
                   std::ostream& err) {
  const Scenario base = Scenario::load(o.scenario);
  std::vector<std::optional<double>> levels;
  if (o.semicompeting) {
    for (double p : parse_list(*o.semicompeting, "--semicompeting")) levels.emplace_back(p);
  } else {
    levels.push_back(base.semicompeting_target);
  }
  ExperimentConfig cfg;
  cfg.n = static_cast<std::size_t>(o.n);
  cfg.R = static_cast<std::size_t>(o.replicates);
  cfg.B = o.bootstrap;
  cfg.methods = parse_methods(o.methods);
  cfg.seed = o.seed;
  cfg.level = o.level;
  cfg.s_list = o.s_list ? parse_list(*o.s_list, "--s") : std::vector<double>{base.horizon};
  cfg.threads = resolve_threads(common.threads);
  cfg.resume = o.resume;

  const fs::path dir(common.output_dir);
  const Provenance prov = make_provenance(sub, std::to_string(o.seed), {{"scenario_hash", file_hash(o.scenario)}});
  auto replicates_file = open_output(dir / "replicates.csv");
  auto summary_file = open_output(dir / "summary.csv");
  auto truth_file = open_output(dir / "truth.csv");
  for (auto* f : {&replicates_file, &summary_file, &truth_file}) write_provenance(*f, prov);
  write_csv_row(truth_file, {"scenario", "semicompeting", "s", "te", "sde", "sie"});
  bool header_done = false;
  std::ostringstream replicate_rows, summary_rows;
  long failed_total = 0;

  for (const auto& level : levels) {
    const Scenario sc = level ? calibrate_semicompeting(base, *level) : base;
    const std::string tag = level ? format_double(*level) : std::string("asis");
    cfg.checkpoint_dir = (dir / "checkpoints" / ("semicompeting_" + tag)).string();
    cfg.provenance = prov;
    const TruthTable truth = true_effects(sc, cfg.s_list);
    for (std::size_t k = 0; k < truth.grid.size(); ++k) {
      write_csv_row(truth_file, {std::to_string(sc.id), tag, format_double(truth.grid[k]), format_double(truth.te[k]),
                                 format_double(truth.sde[k]), format_double(truth.sie[k])});
    }
    const auto results = run_experiment(sc, cfg);

    // Prefix each tidy row with the semi-competing level.
    std::ostringstream tidy;
    write_replicates_csv(tidy, results);
    std::istringstream lines(tidy.str());
    std::string line;
    std::getline(lines, line);
    if (!header_done) replicate_rows << "semicompeting," << line << "\n";
    while (std::getline(lines, line)) replicate_rows << csv_escape(tag) << "," << line << "\n";

    for (const auto& rr : results) {
      if (!rr.ok) {
        ++failed_total;
        err << "replicate " << rr.replicate << " (" << method_name(rr.method) << ", semicompeting " << tag
            << ") failed: " << rr.error << "\n";
      }
    }
    for (double s : cfg.s_list) {
      std::ostringstream summ;
      write_summary_csv(summ, summarize(results, truth, s));
      std::istringstream slines(summ.str());
      std::getline(slines, line);
      if (!header_done) summary_rows << "scenario,semicompeting,n,replicates_requested,bootstrap," << line << "\n";
      header_done = true;
      while (std::getline(slines, line)) {
        summary_rows << sc.id << "," << csv_escape(tag) << "," << cfg.n << "," << cfg.R << "," << cfg.B << "," << line
                     << "\n";
      }
    }
  }
  replicates_file << replicate_rows.str();
  summary_file << summary_rows.str();
  out << "wrote " << (dir / "replicates.csv").string() << ", " << (dir / "summary.csv").string() << ", "
      << (dir / "truth.csv").string() << " (" << failed_total << " failed replicate-method results)\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mediation analysis of a time-to-event mediator under semi-competing risks"};
  app.name(kToolName);
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.set_config("--config", "", "Read option values from a file; command-line flags take precedence");
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output-dir", common.output_dir, "Directory for output files")->capture_default_str();
    sub->add_option("--threads", common.threads, "Worker threads (default: MSM_MEDIATE_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);
  };

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate one dataset from a scenario file");
  simulate->add_option("--scenario,--input", sim.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--n", sim.n, "Number of subjects")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed")->required();
  simulate->add_option("--semicompeting", sim.semicompeting, "Calibrate the fraction dying untreated")
      ->check(CLI::Range(0.0, 0.9));
  simulate->add_option("--output", sim.output, "File name inside --output-dir")->capture_default_str();
  add_common(simulate);

  FitOptions fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit the three transition models and report coefficients");
  fitcmd->add_option("--input", fit.input, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--spec", fit.spec, "Covariate specification file")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--level", fit.level, "Confidence level")->capture_default_str();
  fitcmd->add_option("--output", fit.output, "File name inside --output-dir")->capture_default_str();
  fitcmd->add_option("--seed", "Accepted for uniformity; fitting is deterministic");
  add_common(fitcmd);

  EffectsOptions eff;
  auto* effects = app.add_subcommand("effects", "Estimate TE/SDE/SIE curves with optional bootstrap bands");
  effects->add_option("--input", eff.input, "Dataset CSV")->required()->check(CLI::ExistingFile);
  effects->add_option("--spec", eff.spec, "Covariate specification file")->required()->check(CLI::ExistingFile);
  effects->add_option("--horizon", eff.horizon, "Last time point")->capture_default_str()->check(CLI::PositiveNumber);
  effects->add_option("--step", eff.step, "Grid step")->capture_default_str()->check(CLI::PositiveNumber);
  effects->add_option("--bootstrap", eff.bootstrap, "Bootstrap resamples (0: none, else at least 2)")
      ->capture_default_str()
      ->check(CLI::IsMember({0}) | CLI::Range(2, 1000000));
  effects->add_option("--level", eff.level, "Confidence level")->capture_default_str();
  effects->add_option("--seed", eff.seed, "Bootstrap seed")->capture_default_str();
  effects->add_option("--method,--methods", eff.methods, "multistate, exclude, censor, a comma list, or all")
      ->capture_default_str();
  effects->add_option("--profile-x", eff.profile_x, "Stage value of the covariate profile");
  effects->add_option("--profile-c", eff.profile_c, "Confounder values of the profile, comma separated");
  effects->add_flag("--pe", eff.pe, "Add the proportion eliminated at the horizon");
  effects->add_option("--rmst", eff.rmst, "Add the RMST total effect on [0, r]")->check(CLI::PositiveNumber);
  effects->add_flag("--negate-sie", eff.negate_sie, "Report the indirect effect with the opposite sign");
  effects->add_flag("--marginal", eff.marginal, "Also average the curves over the observed covariates");
  add_common(effects);

  ExperimentOptions exp;
  auto* experiment = app.add_subcommand("experiment", "Run the Monte Carlo comparison of the three methods");
  experiment->add_option("--scenario,--input", exp.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  experiment->add_option("--seed", exp.seed, "Experiment seed")->required();
  experiment->add_option("--n", exp.n, "Subjects per dataset")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--replicates,-R", exp.replicates, "Number of datasets")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_option("--bootstrap,-B", exp.bootstrap, "Bootstrap resamples per dataset")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000000));
  experiment->add_option("--methods", exp.methods, "Comma list of methods")->capture_default_str();
  experiment->add_option("--semicompeting", exp.semicompeting, "Comma list of semi-competing fractions");
  experiment->add_option("--s", exp.s_list, "Comma list of evaluation times (default: scenario horizon)");
  experiment->add_option("--level", exp.level, "Confidence level")->capture_default_str();
  experiment->add_flag("--resume", exp.resume, "Reuse finished replicates from the checkpoint directory");
  add_common(experiment);

  std::vector<std::string> argv_store;
  argv_store.push_back(kToolName);
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return cmd_simulate(*simulate, common, sim, out);
    if (*fitcmd) return cmd_fit(*fitcmd, common, fit, out);
    if (*effects) return cmd_effects(*effects, common, eff, out, err);
    if (*experiment) return cmd_experiment(*experiment, common, exp, out, err);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace msm
