#include "msm/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "msm/rng.hpp"

namespace msm {

namespace {

constexpr std::uint32_t kTagBootstrap = 4;

const char* kEffectNames[] = {"te", "sde", "sie"};

double& component(EffectPoint& p, int k) { return k == 0 ? p.te : (k == 1 ? p.sde : p.sie); }
double component(const EffectPoint& p, int k) { return k == 0 ? p.te : (k == 1 ? p.sde : p.sie); }

ValidatedDataset exclude_semicompeting(const ValidatedDataset& ds) {
  std::vector<SubjectRecord> kept;
  bool treated = false;
  for (const auto& r : ds.records()) {
    if (r.semi_competing()) continue;
    treated |= r.delta_t == 1;
    kept.push_back(r);
  }
  if (!treated) throw StudyError("no treated subjects");
  return validate(std::move(kept));
}

std::vector<EffectPoint> points_of(const EffectCurve& c) {
  std::vector<EffectPoint> out;
  for (std::size_t i = 0; i < c.grid.size(); ++i) out.push_back({c.te[i], c.sde[i], c.sie[i]});
  return out;
}

std::pair<std::vector<EffectPoint>, std::vector<EffectPoint>> percentile_bounds(
    const std::vector<std::vector<EffectPoint>>& draws, std::size_t n_s, double level) {
  std::vector<EffectPoint> lo(n_s), hi(n_s);
  std::vector<double> column;
  for (std::size_t k = 0; k < n_s; ++k) {
    for (int e = 0; e < 3; ++e) {
      column.clear();
      for (const auto& d : draws) column.push_back(component(d[k], e));
      const Interval iv = percentile_interval(column, level);
      component(lo[k], e) = iv.lo;
      component(hi[k], e) = iv.hi;
    }
  }
  return {lo, hi};
}

}  // namespace

const char* method_name(MethodId m) {
  switch (m) {
    case MethodId::Multistate: return "multistate";
    case MethodId::ExcludeTgtS: return "exclude";
    case MethodId::CensorTgtS: return "censor";
  }
  return "?";
}

MethodId parse_method(const std::string& name) {
  if (name == "multistate" || name == "Multistate") return MethodId::Multistate;
  if (name == "exclude" || name == "ExcludeTgtS") return MethodId::ExcludeTgtS;
  if (name == "censor" || name == "CensorTgtS") return MethodId::CensorTgtS;
  throw StudyError("unknown method '" + name + "' (expected multistate, exclude or censor)");
}

std::vector<MethodId> parse_methods(const std::string& comma_list) {
  std::vector<MethodId> out;
  for (const auto& piece : split(comma_list, ',')) {
    const MethodId m = parse_method(trim(piece));
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw StudyError("no methods given");
  return out;
}

MultistateFit fit_method(MethodId method, const ValidatedDataset& ds, const CovariateSpec& spec,
                         const EstimateOptions& options) {
  MultistateOptions mo;
  mo.cox = options.cox;
  try {
    switch (method) {
      case MethodId::Multistate:
        return fit_multistate(ds, spec, mo);
      case MethodId::CensorTgtS:
        mo.null_diag_death = true;
        return fit_multistate(ds, spec, mo);
      case MethodId::ExcludeTgtS:
        mo.null_diag_death = true;
        return fit_multistate(exclude_semicompeting(ds), spec, mo);
    }
  } catch (const FitError& e) {
    throw FitError(e.kind(), std::string(method_name(method)) + ": " + e.what(), e.column());
  } catch (const StudyError& e) {
    throw StudyError(std::string(method_name(method)) + ": " + e.what());
  }
  throw StudyError("unknown method");
}

EffectCurve estimate(MethodId method, const ValidatedDataset& ds, const CovariateSpec& spec,
                     const std::vector<double>& s_grid, const CovariateProfile& prof, const EstimateOptions& options) {
  const MultistateFit fit = fit_method(method, ds, spec, options);
  return effect_curve(FittedIllnessDeath(fit), s_grid, prof, CurveOptions{options.negate_sie});
}

std::vector<MethodEstimate> estimate_methods(const std::vector<MethodId>& methods, const ValidatedDataset& ds,
                                             const CovariateSpec& spec, const std::vector<double>& s_grid,
                                             const CovariateProfile& prof, const EstimateOptions& options) {
  std::vector<MethodEstimate> out;
  // CensorTgtS shares the 01 and 12 fits with Multistate.
  std::optional<MultistateFit> full;
  std::string full_error;
  const bool need_full = std::any_of(methods.begin(), methods.end(),
                                     [](MethodId m) { return m != MethodId::ExcludeTgtS; });
  if (need_full) {
    try {
      full = fit_method(MethodId::Multistate, ds, spec, options);
    } catch (const std::exception& e) {
      full_error = e.what();
    }
  }
  for (MethodId m : methods) {
    MethodEstimate me{m, std::nullopt, {}};
    try {
      MultistateFit fit;
      if (m == MethodId::ExcludeTgtS) {
        fit = fit_method(m, ds, spec, options);
      } else {
        if (!full) throw StudyError(full_error);
        fit = *full;
        if (m == MethodId::CensorTgtS) {
          fit.fits[index_of(Transition::DiagDeath)] = CoxFit::empty(Transition::DiagDeath,
                                                                   spec.column_names(Transition::DiagDeath));
          fit.diag_death_forced_null = true;
        }
      }
      me.curve = effect_curve(FittedIllnessDeath(fit), s_grid, prof, CurveOptions{options.negate_sie});
    } catch (const std::exception& e) {
      me.error = e.what();
    }
    out.push_back(std::move(me));
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw StudyError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval percentile_interval(std::vector<double> draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw StudyError("confidence level must lie in (0, 1)");
  std::sort(draws.begin(), draws.end());
  const double alpha = 1.0 - level;
  return {quantile_sorted(draws, alpha / 2.0), quantile_sorted(draws, 1.0 - alpha / 2.0)};
}

std::pair<std::vector<EffectPoint>, std::vector<EffectPoint>> BootstrapCi::bounds(double other_level) const {
  if (draws.empty()) throw StudyError("no successful bootstrap resamples");
  return percentile_bounds(draws, s.size(), other_level);
}

std::vector<BootstrapCi> bootstrap_methods(const std::vector<MethodId>& methods, const ValidatedDataset& ds,
                                           const CovariateSpec& spec, const std::vector<double>& s_list,
                                           const CovariateProfile& prof, const BootstrapOptions& boot,
                                           const EstimateOptions& options) {
  if (boot.B < 2) throw StudyError("B must be at least 2");
  if (!(boot.level > 0.0 && boot.level < 1.0)) throw StudyError("confidence level must lie in (0, 1)");
  const std::size_t n = ds.size();
  const auto B = static_cast<std::size_t>(boot.B);
  // outcomes[b][m]
  std::vector<std::vector<MethodEstimate>> outcomes(B);
  parallel_for(B, boot.threads, [&](std::size_t b) {
    CounterRng rng(boot.seed, static_cast<std::uint32_t>(b), kTagBootstrap);
    std::vector<SubjectRecord> sample;
    sample.reserve(n);
    for (std::size_t i = 0; i < n; ++i) sample.push_back(ds.records()[rng.below(n)]);
    try {
      outcomes[b] = estimate_methods(methods, validate(std::move(sample)), spec, s_list, prof, options);
    } catch (const std::exception& e) {
      for (MethodId m : methods) outcomes[b].push_back({m, std::nullopt, e.what()});
    }
  });

  std::vector<BootstrapCi> out;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    BootstrapCi ci;
    ci.method = methods[mi];
    ci.s = s_list;
    ci.level = boot.level;
    ci.requested = boot.B;
    for (std::size_t b = 0; b < B; ++b) {
      const MethodEstimate& me = outcomes[b][mi];
      if (me.curve) {
        ci.draws.push_back(points_of(*me.curve));
      } else {
        if (ci.failed == 0) ci.first_error = me.error;
        ++ci.failed;
      }
    }
    ci.unreliable = ci.failed * 10 > ci.requested;
    if (!ci.draws.empty()) std::tie(ci.lo, ci.hi) = percentile_bounds(ci.draws, s_list.size(), boot.level);
    out.push_back(std::move(ci));
  }
  return out;
}

BootstrapCi bootstrap_ci(const ValidatedDataset& ds, MethodId method, const CovariateSpec& spec,
                         const std::vector<double>& s_list, const CovariateProfile& prof, const BootstrapOptions& boot,
                         const EstimateOptions& options) {
  BootstrapCi ci = bootstrap_methods({method}, ds, spec, s_list, prof, boot, options).front();
  if (ci.draws.empty()) {
    throw StudyError(std::string(method_name(method)) + ": all bootstrap resamples failed: " + ci.first_error);
  }
  return ci;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

int default_thread_count() {
  if (const char* env = std::getenv("MSM_MEDIATE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<ReplicateResult> run_replicate(const Scenario& sc, const ExperimentConfig& cfg, std::size_t r) {
  const std::vector<double> s_list = cfg.s_list.empty() ? std::vector<double>{sc.horizon} : cfg.s_list;
  const std::uint64_t seed = derive_seed(cfg.seed, r);
  std::vector<ReplicateResult> out;
  for (MethodId m : cfg.methods) {
    ReplicateResult rr;
    rr.replicate = r;
    rr.method = m;
    rr.scenario_id = sc.id;
    rr.seed = seed;
    rr.s = s_list;
    out.push_back(std::move(rr));
  }
  try {
    const ValidatedDataset ds = validate(generate(sc, cfg.n, seed));
    const auto point = estimate_methods(cfg.methods, ds, sc.analysis_spec, s_list, sc.profile, cfg.estimate);
    BootstrapOptions boot{cfg.B, derive_seed(seed, 0xB007), cfg.level, 1};
    const auto cis = bootstrap_methods(cfg.methods, ds, sc.analysis_spec, s_list, sc.profile, boot, cfg.estimate);
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      ReplicateResult& rr = out[mi];
      if (!point[mi].curve) {
        rr.error = point[mi].error;
        continue;
      }
      rr.est = points_of(*point[mi].curve);
      rr.boot_failures = cis[mi].failed;
      rr.ci_unreliable = cis[mi].unreliable;
      if (cis[mi].draws.empty()) {
        rr.error = "all bootstrap resamples failed: " + cis[mi].first_error;
        continue;
      }
      rr.lo = cis[mi].lo;
      rr.hi = cis[mi].hi;
      rr.ok = true;
    }
  } catch (const std::exception& e) {
    for (auto& rr : out) rr.error = e.what();
  }
  return out;
}

std::vector<ReplicateResult> run_experiment(const Scenario& sc, const ExperimentConfig& cfg) {
  if (cfg.R < 1) throw StudyError("R must be at least 1");
  if (cfg.n < 1) throw StudyError("n must be at least 1");
  if (cfg.methods.empty()) throw StudyError("no methods given");
  namespace fs = std::filesystem;
  if (cfg.checkpoint_dir) fs::create_directories(*cfg.checkpoint_dir);
  auto checkpoint = [&](std::size_t r) {
    std::ostringstream name;
    name << "replicate_" << r << ".csv";
    return fs::path(*cfg.checkpoint_dir) / name.str();
  };

  std::vector<std::vector<ReplicateResult>> per(cfg.R);
  parallel_for(cfg.R, cfg.threads, [&](std::size_t r) {
    if (cfg.checkpoint_dir && cfg.resume && fs::exists(checkpoint(r))) {
      std::ifstream in(checkpoint(r));
      auto loaded = read_replicates_csv(in);
      bool complete = loaded.size() == cfg.methods.size();
      for (std::size_t i = 0; complete && i < loaded.size(); ++i) complete = loaded[i].method == cfg.methods[i];
      if (complete) {
        per[r] = std::move(loaded);
        return;
      }
    }
    per[r] = run_replicate(sc, cfg, r);
    if (cfg.checkpoint_dir) {
      const fs::path final_path = checkpoint(r);
      fs::path tmp = final_path;
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (cfg.provenance) write_provenance(out, *cfg.provenance);
        write_replicates_csv(out, per[r]);
      }
      fs::rename(tmp, final_path);
    }
  });
  std::vector<ReplicateResult> all;
  for (auto& v : per) {
    for (auto& rr : v) all.push_back(std::move(rr));
  }
  return all;
}

const SummaryRow& McSummary::find(MethodId method, const std::string& effect, double s) const {
  for (const auto& row : rows) {
    if (row.method == method && row.effect == effect && std::abs(row.s - s) < 1e-9) return row;
  }
  throw StudyError("summary has no row for " + std::string(method_name(method)) + "/" + effect);
}

McSummary summarize(const std::vector<ReplicateResult>& results, const TruthTable& truth, double s) {
  if (results.empty()) throw StudyError("no replicate results to summarize");
  const EffectPoint t = truth.at(s);
  std::vector<MethodId> methods;
  for (const auto& rr : results) {
    if (std::find(methods.begin(), methods.end(), rr.method) == methods.end()) methods.push_back(rr.method);
  }
  McSummary summary;
  for (MethodId m : methods) {
    for (int e = 0; e < 3; ++e) {
      SummaryRow row;
      row.method = m;
      row.effect = kEffectNames[e];
      row.s = s;
      row.truth = component(t, e);
      std::vector<double> est;
      std::size_t covered = 0, excluded_zero = 0;
      for (const auto& rr : results) {
        if (rr.method != m) continue;
        row.boot_failures += rr.boot_failures;
        if (!rr.ok) {
          ++row.failed_replicates;
          continue;
        }
        std::size_t k = 0;
        while (k < rr.s.size() && std::abs(rr.s[k] - s) > 1e-9) ++k;
        if (k == rr.s.size()) throw StudyError("replicate results lack s = " + format_double(s));
        const double v = component(rr.est[k], e);
        const double lo = component(rr.lo[k], e);
        const double hi = component(rr.hi[k], e);
        est.push_back(v);
        covered += lo <= row.truth && row.truth <= hi;
        excluded_zero += lo > 0.0 || hi < 0.0;
      }
      row.replicates = est.size();
      if (!est.empty()) {
        const double n = static_cast<double>(est.size());
        double sum = 0.0;
        for (double v : est) sum += v;
        row.mean = sum / n;
        row.bias = row.mean - row.truth;
        double var = 0.0, mse = 0.0;
        for (double v : est) {
          var += (v - row.mean) * (v - row.mean);
          mse += (v - row.truth) * (v - row.truth);
        }
        row.variance = var / n;
        row.mse = mse / n;
        row.coverage = static_cast<double>(covered) / n;
        if (std::abs(row.truth) < 1e-10) row.type1_error = static_cast<double>(excluded_zero) / n;
      }
      summary.rows.push_back(row);
    }
  }
  return summary;
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateResult>& results) {
  write_csv_row(out, {"replicate", "method", "scenario", "seed", "status", "effect", "s", "estimate", "lo", "hi",
                      "boot_failures", "ci_unreliable", "message"});
  for (const auto& rr : results) {
    for (std::size_t k = 0; k < rr.s.size(); ++k) {
      for (int e = 0; e < 3; ++e) {
        const bool has_est = k < rr.est.size();
        const bool has_ci = rr.ok;
        write_csv_row(out, {std::to_string(rr.replicate), method_name(rr.method), std::to_string(rr.scenario_id),
                            std::to_string(rr.seed), rr.ok ? "ok" : "failed", kEffectNames[e], format_double(rr.s[k]),
                            has_est ? format_double(component(rr.est[k], e)) : "NA",
                            has_ci ? format_double(component(rr.lo[k], e)) : "NA",
                            has_ci ? format_double(component(rr.hi[k], e)) : "NA", std::to_string(rr.boot_failures),
                            rr.ci_unreliable ? "1" : "0", rr.error});
      }
    }
  }
}

std::vector<ReplicateResult> read_replicates_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::vector<std::string> expected = {"replicate", "method", "scenario", "seed", "status", "effect", "s",
                                             "estimate", "lo", "hi", "boot_failures", "ci_unreliable", "message"};
  if (table.header != expected) throw StudyError("unexpected replicate CSV header");
  std::vector<ReplicateResult> out;
  auto num = [](const std::string& v) { return v == "NA" ? std::nan("") : parse_double(v, "replicate CSV"); };
  for (const auto& f : table.rows) {
    const std::size_t r = std::stoul(f[0]);
    const MethodId m = parse_method(f[1]);
    if (out.empty() || out.back().replicate != r || out.back().method != m) {
      ReplicateResult rr;
      rr.replicate = r;
      rr.method = m;
      rr.scenario_id = std::stoi(f[2]);
      rr.seed = std::stoull(f[3]);
      rr.ok = f[4] == "ok";
      rr.boot_failures = std::stoi(f[10]);
      rr.ci_unreliable = f[11] == "1";
      rr.error = f[12];
      out.push_back(std::move(rr));
    }
    ReplicateResult& rr = out.back();
    const double s = num(f[6]);
    if (rr.s.empty() || rr.s.back() != s) {
      rr.s.push_back(s);
      if (f[7] != "NA") rr.est.emplace_back();
      if (rr.ok) {
        rr.lo.emplace_back();
        rr.hi.emplace_back();
      }
    }
    int e = 0;
    while (e < 3 && f[5] != kEffectNames[e]) ++e;
    if (e == 3) throw StudyError("unknown effect '" + f[5] + "'");
    if (f[7] != "NA") component(rr.est.back(), e) = num(f[7]);
    if (rr.ok) {
      component(rr.lo.back(), e) = num(f[8]);
      component(rr.hi.back(), e) = num(f[9]);
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const McSummary& summary) {
  write_csv_row(out, {"method", "effect", "s", "truth", "replicates", "failed_replicates", "mean", "bias", "variance",
                      "mse", "coverage", "type1_error", "boot_failures"});
  for (const auto& row : summary.rows) {
    write_csv_row(out, {method_name(row.method), row.effect, format_double(row.s), format_double(row.truth),
                        std::to_string(row.replicates), std::to_string(row.failed_replicates), format_double(row.mean),
                        format_double(row.bias), format_double(row.variance), format_double(row.mse),
                        format_double(row.coverage), row.type1_error ? format_double(*row.type1_error) : "NA",
                        std::to_string(row.boot_failures)});
  }
}

}  // namespace msm
