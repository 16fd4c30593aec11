#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msm/csv.hpp"
#include "msm/dataset.hpp"
#include "msm/effects.hpp"
#include "msm/multistate.hpp"
#include "msm/simgen.hpp"

namespace msm {

enum class MethodId { Multistate, ExcludeTgtS, CensorTgtS };

inline constexpr MethodId kAllMethods[] = {MethodId::Multistate, MethodId::ExcludeTgtS, MethodId::CensorTgtS};

const char* method_name(MethodId m);  // multistate, exclude, censor
// Accepts the short names and ExcludeTgtS / CensorTgtS / Multistate.
MethodId parse_method(const std::string& name);
std::vector<MethodId> parse_methods(const std::string& comma_list);

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimateOptions {
  CoxOptions cox;
  bool negate_sie = false;
};

// The model each method plugs into the effect formulas.
//   Multistate:  all three transitions fitted on the full data.
//   ExcludeTgtS: subjects dying untreated removed; Lambda02 = 0.
//   CensorTgtS:  all subjects, death before treatment counts only as
//                censoring of T; Lambda02 = 0.
MultistateFit fit_method(MethodId method, const ValidatedDataset& ds, const CovariateSpec& spec,
                         const EstimateOptions& options = {});

EffectCurve estimate(MethodId method, const ValidatedDataset& ds, const CovariateSpec& spec,
                     const std::vector<double>& s_grid, const CovariateProfile& prof,
                     const EstimateOptions& options = {});

// One outcome per requested method; failures carry the message instead of a curve.
struct MethodEstimate {
  MethodId method;
  std::optional<EffectCurve> curve;
  std::string error;
};
std::vector<MethodEstimate> estimate_methods(const std::vector<MethodId>& methods, const ValidatedDataset& ds,
                                             const CovariateSpec& spec, const std::vector<double>& s_grid,
                                             const CovariateProfile& prof, const EstimateOptions& options = {});

// Type-7 quantile of sorted data, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval percentile_interval(std::vector<double> draws, double level);

struct BootstrapCi {
  MethodId method = MethodId::Multistate;
  std::vector<double> s;
  double level = 0.95;
  int requested = 0;
  int failed = 0;
  bool unreliable = false;  // more than 10% of resamples failed
  std::vector<EffectPoint> lo, hi;
  // draws[b][k]: effects of successful resample b at s[k].
  std::vector<std::vector<EffectPoint>> draws;
  std::string first_error;

  // Percentile bounds recomputed from the stored draws at another level.
  std::pair<std::vector<EffectPoint>, std::vector<EffectPoint>> bounds(double level) const;
};

struct BootstrapOptions {
  int B = 100;
  std::uint64_t seed = 1;
  double level = 0.95;
  int threads = 1;
};

// Resamples whole subjects with replacement; the same resamples serve every method.
std::vector<BootstrapCi> bootstrap_methods(const std::vector<MethodId>& methods, const ValidatedDataset& ds,
                                           const CovariateSpec& spec, const std::vector<double>& s_list,
                                           const CovariateProfile& prof, const BootstrapOptions& boot,
                                           const EstimateOptions& options = {});

BootstrapCi bootstrap_ci(const ValidatedDataset& ds, MethodId method, const CovariateSpec& spec,
                         const std::vector<double>& s_list, const CovariateProfile& prof, const BootstrapOptions& boot,
                         const EstimateOptions& options = {});

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

int default_thread_count();

struct ReplicateResult {
  std::size_t replicate = 0;
  MethodId method = MethodId::Multistate;
  int scenario_id = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> s;
  std::vector<EffectPoint> est, lo, hi;
  int boot_failures = 0;
  bool ci_unreliable = false;
};

struct ExperimentConfig {
  std::size_t n = 2000;
  std::size_t R = 100;
  int B = 100;
  std::vector<MethodId> methods{kAllMethods[0], kAllMethods[1], kAllMethods[2]};
  std::uint64_t seed = 1;
  double level = 0.95;
  std::vector<double> s_list;  // defaults to the scenario horizon
  int threads = 1;
  EstimateOptions estimate;
  // Per-replicate CSV files; with resume set, finished replicates are read back.
  std::optional<std::string> checkpoint_dir;
  bool resume = false;
  std::optional<Provenance> provenance;
};

std::vector<ReplicateResult> run_experiment(const Scenario& sc, const ExperimentConfig& cfg);
// Replicate r of an experiment, all methods.
std::vector<ReplicateResult> run_replicate(const Scenario& sc, const ExperimentConfig& cfg, std::size_t r);

struct SummaryRow {
  MethodId method = MethodId::Multistate;
  std::string effect;  // te, sde, sie
  double s = 0.0;
  double truth = 0.0;
  std::size_t replicates = 0;
  std::size_t failed_replicates = 0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population convention (divide by replicates)
  double mse = 0.0;
  double coverage = 0.0;
  std::optional<double> type1_error;  // only when the truth is zero
  long boot_failures = 0;
};

struct McSummary {
  std::vector<SummaryRow> rows;
  const SummaryRow& find(MethodId method, const std::string& effect, double s) const;
};

McSummary summarize(const std::vector<ReplicateResult>& results, const TruthTable& truth, double s);

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateResult>& results);
std::vector<ReplicateResult> read_replicates_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const McSummary& summary);

}  // namespace msm
