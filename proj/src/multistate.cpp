#include "msm/multistate.hpp"

#include <algorithm>
#include <limits>

namespace msm {

double MultistateFit::extrapolation_limit() const {
  double limit = std::numeric_limits<double>::infinity();
  for (const CoxFit& f : fits) {
    if (f.has_events()) limit = std::min(limit, f.baseline.last_time());
  }
  return limit;
}

MultistateFit fit_multistate(const ValidatedDataset& ds, const CovariateSpec& spec,
                             const MultistateOptions& options) {
  MultistateFit out;
  out.spec = spec;
  out.diag_death_forced_null = options.null_diag_death;
  const std::vector<TransitionRow> rows = expand_transitions(ds, spec);
  for (Transition tr : kTransitions) {
    std::vector<TransitionRow> sub = rows_for(rows, tr);
    CoxFit& fit = out.fits[static_cast<std::size_t>(index_of(tr))];
    const bool any_event = std::any_of(sub.begin(), sub.end(), [](const TransitionRow& r) { return r.status == 1; });
    if (!any_event || (tr == Transition::DiagDeath && options.null_diag_death)) {
      fit = CoxFit::empty(tr, spec.column_names(tr));
      continue;
    }
    try {
      fit = fit_partial_likelihood(sub, {}, options.cox, spec.column_names(tr));
    } catch (const FitError& e) {
      throw FitError(e.kind(), std::string("transition ") + transition_code(tr) + ": " + e.what(), e.column());
    }
  }
  for (const auto& r : ds.records()) {
    if (r.delta_t == 1) ++out.treat_events[{r.a, r.x}];
  }
  return out;
}

}  // namespace msm
