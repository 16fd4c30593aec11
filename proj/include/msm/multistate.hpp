#pragma once

#include <array>
#include <map>
#include <utility>

#include "msm/cox.hpp"
#include "msm/covariates.hpp"
#include "msm/dataset.hpp"

namespace msm {

struct MultistateOptions {
  CoxOptions cox;
  // Drop the diagnosed-to-death transition (Lambda02 = 0), as the naive
  // analyses that ignore death before treatment do.
  bool null_diag_death = false;
};

// The three transition fits of the illness-death model.
struct MultistateFit {
  CovariateSpec spec;
  std::array<CoxFit, 3> fits;
  bool diag_death_forced_null = false;
  // Observed 0->1 events per (exposure, x); used for positivity diagnostics.
  std::map<std::pair<int, double>, int> treat_events;

  const CoxFit& fit(Transition tr) const { return fits[static_cast<std::size_t>(index_of(tr))]; }
  // Smallest last-jump time over the fitted transitions; step functions are
  // held constant beyond it, so evaluations past it extrapolate.
  double extrapolation_limit() const;
};

// Fits each transition by delayed-entry Cox regression. A transition without
// events gets CoxFit::empty (zero hazard). FitError messages name the transition.
MultistateFit fit_multistate(const ValidatedDataset& ds, const CovariateSpec& spec,
                             const MultistateOptions& options = {});

}  // namespace msm
