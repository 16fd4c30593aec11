#pragma once

// Datasets drawn with the standard library generator, independent of simgen.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "msm/dataset.hpp"

namespace fixture {

// Constant hazards 0.1 (treatment), 0.05 (death untreated), 0.2 (death
// treated); no covariates; administrative censoring at 30.
inline std::vector<msm::SubjectRecord> exponential_records(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> e01(0.1), e02(0.05), e12(0.2);
  const double cens = 30.0;
  std::vector<msm::SubjectRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    msm::SubjectRecord r;
    r.id = std::to_string(i + 1);
    const double t1 = e01(gen), t2 = e02(gen);
    if (t1 < t2 && t1 < cens) {
      const double d = t1 + e12(gen);
      r.y_t = t1;
      r.delta_t = 1;
      r.y_s = std::min(d, cens);
      r.delta_s = d <= cens;
    } else {
      r.y_t = r.y_s = std::min(t2, cens);
      r.delta_s = t2 <= cens;
    }
    r.x = 1;
    records.push_back(r);
  }
  return records;
}

}  // namespace fixture
