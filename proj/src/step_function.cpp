#include "msm/step_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace msm {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> cum_values)
    : times_(std::move(jump_times)), values_(std::move(cum_values)) {
  if (times_.size() != values_.size()) throw std::invalid_argument("step function: size mismatch");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw std::invalid_argument("step function: jump times must be strictly increasing");
    }
    double prev = k == 0 ? 0.0 : values_[k - 1];
    if (!(values_[k] >= prev)) throw std::invalid_argument("step function: values must be nondecreasing");
  }
}

StepFunction StepFunction::from_increments(std::span<const double> times,
                                           std::span<const double> increments) {
  std::vector<double> cum(increments.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    acc += increments[k];
    cum[k] = acc;
  }
  return StepFunction(std::vector<double>(times.begin(), times.end()), std::move(cum));
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::increment(double u, double t) const {
  if (t <= u) return 0.0;
  return (*this)(t) - (*this)(u);
}

}  // namespace msm
