#pragma once

#include <span>
#include <vector>

namespace msm {

// Right-continuous nondecreasing step function starting at 0, e.g. a Breslow
// cumulative baseline hazard. Held constant past the last jump.
class StepFunction {
 public:
  StepFunction() = default;
  // jump_times strictly increasing; cum_values nondecreasing and >= 0.
  StepFunction(std::vector<double> jump_times, std::vector<double> cum_values);

  static StepFunction from_increments(std::span<const double> times, std::span<const double> increments);

  double operator()(double t) const;
  // Value just before t (left limit).
  double left_limit(double t) const;
  // F(t) - F(u) = mass on (u, t]; 0 when t <= u.
  double increment(double u, double t) const;

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& cum_values() const { return values_; }
  double jump_size(std::size_t k) const { return k == 0 ? values_[0] : values_[k] - values_[k - 1]; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double last_time() const { return times_.empty() ? 0.0 : times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace msm
