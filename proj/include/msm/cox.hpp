#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msm/covariates.hpp"
#include "msm/dataset.hpp"
#include "msm/step_function.hpp"

namespace msm {

enum class FitErrorKind { NoEvents, NonConvergence, SingularInformation, MonotoneLikelihood, DimensionMismatch };

class FitError : public std::runtime_error {
 public:
  FitError(FitErrorKind kind, const std::string& message, int column = -1)
      : std::runtime_error(message), kind_(kind), column_(column) {}
  FitErrorKind kind() const { return kind_; }
  int column() const { return column_; }  // offending column for SingularInformation

 private:
  FitErrorKind kind_;
  int column_;
};

struct CoxOptions {
  double tol = 1e-9;       // on |d loglik| / (|loglik| + 1)
  int max_iter = 50;
  int max_halvings = 10;
  double beta_bound = 15.0;  // monotone-likelihood guard on |beta_j|
};

struct CoxFit {
  Transition transition = Transition::DiagTreat;
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // inverse observed information; zero rows for aliased columns
  std::vector<bool> aliased;   // columns constant over all rows carry no information
  double loglik = 0.0;
  double loglik_init = 0.0;
  StepFunction baseline;       // Breslow cumulative baseline hazard
  int n_events = 0;
  int iterations = 0;
  bool converged = false;

  // Fit for a transition with no observed events: zero baseline, zero coefficients.
  static CoxFit empty(Transition tr, std::vector<std::string> names);

  bool has_events() const { return n_events > 0; }
  double linear_predictor(std::span<const double> z) const;
  Eigen::VectorXd standard_errors() const;
};

// Delayed-entry Cox partial likelihood with Breslow ties. A row is at risk at
// time t when entry < t <= exit. Covariates are centered internally.
class PartialLikelihood {
 public:
  explicit PartialLikelihood(std::span<const TransitionRow> rows);

  struct Evaluation {
    double loglik = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
  };

  Evaluation evaluate(const Eigen::VectorXd& beta, bool with_derivatives = true) const;
  double loglik(const Eigen::VectorXd& beta) const { return evaluate(beta, false).loglik; }

  std::size_t dimension() const { return static_cast<std::size_t>(z_.cols()); }
  int event_count() const { return n_events_; }
  // Columns whose values are identical on every row.
  std::vector<bool> constant_columns() const;

 private:
  Eigen::MatrixXd z_;  // centered, n x p
  Eigen::VectorXd center_;
  std::vector<double> entry_, exit_;
  std::vector<int> status_;
  std::vector<double> event_times_;            // distinct, descending
  std::vector<std::vector<std::size_t>> event_rows_;
  std::vector<std::size_t> by_exit_, by_entry_;  // descending orders
  int n_events_ = 0;
};

CoxFit fit_partial_likelihood(std::span<const TransitionRow> rows, std::span<const double> init,
                              const CoxOptions& options = {}, std::vector<std::string> names = {});

// Lambda0(t) = sum over event times t_j <= t of d_j / sum_{k at risk at t_j} exp(beta' z_k).
StepFunction breslow_baseline(const CoxFit& fit, std::span<const TransitionRow> rows);

// Lambda(t | z) = Lambda0(t) exp(beta' z).
double cumulative_hazard(const CoxFit& fit, std::span<const double> z, double t);
// Hazard mass on (entry, t] for a row entering at `entry`.
double cumulative_hazard(const CoxFit& fit, std::span<const double> z, double entry, double t);

// Debug dump: coefficient/covariance block followed by the baseline jumps.
void write_fit_csv(std::ostream& out, const CoxFit& fit);

}  // namespace msm
