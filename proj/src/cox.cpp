#include "msm/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "msm/csv.hpp"

namespace msm {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// Cholesky pass over the information matrix of the active columns; throws
// SingularInformation naming the first column whose pivot vanishes.
void check_positive_definite(const Eigen::MatrixXd& info, const std::vector<int>& active,
                             const std::vector<std::string>& names) {
  const int p = static_cast<int>(active.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    double diag = info(k, k);
    double d = diag;
    for (int j = 0; j < k; ++j) d -= l(k, j) * l(k, j);
    if (!(d > 1e-10 * std::max(diag, 1e-300)) || !std::isfinite(d)) {
      int col = active[static_cast<std::size_t>(k)];
      std::string name = col < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(col)]
                                                              : "#" + std::to_string(col);
      throw FitError(FitErrorKind::SingularInformation,
                     "singular information matrix: column " + name + " is linearly dependent on the others",
                     col);
    }
    l(k, k) = std::sqrt(d);
    for (int i = k + 1; i < p; ++i) {
      double s = info(i, k);
      for (int j = 0; j < k; ++j) s -= l(i, j) * l(k, j);
      l(i, k) = s / l(k, k);
    }
  }
}

}  // namespace

CoxFit CoxFit::empty(Transition tr, std::vector<std::string> names) {
  CoxFit fit;
  fit.transition = tr;
  const auto p = static_cast<Eigen::Index>(names.size());
  fit.names = std::move(names);
  fit.beta = Eigen::VectorXd::Zero(p);
  fit.covariance = Eigen::MatrixXd::Zero(p, p);
  fit.aliased.assign(static_cast<std::size_t>(p), true);
  fit.converged = true;
  return fit;
}

double CoxFit::linear_predictor(std::span<const double> z) const {
  if (z.size() != static_cast<std::size_t>(beta.size())) {
    throw FitError(FitErrorKind::DimensionMismatch,
                   "covariate vector has " + std::to_string(z.size()) + " entries, model has " +
                       std::to_string(beta.size()));
  }
  double eta = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) eta += beta[static_cast<Eigen::Index>(j)] * z[j];
  return eta;
}

Eigen::VectorXd CoxFit::standard_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }

PartialLikelihood::PartialLikelihood(std::span<const TransitionRow> rows) {
  const std::size_t n = rows.size();
  const std::size_t p = n ? rows.front().z.size() : 0;
  z_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  entry_.resize(n);
  exit_.resize(n);
  status_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    if (r.z.size() != p) throw FitError(FitErrorKind::DimensionMismatch, "rows have differing covariate lengths");
    if (!(r.exit > r.entry)) throw FitError(FitErrorKind::DimensionMismatch, "row with exit <= entry");
    for (std::size_t j = 0; j < p; ++j) z_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.z[j];
    entry_[i] = r.entry;
    exit_[i] = r.exit;
    status_[i] = r.status;
  }
  center_ = n ? Eigen::VectorXd(z_.colwise().mean().transpose()) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  z_.rowwise() -= center_.transpose();

  std::vector<std::size_t> order = descending_order(exit_);
  for (std::size_t i : order) {
    if (status_[i] != 1) continue;
    ++n_events_;
    if (event_times_.empty() || event_times_.back() != exit_[i]) {
      event_times_.push_back(exit_[i]);
      event_rows_.emplace_back();
    }
    event_rows_.back().push_back(i);
  }
  by_exit_ = std::move(order);
  by_entry_ = descending_order(entry_);
}

std::vector<bool> PartialLikelihood::constant_columns() const {
  std::vector<bool> out(dimension(), true);
  for (Eigen::Index j = 0; j < z_.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = z_.rows() == 0 || z_.col(j).maxCoeff() == z_.col(j).minCoeff();
  }
  return out;
}

PartialLikelihood::Evaluation PartialLikelihood::evaluate(const Eigen::VectorXd& beta, bool with_derivatives) const {
  const Eigen::Index p = z_.cols();
  const std::size_t n = exit_.size();
  Evaluation ev;
  Eigen::VectorXd eta = p ? Eigen::VectorXd(z_ * beta) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const double shift = n ? eta.maxCoeff() : 0.0;
  Eigen::VectorXd w = (eta.array() - shift).exp();

  double a0 = 0.0, b0 = 0.0;
  Eigen::VectorXd a1 = Eigen::VectorXd::Zero(p), b1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mean(p);
  Eigen::MatrixXd a2, b2;
  if (with_derivatives) {
    ev.gradient = Eigen::VectorXd::Zero(p);
    ev.hessian = Eigen::MatrixXd::Zero(p, p);
    a2 = Eigen::MatrixXd::Zero(p, p);
    b2 = Eigen::MatrixXd::Zero(p, p);
  }
  std::size_t ie = 0, ib = 0;
  for (std::size_t j = 0; j < event_times_.size(); ++j) {
    const double t = event_times_[j];
    for (; ie < n && exit_[by_exit_[ie]] >= t; ++ie) {
      const std::size_t k = by_exit_[ie];
      a0 += w[static_cast<Eigen::Index>(k)];
      if (with_derivatives) {
        auto zk = z_.row(static_cast<Eigen::Index>(k)).transpose();
        a1.noalias() += w[static_cast<Eigen::Index>(k)] * zk;
        a2.selfadjointView<Eigen::Lower>().rankUpdate(zk, w[static_cast<Eigen::Index>(k)]);
      }
    }
    for (; ib < n && entry_[by_entry_[ib]] >= t; ++ib) {
      const std::size_t k = by_entry_[ib];
      b0 += w[static_cast<Eigen::Index>(k)];
      if (with_derivatives) {
        auto zk = z_.row(static_cast<Eigen::Index>(k)).transpose();
        b1.noalias() += w[static_cast<Eigen::Index>(k)] * zk;
        b2.selfadjointView<Eigen::Lower>().rankUpdate(zk, w[static_cast<Eigen::Index>(k)]);
      }
    }
    const double s0 = a0 - b0;
    const double d = static_cast<double>(event_rows_[j].size());
    double eta_sum = 0.0;
    for (std::size_t i : event_rows_[j]) eta_sum += eta[static_cast<Eigen::Index>(i)];
    ev.loglik += eta_sum - d * (std::log(s0) + shift);
    if (with_derivatives) {
      mean = (a1 - b1) / s0;
      for (std::size_t i : event_rows_[j]) ev.gradient += z_.row(static_cast<Eigen::Index>(i)).transpose();
      ev.gradient -= d * mean;
      ev.hessian.noalias() -= (d / s0) * (a2 - b2);
      ev.hessian.selfadjointView<Eigen::Lower>().rankUpdate(mean, d);
    }
  }
  if (with_derivatives) ev.hessian = ev.hessian.selfadjointView<Eigen::Lower>();
  return ev;
}

CoxFit fit_partial_likelihood(std::span<const TransitionRow> rows, std::span<const double> init,
                              const CoxOptions& options, std::vector<std::string> names) {
  PartialLikelihood pl(rows);
  const std::size_t p = pl.dimension();
  if (!rows.empty() && rows.front().z.size() != init.size() && !init.empty()) {
    throw FitError(FitErrorKind::DimensionMismatch, "initial value has wrong length");
  }
  if (names.size() != p) {
    names.clear();
    for (std::size_t j = 0; j < p; ++j) names.push_back("z" + std::to_string(j + 1));
  }
  if (pl.event_count() == 0) throw FitError(FitErrorKind::NoEvents, "no events: nothing to fit");

  CoxFit fit;
  fit.transition = rows.front().transition;
  fit.names = names;
  fit.n_events = pl.event_count();
  fit.aliased = pl.constant_columns();

  std::vector<int> active;
  for (std::size_t j = 0; j < p; ++j) {
    if (!fit.aliased[j]) active.push_back(static_cast<int>(j));
  }
  const auto q = static_cast<Eigen::Index>(active.size());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (int j : active) beta[j] = init.empty() ? 0.0 : init[static_cast<std::size_t>(j)];

  auto restrict = [&](const PartialLikelihood::Evaluation& ev, Eigen::VectorXd& g, Eigen::MatrixXd& info) {
    g.resize(q);
    info.resize(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
      g[a] = ev.gradient[active[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < q; ++b) {
        info(a, b) = -ev.hessian(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
      }
    }
  };

  PartialLikelihood::Evaluation ev = pl.evaluate(beta);
  fit.loglik_init = ev.loglik;
  double ll = ev.loglik;
  Eigen::VectorXd g;
  Eigen::MatrixXd info;
  restrict(ev, g, info);

  bool converged = q == 0;
  int iter = 0;
  while (!converged && iter < options.max_iter) {
    ++iter;
    check_positive_definite(info, active, names);
    Eigen::VectorXd step = info.llt().solve(g);
    Eigen::VectorXd candidate = beta;
    double ll_new = 0.0;
    int halvings = 0;
    while (true) {
      for (Eigen::Index a = 0; a < q; ++a) candidate[active[static_cast<std::size_t>(a)]] = beta[active[static_cast<std::size_t>(a)]] + step[a];
      ll_new = pl.loglik(candidate);
      if ((std::isfinite(ll_new) && ll_new >= ll) || halvings == options.max_halvings) break;
      step *= 0.5;
      ++halvings;
    }
    if (!(std::isfinite(ll_new) && ll_new >= ll)) {
      // No ascent direction left at working precision.
      converged = true;
      break;
    }
    const double change = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    if (candidate.cwiseAbs().maxCoeff() > options.beta_bound && change >= options.tol) {
      throw FitError(FitErrorKind::MonotoneLikelihood,
                     "monotone likelihood: |beta| exceeds " + format_double(options.beta_bound) +
                         " while the log-likelihood is still increasing");
    }
    beta = candidate;
    ev = pl.evaluate(beta);
    ll = ev.loglik;
    restrict(ev, g, info);
    if (change < options.tol) converged = true;
  }
  if (!converged) {
    throw FitError(FitErrorKind::NonConvergence,
                   "Newton-Raphson did not converge in " + std::to_string(options.max_iter) + " iterations");
  }

  fit.beta = beta;
  fit.loglik = ll;
  fit.iterations = iter;
  fit.converged = true;
  fit.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  if (q > 0) {
    check_positive_definite(info, active, names);
    Eigen::MatrixXd inv = info.llt().solve(Eigen::MatrixXd::Identity(q, q));
    for (Eigen::Index a = 0; a < q; ++a) {
      for (Eigen::Index b = 0; b < q; ++b) {
        fit.covariance(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]) =
            0.5 * (inv(a, b) + inv(b, a));
      }
    }
  }
  fit.baseline = breslow_baseline(fit, rows);
  return fit;
}

StepFunction breslow_baseline(const CoxFit& fit, std::span<const TransitionRow> rows) {
  const std::size_t n = rows.size();
  std::vector<double> eta(n), entry(n), exit(n);
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eta[i] = fit.linear_predictor(rows[i].z);
    entry[i] = rows[i].entry;
    exit[i] = rows[i].exit;
    shift = i == 0 ? eta[i] : std::max(shift, eta[i]);
  }
  std::vector<std::size_t> by_exit = descending_order(exit);
  std::vector<std::size_t> by_entry = descending_order(entry);

  std::vector<double> times, increments;
  std::size_t ie = 0, ib = 0, k = 0;
  double a0 = 0.0, b0 = 0.0;
  const double scale = std::exp(shift);
  while (k < n) {
    const double t = exit[by_exit[k]];
    double d = 0.0;
    std::size_t k_end = k;
    for (; k_end < n && exit[by_exit[k_end]] == t; ++k_end) d += rows[by_exit[k_end]].status == 1 ? 1.0 : 0.0;
    if (d > 0.0) {
      for (; ie < n && exit[by_exit[ie]] >= t; ++ie) a0 += std::exp(eta[by_exit[ie]] - shift);
      for (; ib < n && entry[by_entry[ib]] >= t; ++ib) b0 += std::exp(eta[by_entry[ib]] - shift);
      times.push_back(t);
      increments.push_back(d / ((a0 - b0) * scale));
    }
    k = k_end;
  }
  std::reverse(times.begin(), times.end());
  std::reverse(increments.begin(), increments.end());
  return StepFunction::from_increments(times, increments);
}

double cumulative_hazard(const CoxFit& fit, std::span<const double> z, double t) {
  return fit.baseline(t) * std::exp(fit.linear_predictor(z));
}

double cumulative_hazard(const CoxFit& fit, std::span<const double> z, double entry, double t) {
  return fit.baseline.increment(entry, t) * std::exp(fit.linear_predictor(z));
}

void write_fit_csv(std::ostream& out, const CoxFit& fit) {
  std::vector<std::string> header = {"section", "name", "value"};
  for (const auto& n : fit.names) header.push_back("cov_" + n);
  write_csv_row(out, header);
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    std::vector<std::string> row = {"beta", fit.names[j], format_double(fit.beta[static_cast<Eigen::Index>(j)])};
    for (std::size_t k = 0; k < fit.names.size(); ++k) {
      row.push_back(format_double(fit.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))));
    }
    write_csv_row(out, row);
  }
  write_csv_row(out, {"loglik", "", format_double(fit.loglik)});
  for (std::size_t k = 0; k < fit.baseline.size(); ++k) {
    write_csv_row(out, {"baseline", format_double(fit.baseline.jump_times()[k]),
                        format_double(fit.baseline.cum_values()[k])});
  }
}

}  // namespace msm
