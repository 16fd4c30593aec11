#pragma once

// Reference computations for the tests. They share no code with the library:
// risk sets are enumerated row by row and closed forms are written out.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

struct Row {
  double entry = 0.0;
  double exit = 0.0;
  int status = 0;
  std::vector<double> z;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// Breslow partial log-likelihood: one term per event row, risk set {entry < t <= exit}.
inline double cox_loglik(const std::vector<Row>& rows, const std::vector<double>& beta) {
  double ll = 0.0;
  for (const Row& ev : rows) {
    if (ev.status != 1) continue;
    const double t = ev.exit;
    double denom = 0.0;
    for (const Row& r : rows) {
      if (r.entry < t && t <= r.exit) denom += std::exp(dot(beta, r.z));
    }
    ll += dot(beta, ev.z) - std::log(denom);
  }
  return ll;
}

// Maximizer of a one-parameter partial likelihood by nested grid refinement.
inline double grid_search_1d(const std::vector<Row>& rows, double lo, double hi) {
  double best = lo;
  for (int pass = 0; pass < 8; ++pass) {
    const int n = 2000;
    const double h = (hi - lo) / n;
    double best_ll = -INFINITY;
    for (int i = 0; i <= n; ++i) {
      const double b = lo + i * h;
      const double ll = cox_loglik(rows, {b});
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
    lo = best - 2 * h;
    hi = best + 2 * h;
  }
  return best;
}

struct Jump {
  double time;
  double cum;
};

// Breslow baseline with explicit risk-set enumeration, ascending event times.
inline std::vector<Jump> breslow(const std::vector<Row>& rows, const std::vector<double>& beta) {
  std::vector<double> times;
  for (const Row& r : rows) {
    if (r.status == 1) times.push_back(r.exit);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<Jump> out;
  double cum = 0.0;
  for (double t : times) {
    double d = 0.0, w = 0.0;
    for (const Row& r : rows) {
      if (r.status == 1 && r.exit == t) d += 1.0;
      if (r.entry < t && t <= r.exit) w += beta.empty() ? 1.0 : std::exp(dot(beta, r.z));
    }
    cum += d / w;
    out.push_back({t, cum});
  }
  return out;
}

// Nelson-Aalen: cumulative sum of events / number at risk.
inline std::vector<Jump> nelson_aalen(const std::vector<Row>& rows) { return breslow(rows, {}); }

// Constant-hazard illness-death model.
inline double exp_p00(double a01, double a02, double s) { return std::exp(-(a01 + a02) * s); }

inline double exp_p01(double a01, double a02, double a12, double s) {
  const double k = a01 + a02 - a12;
  if (std::abs(k) < 1e-14) return a01 * s * std::exp(-a12 * s);
  return a01 * std::exp(-a12 * s) * (1.0 - std::exp(-k * s)) / k;
}

inline double exp_survival(double a01, double a02, double a12, double s) {
  return exp_p00(a01, a02, s) + exp_p01(a01, a02, a12, s);
}

// Restricted mean of exp(-rate u) on [0, r].
inline double exp_rmst(double rate, double r) { return (1.0 - std::exp(-rate * r)) / rate; }

// Random delayed-entry dataset with p covariates. Times on a coarse grid so ties occur.
inline std::vector<Row> random_rows(std::mt19937_64& gen, int n, int p, bool delayed) {
  std::uniform_int_distribution<int> tick(1, 12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.7);
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) {
    Row r;
    r.entry = delayed ? 0.5 * (tick(gen) - 1) : 0.0;
    r.exit = r.entry + 0.5 * tick(gen);
    r.status = coin(gen) ? 1 : 0;
    for (int j = 0; j < p; ++j) r.z.push_back(normal(gen));
    rows.push_back(r);
  }
  rows[0].status = 1;
  return rows;
}

// Forward simulation of the illness-death model with Weibull baselines
// Lambda(t) = scale t^shape and fixed relative hazards; the 1->2 relative
// hazard may depend on the treatment time. Returns occupation counts of
// state 0 and state 1 at each s.
struct Weibull {
  double shape;
  double scale;
};

struct Occupation {
  std::vector<long> n00, n01;
  long paths = 0;
};

inline Occupation forward_paths(Weibull h01, Weibull h02, Weibull h12, double e01, double e02,
                                const std::function<double(double)>& e12, const std::vector<double>& s, long paths,
                                std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> unit(1.0);
  // Solve scale * t^shape * e = E for t.
  auto first_time = [](Weibull h, double e, double E) -> double {
    if (h.scale * e <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(E / (h.scale * e), 1.0 / h.shape);
  };
  Occupation occ;
  occ.n00.assign(s.size(), 0);
  occ.n01.assign(s.size(), 0);
  occ.paths = paths;
  for (long i = 0; i < paths; ++i) {
    const double t1 = first_time(h01, e01, unit(gen));
    const double t2 = first_time(h02, e02, unit(gen));
    const double e3 = unit(gen);
    double treat = std::numeric_limits<double>::infinity(), death = t2;
    if (t1 < t2) {
      treat = t1;
      // scale (D^k - T^k) e12(T) = E on the diagnosis clock.
      death = std::pow(std::pow(t1, h12.shape) + e3 / (h12.scale * e12(t1)), 1.0 / h12.shape);
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (death <= s[k]) continue;
      if (treat <= s[k]) {
        ++occ.n01[k];
      } else {
        ++occ.n00[k];
      }
    }
  }
  return occ;
}

}  // namespace oracle
