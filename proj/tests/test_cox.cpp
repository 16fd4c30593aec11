#include <doctest.h>

#include <cmath>
#include <random>

#include "msm/cox.hpp"
#include "oracles.hpp"

using namespace msm;

namespace {

std::vector<TransitionRow> to_rows(const std::vector<oracle::Row>& rows) {
  std::vector<TransitionRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TransitionRow r;
    r.subject = i;
    r.entry = rows[i].entry;
    r.exit = rows[i].exit;
    r.status = rows[i].status;
    r.z = rows[i].z;
    out.push_back(r);
  }
  return out;
}

std::vector<oracle::Row> four_subjects() {
  return {{0, 1, 1, {1}}, {0, 2, 1, {0}}, {0, 3, 1, {1}}, {0, 4, 1, {0}}};
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("four-subject closed form") {
  const auto rows = four_subjects();
  const auto fit = fit_partial_likelihood(to_rows(rows), {});
  const double r = (1.0 + std::sqrt(17.0)) / 2.0;
  CHECK(std::abs(fit.beta[0] - std::log(r)) < 1e-6);
  CHECK(std::abs(std::exp(fit.beta[0]) - 2.56155) < 1e-5);
  CHECK(std::abs(fit.beta[0] - oracle::grid_search_1d(rows, -5, 5)) < 1e-6);
  CHECK(fit.loglik >= fit.loglik_init);
  CHECK(std::abs(fit.loglik - oracle::cox_loglik(rows, {fit.beta[0]})) < 1e-10);

  // Score equation at the optimum.
  CHECK(std::abs(2.0 / (r + 1.0) - r / (r + 2.0)) < 1e-12);

  CHECK(fit.baseline(0.5) == 0.0);
  CHECK(std::abs(fit.baseline(1.0) - 1.0 / (2 * r + 2)) < 1e-6);
  CHECK(std::abs(fit.baseline(1.0) - 0.14039) < 1e-5);
  CHECK(std::abs(fit.baseline(2.0) - 0.35961) < 1e-5);
  const auto jumps = oracle::breslow(rows, {fit.beta[0]});
  for (const auto& j : jumps) CHECK(std::abs(fit.baseline(j.time) - j.cum) < 1e-12);
}

TEST_CASE("null model baseline is Nelson-Aalen") {
  const std::vector<oracle::Row> rows = {{0, 1, 1, {}}, {0, 2, 1, {}}, {0, 3, 0, {}}};
  const auto fit = fit_partial_likelihood(to_rows(rows), {});
  CHECK(fit.beta.size() == 0);
  CHECK(fit.baseline(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(fit.baseline(2.0) == doctest::Approx(1.0 / 3.0 + 0.5).epsilon(1e-14));
  CHECK(fit.baseline(0.99) == 0.0);
}

TEST_CASE("Breslow with empty covariates equals Nelson-Aalen on random data") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(1, 100);
  for (int rep = 0; rep < 200; ++rep) {
    const auto rows = oracle::random_rows(gen, size(gen), 0, rep % 2 == 1);
    const auto fit = fit_partial_likelihood(to_rows(rows), {});
    const auto na = oracle::nelson_aalen(rows);
    REQUIRE(fit.baseline.size() == na.size());
    for (std::size_t k = 0; k < na.size(); ++k) {
      CHECK(fit.baseline.jump_times()[k] == na[k].time);
      CHECK(std::abs(fit.baseline.cum_values()[k] - na[k].cum) <= 1e-12);
    }
  }
}

TEST_CASE("zero covariates give the null partial likelihood") {
  std::mt19937_64 gen(5);
  auto rows = oracle::random_rows(gen, 40, 2, false);
  for (auto& r : rows) r.z = {0.0, 0.0};
  const auto fit = fit_partial_likelihood(to_rows(rows), {});
  CHECK(fit.beta.isZero(0.0));
  CHECK(fit.aliased[0]);
  CHECK(fit.aliased[1]);
  CHECK(std::abs(fit.loglik - oracle::cox_loglik(rows, {0.0, 0.0})) < 1e-10);
}

TEST_CASE("exchangeable groups give a zero coefficient") {
  std::vector<oracle::Row> rows;
  const double times[] = {1.0, 2.5, 3.0, 4.5, 7.0};
  for (double t : times) {
    rows.push_back({0, t, 1, {1}});
    rows.push_back({0, t, 1, {0}});
  }
  rows.push_back({0, 8, 0, {1}});
  rows.push_back({0, 8, 0, {0}});
  const auto fit = fit_partial_likelihood(to_rows(rows), {});
  CHECK(std::abs(fit.beta[0]) < 1e-8);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> size(10, 50);
  std::normal_distribution<double> normal(0.0, 0.7);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const auto rows = to_rows(oracle::random_rows(gen, size(gen), 3, rep % 2 == 0));
    const PartialLikelihood pl(rows);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd beta(3);
      for (int j = 0; j < 3; ++j) beta[j] = normal(gen);
      const auto ev = pl.evaluate(beta);
      for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd up = beta, down = beta;
        up[j] += h;
        down[j] -= h;
        const double fd = (pl.loglik(up) - pl.loglik(down)) / (2 * h);
        const double rel = std::abs(ev.gradient[j] - fd) / std::max(1.0, std::abs(ev.gradient[j]));
        CHECK(rel < 1e-6);
      }
    }
  }
}

TEST_CASE("library log-likelihood matches brute-force risk sets with delayed entry") {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 30; ++rep) {
    const auto rows = oracle::random_rows(gen, 30, 2, true);
    const PartialLikelihood pl(to_rows(rows));
    const std::vector<double> beta = {0.3, -0.6};
    CHECK(std::abs(pl.loglik(vec(beta)) - oracle::cox_loglik(rows, beta)) < 1e-9);
  }
}

TEST_CASE("delayed entry excludes rows at or before their entry") {
  std::vector<oracle::Row> rows = {{0, 2, 1, {}}, {0, 4, 1, {}}, {0, 6, 0, {}}};
  const auto before = fit_partial_likelihood(to_rows(rows), {});
  rows.push_back({4, 9, 0, {}});  // enters exactly at the second event time
  const auto after = fit_partial_likelihood(to_rows(rows), {});
  CHECK(after.baseline(2.0) == before.baseline(2.0));
  CHECK(after.baseline(4.0) == before.baseline(4.0));
  rows.push_back({3.5, 9, 0, {}});
  const auto later = fit_partial_likelihood(to_rows(rows), {});
  CHECK(later.baseline.increment(2.0, 4.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("shifting a covariate leaves beta unchanged") {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 10; ++rep) {
    auto rows = oracle::random_rows(gen, 60, 2, rep % 2 == 0);
    const auto a = fit_partial_likelihood(to_rows(rows), {});
    for (auto& r : rows) r.z[1] += 3.0;
    const auto b = fit_partial_likelihood(to_rows(rows), {});
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(std::abs(a.loglik - b.loglik) < 1e-8);
    // Baseline absorbs exp(-3 beta_2).
    const double t = b.baseline.jump_times().back();
    CHECK(b.baseline(t) == doctest::Approx(a.baseline(t) * std::exp(-3.0 * a.beta[1])).epsilon(1e-6));
  }
}

TEST_CASE("fit invariants over random data") {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 25; ++rep) {
    const auto rows = to_rows(oracle::random_rows(gen, 80, 2, true));
    const auto fit = fit_partial_likelihood(rows, {});
    CHECK(fit.converged);
    CHECK(fit.loglik >= fit.loglik_init);
    CHECK((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index j = 0; j < fit.covariance.rows(); ++j) CHECK(fit.covariance(j, j) >= 0.0);
    const auto& cum = fit.baseline.cum_values();
    for (std::size_t k = 0; k < fit.baseline.size(); ++k) {
      if (k > 0) CHECK(cum[k] >= cum[k - 1]);
      bool event_here = false;
      for (const auto& r : rows) event_here |= r.status == 1 && r.exit == fit.baseline.jump_times()[k];
      CHECK(event_here);
    }
  }
}

TEST_CASE("cumulative hazard identities") {
  const auto fit = fit_partial_likelihood(to_rows(four_subjects()), {});
  const std::vector<double> zero = {0.0}, one = {1.0}, two = {2.0};
  CHECK(cumulative_hazard(fit, zero, 2.5) == fit.baseline(2.5));
  CHECK(cumulative_hazard(fit, two, 3.0) ==
        doctest::Approx(cumulative_hazard(fit, one, 3.0) * std::exp(fit.beta[0])).epsilon(1e-13));
  CHECK(cumulative_hazard(fit, one, 1.5, 3.0) ==
        doctest::Approx((fit.baseline(3.0) - fit.baseline(1.5)) * std::exp(fit.beta[0])));
  const std::vector<double> wrong = {1.0, 2.0};
  CHECK_THROWS_AS(cumulative_hazard(fit, wrong, 1.0), FitError);
}

TEST_CASE("exponential data recover the generator rate") {
  std::mt19937_64 gen(123);
  std::exponential_distribution<double> expo(0.1);
  std::vector<TransitionRow> rows(100000);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].subject = i;
    rows[i].exit = expo(gen);
    rows[i].status = 1;
  }
  const auto fit = fit_partial_likelihood(rows, {});
  double worst = 0.0;
  for (double t = 0.0; t <= 10.0; t += 0.05) worst = std::max(worst, std::abs(fit.baseline(t) - 0.1 * t));
  CHECK(worst < 0.02);
}

TEST_CASE("fit errors") {
  SUBCASE("no events") {
    const std::vector<oracle::Row> rows = {{0, 1, 0, {1}}, {0, 2, 0, {0}}};
    try {
      fit_partial_likelihood(to_rows(rows), {});
      FAIL("expected FitError");
    } catch (const FitError& e) {
      CHECK(e.kind() == FitErrorKind::NoEvents);
    }
  }
  SUBCASE("collinear columns") {
    std::mt19937_64 gen(3);
    auto rows = oracle::random_rows(gen, 40, 1, false);
    for (auto& r : rows) r.z.push_back(2.0 * r.z[0]);
    try {
      fit_partial_likelihood(to_rows(rows), {}, {}, {"u", "v"});
      FAIL("expected FitError");
    } catch (const FitError& e) {
      CHECK(e.kind() == FitErrorKind::SingularInformation);
      CHECK(e.column() == 1);
      CHECK(std::string(e.what()).find("v") != std::string::npos);
    }
  }
  SUBCASE("perfect separation") {
    // Every event occurs in the z=1 group while the z=0 group is still at risk.
    const std::vector<oracle::Row> rows = {{0, 1, 1, {1}}, {0, 2, 1, {1}}, {0, 3, 1, {1}},
                                           {0, 5, 0, {0}}, {0, 5, 0, {0}}, {0, 5, 0, {0}}};
    try {
      fit_partial_likelihood(to_rows(rows), {});
      FAIL("expected FitError");
    } catch (const FitError& e) {
      CHECK(e.kind() == FitErrorKind::MonotoneLikelihood);
    }
  }
  SUBCASE("iteration cap") {
    CoxOptions opt;
    opt.max_iter = 1;
    try {
      fit_partial_likelihood(to_rows(four_subjects()), {}, opt);
      FAIL("expected FitError");
    } catch (const FitError& e) {
      CHECK(e.kind() == FitErrorKind::NonConvergence);
    }
  }
  SUBCASE("ragged rows") {
    const std::vector<oracle::Row> rows = {{0, 1, 1, {1}}, {0, 2, 1, {0, 1}}};
    CHECK_THROWS_AS(fit_partial_likelihood(to_rows(rows), {}), FitError);
  }
}
