#include <doctest.h>

#include <random>
#include <sstream>

#include "msm/covariates.hpp"
#include "msm/dataset.hpp"
#include "msm/keyvalue.hpp"

using namespace msm;

namespace {

SubjectRecord rec(const std::string& id, double yt, int dt, double ys, int ds, int a = 0, double x = 1,
                  std::vector<double> c = {}) {
  SubjectRecord r;
  r.id = id;
  r.y_t = yt;
  r.delta_t = dt;
  r.y_s = ys;
  r.delta_s = ds;
  r.a = a;
  r.x = x;
  r.c = std::move(c);
  return r;
}

std::string issue_text(const std::vector<SubjectRecord>& records) {
  try {
    validate(records);
  } catch (const DatasetError& e) {
    return e.what();
  }
  return "";
}

std::vector<SubjectRecord> random_records(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(0.1, 20.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<SubjectRecord> out;
  for (int i = 0; i < n; ++i) {
    const double a = u(gen), b = u(gen);
    const int dt = coin(gen);
    if (dt == 1) {
      out.push_back(rec(std::to_string(i), std::min(a, b), 1, std::max(a, b) + 0.01, coin(gen), coin(gen)));
    } else {
      out.push_back(rec(std::to_string(i), a, 0, a, coin(gen), coin(gen)));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("treated subject contributes to all three transitions") {
  const auto ds = validate({rec("s1", 3, 1, 10, 1)});
  const auto rows = expand_transitions(ds, CovariateSpec{});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].transition == Transition::DiagTreat);
  CHECK(rows[0].entry == 0);
  CHECK(rows[0].exit == 3);
  CHECK(rows[0].status == 1);
  CHECK(rows[1].transition == Transition::DiagDeath);
  CHECK(rows[1].exit == 3);
  CHECK(rows[1].status == 0);
  CHECK(rows[2].transition == Transition::TreatDeath);
  CHECK(rows[2].entry == 3);
  CHECK(rows[2].exit == 10);
  CHECK(rows[2].status == 1);
}

TEST_CASE("death before treatment is a semi-competing record") {
  const auto ds = validate({rec("s2", 5, 0, 5, 1)});
  CHECK(ds.counts().semi_competing == 1);
  CHECK(ds.counts().semi_competing_fraction == 1.0);
  const auto rows = expand_transitions(ds, CovariateSpec{});
  REQUIRE(rows.size() == 2);
  CHECK((rows[0].transition == Transition::DiagTreat && rows[0].exit == 5 && rows[0].status == 0));
  CHECK((rows[1].transition == Transition::DiagDeath && rows[1].exit == 5 && rows[1].status == 1));
}

TEST_CASE("fully censored record") {
  const auto rows = expand_transitions(validate({rec("s3", 7, 0, 7, 0)}), CovariateSpec{});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == 0);
  CHECK(rows[1].status == 0);
  CHECK(rows[1].exit == 7);
}

TEST_CASE("validation reports offending ids") {
  CHECK(issue_text({rec("bad", 6, 0, 5, 1)}).find("record bad: y_t exceeds y_s") != std::string::npos);
  CHECK(issue_text({rec("neg", -1, 0, -1, 0)}).find("negative time") != std::string::npos);
  CHECK(issue_text({rec("flag", 2, 2, 4, 0)}).find("delta_t must be 0 or 1") != std::string::npos);
  CHECK(issue_text({rec("flag", 2, 0, 2, 3)}).find("delta_s must be 0 or 1") != std::string::npos);
  CHECK(issue_text({rec("exp", 2, 0, 2, 0, 2)}).find("a must be 0 or 1") != std::string::npos);
  CHECK(issue_text({rec("cens", 2, 0, 4, 1)}).find("delta_t = 0") != std::string::npos);
  CHECK(issue_text({rec("zero", 4, 1, 4, 1)}).find("zero-length") != std::string::npos);
  CHECK_THROWS_AS(validate({}), DatasetError);

  try {
    validate({rec("ok", 1, 0, 1, 0), rec("b1", 6, 0, 5, 1), rec("b2", 3, 0, 4, 0)});
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    REQUIRE(e.issues().size() == 2);
    CHECK(e.issues()[0].id == "b1");
    CHECK(e.issues()[1].id == "b2");
  }
}

TEST_CASE("event counts and semi-competing fraction over random datasets") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto records = random_records(gen, 1 + rep * 3);
    const auto ds = validate(records);
    const auto rows = expand_transitions(ds, CovariateSpec{});
    std::size_t events = 0, flagged = 0, semi = 0;
    for (const auto& r : rows) events += static_cast<std::size_t>(r.status);
    for (const auto& r : records) {
      flagged += static_cast<std::size_t>(r.delta_t + r.delta_s);
      semi += r.delta_s == 1 && r.delta_t == 0;
    }
    CHECK(events == flagged);
    CHECK(ds.counts().events[0] + ds.counts().events[1] + ds.counts().events[2] == flagged);
    CHECK(ds.counts().semi_competing_fraction == static_cast<double>(semi) / static_cast<double>(records.size()));

    const auto back = reconstruct_times(rows, ds.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(back[i].y_t == records[i].y_t);
      CHECK(back[i].delta_t == records[i].delta_t);
      CHECK(back[i].y_s == records[i].y_s);
      CHECK(back[i].delta_s == records[i].delta_s);
    }
    // A 12 row exists exactly for treated subjects and starts at y_t.
    std::vector<int> has12(records.size(), 0);
    for (const auto& r : rows) {
      if (r.transition != Transition::TreatDeath) continue;
      ++has12[r.subject];
      CHECK(r.entry == records[r.subject].y_t);
      CHECK(r.exit > r.entry);
    }
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(has12[i] == records[i].delta_t);
  }
}

TEST_CASE("mediator-derived covariates use the treatment time") {
  const auto spec = CovariateSpec::from_formulas("A + X + C1", "A", "A + T + T2 + A*T + A*T2 + A*C1");
  const auto ds = validate({rec("m", 2.5, 1, 9, 1, 1, 3, {0.7})});
  const auto rows = rows_for(expand_transitions(ds, spec), Transition::TreatDeath);
  REQUIRE(rows.size() == 1);
  const std::vector<double> expected = {1, 2.5, 6.25, 2.5, 6.25, 0.7};
  CHECK(rows[0].z == expected);
  CHECK(spec.column_names(Transition::TreatDeath) ==
        std::vector<std::string>{"A", "T", "T2", "A*T", "A*T2", "A*C1"});
}

TEST_CASE("covariate spec grammar") {
  CHECK_THROWS_AS(CovariateSpec::from_formulas("A + T", "", ""), SpecError);
  CHECK_THROWS_AS(CovariateSpec::from_formulas("", "A*T2", ""), SpecError);
  CHECK_THROWS_AS(CovariateSpec::from_formulas("A + Q", "", ""), SpecError);
  CHECK_THROWS_AS(CovariateSpec::from_formulas("A + A", "", ""), SpecError);
  CHECK_THROWS_AS(CovariateSpec::from_formulas("C0", "", ""), SpecError);
  CHECK(CovariateSpec::from_formulas("none", "1", "").width(Transition::DiagTreat) == 0);

  const auto spec = CovariateSpec::from_formulas("X", "", "C2");
  const auto ds = validate({rec("a", 1, 0, 1, 0, 0, 1, {0.0})});
  CHECK_THROWS_AS(expand_transitions(ds, spec), SpecError);
}

TEST_CASE("categorical covariates are dummy coded against the reference") {
  const auto kv = KeyValueFile::parse(
      "model.01 = A + C1 + A*C1\nmodel.02 = X\nmodel.12 = C1\n"
      "categorical.C1 = 1,2,3\ncategorical.C1.ref = 2\ncategorical.X = 1,2,3,4\n");
  const auto spec = CovariateSpec::from_keyvalue(kv);
  CHECK(spec.column_names(Transition::DiagTreat) ==
        std::vector<std::string>{"A", "C1[1]", "C1[3]", "A*C1[1]", "A*C1[3]"});
  CHECK(spec.column_names(Transition::DiagDeath) == std::vector<std::string>{"X[2]", "X[3]", "X[4]"});
  const std::vector<double> c = {3.0};
  CHECK(spec.row(Transition::DiagTreat, 1, 1, c, 0) == std::vector<double>{1, 0, 1, 0, 1});
  CHECK(spec.row(Transition::DiagDeath, 1, 1, c, 0) == std::vector<double>{0, 0, 0});
  CHECK(spec.row(Transition::DiagDeath, 1, 4, c, 0) == std::vector<double>{0, 0, 1});
  const std::vector<double> undeclared = {5.0};
  CHECK_THROWS_AS(spec.check_values(1, undeclared), SpecError);
  CHECK(spec.canonical() == CovariateSpec::from_keyvalue(kv).canonical());
}

TEST_CASE("dataset CSV round trip and diagnostics") {
  const std::vector<SubjectRecord> records = {rec("1", 3, 1, 10, 1, 1, 2, {0.25, -1}),
                                              rec("2", 5, 0, 5, 1, 0, 4, {1.5, 0})};
  std::stringstream buf;
  write_dataset_csv(buf, records);
  const auto back = read_dataset_csv(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].c == records[0].c);
  CHECK(back[1].y_s == 5);
  CHECK(back[1].x == 4);

  std::istringstream bad_header("id,y_t,delta_t,y_s,delta_s,a\n1,2,0,2,0,0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_header), DatasetError);

  std::istringstream malformed(
      "# comment\nid,y_t,delta_t,y_s,delta_s,a,x,c_1\n1,2,0,2,0,0,1,0.5\n2,abc,0,2,0,0,1,0.5\n3,2,0,2,0,0\n4,2,0,2,0,0,1,\n");
  try {
    read_dataset_csv(malformed);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    REQUIRE(e.issues().size() == 3);
    CHECK(e.issues()[0].line == 4);
    CHECK(e.issues()[1].line == 5);
    CHECK(e.issues()[2].line == 6);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}
