#include "msm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "msm/csv.hpp"
#include "msm/keyvalue.hpp"

namespace msm {

namespace {

std::string join_issues(const std::vector<RecordIssue>& issues) {
  std::string msg = "invalid dataset:";
  std::size_t shown = 0;
  for (const auto& is : issues) {
    if (shown++ == 20) {
      msg += "\n  ... (" + std::to_string(issues.size() - 20) + " more)";
      break;
    }
    msg += "\n  ";
    if (is.line > 0) msg += "line " + std::to_string(is.line) + ": ";
    if (!is.id.empty()) msg += "record " + is.id + ": ";
    msg += is.message;
  }
  return msg;
}

bool binary(int v) { return v == 0 || v == 1; }

}  // namespace

DatasetError::DatasetError(std::vector<RecordIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ValidatedDataset validate(std::vector<SubjectRecord> records) {
  if (records.empty()) throw DatasetError("empty dataset");
  std::vector<RecordIssue> issues;
  const std::size_t k = records.front().c.size();
  for (const auto& r : records) {
    auto report = [&](const std::string& m) { issues.push_back({r.id, 0, m}); };
    if (!std::isfinite(r.y_t) || !std::isfinite(r.y_s)) {
      report("non-finite time");
      continue;
    }
    if (r.y_t < 0.0 || r.y_s < 0.0) report("negative time");
    if (!binary(r.delta_t)) report("delta_t must be 0 or 1");
    if (!binary(r.delta_s)) report("delta_s must be 0 or 1");
    if (!binary(r.a)) report("a must be 0 or 1");
    if (!std::isfinite(r.x)) report("non-finite x");
    for (double cj : r.c) {
      if (!std::isfinite(cj)) {
        report("non-finite confounder");
        break;
      }
    }
    if (r.c.size() != k) report("confounder count differs from the first record");
    if (r.y_t > r.y_s) {
      report("y_t exceeds y_s");
    } else if (r.delta_t == 0 && r.y_t != r.y_s) {
      report("y_t differs from y_s although delta_t = 0");
    } else if (r.delta_t == 1 && r.y_t == r.y_s) {
      report("zero-length treated-to-death interval (y_t = y_s with delta_t = 1)");
    }
    if (r.y_t == 0.0) report("zero-length follow-up (y_t = 0)");
  }
  if (!issues.empty()) throw DatasetError(std::move(issues));

  ValidatedDataset ds;
  ds.k_ = k;
  DatasetCounts& cnt = ds.counts_;
  cnt.n = records.size();
  for (const auto& r : records) {
    if (r.delta_t == 1) {
      ++cnt.events[index_of(Transition::DiagTreat)];
      if (r.delta_s == 1) ++cnt.events[index_of(Transition::TreatDeath)];
    } else if (r.delta_s == 1) {
      ++cnt.events[index_of(Transition::DiagDeath)];
      ++cnt.semi_competing;
    }
  }
  cnt.semi_competing_fraction = static_cast<double>(cnt.semi_competing) / static_cast<double>(cnt.n);
  ds.records_ = std::move(records);
  return ds;
}

std::vector<TransitionRow> expand_transitions(const ValidatedDataset& ds, const CovariateSpec& spec) {
  if (static_cast<std::size_t>(spec.confounders_required()) > ds.confounder_count()) {
    throw SpecError("covariate spec references C" + std::to_string(spec.confounders_required()) +
                    " but the dataset has " + std::to_string(ds.confounder_count()) + " confounders");
  }
  std::vector<TransitionRow> rows;
  rows.reserve(ds.size() * 3);
  const auto& recs = ds.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const SubjectRecord& r = recs[i];
    spec.check_values(r.x, r.c);
    auto make = [&](Transition tr, double entry, double exit, int status, double t_med) {
      TransitionRow row;
      row.subject = i;
      row.transition = tr;
      row.entry = entry;
      row.exit = exit;
      row.status = status;
      row.z = spec.row(tr, r.a, r.x, r.c, t_med);
      rows.push_back(std::move(row));
    };
    if (r.delta_t == 1) {
      make(Transition::DiagTreat, 0.0, r.y_t, 1, 0.0);
      make(Transition::DiagDeath, 0.0, r.y_t, 0, 0.0);
      make(Transition::TreatDeath, r.y_t, r.y_s, r.delta_s, r.y_t);
    } else {
      make(Transition::DiagTreat, 0.0, r.y_t, 0, 0.0);
      make(Transition::DiagDeath, 0.0, r.y_s, r.delta_s, 0.0);
    }
  }
  return rows;
}

std::vector<TransitionRow> rows_for(const std::vector<TransitionRow>& rows, Transition tr) {
  std::vector<TransitionRow> out;
  for (const auto& r : rows) {
    if (r.transition == tr) out.push_back(r);
  }
  return out;
}

std::vector<ObservedTimes> reconstruct_times(const std::vector<TransitionRow>& rows, std::size_t n) {
  std::vector<ObservedTimes> out(n);
  std::vector<bool> treated(n, false);
  for (const auto& r : rows) {
    if (r.transition == Transition::TreatDeath) treated[r.subject] = true;
  }
  for (const auto& r : rows) {
    ObservedTimes& o = out[r.subject];
    switch (r.transition) {
      case Transition::DiagTreat:
        o.y_t = r.exit;
        o.delta_t = r.status;
        break;
      case Transition::DiagDeath:
        if (!treated[r.subject]) {
          o.y_s = r.exit;
          o.delta_s = r.status;
        }
        break;
      case Transition::TreatDeath:
        o.y_s = r.exit;
        o.delta_s = r.status;
        break;
    }
  }
  return out;
}

std::vector<SubjectRecord> read_dataset_csv(std::istream& in) {
  CsvTable table = read_csv(in);
  const std::vector<std::string> fixed = {"id", "y_t", "delta_t", "y_s", "delta_s", "a", "x"};
  std::vector<RecordIssue> issues;
  if (table.header.size() < fixed.size()) {
    throw DatasetError("header must start with id,y_t,delta_t,y_s,delta_s,a,x");
  }
  for (std::size_t j = 0; j < fixed.size(); ++j) {
    if (trim(table.header[j]) != fixed[j]) {
      throw DatasetError("header column " + std::to_string(j + 1) + " must be '" + fixed[j] + "'");
    }
  }
  const std::size_t k = table.header.size() - fixed.size();
  for (std::size_t j = 0; j < k; ++j) {
    if (trim(table.header[fixed.size() + j]) != "c_" + std::to_string(j + 1)) {
      throw DatasetError("confounder columns must be named c_1..c_k");
    }
  }

  auto parse_flag = [](const std::string& s, int& out) {
    std::string t = trim(s);
    if (t == "0") out = 0;
    else if (t == "1") out = 1;
    else return false;
    return true;
  };

  std::vector<SubjectRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const int line = table.line_numbers[i];
    SubjectRecord r;
    r.id = f.empty() ? std::string() : f[0];
    if (f.size() != table.header.size()) {
      issues.push_back({r.id, line, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(f.size())});
      continue;
    }
    try {
      for (std::size_t j = 1; j < f.size(); ++j) {
        if (trim(f[j]).empty()) throw KeyValueError("missing value in column '" + table.header[j] + "'");
      }
      r.y_t = parse_double(f[1], "y_t");
      r.y_s = parse_double(f[3], "y_s");
      if (!parse_flag(f[2], r.delta_t)) throw KeyValueError("delta_t must be 0 or 1");
      if (!parse_flag(f[4], r.delta_s)) throw KeyValueError("delta_s must be 0 or 1");
      if (!parse_flag(f[5], r.a)) throw KeyValueError("a must be 0 or 1");
      r.x = parse_double(f[6], "x");
      for (std::size_t j = 0; j < k; ++j) r.c.push_back(parse_double(f[7 + j], table.header[7 + j]));
    } catch (const KeyValueError& e) {
      issues.push_back({r.id, line, e.what()});
      continue;
    }
    records.push_back(std::move(r));
  }
  if (!issues.empty()) throw DatasetError(std::move(issues));
  return records;
}

std::vector<SubjectRecord> read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const std::vector<SubjectRecord>& records) {
  std::vector<std::string> header = {"id", "y_t", "delta_t", "y_s", "delta_s", "a", "x"};
  const std::size_t k = records.empty() ? 0 : records.front().c.size();
  for (std::size_t j = 0; j < k; ++j) header.push_back("c_" + std::to_string(j + 1));
  write_csv_row(out, header);
  std::vector<std::string> f;
  for (const auto& r : records) {
    f.assign({r.id, format_double(r.y_t), std::to_string(r.delta_t), format_double(r.y_s),
              std::to_string(r.delta_s), std::to_string(r.a), format_double(r.x)});
    for (double cj : r.c) f.push_back(format_double(cj));
    write_csv_row(out, f);
  }
}

}  // namespace msm
