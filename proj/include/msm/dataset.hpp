#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "msm/covariates.hpp"

namespace msm {

// One observed individual. Times are months since diagnosis.
//   y_t = min(T, S, K), delta_t = I(y_t = T)
//   y_s = min(S, K),    delta_s = I(y_s = S)
struct SubjectRecord {
  std::string id;
  double y_t = 0.0;
  int delta_t = 0;
  double y_s = 0.0;
  int delta_s = 0;
  int a = 0;
  double x = 0.0;
  std::vector<double> c;

  bool semi_competing() const { return delta_s == 1 && delta_t == 0; }
};

struct RecordIssue {
  std::string id;
  int line = 0;  // source line when read from CSV, else 0
  std::string message;
};

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(std::vector<RecordIssue> issues);
  explicit DatasetError(const std::string& message) : std::runtime_error(message) {}
  const std::vector<RecordIssue>& issues() const { return issues_; }

 private:
  std::vector<RecordIssue> issues_;
};

struct DatasetCounts {
  std::size_t n = 0;
  std::array<std::size_t, 3> events{};  // indexed by Transition
  std::size_t semi_competing = 0;       // #{delta_s = 1 and delta_t = 0}
  double semi_competing_fraction = 0.0;
};

// Records that passed validation, with summary counts. Immutable after construction.
class ValidatedDataset {
 public:
  const std::vector<SubjectRecord>& records() const { return records_; }
  const DatasetCounts& counts() const { return counts_; }
  std::size_t size() const { return records_.size(); }
  std::size_t confounder_count() const { return k_; }

 private:
  friend ValidatedDataset validate(std::vector<SubjectRecord> records);
  std::vector<SubjectRecord> records_;
  DatasetCounts counts_;
  std::size_t k_ = 0;
};

// Throws DatasetError listing every offending record.
ValidatedDataset validate(std::vector<SubjectRecord> records);

// One subject's contribution to one transition in counting-process form.
// The row is at risk on (entry, exit].
struct TransitionRow {
  std::size_t subject = 0;  // index into the dataset
  Transition transition = Transition::DiagTreat;
  double entry = 0.0;
  double exit = 0.0;
  int status = 0;
  std::vector<double> z;
};

std::vector<TransitionRow> expand_transitions(const ValidatedDataset& ds, const CovariateSpec& spec);

std::vector<TransitionRow> rows_for(const std::vector<TransitionRow>& rows, Transition tr);

// Inverse of expand_transitions on the outcome fields: (y_t, delta_t, y_s, delta_s) per subject.
struct ObservedTimes {
  double y_t = 0.0;
  int delta_t = 0;
  double y_s = 0.0;
  int delta_s = 0;
};
std::vector<ObservedTimes> reconstruct_times(const std::vector<TransitionRow>& rows, std::size_t n);

// CSV schema: id,y_t,delta_t,y_s,delta_s,a,x,c_1,...,c_k
std::vector<SubjectRecord> read_dataset_csv(std::istream& in);
std::vector<SubjectRecord> read_dataset_csv_file(const std::string& path);
void write_dataset_csv(std::ostream& out, const std::vector<SubjectRecord>& records);

}  // namespace msm
