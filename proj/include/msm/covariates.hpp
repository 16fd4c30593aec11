#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msm {

class KeyValueFile;

enum class Transition { DiagTreat = 0, DiagDeath = 1, TreatDeath = 2 };

inline constexpr std::array<Transition, 3> kTransitions = {
    Transition::DiagTreat, Transition::DiagDeath, Transition::TreatDeath};

const char* transition_code(Transition tr);  // "01", "02", "12"
Transition parse_transition(const std::string& code);
inline int index_of(Transition tr) { return static_cast<int>(tr); }

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TermKind {
  Exposure,            // A
  Stage,               // X
  Confounder,          // C<j>
  ExposureConfounder,  // A*C<j>
  Mediator,            // T   (t', time of the intermediate event)
  MediatorSq,          // T2  (t'^2)
  ExposureMediator,    // A*T
  ExposureMediatorSq,  // A*T2
};

bool is_mediator_term(TermKind kind);
bool involves_exposure(TermKind kind);

struct Term {
  TermKind kind;
  int c_index = -1;  // 0-based confounder index for Confounder / ExposureConfounder
};

// One design-matrix column after categorical expansion.
struct Column {
  std::string name;
  TermKind kind;
  int c_index = -1;
  std::optional<double> level;  // dummy indicator of this level when set
};

struct CategoricalVar {
  std::vector<double> levels;
  double reference = 0.0;
  bool has_level(double v) const;
};

// Per-transition covariate lists plus dummy-encoding declarations.
//
// Term grammar (terms joined by '+'):  A  X  C<j>  A*C<j>  T  T2  A*T  A*T2
// Mediator-derived terms are permitted only in transition 12. A variable
// declared categorical expands into one indicator column per non-reference
// level, named e.g. `C2[0]` or `A*C2[0]`.
class CovariateSpec {
 public:
  CovariateSpec() = default;

  // Keys: model.01, model.02, model.12, categorical.<VAR>, categorical.<VAR>.ref
  static CovariateSpec from_keyvalue(const KeyValueFile& kv, const std::string& prefix = "model");
  static CovariateSpec from_formulas(const std::string& f01, const std::string& f02,
                                     const std::string& f12);

  void set_terms(Transition tr, std::vector<Term> terms);
  void declare_categorical_x(CategoricalVar var);
  void declare_categorical_c(int c_index, CategoricalVar var);

  const std::vector<Term>& terms(Transition tr) const { return terms_[index_of(tr)]; }
  const std::vector<Column>& columns(Transition tr) const { return columns_[index_of(tr)]; }
  std::size_t width(Transition tr) const { return columns_[index_of(tr)].size(); }
  std::vector<std::string> column_names(Transition tr) const;
  std::string formula(Transition tr) const;

  // Highest confounder index referenced, +1 (0 when none).
  int confounders_required() const;
  bool x_is_categorical() const { return x_cat_.has_value(); }
  const std::optional<CategoricalVar>& x_categorical() const { return x_cat_; }
  const std::map<int, CategoricalVar>& c_categorical() const { return c_cat_; }

  // Spec with the mediator-derived terms removed from transition 12.
  CovariateSpec without_mediator_terms() const;

  // Throws SpecError naming the offending value when a categorical value is undeclared.
  void check_values(double x, std::span<const double> c) const;

  void fill_row(Transition tr, int a, double x, std::span<const double> c, double t_mediator,
                std::span<double> out) const;
  std::vector<double> row(Transition tr, int a, double x, std::span<const double> c,
                          double t_mediator) const;

  std::string canonical() const;

 private:
  void rebuild();

  std::array<std::vector<Term>, 3> terms_;
  std::array<std::vector<Column>, 3> columns_;
  std::optional<CategoricalVar> x_cat_;
  std::map<int, CategoricalVar> c_cat_;
};

std::vector<Term> parse_formula(const std::string& formula);

}  // namespace msm
