#include "msm/covariates.hpp"

#include <algorithm>
#include <cctype>

#include "msm/csv.hpp"
#include "msm/keyvalue.hpp"

namespace msm {

const char* transition_code(Transition tr) {
  switch (tr) {
    case Transition::DiagTreat: return "01";
    case Transition::DiagDeath: return "02";
    case Transition::TreatDeath: return "12";
  }
  return "??";
}

Transition parse_transition(const std::string& code) {
  if (code == "01") return Transition::DiagTreat;
  if (code == "02") return Transition::DiagDeath;
  if (code == "12") return Transition::TreatDeath;
  throw SpecError("unknown transition '" + code + "'");
}

bool is_mediator_term(TermKind kind) {
  return kind == TermKind::Mediator || kind == TermKind::MediatorSq ||
         kind == TermKind::ExposureMediator || kind == TermKind::ExposureMediatorSq;
}

bool involves_exposure(TermKind kind) {
  return kind == TermKind::Exposure || kind == TermKind::ExposureConfounder ||
         kind == TermKind::ExposureMediator || kind == TermKind::ExposureMediatorSq;
}

bool CategoricalVar::has_level(double v) const {
  return std::find(levels.begin(), levels.end(), v) != levels.end();
}

namespace {

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

int parse_c_index(const std::string& digits, const std::string& term) {
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw SpecError("malformed confounder term '" + term + "'");
  }
  int j = std::stoi(digits);
  if (j < 1) throw SpecError("confounder index must start at 1 in '" + term + "'");
  return j - 1;
}

std::string term_base_name(const Term& t) {
  switch (t.kind) {
    case TermKind::Exposure: return "A";
    case TermKind::Stage: return "X";
    case TermKind::Confounder: return "C" + std::to_string(t.c_index + 1);
    case TermKind::ExposureConfounder: return "A*C" + std::to_string(t.c_index + 1);
    case TermKind::Mediator: return "T";
    case TermKind::MediatorSq: return "T2";
    case TermKind::ExposureMediator: return "A*T";
    case TermKind::ExposureMediatorSq: return "A*T2";
  }
  return "?";
}

CategoricalVar parse_categorical(const KeyValueFile& kv, const std::string& key) {
  CategoricalVar var;
  var.levels = kv.get_doubles(key);
  if (var.levels.size() < 2) throw SpecError(key + ": a categorical variable needs at least two levels");
  var.reference = kv.get_double(key + ".ref", var.levels.front());
  if (!var.has_level(var.reference)) throw SpecError(key + ".ref is not one of the declared levels");
  return var;
}

}  // namespace

std::vector<Term> parse_formula(const std::string& formula) {
  std::vector<Term> terms;
  std::string f = strip_spaces(formula);
  if (f.empty() || f == "1" || f == "none") return terms;
  for (const std::string& tok : split(f, '+')) {
    if (tok.empty()) throw SpecError("empty term in formula '" + formula + "'");
    Term t{TermKind::Exposure, -1};
    if (tok == "A") {
      t.kind = TermKind::Exposure;
    } else if (tok == "X") {
      t.kind = TermKind::Stage;
    } else if (tok == "T") {
      t.kind = TermKind::Mediator;
    } else if (tok == "T2") {
      t.kind = TermKind::MediatorSq;
    } else if (tok == "A*T" || tok == "T*A") {
      t.kind = TermKind::ExposureMediator;
    } else if (tok == "A*T2" || tok == "T2*A") {
      t.kind = TermKind::ExposureMediatorSq;
    } else if (tok.rfind("A*C", 0) == 0) {
      t.kind = TermKind::ExposureConfounder;
      t.c_index = parse_c_index(tok.substr(3), tok);
    } else if (tok.size() > 1 && tok[0] == 'C') {
      t.kind = TermKind::Confounder;
      t.c_index = parse_c_index(tok.substr(1), tok);
    } else {
      throw SpecError("unknown term '" + tok + "'");
    }
    for (const Term& prev : terms) {
      if (prev.kind == t.kind && prev.c_index == t.c_index) {
        throw SpecError("duplicate term '" + tok + "'");
      }
    }
    terms.push_back(t);
  }
  return terms;
}

CovariateSpec CovariateSpec::from_formulas(const std::string& f01, const std::string& f02,
                                           const std::string& f12) {
  CovariateSpec spec;
  spec.set_terms(Transition::DiagTreat, parse_formula(f01));
  spec.set_terms(Transition::DiagDeath, parse_formula(f02));
  spec.set_terms(Transition::TreatDeath, parse_formula(f12));
  return spec;
}

CovariateSpec CovariateSpec::from_keyvalue(const KeyValueFile& kv, const std::string& prefix) {
  CovariateSpec spec;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("categorical.", 0) != 0 || key.size() <= 12) continue;
    std::string var = key.substr(12);
    if (var.find('.') != std::string::npos) continue;  // .ref sub-keys
    if (var == "X") {
      spec.x_cat_ = parse_categorical(kv, key);
    } else if (var[0] == 'C') {
      spec.c_cat_[parse_c_index(var.substr(1), var)] = parse_categorical(kv, key);
    } else {
      throw SpecError("only X and C<j> may be declared categorical, got '" + var + "'");
    }
  }
  for (Transition tr : kTransitions) {
    std::string key = prefix + "." + transition_code(tr);
    spec.terms_[index_of(tr)] = parse_formula(kv.find(key).value_or(""));
  }
  for (Transition tr : kTransitions) spec.set_terms(tr, spec.terms_[index_of(tr)]);
  return spec;
}

void CovariateSpec::set_terms(Transition tr, std::vector<Term> terms) {
  if (tr != Transition::TreatDeath) {
    for (const Term& t : terms) {
      if (is_mediator_term(t.kind)) {
        throw SpecError(std::string("mediator-derived term ") + term_base_name(t) +
                        " is only permitted in transition 12");
      }
    }
  }
  terms_[index_of(tr)] = std::move(terms);
  rebuild();
}

void CovariateSpec::declare_categorical_x(CategoricalVar var) {
  x_cat_ = std::move(var);
  rebuild();
}

void CovariateSpec::declare_categorical_c(int c_index, CategoricalVar var) {
  c_cat_[c_index] = std::move(var);
  rebuild();
}

void CovariateSpec::rebuild() {
  for (Transition tr : kTransitions) {
    auto& cols = columns_[index_of(tr)];
    cols.clear();
    for (const Term& t : terms_[index_of(tr)]) {
      const CategoricalVar* cat = nullptr;
      if (t.kind == TermKind::Stage && x_cat_) cat = &*x_cat_;
      if ((t.kind == TermKind::Confounder || t.kind == TermKind::ExposureConfounder) &&
          c_cat_.count(t.c_index)) {
        cat = &c_cat_.at(t.c_index);
      }
      std::string base = term_base_name(t);
      if (!cat) {
        cols.push_back(Column{base, t.kind, t.c_index, std::nullopt});
        continue;
      }
      for (double level : cat->levels) {
        if (level == cat->reference) continue;
        cols.push_back(Column{base + "[" + format_double(level) + "]", t.kind, t.c_index, level});
      }
    }
  }
}

std::vector<std::string> CovariateSpec::column_names(Transition tr) const {
  std::vector<std::string> names;
  for (const Column& c : columns(tr)) names.push_back(c.name);
  return names;
}

std::string CovariateSpec::formula(Transition tr) const {
  std::string out;
  for (const Term& t : terms(tr)) {
    if (!out.empty()) out += " + ";
    out += term_base_name(t);
  }
  return out.empty() ? "1" : out;
}

int CovariateSpec::confounders_required() const {
  int k = 0;
  for (const auto& ts : terms_) {
    for (const Term& t : ts) k = std::max(k, t.c_index + 1);
  }
  return k;
}

CovariateSpec CovariateSpec::without_mediator_terms() const {
  CovariateSpec out = *this;
  auto& ts = out.terms_[index_of(Transition::TreatDeath)];
  ts.erase(std::remove_if(ts.begin(), ts.end(), [](const Term& t) { return is_mediator_term(t.kind); }),
           ts.end());
  out.rebuild();
  return out;
}

void CovariateSpec::check_values(double x, std::span<const double> c) const {
  if (x_cat_ && !x_cat_->has_level(x)) {
    throw SpecError("X value " + format_double(x) + " is not a declared level");
  }
  for (const auto& [j, var] : c_cat_) {
    if (j < static_cast<int>(c.size()) && !var.has_level(c[j])) {
      throw SpecError("C" + std::to_string(j + 1) + " value " + format_double(c[j]) +
                      " is not a declared level");
    }
  }
}

void CovariateSpec::fill_row(Transition tr, int a, double x, std::span<const double> c,
                             double t_mediator, std::span<double> out) const {
  const auto& cols = columns(tr);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Column& col = cols[k];
    double v = 0.0;
    switch (col.kind) {
      case TermKind::Exposure: v = a; break;
      case TermKind::Stage: v = col.level ? (x == *col.level ? 1.0 : 0.0) : x; break;
      case TermKind::Confounder:
      case TermKind::ExposureConfounder: {
        double cj = c[static_cast<std::size_t>(col.c_index)];
        v = col.level ? (cj == *col.level ? 1.0 : 0.0) : cj;
        if (col.kind == TermKind::ExposureConfounder) v *= a;
        break;
      }
      case TermKind::Mediator: v = t_mediator; break;
      case TermKind::MediatorSq: v = t_mediator * t_mediator; break;
      case TermKind::ExposureMediator: v = a * t_mediator; break;
      case TermKind::ExposureMediatorSq: v = a * t_mediator * t_mediator; break;
    }
    out[k] = v;
  }
}

std::vector<double> CovariateSpec::row(Transition tr, int a, double x, std::span<const double> c,
                                       double t_mediator) const {
  std::vector<double> out(width(tr));
  fill_row(tr, a, x, c, t_mediator, out);
  return out;
}

std::string CovariateSpec::canonical() const {
  std::string out;
  if (x_cat_) {
    out += "categorical.X = ";
    for (std::size_t i = 0; i < x_cat_->levels.size(); ++i) {
      out += (i ? "," : "") + format_double(x_cat_->levels[i]);
    }
    out += "\ncategorical.X.ref = " + format_double(x_cat_->reference) + "\n";
  }
  for (const auto& [j, var] : c_cat_) {
    std::string name = "categorical.C" + std::to_string(j + 1);
    out += name + " = ";
    for (std::size_t i = 0; i < var.levels.size(); ++i) {
      out += (i ? "," : "") + format_double(var.levels[i]);
    }
    out += "\n" + name + ".ref = " + format_double(var.reference) + "\n";
  }
  for (Transition tr : kTransitions) {
    out += std::string("model.") + transition_code(tr) + " = " + formula(tr) + "\n";
  }
  return out;
}

}  // namespace msm
