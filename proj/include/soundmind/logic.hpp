#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"

namespace soundmind {

inline constexpr int kMaxAtoms = 4;

/// Propositional formula over atoms A..D. Value type; children are owned.
class Formula {
public:
  enum class Kind : std::uint8_t { top, atom, negation, conjunction, disjunction, implication };

  static Formula top() { return Formula(Kind::top, -1, {}); }
  static Formula atom(int index) {
    if (index < 0 || index >= kMaxAtoms) throw ConfigError("atom index out of range");
    return Formula(Kind::atom, index, {});
  }
  static Formula negate(Formula f) { return Formula(Kind::negation, -1, {std::move(f)}); }
  static Formula literal(int index, bool negated) { return negated ? negate(atom(index)) : atom(index); }
  static Formula conj(Formula a, Formula b) { return Formula(Kind::conjunction, -1, {std::move(a), std::move(b)}); }
  static Formula disj(Formula a, Formula b) { return Formula(Kind::disjunction, -1, {std::move(a), std::move(b)}); }
  static Formula implies(Formula a, Formula b) { return Formula(Kind::implication, -1, {std::move(a), std::move(b)}); }

  Kind kind() const { return kind_; }
  int atom_index() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }

  /// Truth value under `assignment`, where bit i holds atom i.
  bool evaluate(std::uint32_t assignment) const {
    switch (kind_) {
      case Kind::top: return true;
      case Kind::atom: return (assignment >> atom_) & 1U;
      case Kind::negation: return !children_[0].evaluate(assignment);
      case Kind::conjunction: return children_[0].evaluate(assignment) && children_[1].evaluate(assignment);
      case Kind::disjunction: return children_[0].evaluate(assignment) || children_[1].evaluate(assignment);
      case Kind::implication: return !children_[0].evaluate(assignment) || children_[1].evaluate(assignment);
    }
    return false;
  }

  /// One more than the highest atom index used (0 for atom-free formulas).
  int atom_span() const {
    int span = kind_ == Kind::atom ? atom_ + 1 : 0;
    for (const auto& c : children_) span = std::max(span, c.atom_span());
    return span;
  }

  /// Colloquial rendering ("if A then not B"); `parse_formula` inverts it for
  /// every formula whose implication antecedents are implication-free.
  std::string to_string() const {
    switch (kind_) {
      case Kind::top: return "true";
      case Kind::atom: return std::string(1, static_cast<char>('A' + atom_));
      case Kind::negation: return "not " + children_[0].to_string();
      case Kind::conjunction: return children_[0].to_string() + " and " + children_[1].to_string();
      case Kind::disjunction: return children_[0].to_string() + " or " + children_[1].to_string();
      case Kind::implication: return "if " + children_[0].to_string() + " then " + children_[1].to_string();
    }
    return {};
  }

  friend bool operator==(const Formula&, const Formula&) = default;

private:
  Formula(Kind k, int atom, std::vector<Formula> children) : kind_(k), atom_(atom), children_(std::move(children)) {}

  Kind kind_;
  int atom_;
  std::vector<Formula> children_;
};

namespace detail {

class FormulaParser {
public:
  explicit FormulaParser(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) words_.push_back(w);
  }

  Formula parse() {
    Formula f = implication();
    if (pos_ != words_.size()) fail("unexpected '" + words_[pos_] + "'");
    return f;
  }

private:
  Formula implication() {
    if (accept("if")) {
      Formula lhs = disjunction();
      if (!accept("then")) fail("expected 'then'");
      return Formula::implies(std::move(lhs), implication());
    }
    return disjunction();
  }
  Formula disjunction() {
    Formula f = conjunction();
    while (accept("or")) f = Formula::disj(std::move(f), conjunction());
    return f;
  }
  Formula conjunction() {
    Formula f = unary();
    while (accept("and")) f = Formula::conj(std::move(f), unary());
    return f;
  }
  Formula unary() {
    if (accept("not")) return Formula::negate(unary());
    if (accept("true")) return Formula::top();
    if (pos_ < words_.size() && words_[pos_].size() == 1 && words_[pos_][0] >= 'A' &&
        words_[pos_][0] < 'A' + kMaxAtoms) {
      return Formula::atom(words_[pos_++][0] - 'A');
    }
    fail(pos_ < words_.size() ? "unexpected '" + words_[pos_] + "'" : "unexpected end of formula");
  }
  bool accept(std::string_view w) {
    if (pos_ < words_.size() && words_[pos_] == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& why) const { throw Error("formula parse error: " + why); }

  std::vector<std::string> words_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text) { return detail::FormulaParser(text).parse(); }

/// Entailed iff (major and minor) -> conclusion holds under all 2^n
/// assignments of the atoms involved.
inline AnswerLabel truth_table_entailment(const Formula& major, const Formula& minor, const Formula& conclusion) {
  int n = std::max({major.atom_span(), minor.atom_span(), conclusion.atom_span()});
  if (n > kMaxAtoms) throw ConfigError("at most 4 atoms are supported");
  for (std::uint32_t a = 0; a < (1U << n); ++a) {
    if (major.evaluate(a) && minor.evaluate(a) && !conclusion.evaluate(a)) return AnswerLabel::not_entailed;
  }
  return AnswerLabel::entailed;
}

struct LogicTask {
  int n_atoms = 2;
  Formula major_premise = Formula::top();
  Formula minor_premise = Formula::top();
  Formula conclusion = Formula::top();
  AnswerLabel label = AnswerLabel::entailed;
};

}  // namespace soundmind
