#ifndef PROOFLAB_FORMULA_HPP
#define PROOFLAB_FORMULA_HPP

#include <array>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prooflab {

enum class Connective { And, Or, Implies, Iff };

// Operator slots for complexity weights (Not plus the four binary connectives).
enum class Op { Not = 0, And = 1, Or = 2, Implies = 3, Iff = 4 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected)
      : Error("syntax error at position " + std::to_string(position) +
              ": expected " + expected),
        position_(position),
        expected_(std::move(expected)) {}
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class UnknownTokenError : public Error {
 public:
  UnknownTokenError(std::size_t position, std::string token)
      : Error("unknown token '" + token + "' at position " +
              std::to_string(position)),
        position_(position),
        token_(std::move(token)) {}
  std::size_t position() const { return position_; }
  const std::string& token() const { return token_; }

 private:
  std::size_t position_;
  std::string token_;
};

class MissingAtomError : public Error {
 public:
  explicit MissingAtomError(char name)
      : Error(std::string("assignment missing atom '") + name + "'"),
        name_(name) {}
  char name() const { return name_; }

 private:
  char name_;
};

/// Immutable propositional formula. Copies share structure; structural
/// equality is the only equality, so (A ∨ B) != (B ∨ A). The canonical
/// string (see str()) is the statement identity used everywhere downstream.
class Formula {
 public:
  enum class Kind { Atom, Not, Binary };

  static Formula atom(char name);
  static Formula negation(Formula body);
  static Formula binary(Connective c, Formula lhs, Formula rhs);

  static Formula conj(Formula lhs, Formula rhs) {
    return binary(Connective::And, std::move(lhs), std::move(rhs));
  }
  static Formula disj(Formula lhs, Formula rhs) {
    return binary(Connective::Or, std::move(lhs), std::move(rhs));
  }
  static Formula implies(Formula lhs, Formula rhs) {
    return binary(Connective::Implies, std::move(lhs), std::move(rhs));
  }
  static Formula iff(Formula lhs, Formula rhs) {
    return binary(Connective::Iff, std::move(lhs), std::move(rhs));
  }

  Kind kind() const { return node_->kind; }
  bool is_atom() const { return node_->kind == Kind::Atom; }
  bool is_negation() const { return node_->kind == Kind::Not; }
  bool is_binary() const { return node_->kind == Kind::Binary; }
  bool is_binary(Connective c) const {
    return is_binary() && node_->conn == c;
  }

  char atom_name() const;
  Connective connective() const;
  Formula body() const;  // Not only
  Formula left() const;  // Binary only
  Formula right() const;

  /// Canonical string: binary subformulas (including the root) are
  /// parenthesized, negations are not; Unicode connectives.
  const std::string& str() const { return node_->repr; }

  bool operator==(const Formula& other) const {
    return node_ == other.node_ || node_->repr == other.node_->repr;
  }
  bool operator!=(const Formula& other) const { return !(*this == other); }
  bool operator<(const Formula& other) const {
    return node_->repr < other.node_->repr;
  }

 private:
  struct Node {
    Kind kind;
    Connective conn = Connective::And;
    char name = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::string repr;
  };

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;

  friend struct FormulaHash;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const {
    return std::hash<std::string>{}(f.str());
  }
};

using FormulaSet = std::set<Formula>;

/// Weights for the nesting-weighted operator count. An operator earns its
/// base weight, plus the nest weight when it applies to a binary-rooted
/// operand; every binary-rooted strict subformula adds paren_unit for its
/// opening parenthesis. The root contributes no parenthesis.
struct ComplexityWeights {
  std::array<int, 5> base{1, 1, 1, 2, 3};  // Not, And, Or, Implies, Iff
  std::array<int, 5> nest{1, 1, 1, 2, 3};
  int paren_unit = 1;

  int base_of(Op op) const { return base[static_cast<int>(op)]; }
  int nest_of(Op op) const { return nest[static_cast<int>(op)]; }
};

/// Throws Error unless all weights are non-negative and
/// nest[Iff] > nest[Implies] > nest[Or].
void validate_weights(const ComplexityWeights& w);

/// Parses the formula grammar. Precedence ¬ > ∧ > ∨ > → > ↔ with → and ↔
/// right-associative. Aliases: ¬ ~ - ! | ∧ & * | ∨ | | → -> > | ↔ <->.
Formula parse(std::string_view text);

std::string print(const Formula& f);

bool evaluate(const Formula& f, const std::map<char, bool>& assignment);

std::set<char> atoms(const Formula& f);

/// All distinct subtrees including f itself, in post-order of first visit.
std::vector<Formula> subformulas(const Formula& f);

int complexity(const Formula& f, const ComplexityWeights& w = {});

}  // namespace prooflab

#endif  // PROOFLAB_FORMULA_HPP
