#include "prooflab/formula.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_set>

namespace prooflab {

namespace {

const char* connective_glyph(Connective c) {
  switch (c) {
    case Connective::And:
      return "∧";
    case Connective::Or:
      return "∨";
    case Connective::Implies:
      return "→";
    case Connective::Iff:
      return "↔";
  }
  return "?";
}

Op op_of(Connective c) {
  switch (c) {
    case Connective::And:
      return Op::And;
    case Connective::Or:
      return Op::Or;
    case Connective::Implies:
      return Op::Implies;
    case Connective::Iff:
      return Op::Iff;
  }
  return Op::And;
}

}  // namespace

Formula Formula::atom(char name) {
  if (name < 'A' || name > 'Z') {
    throw Error(std::string("atom name must match [A-Z], got '") + name + "'");
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::Atom;
  node->name = name;
  node->repr = std::string(1, name);
  return Formula(std::move(node));
}

Formula Formula::negation(Formula body) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Not;
  node->repr = "¬" + body.node_->repr;
  node->lhs = std::move(body.node_);
  return Formula(std::move(node));
}

Formula Formula::binary(Connective c, Formula lhs, Formula rhs) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Binary;
  node->conn = c;
  node->repr = "(" + lhs.node_->repr + " " + connective_glyph(c) + " " +
               rhs.node_->repr + ")";
  node->lhs = std::move(lhs.node_);
  node->rhs = std::move(rhs.node_);
  return Formula(std::move(node));
}

char Formula::atom_name() const {
  assert(is_atom());
  return node_->name;
}

Connective Formula::connective() const {
  assert(is_binary());
  return node_->conn;
}

Formula Formula::body() const {
  assert(is_negation());
  return Formula(node_->lhs);
}

Formula Formula::left() const {
  assert(is_binary());
  return Formula(node_->lhs);
}

Formula Formula::right() const {
  assert(is_binary());
  return Formula(node_->rhs);
}

void validate_weights(const ComplexityWeights& w) {
  for (int v : w.base) {
    if (v < 0) throw Error("complexity base weights must be non-negative");
  }
  for (int v : w.nest) {
    if (v < 0) throw Error("complexity nest weights must be non-negative");
  }
  if (w.paren_unit < 0) throw Error("paren_unit must be non-negative");
  if (!(w.nest_of(Op::Iff) > w.nest_of(Op::Implies) &&
        w.nest_of(Op::Implies) > w.nest_of(Op::Or))) {
    throw Error("nest weights must satisfy Iff > Implies > Or");
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class TokKind { Atom, Not, And, Or, Implies, Iff, LParen, RParen, End };

struct Lexeme {
  TokKind kind;
  char name = 0;       // Atom payload
  std::size_t pos = 0;  // byte offset in input
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Lexeme& peek() const { return current_; }

  Lexeme take() {
    Lexeme out = current_;
    advance();
    return out;
  }

 private:
  void advance() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
    current_.pos = pos_;
    if (pos_ >= text_.size()) {
      current_.kind = TokKind::End;
      return;
    }
    char c = text_[pos_];
    if (c >= 'A' && c <= 'Z') {
      current_.kind = TokKind::Atom;
      current_.name = c;
      ++pos_;
      return;
    }
    switch (c) {
      case '(':
        current_.kind = TokKind::LParen;
        ++pos_;
        return;
      case ')':
        current_.kind = TokKind::RParen;
        ++pos_;
        return;
      case '~':
      case '!':
        current_.kind = TokKind::Not;
        ++pos_;
        return;
      case '-':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
          current_.kind = TokKind::Implies;
          pos_ += 2;
        } else {
          current_.kind = TokKind::Not;
          ++pos_;
        }
        return;
      case '&':
      case '*':
        current_.kind = TokKind::And;
        ++pos_;
        return;
      case '|':
        current_.kind = TokKind::Or;
        ++pos_;
        return;
      case '>':
        current_.kind = TokKind::Implies;
        ++pos_;
        return;
      case '<':
        if (text_.substr(pos_, 3) == "<->") {
          current_.kind = TokKind::Iff;
          pos_ += 3;
          return;
        }
        throw UnknownTokenError(pos_, std::string(1, c));
      default:
        break;
    }
    // Unicode connectives.
    if (match_utf8("¬", TokKind::Not)) return;
    if (match_utf8("∧", TokKind::And)) return;
    if (match_utf8("∨", TokKind::Or)) return;
    if (match_utf8("→", TokKind::Implies)) return;
    if (match_utf8("↔", TokKind::Iff)) return;
    throw UnknownTokenError(pos_, first_utf8_char());
  }

  bool match_utf8(std::string_view glyph, TokKind kind) {
    if (text_.substr(pos_, glyph.size()) == glyph) {
      current_.kind = kind;
      pos_ += glyph.size();
      return true;
    }
    return false;
  }

  std::string first_utf8_char() const {
    unsigned char c = static_cast<unsigned char>(text_[pos_]);
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    return std::string(text_.substr(pos_, len));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Lexeme current_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) {}

  Formula parse_all() {
    Formula f = parse_iff();
    if (lexer_.peek().kind != TokKind::End) {
      throw SyntaxError(lexer_.peek().pos, "end of input");
    }
    return f;
  }

 private:
  Formula parse_iff() {
    Formula lhs = parse_implies();
    if (lexer_.peek().kind == TokKind::Iff) {
      lexer_.take();
      return Formula::iff(std::move(lhs), parse_iff());  // right-assoc
    }
    return lhs;
  }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (lexer_.peek().kind == TokKind::Implies) {
      lexer_.take();
      return Formula::implies(std::move(lhs), parse_implies());  // right-assoc
    }
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (lexer_.peek().kind == TokKind::Or) {
      lexer_.take();
      lhs = Formula::disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    while (lexer_.peek().kind == TokKind::And) {
      lexer_.take();
      lhs = Formula::conj(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Formula parse_unary() {
    if (lexer_.peek().kind == TokKind::Not) {
      lexer_.take();
      return Formula::negation(parse_unary());
    }
    return parse_primary();
  }

  Formula parse_primary() {
    Lexeme tok = lexer_.take();
    switch (tok.kind) {
      case TokKind::Atom:
        return Formula::atom(tok.name);
      case TokKind::LParen: {
        Formula inner = parse_iff();
        Lexeme close = lexer_.take();
        if (close.kind != TokKind::RParen) {
          throw SyntaxError(close.pos, "')'");
        }
        return inner;
      }
      default:
        throw SyntaxError(tok.pos, "formula");
    }
  }

  Lexer lexer_;
};

}  // namespace

Formula parse(std::string_view text) {
  if (text.empty()) throw SyntaxError(0, "non-empty formula");
  return Parser(text).parse_all();
}

std::string print(const Formula& f) { return f.str(); }

bool evaluate(const Formula& f, const std::map<char, bool>& assignment) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      auto it = assignment.find(f.atom_name());
      if (it == assignment.end()) throw MissingAtomError(f.atom_name());
      return it->second;
    }
    case Formula::Kind::Not:
      return !evaluate(f.body(), assignment);
    case Formula::Kind::Binary: {
      bool l = evaluate(f.left(), assignment);
      bool r = evaluate(f.right(), assignment);
      switch (f.connective()) {
        case Connective::And:
          return l && r;
        case Connective::Or:
          return l || r;
        case Connective::Implies:
          return !l || r;
        case Connective::Iff:
          return l == r;
      }
    }
  }
  return false;
}

std::set<char> atoms(const Formula& f) {
  std::set<char> out;
  switch (f.kind()) {
    case Formula::Kind::Atom:
      out.insert(f.atom_name());
      break;
    case Formula::Kind::Not: {
      auto sub = atoms(f.body());
      out.insert(sub.begin(), sub.end());
      break;
    }
    case Formula::Kind::Binary: {
      auto l = atoms(f.left());
      auto r = atoms(f.right());
      out.insert(l.begin(), l.end());
      out.insert(r.begin(), r.end());
      break;
    }
  }
  return out;
}

namespace {

void collect_subformulas(const Formula& f,
                         std::unordered_set<std::string>& seen,
                         std::vector<Formula>& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      break;
    case Formula::Kind::Not:
      collect_subformulas(f.body(), seen, out);
      break;
    case Formula::Kind::Binary:
      collect_subformulas(f.left(), seen, out);
      collect_subformulas(f.right(), seen, out);
      break;
  }
  if (seen.insert(f.str()).second) out.push_back(f);
}

}  // namespace

std::vector<Formula> subformulas(const Formula& f) {
  std::unordered_set<std::string> seen;
  std::vector<Formula> out;
  collect_subformulas(f, seen, out);
  return out;
}

int complexity(const Formula& f, const ComplexityWeights& w) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return 0;
    case Formula::Kind::Not: {
      bool nested = f.body().is_binary();
      return w.base_of(Op::Not) + (nested ? w.nest_of(Op::Not) : 0) +
             (nested ? w.paren_unit : 0) + complexity(f.body(), w);
    }
    case Formula::Kind::Binary: {
      Op op = op_of(f.connective());
      bool lb = f.left().is_binary();
      bool rb = f.right().is_binary();
      int total = w.base_of(op);
      if (lb || rb) total += w.nest_of(op);
      if (lb) total += w.paren_unit;
      if (rb) total += w.paren_unit;
      return total + complexity(f.left(), w) + complexity(f.right(), w);
    }
  }
  return 0;
}

}  // namespace prooflab
