#include "recomp/text.hpp"

#include <cctype>

namespace recomp {

namespace {

void printRec(const Term& t, const Signature& sig, const NamePool& vars,
              const NamePool& cvars, std::string& out) {
  switch (t->kind) {
    case NodeKind::Hole:
      out += '_';
      return;
    case NodeKind::Var:
      out += vars.name(t->sym);
      return;
    case NodeKind::CVar:
      out += cvars.name(t->sym);
      out += '(';
      printRec(t->children[0], sig, vars, cvars, out);
      out += ')';
      return;
    case NodeKind::Letter: {
      out += sig.name(t->sym);
      if (t->exp > 1) {
        out += '^';
        out += std::to_string(t->exp);
      }
      if (!t->children.empty()) {
        out += '(';
        for (std::size_t i = 0; i < t->children.size(); ++i) {
          if (i) out += ',';
          printRec(t->children[i], sig, vars, cvars, out);
        }
        out += ')';
      }
      return;
    }
  }
}

struct Parser {
  const std::string& text;
  const Signature& sig;
  const NamePool& vars;
  const NamePool& cvars;
  TermFormat fmt;
  int line;
  std::size_t pos = 0;
  int col = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, line, col);
  }

  void skipSpace() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) {
      ++pos;
      ++col;
    }
  }

  bool eat(char c) {
    skipSpace();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      ++col;
      return true;
    }
    return false;
  }

  std::string name() {
    skipSpace();
    std::size_t start = pos;
    if (pos >= text.size() || !std::isalpha(static_cast<unsigned char>(text[pos])))
      fail("expected a name");
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_' || text[pos] == '$')) {
      ++pos;
      ++col;
    }
    return text.substr(start, pos - start);
  }

  std::uint64_t integer() {
    skipSpace();
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      fail("expected an integer");
    std::uint64_t v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      ++pos;
      ++col;
    }
    return v;
  }

  Term term() {
    skipSpace();
    if (pos < text.size() && text[pos] == '_') {
      if (!fmt.allowHole) fail("hole literal not allowed here");
      ++pos;
      ++col;
      return mkHole();
    }
    std::string n = name();
    if (auto cv = cvars.find(n)) {
      if (!eat('(')) fail("context variable " + n + " needs an argument");
      Term arg = term();
      if (!eat(')')) fail("expected ')'");
      return mkCVar(*cv, std::move(arg));
    }
    if (auto v = vars.find(n)) return mkVar(*v);
    auto sym = sig.find(n);
    if (!sym) fail("unknown name: " + n);
    std::uint64_t exp = 1;
    if (eat('^')) {
      if (!fmt.allowPower) fail("exponent syntax not allowed here");
      exp = integer();
      if (exp == 0) fail("exponent must be positive");
    }
    std::vector<Term> kids;
    if (eat('(')) {
      do {
        kids.push_back(term());
      } while (eat(','));
      if (!eat(')')) fail("expected ')'");
    }
    int ar = sig.arity(*sym);
    if (kids.size() != static_cast<std::size_t>(ar))
      throw ArityMismatch("letter " + n + " has arity " + std::to_string(ar) +
                          " but got " + std::to_string(kids.size()) +
                          " arguments");
    if (exp > 1) {
      if (ar != 1)
        throw ArityMismatch("exponent on non-unary letter " + n);
      return mkPower(*sym, exp, std::move(kids[0]));
    }
    return mkLetter(*sym, std::move(kids));
  }

  Term parse() {
    Term t = term();
    skipSpace();
    if (pos != text.size()) fail("trailing input after term");
    return t;
  }
};

}  // namespace

std::string printTerm(const Term& t, const Signature& sig, const NamePool& vars,
                      const NamePool& cvars) {
  std::string out;
  printRec(t, sig, vars, cvars, out);
  return out;
}

Term parseTerm(const std::string& text, const Signature& sig, const NamePool& vars,
               const NamePool& cvars, TermFormat fmt, int line0) {
  Parser p{text, sig, vars, cvars, fmt, line0};
  return p.parse();
}

}  // namespace recomp
