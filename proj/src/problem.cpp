#include "recomp/problem.hpp"

#include <cctype>
#include <cstdio>
#include <random>
#include <sstream>

#include "recomp/text.hpp"

namespace recomp {

namespace {

struct Token {
  std::string text;
  int col = 0;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) { ++i; continue; }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

bool validName(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '$')
      return false;
  return true;
}

// Names share one namespace across letters, variables and context variables.
void claim(std::set<std::string>& taken, const std::string& name, int line) {
  if (!taken.insert(name).second)
    throw DuplicateName("name '" + name + "' declared twice (line " +
                        std::to_string(line) + ")");
}

constexpr int kMaxDeclaredArity = 10000;

}  // namespace

Equation parseProblem(const std::string& text) {
  Equation eq;
  std::set<std::string> taken;
  std::optional<int> eqLineNo;
  std::string eqRest;

  std::istringstream in(text);
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::vector<Token> toks = tokenize(raw);
    if (toks.empty() || toks[0].text[0] == '#') continue;
    const std::string& kw = toks[0].text;
    if (kw == "sig") {
      if (toks.size() == 1)
        throw SyntaxError("sig needs at least one NAME/ARITY entry", no, toks[0].col);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const std::string& entry = toks[i].text;
        std::size_t slash = entry.rfind('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == entry.size())
          throw SyntaxError("expected NAME/ARITY, got '" + entry + "'", no, toks[i].col);
        std::string name = entry.substr(0, slash);
        std::string digits = entry.substr(slash + 1);
        if (!validName(name))
          throw SyntaxError("bad letter name '" + name + "'", no, toks[i].col);
        for (char c : digits)
          if (!std::isdigit(static_cast<unsigned char>(c)))
            throw SyntaxError("bad arity '" + digits + "'", no, toks[i].col);
        long arity = std::stol(digits);
        if (arity > kMaxDeclaredArity)
          throw SyntaxError("arity " + digits + " out of range", no, toks[i].col);
        claim(taken, name, no);
        eq.sig.add(name, static_cast<int>(arity));
      }
    } else if (kw == "var" || kw == "cvar") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (!validName(toks[i].text))
          throw SyntaxError("bad variable name '" + toks[i].text + "'", no, toks[i].col);
        claim(taken, toks[i].text, no);
        (kw == "var" ? eq.vars : eq.cvars).add(toks[i].text);
      }
    } else if (kw == "eq") {
      if (eqLineNo)
        throw SyntaxError("more than one eq line", no, toks[0].col);
      eqLineNo = no;
      eqRest = raw.substr(static_cast<std::size_t>(toks[0].col) + 1);
    } else {
      throw SyntaxError("unknown directive '" + kw + "'", no, toks[0].col);
    }
  }
  if (!eqLineNo) throw SyntaxError("missing eq line", no == 0 ? 1 : no, 1);

  normalizeSignature(eq);  // NoConstant surfaces before term parsing

  std::size_t split = eqRest.find('=');
  if (split == std::string::npos)
    throw SyntaxError("eq line needs '=' between the sides", *eqLineNo, 1);
  eq.lhs = parseTerm(eqRest.substr(0, split), eq.sig, eq.vars, eq.cvars, {}, *eqLineNo);
  eq.rhs = parseTerm(eqRest.substr(split + 1), eq.sig, eq.vars, eq.cvars, {}, *eqLineNo);
  return eq;
}

std::string printProblem(const Equation& eq) {
  std::string out = "sig";
  for (SymbolId a = 0; a < eq.sig.size(); ++a)
    out += " " + eq.sig.name(a) + "/" + std::to_string(eq.sig.arity(a));
  out += "\n";
  if (eq.vars.size() != 0) {
    out += "var";
    for (VarId v = 0; v < eq.vars.size(); ++v) out += " " + eq.vars.name(v);
    out += "\n";
  }
  if (eq.cvars.size() != 0) {
    out += "cvar";
    for (CVarId cv = 0; cv < eq.cvars.size(); ++cv) out += " " + eq.cvars.name(cv);
    out += "\n";
  }
  out += "eq " + printTerm(eq.lhs, eq.sig, eq.vars, eq.cvars) + " = " +
         printTerm(eq.rhs, eq.sig, eq.vars, eq.cvars) + "\n";
  return out;
}

SubstitutionFile parseSubstitutionFile(const std::string& text, const Equation& eq) {
  SubstitutionFile out;
  std::istringstream in(text);
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '#') continue;
    std::size_t sep = raw.find(":=");
    if (sep == std::string::npos)
      throw SyntaxError("expected NAME := TERM", no, 1);
    std::string name = raw.substr(first, sep - first);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
      name.pop_back();
    if (!validName(name))
      throw SyntaxError("bad variable name '" + name + "'", no,
                        static_cast<int>(first) + 1);
    TermFormat fmt;
    fmt.allowHole = true;
    Term img = parseTerm(raw.substr(sep + 2), eq.sig, eq.vars, eq.cvars, fmt, no);
    if (img->flags != 0)
      throw SyntaxError("image of '" + name + "' must be ground", no, 1);
    if (auto cv = eq.cvars.find(name)) {
      if (out.substitution.definesCVar(*cv))
        throw DuplicateName("'" + name + "' assigned twice (line " +
                            std::to_string(no) + ")");
      if (img->holes != 1 && !isEmptyContext(img))
        throw SyntaxError("image of context variable '" + name +
                          "' needs exactly one hole", no, 1);
      if (isEmptyContext(img)) out.declaredEmpty.insert(*cv);
      out.substitution.cvarImages[*cv] = img;
    } else if (auto v = eq.vars.find(name)) {
      if (out.substitution.definesVar(*v))
        throw DuplicateName("'" + name + "' assigned twice (line " +
                            std::to_string(no) + ")");
      if (img->holes != 0)
        throw SyntaxError("image of variable '" + name +
                          "' must not contain the hole", no, 1);
      out.substitution.varImages[*v] = img;
    } else {
      throw SyntaxError("unknown variable '" + name + "'", no, 1);
    }
  }
  return out;
}

std::string printSubstitutionLines(const Equation& eq, const Substitution& s) {
  std::string out;
  for (const auto& [cv, img] : s.cvarImages)
    out += eq.cvars.name(cv) + " := " + printTerm(img, eq.sig, eq.vars, eq.cvars) + "\n";
  for (const auto& [v, img] : s.varImages)
    out += eq.vars.name(v) + " := " + printTerm(img, eq.sig, eq.vars, eq.cvars) + "\n";
  return out;
}

// --- Ground terms over an inferred alphabet ------------------------------

namespace {

struct GroundParser {
  const std::string& s;
  Signature& sig;
  std::size_t i = 0;
  int line = 1, col = 1;

  [[noreturn]] void fail(const std::string& msg) { throw SyntaxError(msg, line, col); }

  void advance() {
    if (s[i] == '\n') { ++line; col = 1; } else { ++col; }
    ++i;
  }
  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) advance();
  }
  bool accept(char c) {
    skip();
    if (i < s.size() && s[i] == c) { advance(); return true; }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string name() {
    skip();
    if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i])))
      fail("expected a name");
    std::size_t j = i;
    while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                            s[j] == '_' || s[j] == '$'))
      ++j;
    std::string out = s.substr(i, j - i);
    while (i < j) advance();
    return out;
  }

  Term term() {
    std::string nm = name();
    std::vector<Term> kids;
    if (accept('(')) {
      do kids.push_back(term()); while (accept(','));
      expect(')');
    }
    int arity = static_cast<int>(kids.size());
    if (auto id = sig.find(nm)) {
      if (sig.arity(*id) != arity)
        throw ArityMismatch("letter '" + nm + "' used with " + std::to_string(arity) +
                            " children but earlier with " +
                            std::to_string(sig.arity(*id)));
      return mkLetter(*id, std::move(kids));
    }
    return mkLetter(sig.add(nm, arity), std::move(kids));
  }
};

}  // namespace

Term parseGroundTerm(const std::string& text, Signature& sig) {
  GroundParser p{text, sig};
  Term t = p.term();
  p.skip();
  if (p.i != text.size()) p.fail("trailing input after term");
  return t;
}

// --- Corpus generation ----------------------------------------------------

namespace {

// Raw modulo keeps the byte stream identical across standard libraries;
// std::uniform_int_distribution is implementation-defined.
struct Rand {
  std::mt19937_64 rng;
  explicit Rand(std::uint64_t seed) : rng(seed) {}
  std::uint64_t pick(std::uint64_t n) { return rng() % n; }
  bool coin() { return (rng() & 1) != 0; }
};

struct Shape {
  std::vector<SymbolId> constants, nonConstants;
  std::vector<VarId> vars;
  std::vector<CVarId> cvars;
};

// Stays within budget: each child slice leaves one node of room per
// remaining sibling.
Term randGround(Rand& r, const Shape& sh, const Signature& sig, std::uint64_t budget) {
  std::vector<SymbolId> feasible;
  for (SymbolId f : sh.nonConstants)
    if (budget >= 1 + static_cast<std::uint64_t>(sig.arity(f))) feasible.push_back(f);
  if (!feasible.empty() && r.coin()) {
    SymbolId f = feasible[r.pick(feasible.size())];
    int ar = sig.arity(f);
    std::vector<Term> kids;
    std::uint64_t rest = budget - 1;
    for (int j = 0; j < ar; ++j) {
      std::uint64_t reserve = static_cast<std::uint64_t>(ar - j - 1);
      std::uint64_t slice = 1 + r.pick(rest - reserve);
      kids.push_back(randGround(r, sh, sig, slice));
      rest -= termSize(kids.back());
    }
    return mkLetter(f, std::move(kids));
  }
  return mkLetter(sh.constants[r.pick(sh.constants.size())]);
}

// One context layer: a non-constant letter with the hole at a random child
// position and constants elsewhere.
Term contextLayer(Rand& r, const Shape& sh, const Signature& sig, Term below) {
  SymbolId f = sh.nonConstants[r.pick(sh.nonConstants.size())];
  int holeAt = static_cast<int>(r.pick(sig.arity(f)));
  std::vector<Term> kids;
  for (int j = 0; j < sig.arity(f); ++j)
    kids.push_back(j == holeAt ? below : mkLetter(sh.constants[r.pick(sh.constants.size())]));
  return mkLetter(f, std::move(kids));
}

Term randContext(Rand& r, const Shape& sh, const Signature& sig, int layers) {
  Term t = mkHole();
  for (int j = 0; j < layers; ++j) t = contextLayer(r, sh, sig, t);
  return t;
}

Term randPattern(Rand& r, const Shape& sh, const Signature& sig, std::uint64_t budget) {
  enum Opt { Const, Var, CVarWrap, Apply };
  std::vector<Opt> opts = {Const};
  if (!sh.vars.empty()) opts.push_back(Var);
  if (budget >= 2 && !sh.cvars.empty()) opts.push_back(CVarWrap);
  if (budget >= 2 && !sh.nonConstants.empty()) { opts.push_back(Apply); opts.push_back(Apply); }
  switch (opts[r.pick(opts.size())]) {
    case Const: return mkLetter(sh.constants[r.pick(sh.constants.size())]);
    case Var: return mkVar(sh.vars[r.pick(sh.vars.size())]);
    case CVarWrap:
      return mkCVar(sh.cvars[r.pick(sh.cvars.size())],
                    randPattern(r, sh, sig, budget - 1));
    case Apply: {
      SymbolId f = sh.nonConstants[r.pick(sh.nonConstants.size())];
      int ar = sig.arity(f);
      if (budget < static_cast<std::uint64_t>(1 + ar))
        return mkLetter(sh.constants[r.pick(sh.constants.size())]);
      std::vector<Term> kids;
      std::uint64_t rest = budget - 1;
      for (int j = 0; j < ar; ++j) {
        std::uint64_t reserve = static_cast<std::uint64_t>(ar - j - 1);
        std::uint64_t slice = 1 + r.pick(rest - reserve);
        kids.push_back(randPattern(r, sh, sig, slice));
        rest -= termSize(kids.back());
      }
      return mkLetter(f, std::move(kids));
    }
  }
  return mkLetter(sh.constants[0]);  // unreachable
}

}  // namespace

std::vector<CorpusItem> generateCorpus(const CorpusParams& params) {
  static const char* kConstNames[] = {"a", "b", "c"};
  static const char* kUnaryNames[] = {"g", "h"};
  static const char* kBinaryNames[] = {"f", "k"};
  static const char* kVarNames[] = {"x", "y"};
  static const char* kCVarNames[] = {"X", "Y"};

  Rand r(params.seed);
  std::vector<CorpusItem> out;
  out.reserve(static_cast<std::size_t>(std::max(params.count, 0)));
  for (int idx = 0; idx < params.count; ++idx) {
    Equation eq;
    Shape sh;

    // Alphabet: one guaranteed constant plus 1-2 extras, at least one of
    // arity >= 1 so contexts exist. Caps: 3 letters, arity 2.
    int nConst = 1, nUnary = 0, nBinary = 0;
    sh.constants.push_back(eq.sig.add(kConstNames[0], 0));
    int extras = 1 + static_cast<int>(r.pick(2));
    for (int e = 0; e < extras; ++e) {
      int arity = static_cast<int>(r.pick(3));
      if (e + 1 == extras && nUnary + nBinary == 0 && arity == 0)
        arity = 1 + static_cast<int>(r.pick(2));
      if (arity == 0 && nConst < 3) {
        sh.constants.push_back(eq.sig.add(kConstNames[nConst++], 0));
      } else if (arity == 1 && nUnary < 2) {
        sh.nonConstants.push_back(eq.sig.add(kUnaryNames[nUnary++], 1));
      } else if (nBinary < 2) {
        sh.nonConstants.push_back(eq.sig.add(kBinaryNames[nBinary++], 2));
      }
    }

    int nv = static_cast<int>(r.pick(3));
    for (int j = 0; j < nv; ++j) sh.vars.push_back(eq.vars.add(kVarNames[j]));
    int nc = static_cast<int>(r.pick(3));
    for (int j = 0; j < nc; ++j) sh.cvars.push_back(eq.cvars.add(kCVarNames[j]));

    bool built = false;
    if (r.coin()) {
      // Planted arm: substitute random images into a small pattern so the
      // instance is satisfiable by construction (unless it grew too big).
      for (int attempt = 0; attempt < 8 && !built; ++attempt) {
        Term lhs = randPattern(r, sh, eq.sig, 2 + r.pick(2));
        Substitution s;
        for (VarId v : sh.vars) s.varImages[v] = randGround(r, sh, eq.sig, 1 + r.pick(2));
        for (CVarId cv : sh.cvars)
          s.cvarImages[cv] = randContext(r, sh, eq.sig, 1 + static_cast<int>(r.pick(2)));
        Term rhs = applySubstitution(lhs, s);
        if (termSize(lhs) + termSize(rhs) <= 7) {
          eq.lhs = lhs;
          eq.rhs = rhs;
          built = true;
        }
      }
    }
    if (!built) {
      std::uint64_t bl = 1 + r.pick(3);
      std::uint64_t br = 1 + r.pick(std::min<std::uint64_t>(4, 7 - bl));
      eq.lhs = randPattern(r, sh, eq.sig, bl);
      eq.rhs = randPattern(r, sh, eq.sig, br);
    }

    char name[16];
    std::snprintf(name, sizeof name, "%04d.eq", idx + 1);
    out.push_back({name, printProblem(eq)});
  }
  return out;
}

}  // namespace recomp
