#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "recomp/oracle.hpp"
#include "recomp/text.hpp"

using namespace recomp;

namespace {

std::vector<std::string> names(const std::vector<Term>& ts, const Signature& sig) {
  NamePool vars("v"), cvars("C");
  std::vector<std::string> out;
  for (const Term& t : ts) out.push_back(printTerm(t, sig, vars, cvars));
  return out;
}

}  // namespace

TEST_CASE("ground term enumeration over a single constant") {
  Signature sig;
  sig.add("a", 0);
  CHECK(names(enumerateGroundTerms(sig, 1), sig) == std::vector<std::string>{"a"});
  // no non-constants: nothing larger exists
  CHECK(enumerateGroundTerms(sig, 5).size() == 1);
}

TEST_CASE("context enumeration frozen for {a/0, g/1}") {
  Signature sig;
  sig.add("a", 0);
  sig.add("g", 1);
  CHECK(names(enumerateGroundContexts(sig, 2), sig) ==
        std::vector<std::string>{"_", "g(_)"});
  CHECK(names(enumerateGroundContexts(sig, 4), sig) ==
        std::vector<std::string>{"_", "g(_)", "g(g(_))", "g(g(g(_)))"});
  CHECK(names(enumerateGroundTerms(sig, 3), sig) ==
        std::vector<std::string>{"a", "g(a)", "g(g(a))"});
}

TEST_CASE("enumeration order and content frozen for {f/2, g/1, a/0, b/0}") {
  Signature sig;
  sig.add("f", 2);
  sig.add("g", 1);
  sig.add("a", 0);
  sig.add("b", 0);
  CHECK(names(enumerateGroundTerms(sig, 3), sig) ==
        std::vector<std::string>{"a", "b", "g(a)", "g(b)", "f(a,a)", "f(a,b)",
                                 "f(b,a)", "f(b,b)", "g(g(a))", "g(g(b))"});
  CHECK(names(enumerateGroundContexts(sig, 3), sig) ==
        std::vector<std::string>{"_", "g(_)", "f(_,a)", "f(_,b)", "f(a,_)",
                                 "f(b,_)", "g(g(_))"});
}

TEST_CASE("enumeration is duplicate-free, well-formed and monotone") {
  Signature sig;
  sig.add("f", 2);
  sig.add("g", 1);
  sig.add("a", 0);
  sig.add("b", 0);
  std::size_t prev = 0;
  for (std::uint64_t cap = 1; cap <= 5; ++cap) {
    std::vector<Term> ts = enumerateGroundTerms(sig, cap);
    CHECK(ts.size() >= prev);
    prev = ts.size();
    std::set<std::string> seen;
    std::uint64_t lastSize = 0;
    NamePool vs("v"), cs("C");
    for (const Term& t : ts) {
      CHECK(wellFormed(t, sig));
      CHECK(isGround(t));
      CHECK(termSize(t) <= cap);
      CHECK(termSize(t) >= lastSize);  // size-sorted
      lastSize = termSize(t);
      CHECK(seen.insert(printTerm(t, sig, vs, cs)).second);
    }
  }
  for (const Term& c : enumerateGroundContexts(sig, 4)) {
    CHECK(c->holes == 1);
    CHECK(c->flags == 0);
  }
}

TEST_CASE("enumeration without a constant is rejected") {
  Signature sig;
  sig.add("g", 1);
  CHECK_THROWS_AS(enumerateGroundTerms(sig, 3), NoConstant);
  CHECK_THROWS_AS(enumerateGroundContexts(sig, 3), NoConstant);
}

TEST_CASE("enumerationSignature adds one spare letter per arity") {
  Equation eq;
  eq.sig.add("f", 2);
  eq.sig.add("a", 0);
  eq.lhs = eq.rhs = mkLetter(1);
  Signature es = enumerationSignature(eq);
  CHECK(es.size() == 5);  // f, a + spares of arity 0, 1, 2
  std::set<int> spareArities;
  for (SymbolId id = 2; id < es.size(); ++id) spareArities.insert(es.arity(id));
  CHECK(spareArities == std::set<int>{0, 1, 2});
}

namespace {

struct OFix {
  Equation eq;
  SymbolId f, g, a, b;
  VarId x, y;
  CVarId X, Y;
  OFix() {
    f = eq.sig.add("f", 2);
    g = eq.sig.add("g", 1);
    a = eq.sig.add("a", 0);
    b = eq.sig.add("b", 0);
    x = eq.vars.add("x");
    y = eq.vars.add("y");
    X = eq.cvars.add("X");
    Y = eq.cvars.add("Y");
  }
  void set(const std::string& l, const std::string& r) {
    eq.lhs = parseTerm(l, eq.sig, eq.vars, eq.cvars);
    eq.rhs = parseTerm(r, eq.sig, eq.vars, eq.cvars);
  }
  std::string show(const Term& t, const Signature& sig) {
    return printTerm(t, sig, eq.vars, eq.cvars);
  }
};

}  // namespace

TEST_CASE("oracle finds the minimal solution of the paper equation") {
  Equation eq;
  eq.sig.add("f", 2);
  SymbolId a = eq.sig.add("a", 0);
  SymbolId b = eq.sig.add("b", 0);
  CVarId X = eq.cvars.add("X");
  CVarId Y = eq.cvars.add("Y");
  eq.lhs = mkCVar(X, mkLetter(a));
  eq.rhs = mkCVar(Y, mkLetter(b));

  OracleOutcome out = oracleSolve(eq, EnumBounds{3, 3, {}});
  REQUIRE(out.solution.has_value());
  CHECK(out.solution->size == 3);
  CHECK(out.solution->declaredEmpty.empty());
  NamePool vs("v");
  CHECK(printTerm(out.solution->substitution.cvarImages.at(X), out.bounds.signature,
                  vs, eq.cvars) == "f(_,b)");
  CHECK(printTerm(out.solution->substitution.cvarImages.at(Y), out.bounds.signature,
                  vs, eq.cvars) == "f(a,_)");
  CHECK(verifySolution(eq, out.solution->substitution));

  CHECK(minimalSolutionSize(eq, EnumBounds{3, 3, {}}) == 3);
  CHECK(!minimalSolutionSize(eq, EnumBounds{2, 8, {}}).has_value());
}

TEST_CASE("oracle reports bounded unsat for ground mismatches") {
  OFix fx;
  fx.set("g(a)", "g(b)");
  OracleOutcome out = oracleSolve(fx.eq, EnumBounds{6, 4, {}});
  CHECK(!out.solution.has_value());
}

TEST_CASE("oracle solves a plain variable binding") {
  OFix fx;
  fx.set("x", "f(a,b)");
  OracleOutcome out = oracleSolve(fx.eq, EnumBounds{8, 8, {}});
  REQUIRE(out.solution.has_value());
  CHECK(out.solution->size == 3);
  CHECK(fx.show(out.solution->substitution.varImages.at(fx.x), out.bounds.signature) ==
        "f(a,b)");
}

TEST_CASE("oracle minimal size of a trivial ground equation") {
  Equation eq;
  eq.sig.add("c", 0);
  eq.lhs = eq.rhs = mkLetter(0);
  CHECK(minimalSolutionSize(eq, EnumBounds{4, 4, {}}) == 1);
}

TEST_CASE("oracle declares a context variable empty when it must be") {
  OFix fx;
  fx.set("X(a)", "a");
  OracleOutcome out = oracleSolve(fx.eq, EnumBounds{6, 4, {}});
  REQUIRE(out.solution.has_value());
  CHECK(out.solution->size == 1);
  CHECK(out.solution->declaredEmpty == std::set<CVarId>{fx.X});
  CHECK(isEmptyContext(out.solution->substitution.cvarImages.at(fx.X)));
  CHECK(verifyCertificate(fx.eq, out.solution->substitution,
                          out.solution->declaredEmpty));
}

TEST_CASE("oracle prefers a non-empty image when emptiness does not help") {
  OFix fx;
  fx.set("X(a)", "g(a)");
  OracleOutcome out = oracleSolve(fx.eq, EnumBounds{6, 4, {}});
  REQUIRE(out.solution.has_value());
  CHECK(out.solution->size == 2);
  CHECK(out.solution->declaredEmpty.empty());
  CHECK(fx.show(out.solution->substitution.cvarImages.at(fx.X), out.bounds.signature) ==
        "g(_)");
}

TEST_CASE("oracle breaks size ties lexicographically") {
  Equation eq;
  eq.sig.add("a", 0);
  eq.sig.add("b", 0);
  VarId x = eq.vars.add("x");
  VarId y = eq.vars.add("y");
  eq.lhs = mkVar(x);
  eq.rhs = mkVar(y);
  OracleOutcome out = oracleSolve(eq, EnumBounds{4, 4, {}});
  REQUIRE(out.solution.has_value());
  CHECK(out.solution->size == 1);
  NamePool cs("C");
  CHECK(printTerm(out.solution->substitution.varImages.at(x), out.bounds.signature,
                  eq.vars, cs) == "a");
}

// --- Randomized cross-properties ----------------------------------------

namespace {

Term randGround(OFix& fx, std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 3);
  switch (pick(rng)) {
    case 0: return mkLetter(fx.a);
    case 1: return mkLetter(fx.b);
    case 2: return mkLetter(fx.g, {randGround(fx, rng, depth - 1)});
    default:
      return mkLetter(fx.f,
                      {randGround(fx, rng, depth - 1), randGround(fx, rng, depth - 1)});
  }
}

Term randContext(OFix& fx, std::mt19937& rng) {
  switch (rng() % 3) {
    case 0: return mkLetter(fx.g, {mkHole()});
    case 1: return mkLetter(fx.f, {mkHole(), randGround(fx, rng, 0)});
    default: return mkLetter(fx.f, {randGround(fx, rng, 0), mkHole()});
  }
}

Term randPattern(OFix& fx, std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
  switch (pick(rng)) {
    case 0: return mkLetter(fx.a);
    case 1: return mkLetter(fx.b);
    case 2: return mkVar(fx.x);
    case 3: return mkCVar(fx.X, randPattern(fx, rng, depth - 1));
    case 4: return mkLetter(fx.g, {randPattern(fx, rng, depth - 1)});
    default:
      return mkLetter(fx.f, {randPattern(fx, rng, depth - 1),
                             randPattern(fx, rng, depth - 1)});
  }
}

}  // namespace

TEST_CASE("oracle solutions verify, shrink under simplification, stay minimal") {
  std::mt19937 rng(77001);
  int solved = 0;
  for (int round = 0; round < 12; ++round) {
    OFix fx;
    Substitution planted;
    planted.varImages[fx.x] = randGround(fx, rng, 1);
    planted.cvarImages[fx.X] = randContext(fx, rng);
    Term u = randPattern(fx, rng, 2);
    Term ground = applySubstitution(u, planted);
    if (termSize(ground) > 11) continue;
    fx.eq.lhs = u;
    fx.eq.rhs = ground;  // rhs fully ground: planted solution solves it

    EnumBounds small{termSize(ground), 4, {}};
    OracleOutcome out = oracleSolve(fx.eq, small);
    REQUIRE(out.solution.has_value());  // the planted solution fits the bounds
    ++solved;
    const OracleSolution& sol = *out.solution;
    CHECK(sol.size <= termSize(ground));

    Equation pruned = removeEmptyCVars(fx.eq, sol.declaredEmpty);
    CHECK(verifySolution(pruned, sol.substitution));
    CHECK(verifyCertificate(fx.eq, sol.substitution, sol.declaredEmpty));

    // monotone in bounds
    EnumBounds larger{termSize(ground) + 2, 5, {}};
    OracleOutcome wide = oracleSolve(fx.eq, larger);
    REQUIRE(wide.solution.has_value());
    CHECK(wide.solution->size <= sol.size);

    // simplification never grows the solution and preserves verification
    Equation prunedEnum = pruned;
    prunedEnum.sig = out.bounds.signature;  // images may use spare letters
    Substitution simp = simplifySolution(prunedEnum, sol.substitution);
    CHECK(verifySolution(prunedEnum, simp));
    CHECK(termSize(applySubstitution(prunedEnum.lhs, simp)) <= sol.size);
  }
  CHECK(solved >= 8);
}
