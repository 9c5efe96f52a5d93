#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>

#include "recomp/equation.hpp"
#include "recomp/text.hpp"

using namespace recomp;

namespace {

struct Fix {
  Equation eq;
  SymbolId f, g, h, a, b;
  VarId x, y;
  CVarId X, Y;
  Fix() {
    f = eq.sig.add("f", 2);
    g = eq.sig.add("g", 1);
    h = eq.sig.add("h", 1);
    a = eq.sig.add("a", 0);
    b = eq.sig.add("b", 0);
    x = eq.vars.add("x");
    y = eq.vars.add("y");
    X = eq.cvars.add("X");
    Y = eq.cvars.add("Y");
  }
  Term parse(const std::string& s, TermFormat fmt = {}) {
    return parseTerm(s, eq.sig, eq.vars, eq.cvars, fmt);
  }
  void set(const std::string& l, const std::string& r) {
    eq.lhs = parse(l);
    eq.rhs = parse(r);
  }
  Term ctx(const std::string& s) { return parse(s, {.allowHole = true}); }
};

}  // namespace

TEST_CASE("stats split occurrences by arity") {
  Fix fx;
  fx.set("f(g(x),X(a))", "f(a,b)");
  EquationStats st = stats(fx.eq);
  CHECK(st.size == 8);
  CHECK(st.n0 == 3);
  CHECK(st.n1 == 1);
  CHECK(st.nGe2 == 2);
  CHECK(st.varOcc == 1);
  CHECK(st.cvarOcc == 1);
  CHECK(st.distinctVars == 1);
  CHECK(st.distinctCVars == 1);

  // Exponents count into n1.
  fx.eq.lhs = mkPower(fx.g, 5, mkLetter(fx.a));
  fx.eq.rhs = mkLetter(fx.a);
  CHECK(stats(fx.eq).n1 == 5);
  CHECK(stats(fx.eq).size == 3);
}

TEST_CASE("letter and occurrence helpers") {
  Fix fx;
  fx.set("f(g(x),X(a))", "h(b)");
  CHECK(equationUnaryLetters(fx.eq) == std::set<SymbolId>{fx.g, fx.h});
  CHECK(equationConstants(fx.eq) == std::set<SymbolId>{fx.a, fx.b});
  CHECK(equationNonConstants(fx.eq) == std::set<SymbolId>{fx.f, fx.g, fx.h});
  auto vo = varOccurrences(fx.eq);
  CHECK(vo.at(fx.x) == 1);
  auto co = cvarOccurrences(fx.eq);
  CHECK(co.at(fx.X) == 1);
  CHECK(!co.count(fx.Y));
}

TEST_CASE("root and hole-parent letters") {
  Fix fx;
  CHECK(rootLetter(fx.parse("f(a,b)")) == fx.f);
  CHECK(!rootLetter(mkHole()).has_value());
  CHECK(holeParentLetter(fx.ctx("f(g(_),b)")) == fx.g);
  CHECK(holeParentLetter(fx.ctx("f(_,b)")) == fx.f);
  CHECK(!holeParentLetter(mkHole()).has_value());
  CHECK(holeParentLetter(mkPower(fx.g, 4, mkHole())) == fx.g);
  CHECK_THROWS_AS(holeParentLetter(fx.parse("a")), NotAContext);
}

TEST_CASE("verifySolution accepts the paper solution of X(a)=Y(b)") {
  Fix fx;
  fx.set("X(a)", "Y(b)");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("f(_,b)");
  s.cvarImages[fx.Y] = fx.ctx("f(a,_)");
  CHECK(verifySolution(fx.eq, s));

  // The empty context is rejected by the non-empty check.
  Substitution t;
  t.cvarImages[fx.X] = mkHole();
  t.cvarImages[fx.Y] = fx.ctx("f(a,_)");
  CHECK(!verifySolution(fx.eq, t));

  // And a plainly wrong image fails the equality check.
  Substitution w;
  w.cvarImages[fx.X] = fx.ctx("f(_,a)");
  w.cvarImages[fx.Y] = fx.ctx("f(a,_)");
  CHECK(!verifySolution(fx.eq, w));
}

TEST_CASE("verifySolution trivial cases") {
  Fix fx;
  fx.set("a", "b");
  CHECK(!verifySolution(fx.eq, Substitution{}));
  fx.set("a", "a");
  CHECK(verifySolution(fx.eq, Substitution{}));
  fx.set("X(a)", "g(a)");
  CHECK_THROWS_AS(verifySolution(fx.eq, Substitution{}), UndefinedVariable);
}

TEST_CASE("satisfies ignores the non-empty requirement") {
  Fix fx;
  fx.set("X(a)", "X(a)");
  Substitution s;
  s.cvarImages[fx.X] = mkHole();
  CHECK(satisfies(fx.eq, s));
  CHECK(!verifySolution(fx.eq, s));
}

TEST_CASE("removeEmptyCVars splices out applications") {
  Fix fx;
  fx.set("X(g(a))", "Y(X(b))");
  Equation pruned = removeEmptyCVars(fx.eq, {fx.X});
  CHECK(termEq(pruned.lhs, fx.parse("g(a)")));
  CHECK(termEq(pruned.rhs, fx.parse("Y(b)")));
  Equation both = removeEmptyCVars(fx.eq, {fx.X, fx.Y});
  CHECK(termEq(both.rhs, fx.parse("b")));
}

TEST_CASE("verifyCertificate handles declared-empty context variables") {
  Fix fx;
  fx.set("X(a)", "X(a)");
  Substitution s;
  s.cvarImages[fx.X] = mkHole();
  CHECK(verifyCertificate(fx.eq, s, {fx.X}));
  CHECK(!verifyCertificate(fx.eq, s, {}));  // not declared, non-empty check bites

  // A declared-empty variable must actually map to the bare hole.
  Substitution t;
  t.cvarImages[fx.X] = fx.ctx("g(_)");
  CHECK(!verifyCertificate(fx.eq, t, {fx.X}));
  CHECK(verifyCertificate(fx.eq, t, {}));
}

TEST_CASE("normalizeSignature fills arity gaps") {
  Equation eq;
  eq.sig.add("f", 2);
  eq.sig.add("a", 0);
  eq.lhs = eq.rhs = mkLetter(1);
  normalizeSignature(eq);
  CHECK(eq.sig.size() == 3);
  CHECK(eq.sig.arity(2) == 1);  // the minted unary letter
  CHECK(eq.sig.name(2) == "n$1");

  Equation full;
  full.sig.add("f", 2);
  full.sig.add("g", 1);
  full.sig.add("a", 0);
  full.lhs = full.rhs = mkLetter(2);
  normalizeSignature(full);
  CHECK(full.sig.size() == 3);  // unchanged

  Equation bad;
  bad.sig.add("g", 1);
  bad.lhs = bad.rhs = mkVar(0);
  CHECK_THROWS_AS(normalizeSignature(bad), NoConstant);
}

TEST_CASE("simplifySolution merges absent letters per arity") {
  Fix fx;
  // Two extra binary letters and an extra constant, all absent from the eq.
  SymbolId p = fx.eq.sig.add("p", 2);
  SymbolId q = fx.eq.sig.add("q", 2);
  SymbolId c = fx.eq.sig.add("c", 0);
  fx.set("x", "y");
  Substitution s;
  s.varImages[fx.x] = mkLetter(p, {mkLetter(q, {mkLetter(c), mkLetter(c)}), mkLetter(c)});
  s.varImages[fx.y] = s.varImages[fx.x];
  Substitution out = simplifySolution(fx.eq, s);
  CHECK(verifySolution(fx.eq, out));
  std::map<SymbolId, std::uint64_t> ls;
  collectLetters(out.varImages[fx.x], ls);
  // p and q merged into p; c is the only absent constant, merged into itself.
  CHECK(ls.count(p));
  CHECK(!ls.count(q));
  CHECK(ls.count(c));
}

TEST_CASE("simplifySolution splices out absent unary letters") {
  Fix fx;
  fx.set("f(x,a)", "f(x,a)");  // x unconstrained
  Substitution s;
  s.varImages[fx.x] = fx.parse("g(h(g(b)))");  // g, h absent from the eq
  Substitution out = simplifySolution(fx.eq, s);
  CHECK(verifySolution(fx.eq, out));
  // g and h first merge into one unary letter, which is then deleted.
  CHECK(termEq(out.varImages[fx.x], fx.parse("b")));
  CHECK(termSize(out.varImages[fx.x]) <= termSize(s.varImages[fx.x]));
}

TEST_CASE("simplifySolution keeps a unary letter whose deletion empties an image") {
  Fix fx;
  fx.set("X(a)", "Y(a)");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("g(_)");
  s.cvarImages[fx.Y] = fx.ctx("g(_)");
  // Deleting g would make both images empty, so it must stay.
  Substitution out = simplifySolution(fx.eq, s);
  CHECK(verifySolution(fx.eq, out));
  CHECK(termEq(out.cvarImages[fx.X], fx.ctx("g(_)")));
}

TEST_CASE("simplifySolution keeps the paper example unchanged") {
  Fix fx;
  fx.set("X(a)", "Y(b)");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("f(_,b)");
  s.cvarImages[fx.Y] = fx.ctx("f(a,_)");
  Substitution out = simplifySolution(fx.eq, s);
  // f is absent from the equation but the only absent binary letter; a and b
  // occur in the equation.
  CHECK(termEq(out.cvarImages[fx.X], s.cvarImages[fx.X]));
  CHECK(termEq(out.cvarImages[fx.Y], s.cvarImages[fx.Y]));
}

TEST_CASE("simplifySolution rejects non-solutions") {
  Fix fx;
  fx.set("a", "b");
  CHECK_THROWS_AS(simplifySolution(fx.eq, Substitution{}), NotASolution);
}

TEST_CASE("pair classification on a fully explicit equation") {
  Fix fx;
  fx.set("g(h(a))", "g(h(a))");
  PairReport rep = classifyPairOccurrences(fx.eq, Substitution{}, fx.g, fx.h);
  REQUIRE(rep.occurrences.size() == 2);
  CHECK(rep.occurrences[0].cls == OccurrenceClass::Explicit);
  CHECK(rep.occurrences[1].cls == OccurrenceClass::Explicit);
  CHECK(!rep.crossing);
  CHECK(!rep.operationalCrossing());
}

TEST_CASE("pair classification: implicit occurrences") {
  Fix fx;
  fx.set("X(a)", "X(a)");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("g(h(_))");
  PairReport rep = classifyPairOccurrences(fx.eq, s, fx.g, fx.h);
  REQUIRE(rep.occurrences.size() == 2);  // one per side, inside each image
  CHECK(rep.occurrences[0].cls == OccurrenceClass::Implicit);
  CHECK(rep.occurrences[1].cls == OccurrenceClass::Implicit);
  CHECK(!rep.crossing);
  CHECK(!rep.operationalCrossing());
}

TEST_CASE("pair classification: CP1 crossing") {
  Fix fx;
  fx.set("g(X(b))", "g(g(h(b)))");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("g(h(_))");
  REQUIRE(verifySolution(fx.eq, s));
  PairReport rep = classifyPairOccurrences(fx.eq, s, fx.g, fx.g);
  CHECK(rep.crossing);
  CHECK(rep.cp1);
  CHECK(!rep.cp2);
  CHECK(!rep.cp3);
  CHECK(rep.operationalCrossing());

  // (g,h) is implicit on the left, explicit on the right: not crossing.
  PairReport gh = classifyPairOccurrences(fx.eq, s, fx.g, fx.h);
  CHECK(!gh.crossing);
  CHECK(!gh.operationalCrossing());
}

TEST_CASE("pair classification: CP2 and CP3") {
  Fix fx;
  fx.set("X(h(a))", "g(h(h(a)))");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("g(h(_))");
  REQUIRE(verifySolution(fx.eq, s));
  // S(X) ends with h, X is applied to h(...): crossing (h,h) via CP2.
  PairReport rep = classifyPairOccurrences(fx.eq, s, fx.h, fx.h);
  CHECK(rep.crossing);
  CHECK(rep.cp2);

  Fix fy;
  fy.set("X(Y(a))", "g(h(a))");
  Substitution t;
  t.cvarImages[fy.X] = fy.ctx("g(_)");
  t.cvarImages[fy.Y] = fy.ctx("h(_)");
  REQUIRE(verifySolution(fy.eq, t));
  PairReport rep3 = classifyPairOccurrences(fy.eq, t, fy.g, fy.h);
  CHECK(rep3.crossing);
  CHECK(rep3.cp3);
  CHECK(!rep3.cp1);
  CHECK(!rep3.cp2);
}

TEST_CASE("chain classification") {
  Fix fx;
  fx.set("g(x)", "g(g(a))");
  Substitution s;
  s.varImages[fx.x] = fx.parse("g(a)");
  REQUIRE(verifySolution(fx.eq, s));
  ChainReport rep = classifyChain(fx.eq, s, fx.g);
  CHECK(rep.crossing);
  CHECK(rep.cc1);
  CHECK(!rep.cc2);
  CHECK(!rep.cc3);

  ChainReport rh = classifyChain(fx.eq, s, fx.h);
  CHECK(!rh.crossing);
  CHECK(!rh.operationalCrossing());
}

TEST_CASE("parent-leaf classification on the paper example") {
  Fix fx;
  fx.set("X(a)", "Y(b)");
  Substitution s;
  s.cvarImages[fx.X] = fx.ctx("f(_,b)");
  s.cvarImages[fx.Y] = fx.ctx("f(a,_)");
  ParentLeafReport rep = classifyParentLeaf(fx.eq, s, fx.f, fx.a);
  CHECK(rep.crossing);
  CHECK(rep.cfl2);
  CHECK(!rep.cfl1);
  CHECK(!rep.cfl3);

  ParentLeafReport rb = classifyParentLeaf(fx.eq, s, fx.f, fx.b);
  CHECK(rb.crossing);
  CHECK(rb.cfl2);
}

TEST_CASE("parent-leaf classification CFL1 and CFL3") {
  Fix fx;
  fx.set("f(x,b)", "f(a,b)");
  Substitution s;
  s.varImages[fx.x] = fx.parse("a");
  REQUIRE(verifySolution(fx.eq, s));
  ParentLeafReport rep = classifyParentLeaf(fx.eq, s, fx.f, fx.a);
  CHECK(rep.crossing);
  CHECK(rep.cfl1);

  Fix fy;
  fy.set("X(y)", "g(a)");
  Substitution t;
  t.cvarImages[fy.X] = fy.ctx("g(_)");
  t.varImages[fy.y] = fy.parse("a");
  REQUIRE(verifySolution(fy.eq, t));
  ParentLeafReport rep3 = classifyParentLeaf(fy.eq, t, fy.g, fy.a);
  CHECK(rep3.crossing);
  CHECK(rep3.cfl3);
  CHECK(!rep3.cfl2);
}

TEST_CASE("ground equations have no crossing anything") {
  Fix fx;
  fx.set("f(g(a),h(b))", "f(g(a),h(b))");
  Substitution s;
  for (SymbolId u : {fx.g, fx.h}) {
    CHECK(!classifyChain(fx.eq, s, u).crossing);
    CHECK(!classifyChain(fx.eq, s, u).operationalCrossing());
  }
  CHECK(!classifyParentLeaf(fx.eq, s, fx.f, fx.a).crossing);
  CHECK(!classifyParentLeaf(fx.eq, s, fx.g, fx.a).operationalCrossing());
}

// --- Property: tag-based and operational crossing agree -----------------

namespace {

Term randomGround(Fix& fx, std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  switch (pick(rng)) {
    case 0: return mkLetter(fx.a);
    case 1: return mkLetter(fx.b);
    case 2: return mkLetter(fx.g, {randomGround(fx, rng, depth - 1)});
    case 3: return mkLetter(fx.h, {randomGround(fx, rng, depth - 1)});
    default:
      return mkLetter(fx.f, {randomGround(fx, rng, depth - 1),
                             randomGround(fx, rng, depth - 1)});
  }
}

// Random non-empty ground context: replace one non-root subtree by the hole.
Term randomContext(Fix& fx, std::mt19937& rng) {
  for (;;) {
    Term t = randomGround(fx, rng, 3);
    if (termSize(t) < 2) continue;
    // replace the target-th node (preorder, root excluded) by the hole
    std::uint64_t n = termSize(t);
    std::uint64_t target = 1 + rng() % (n - 1);
    std::uint64_t seen = 0;
    std::function<Term(const Term&)> replace = [&](const Term& u) -> Term {
      std::uint64_t mine = seen++;
      if (mine == target) return mkHole();
      std::vector<Term> kids;
      bool changed = false;
      for (const Term& c : u->children) {
        Term r = replace(c);
        changed = changed || r.get() != c.get();
        kids.push_back(std::move(r));
      }
      if (!changed) return u;
      return mkLetter(u->sym, std::move(kids));
    };
    Term ctx = replace(t);
    if (ctx->holes == 1) return ctx;
  }
}

Term randomPattern(Fix& fx, std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  switch (pick(rng)) {
    case 0: return mkLetter(fx.a);
    case 1: return mkLetter(fx.b);
    case 2: return mkVar(fx.x);
    case 3: return mkVar(fx.y);
    case 4: return mkCVar(fx.X, randomPattern(fx, rng, depth - 1));
    case 5: return mkCVar(fx.Y, randomPattern(fx, rng, depth - 1));
    case 6: return mkLetter(fx.g, {randomPattern(fx, rng, depth - 1)});
    case 7: return mkLetter(fx.h, {randomPattern(fx, rng, depth - 1)});
    default:
      return mkLetter(fx.f, {randomPattern(fx, rng, depth - 1),
                             randomPattern(fx, rng, depth - 1)});
  }
}

// If t == ctx[arg] for some arg, returns arg.
std::optional<Term> stripContext(const Term& t, const Term& ctx) {
  if (ctx->kind == NodeKind::Hole) return t;
  if (t->kind != NodeKind::Letter || ctx->kind != NodeKind::Letter ||
      t->sym != ctx->sym || t->children.size() != ctx->children.size())
    return std::nullopt;
  std::optional<Term> out;
  for (std::size_t i = 0; i < ctx->children.size(); ++i) {
    if (ctx->children[i]->holes == 1) {
      out = stripContext(t->children[i], ctx->children[i]);
      if (!out) return std::nullopt;
    } else if (!termEq(t->children[i], ctx->children[i])) {
      return std::nullopt;
    }
  }
  return out;
}

// Folds a ground tree back into a pattern consistent with s.
Term fold(Fix& fx, const Term& t, const Substitution& s, std::mt19937& rng) {
  if (rng() % 3 == 0) {
    for (VarId v : {fx.x, fx.y})
      if (termEq(t, s.varImages.at(v))) return mkVar(v);
    for (CVarId cv : {fx.X, fx.Y})
      if (auto arg = stripContext(t, s.cvarImages.at(cv)))
        return mkCVar(cv, fold(fx, *arg, s, rng));
  }
  if (t->children.empty()) return t;
  std::vector<Term> kids;
  for (const Term& c : t->children) kids.push_back(fold(fx, c, s, rng));
  return mkLetter(t->sym, std::move(kids));
}

}  // namespace

TEST_CASE("crossing predicates: tag route equals operational route") {
  std::mt19937 rng(424242);
  int built = 0;
  for (int round = 0; round < 60; ++round) {
    Fix fx;
    Substitution s;
    s.varImages[fx.x] = randomGround(fx, rng, 2);
    s.varImages[fx.y] = randomGround(fx, rng, 2);
    s.cvarImages[fx.X] = randomContext(fx, rng);
    s.cvarImages[fx.Y] = randomContext(fx, rng);

    Term u = randomPattern(fx, rng, 3);
    Term ground = applySubstitution(u, s);
    Term v = fold(fx, ground, s, rng);
    fx.eq.lhs = u;
    fx.eq.rhs = v;
    REQUIRE(satisfies(fx.eq, s));
    if (!verifySolution(fx.eq, s)) continue;  // an image could be unused+empty
    ++built;

    for (SymbolId p : {fx.g, fx.h})
      for (SymbolId q : {fx.g, fx.h}) {
        PairReport rep = classifyPairOccurrences(fx.eq, s, p, q);
        CHECK(rep.crossing == rep.operationalCrossing());
      }
    for (SymbolId p : {fx.g, fx.h}) {
      ChainReport rep = classifyChain(fx.eq, s, p);
      CHECK(rep.crossing == rep.operationalCrossing());
    }
    for (SymbolId p : {fx.f, fx.g, fx.h})
      for (SymbolId c : {fx.a, fx.b}) {
        ParentLeafReport rep = classifyParentLeaf(fx.eq, s, p, c);
        CHECK(rep.crossing == rep.operationalCrossing());
      }
  }
  CHECK(built >= 40);  // the generator keeps most rounds
}
