#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "recomp/term.hpp"

using namespace recomp;

namespace {

struct Fix {
  Signature sig;
  SymbolId f, g, a, b;
  Fix() {
    f = sig.add("f", 2);
    g = sig.add("g", 1);
    a = sig.add("a", 0);
    b = sig.add("b", 0);
  }
};

}  // namespace

TEST_CASE("signature basics") {
  Fix fx;
  CHECK(fx.sig.size() == 4);
  CHECK(fx.sig.arity(fx.f) == 2);
  CHECK(fx.sig.name(fx.g) == "g");
  CHECK(fx.sig.maxArity() == 2);
  CHECK(fx.sig.hasConstant());
  CHECK(fx.sig.find("a") == fx.a);
  CHECK(!fx.sig.find("z").has_value());
  CHECK_THROWS_AS(fx.sig.add("f", 3), DuplicateName);

  Signature constless;
  constless.add("h", 1);
  CHECK(!constless.hasConstant());
}

TEST_CASE("fresh letter names are deterministic") {
  Fix fx;
  SymbolId p1 = fx.sig.fresh(1, Origin::FreshPair);
  CHECK(fx.sig.name(p1) == "p$1");
  CHECK(fx.sig.letter(p1).origin == Origin::FreshPair);
  SymbolId l2 = fx.sig.fresh(0, Origin::FreshLeaf);
  CHECK(fx.sig.name(l2) == "l$2");  // counter is shared
  SymbolId g3 = fx.sig.freshChain(fx.g, 3);
  CHECK(fx.sig.name(g3) == "g$3");
  CHECK(fx.sig.arity(g3) == 1);

  // Name collisions skip forward deterministically.
  fx.sig.add("p$3", 0);
  SymbolId p4 = fx.sig.fresh(1, Origin::FreshPair);
  CHECK(fx.sig.name(p4) == "p$4");

  CHECK_THROWS_AS(fx.sig.fresh(3, Origin::FreshLeaf), ArityTooLarge);

  Signature constsOnly;
  constsOnly.add("a", 0);
  CHECK_THROWS_AS(constsOnly.fresh(1, Origin::FreshPair), ArityTooLarge);
  CHECK_THROWS_AS(constsOnly.freshChain(0, 2), ArityTooLarge);
}

TEST_CASE("cached size, holes and flags") {
  Fix fx;
  Term t = mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.g, {mkLetter(fx.b)})});
  CHECK(termSize(t) == 4);
  CHECK(t->holes == 0);
  CHECK(isGround(t));
  CHECK(!isContext(t));

  Term ctx = mkLetter(fx.f, {mkHole(), mkLetter(fx.b)});
  CHECK(ctx->holes == 1);
  CHECK(isContext(ctx));
  CHECK(!isGround(ctx));
  CHECK(isEmptyContext(mkHole()));
  CHECK(!isEmptyContext(ctx));

  Term withVar = mkLetter(fx.g, {mkVar(0)});
  CHECK((withVar->flags & kHasVar));
  CHECK(!(withVar->flags & kHasCVar));
  Term withCVar = mkCVar(0, mkLetter(fx.a));
  CHECK((withCVar->flags & kHasCVar));
  CHECK(!isGround(withVar));

  // A power node counts once regardless of its exponent.
  Term pw = mkPower(fx.g, 5, mkLetter(fx.a));
  CHECK(termSize(pw) == 2);
  CHECK(pw->exp == 5);
  CHECK_THROWS_AS(mkPower(fx.g, 0, mkLetter(fx.a)), PreconditionViolated);
}

TEST_CASE("structural equality and ordering") {
  Fix fx;
  Term t1 = mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.b)});
  Term t2 = mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.b)});
  CHECK(termEq(t1, t2));
  CHECK(!termEq(t1, mkLetter(fx.f, {mkLetter(fx.b), mkLetter(fx.a)})));

  // g^2(a) and g(g(a)) are distinct terms until powers are expanded.
  Term pw = mkPower(fx.g, 2, mkLetter(fx.a));
  Term plain = mkLetter(fx.g, {mkLetter(fx.g, {mkLetter(fx.a)})});
  CHECK(!termEq(pw, plain));
  CHECK(termEq(expandPowers(pw), plain));

  CHECK(termLess(mkLetter(fx.a), t1));  // size first
  CHECK(termLess(mkHole(), mkLetter(fx.a)));
  CHECK(!termLess(mkLetter(fx.a), mkHole()));
  CHECK(termLess(mkLetter(fx.a), mkLetter(fx.b)));
  CHECK(!termLess(t1, t2));
  CHECK(!termLess(t2, t1));
}

TEST_CASE("wellFormed") {
  Fix fx;
  CHECK(wellFormed(mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.b)}), fx.sig));
  CHECK(!wellFormed(mkLetter(fx.f, {mkLetter(fx.a)}), fx.sig));
  CHECK(wellFormed(mkPower(fx.g, 7, mkLetter(fx.a)), fx.sig));
  CHECK(!wellFormed(mkPower(fx.f, 2, mkLetter(fx.a)), fx.sig));
  CHECK(wellFormed(mkVar(0), fx.sig));
  CHECK(wellFormed(mkCVar(0, mkLetter(fx.a)), fx.sig));
  CHECK(wellFormed(mkHole(), fx.sig));
}

TEST_CASE("expandPowers budget") {
  Fix fx;
  Term t = mkPower(fx.g, 3, mkLetter(fx.a));
  CHECK(termSize(expandPowers(t)) == 4);
  CHECK_THROWS_AS(expandPowers(mkPower(fx.g, 100, mkLetter(fx.a)), 50),
                  PreconditionViolated);
  // Nested powers multiply out: (g^2 applied under g^3) has 5 g's + a.
  Term nested = mkPower(fx.g, 3, mkPower(fx.g, 2, mkLetter(fx.a)));
  CHECK(termSize(expandPowers(nested)) == 6);
}

TEST_CASE("substitution on the two-context-variable equation") {
  // X(a) = Y(b) is solved by S(X) = f(., b), S(Y) = f(a, .): both sides
  // become f(a, b).
  Fix fx;
  CVarId X = 0, Y = 1;
  Term lhs = mkCVar(X, mkLetter(fx.a));
  Term rhs = mkCVar(Y, mkLetter(fx.b));
  Substitution s;
  s.cvarImages[X] = mkLetter(fx.f, {mkHole(), mkLetter(fx.b)});
  s.cvarImages[Y] = mkLetter(fx.f, {mkLetter(fx.a), mkHole()});
  Term tl = applySubstitution(lhs, s);
  Term tr = applySubstitution(rhs, s);
  CHECK(termEq(tl, tr));
  CHECK(termEq(tl, mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.b)})));
}

TEST_CASE("substitution errors") {
  Fix fx;
  Substitution s;
  CHECK_THROWS_AS(applySubstitution(mkVar(3), s), UndefinedVariable);
  s.cvarImages[0] = mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.b)});  // no hole
  CHECK_THROWS_AS(applySubstitution(mkCVar(0, mkLetter(fx.a)), s), NotAContext);
}

TEST_CASE("composeContext") {
  Fix fx;
  CHECK(termEq(composeContext(mkHole(), mkLetter(fx.a)), mkLetter(fx.a)));
  Term ctx = mkLetter(fx.f, {mkLetter(fx.g, {mkHole()}), mkLetter(fx.b)});
  Term got = composeContext(ctx, mkLetter(fx.a));
  Term want = mkLetter(fx.f, {mkLetter(fx.g, {mkLetter(fx.a)}), mkLetter(fx.b)});
  CHECK(termEq(got, want));
  CHECK_THROWS_AS(composeContext(mkLetter(fx.a), mkLetter(fx.b)), NotAContext);

  // Power contexts keep their exponent.
  Term pctx = mkPower(fx.g, 4, mkHole());
  CHECK(termEq(composeContext(pctx, mkLetter(fx.a)),
               mkPower(fx.g, 4, mkLetter(fx.a))));
}

TEST_CASE("occurrence counting") {
  Fix fx;
  VarId x = 0, y = 1;
  CVarId X = 0;
  Term t = mkLetter(fx.f, {mkCVar(X, mkVar(x)), mkLetter(fx.g, {mkVar(x)})});
  CHECK(countVarOccurrences(t, x) == 2);
  CHECK(countVarOccurrences(t, y) == 0);
  CHECK(countCVarOccurrences(t, X) == 1);
  CHECK(countAllVarOccurrences(t) == 2);

  std::map<VarId, std::uint64_t> vs;
  collectVars(t, vs);
  CHECK(vs.size() == 1);
  CHECK(vs[x] == 2);

  std::map<SymbolId, std::uint64_t> ls;
  collectLetters(mkPower(fx.g, 6, mkLetter(fx.a)), ls);
  CHECK(ls[fx.g] == 6);  // exponents count as occurrences
  CHECK(ls[fx.a] == 1);
}

TEST_CASE("name pool") {
  NamePool pool("v");
  CHECK(pool.add("x") == 0);
  CHECK(pool.add("y") == 1);
  CHECK_THROWS_AS(pool.add("x"), DuplicateName);
  std::uint32_t f1 = pool.fresh();
  CHECK(pool.name(f1) == "v$1");
  pool.add("v$2");
  CHECK(pool.name(pool.fresh()) == "v$3");
  CHECK(pool.find("y") == 1u);
  CHECK(!pool.find("q").has_value());
}
