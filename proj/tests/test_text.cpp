#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "recomp/term.hpp"
#include "recomp/text.hpp"

using namespace recomp;

namespace {

struct Fix {
  Signature sig;
  NamePool vars{"v"};
  NamePool cvars{"C"};
  SymbolId f, g, a, b;
  VarId x;
  CVarId X;
  Fix() {
    f = sig.add("f", 2);
    g = sig.add("g", 1);
    a = sig.add("a", 0);
    b = sig.add("b", 0);
    x = vars.add("x");
    X = cvars.add("X");
  }
  Term parse(const std::string& s, TermFormat fmt = {}) {
    return parseTerm(s, sig, vars, cvars, fmt);
  }
  std::string print(const Term& t) { return printTerm(t, sig, vars, cvars); }
};

}  // namespace

TEST_CASE("print") {
  Fix fx;
  Term t = mkLetter(fx.f, {mkLetter(fx.a), mkLetter(fx.g, {mkLetter(fx.b)})});
  CHECK(fx.print(t) == "f(a,g(b))");
  CHECK(fx.print(mkCVar(fx.X, mkVar(fx.x))) == "X(x)");
  CHECK(fx.print(mkLetter(fx.f, {mkHole(), mkLetter(fx.b)})) == "f(_,b)");
  CHECK(fx.print(mkPower(fx.g, 3, mkLetter(fx.a))) == "g^3(a)");
}

TEST_CASE("parse round trip") {
  Fix fx;
  for (const char* s : {"a", "g(a)", "f(a,b)", "f(g(a),f(b,b))", "X(x)",
                        "f(X(g(x)),b)"}) {
    Term t = fx.parse(s);
    CHECK(fx.print(t) == s);
  }
  // Whitespace is insignificant between tokens.
  CHECK(fx.print(fx.parse(" f( a , g( b ) ) ")) == "f(a,g(b))");
}

TEST_CASE("hole and power are opt-in") {
  Fix fx;
  CHECK_THROWS_AS(fx.parse("f(_,b)"), SyntaxError);
  Term ctx = fx.parse("f(_,b)", {.allowHole = true});
  CHECK(isContext(ctx));

  CHECK_THROWS_AS(fx.parse("g^3(a)"), SyntaxError);
  Term pw = fx.parse("g^3(a)", {.allowPower = true});
  CHECK(pw->exp == 3);
  CHECK(fx.parse("g^1(a)", {.allowPower = true})->exp == 1);
  CHECK_THROWS_AS(fx.parse("g^0(a)", {.allowPower = true}), SyntaxError);
  CHECK_THROWS_AS(fx.parse("f^2(a,b)", {.allowPower = true}), ArityMismatch);
}

TEST_CASE("parse errors") {
  Fix fx;
  CHECK_THROWS_AS(fx.parse("unknown(a)"), SyntaxError);
  CHECK_THROWS_AS(fx.parse("f(a)"), ArityMismatch);
  CHECK_THROWS_AS(fx.parse("f(a,b,b)"), ArityMismatch);
  CHECK_THROWS_AS(fx.parse("f(a,b) junk"), SyntaxError);
  CHECK_THROWS_AS(fx.parse("X"), SyntaxError);  // cvar needs an argument
  CHECK_THROWS_AS(fx.parse(""), SyntaxError);
  CHECK_THROWS_AS(fx.parse("f(a,"), SyntaxError);

  try {
    parseTerm("f(a,\x01)", fx.sig, fx.vars, fx.cvars, {}, 7);
    CHECK(false);
  } catch (const SyntaxError& e) {
    CHECK(e.line == 7);  // caller-supplied line offset is reported
  }
}

TEST_CASE("dollar names round trip") {
  Fix fx;
  SymbolId p1 = fx.sig.fresh(1, Origin::FreshPair);
  Term t = mkLetter(p1, {mkLetter(fx.a)});
  CHECK(fx.print(t) == "p$1(a)");
  CHECK(termEq(fx.parse("p$1(a)"), t));
}
