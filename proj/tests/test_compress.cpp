#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "recomp/compress.hpp"
#include "recomp/term.hpp"

using namespace recomp;

namespace {

struct Fix {
  Signature sig;
  SymbolId f, g, h, a, b;
  Fix() {
    f = sig.add("f", 2);
    g = sig.add("g", 1);
    h = sig.add("h", 1);
    a = sig.add("a", 0);
    b = sig.add("b", 0);
  }
  Term G(Term t) { return mkLetter(g, {std::move(t)}); }
  Term H(Term t) { return mkLetter(h, {std::move(t)}); }
  Term F(Term l, Term r) { return mkLetter(f, {std::move(l), std::move(r)}); }
  Term A() { return mkLetter(a); }
  Term B() { return mkLetter(b); }
};

// Random ground terms over the fixture alphabet, for property checks.
Term randomTerm(Fix& fx, std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  switch (pick(rng)) {
    case 0: return fx.A();
    case 1: return fx.B();
    case 2: return fx.G(randomTerm(fx, rng, depth - 1));
    case 3: return fx.H(randomTerm(fx, rng, depth - 1));
    default:
      return fx.F(randomTerm(fx, rng, depth - 1), randomTerm(fx, rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("chain compression replaces maximal runs") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.G(fx.G(fx.G(fx.A())));
  Term c = compressChains({fx.g}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "CHAIN g 3 -> g$3");
  CHECK(termSize(c) == 2);
  CHECK(fx.sig.arity(c->sym) == 1);
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("length-1 chains stay untouched") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.G(fx.F(fx.A(), fx.G(fx.G(fx.B()))));
  Term c = compressChains({fx.g}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);  // only the inner g g run
  CHECK(c->sym == fx.g);            // outer single g survives
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("chain runs absorb exponents") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = mkPower(fx.g, 2, fx.G(fx.A()));  // g^2 over g: run of length 3
  Term c = compressChains({fx.g}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "CHAIN g 3 -> g$3");
  CHECK(termEq(decompress(log, c), expandPowers(t)));
}

TEST_CASE("equal runs intern to the same letter") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.F(fx.G(fx.G(fx.A())), fx.G(fx.G(fx.B())));
  Term c = compressChains({fx.g}, t, fx.sig, log);
  CHECK(log.events.size() == 1);  // one event for both g g runs
  CHECK(c->children[0]->sym == c->children[1]->sym);

  // A different length mints a different letter.
  Term t2 = fx.G(fx.G(fx.G(fx.A())));
  Term c2 = compressChains({fx.g}, t2, fx.sig, log);
  CHECK(log.events.size() == 2);
  CHECK(c2->sym != c->children[0]->sym);
}

TEST_CASE("chain compression respects gamma") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.G(fx.G(fx.H(fx.H(fx.A()))));
  Term c = compressChains({fx.g}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "CHAIN g 2 -> g$2");
  // The h h run is left alone.
  CHECK(c->children[0]->sym == fx.h);
}

TEST_CASE("pair compression fuses across the partition") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.G(fx.H(fx.A()));
  Partition p{{fx.g}, {fx.h}};
  Term c = compressPairs(p, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "PAIR g h -> p$1");
  CHECK(termSize(c) == 2);
  CHECK(termEq(decompress(log, c), t));

  // Both occurrences in g(h(g(h(a)))) fuse in one parallel pass.
  Term t2 = fx.G(fx.H(fx.G(fx.H(fx.A()))));
  Term c2 = compressPairs(p, t2, fx.sig, log);
  CHECK(log.events.size() == 1);  // interned: same pair, same letter
  CHECK(termSize(c2) == 3);
  CHECK(termEq(decompress(log, c2), t2));
}

TEST_CASE("pair compression is power-aware") {
  Fix fx;
  Partition p{{fx.g}, {fx.h}};

  CompressionLog log(fx.sig);
  Term t = mkPower(fx.g, 3, fx.H(fx.A()));
  Term c = compressPairs(p, t, fx.sig, log);
  CHECK(c->sym == fx.g);
  CHECK(c->exp == 2);  // one g was consumed by the fuse
  CHECK(termEq(decompress(log, c), expandPowers(t)));

  Term t2 = fx.G(mkPower(fx.h, 2, fx.A()));
  Term c2 = compressPairs(p, t2, fx.sig, log);
  CHECK(termEq(decompress(log, c2), expandPowers(t2)));
  CHECK(c2->children[0]->sym == fx.h);  // h^1 remains below the fused letter

  Term t3 = mkPower(fx.g, 2, mkPower(fx.h, 2, fx.A()));
  Term c3 = compressPairs(p, t3, fx.sig, log);
  CHECK(termEq(decompress(log, c3), expandPowers(t3)));
}

TEST_CASE("pair compression rejects overlapping sides") {
  Fix fx;
  CompressionLog log(fx.sig);
  CHECK_THROWS_AS(
      compressPairs(Partition{{fx.g}, {fx.g, fx.h}}, fx.A(), fx.sig, log),
      PreconditionViolated);
}

TEST_CASE("leaf compression absorbs constant children") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.F(fx.A(), fx.B());
  Term c = compressLeaves({fx.f, fx.g}, {fx.a, fx.b}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "LEAF f [1:a,2:b] -> l$1");
  CHECK(termSize(c) == 1);
  CHECK(fx.sig.arity(c->sym) == 0);
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("leaf compression keeps non-constant children") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = fx.F(fx.A(), fx.G(fx.B()));
  Term c = compressLeaves({fx.f, fx.g}, {fx.a, fx.b}, t, fx.sig, log);
  // g absorbs b, then f absorbs a and keeps the (rewritten) second child.
  REQUIRE(log.events.size() == 2);
  CHECK(formatEvent(log.events[0], fx.sig) == "LEAF g [1:b] -> l$1");
  CHECK(formatEvent(log.events[1], fx.sig) == "LEAF f [1:a] -> l$2");
  CHECK(termSize(c) == 2);
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("leaf compression does not re-examine fresh letters") {
  Fix fx;
  CompressionLog log(fx.sig);
  // g(a) collapses to a fresh constant, but f classifies its children by
  // their labels before the pass, so it only absorbs b.
  Term t = fx.F(fx.G(fx.A()), fx.B());
  Term c = compressLeaves({fx.f, fx.g}, {fx.a, fx.b}, t, fx.sig, log);
  REQUIRE(log.events.size() == 2);
  CHECK(formatEvent(log.events[1], fx.sig) == "LEAF f [2:b] -> l$2");
  CHECK(termSize(c) == 2);  // l$2(l$1)
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("leaf compression under a power") {
  Fix fx;
  CompressionLog log(fx.sig);
  Term t = mkPower(fx.g, 3, fx.A());
  Term c = compressLeaves({fx.g}, {fx.a}, t, fx.sig, log);
  REQUIRE(log.events.size() == 1);
  CHECK(formatEvent(log.events[0], fx.sig) == "LEAF g [1:a] -> l$1");
  CHECK(c->sym == fx.g);
  CHECK(c->exp == 2);
  CHECK(termEq(decompress(log, c), expandPowers(t)));
}

TEST_CASE("leaf compression validates its letter sets") {
  Fix fx;
  CompressionLog log(fx.sig);
  CHECK_THROWS_AS(compressLeaves({fx.a}, {fx.b}, fx.A(), fx.sig, log),
                  PreconditionViolated);
  CHECK_THROWS_AS(compressLeaves({fx.f}, {fx.g}, fx.A(), fx.sig, log),
                  PreconditionViolated);
}

TEST_CASE("letter set helpers") {
  Fix fx;
  Term t = fx.F(fx.G(fx.A()), fx.H(fx.H(fx.B())));
  CHECK(unaryLettersIn(t, fx.sig) == std::set<SymbolId>{fx.g, fx.h});
  CHECK(lettersOfArityAtLeast(t, fx.sig, 1) ==
        std::set<SymbolId>{fx.f, fx.g, fx.h});
  CHECK(lettersOfArityAtLeast(t, fx.sig, 2) == std::set<SymbolId>{fx.f});
  CHECK(constantsIn(t, fx.sig) == std::set<SymbolId>{fx.a, fx.b});
}

TEST_CASE("chain profile and coverage") {
  Fix fx;
  Term t = fx.G(fx.H(fx.G(fx.H(fx.A()))));
  auto [n1, chains] = chainProfile({t});
  CHECK(n1 == 4);
  CHECK(chains == 1);

  CHECK(pairCoverage(Partition{{fx.g}, {fx.h}}, {t}) == 2);
  CHECK(pairCoverage(Partition{{fx.h}, {fx.g}}, {t}) == 1);
  CHECK(pairCoverage(Partition{{fx.g, fx.h}, {}}, {t}) == 0);

  // Power nodes count with multiplicity in n1 but only seam pairs qualify.
  Term t2 = mkPower(fx.g, 3, fx.H(fx.A()));
  auto [n1b, chainsb] = chainProfile({t2});
  CHECK(n1b == 4);
  CHECK(chainsb == 1);
  CHECK(pairCoverage(Partition{{fx.g}, {fx.h}}, {t2}) == 1);
}

TEST_CASE("findGoodPartition meets the coverage bound") {
  Fix fx;
  Term t = fx.G(fx.H(fx.G(fx.H(fx.A()))));
  Partition p = findGoodPartition(t, fx.sig);
  CHECK(pairCoverage(p, {t}) == 2);  // exhaustive search finds the optimum

  std::mt19937 rng(20240817);
  for (int round = 0; round < 30; ++round) {
    Term r = randomTerm(fx, rng, 7);
    CompressionLog log(fx.sig);
    Term cc = compressChains(unaryLettersIn(r, fx.sig), r, fx.sig, log);
    auto [n1, chains] = chainProfile({cc});
    Partition q = findGoodPartition(cc, fx.sig);
    CHECK(4 * pairCoverage(q, {cc}) >= n1 - chains);
  }
}

TEST_CASE("findGoodPartition beyond the exhaustive range") {
  // 16 unary letters forces the sampling + greedy path.
  Signature sig;
  SymbolId cst = sig.add("a", 0);
  std::vector<SymbolId> us;
  for (int i = 0; i < 16; ++i)
    us.push_back(sig.add("u" + std::to_string(i), 1));
  std::mt19937 rng(7);
  Term t = mkLetter(cst);
  for (int i = 0; i < 400; ++i)
    t = mkLetter(us[rng() % us.size()], {t});
  CompressionLog log(sig);
  Term cc = compressChains(unaryLettersIn(t, sig), t, sig, log);
  auto [n1, chains] = chainProfile({cc});
  Partition p = findGoodPartition(cc, sig);
  CHECK(4 * pairCoverage(p, {cc}) >= n1 - chains);

  // Same input, same partition: the sampled path is deterministic.
  Partition p2 = findGoodPartition(cc, sig);
  CHECK(p.upper == p2.upper);
  CHECK(p.lower == p2.lower);
}

TEST_CASE("compressTree round trips through the log") {
  Fix fx;
  std::mt19937 rng(99);
  for (int round = 0; round < 40; ++round) {
    Term t = randomTerm(fx, rng, 7);
    Signature sig = fx.sig;  // per-round alphabet copy
    CompressionLog log(sig);
    Term c = compressTree(t, sig, log);
    CHECK(termSize(c) <= termSize(t));
    CHECK(wellFormed(c, sig));
    CHECK(termEq(decompress(log, c), t));
  }
}

TEST_CASE("repeated rounds compress to a single constant") {
  Fix fx;
  std::mt19937 rng(123);
  Term t = randomTerm(fx, rng, 8);
  Signature sig = fx.sig;
  CompressionLog log(sig);
  Term c = t;
  int rounds = 0;
  while (termSize(c) > 1 && rounds < 200) {
    Term next = compressTree(c, sig, log);
    if (termSize(next) == termSize(c) && termEq(next, c)) break;
    c = next;
    ++rounds;
  }
  CHECK(termSize(c) == 1);
  CHECK(termEq(decompress(log, c), t));
}

TEST_CASE("decompress rejects letters outside the log") {
  Fix fx;
  Signature sig = fx.sig;
  CompressionLog log(sig);
  SymbolId stray = sig.fresh(1, Origin::FreshPair);  // minted past the log
  CHECK_THROWS_AS(decompress(log, mkLetter(stray, {fx.A()})), UnknownLetter);
}
