#include "recomp/compress.hpp"

#include <algorithm>
#include <random>

namespace recomp {

SymbolId CompressionLog::internChain(Signature& sig, SymbolId letter,
                                     std::uint64_t length) {
  auto key = std::make_pair(letter, length);
  auto it = chainTable.find(key);
  if (it != chainTable.end()) return it->second;
  SymbolId id = sig.freshChain(letter, length);
  chainTable.emplace(key, id);
  events.push_back(ChainCollapse{letter, length, id});
  return id;
}

SymbolId CompressionLog::internPair(Signature& sig, SymbolId upper, SymbolId lower) {
  auto key = std::make_pair(upper, lower);
  auto it = pairTable.find(key);
  if (it != pairTable.end()) return it->second;
  SymbolId id = sig.fresh(1, Origin::FreshPair);
  pairTable.emplace(key, id);
  events.push_back(PairCollapse{upper, lower, id});
  return id;
}

SymbolId CompressionLog::internLeaf(
    Signature& sig, SymbolId parent,
    const std::vector<std::pair<int, SymbolId>>& absorbed) {
  auto key = std::make_pair(parent, absorbed);
  auto it = leafTable.find(key);
  if (it != leafTable.end()) return it->second;
  int arity = sig.arity(parent) - static_cast<int>(absorbed.size());
  SymbolId id = sig.fresh(arity, Origin::FreshLeaf);
  leafTable.emplace(key, id);
  events.push_back(LeafAbsorb{parent, absorbed, id});
  return id;
}

namespace {

bool isUnaryLetter(const Term& t, const Signature& sig) {
  return t->kind == NodeKind::Letter && sig.arity(t->sym) == 1;
}

Term chainRec(const std::set<SymbolId>& gamma1, const Term& t, Signature& sig,
              CompressionLog& log) {
  if (t->kind == NodeKind::Letter && isUnaryLetter(t, sig) &&
      gamma1.count(t->sym)) {
    // Collect the maximal run of this letter starting here. The run is only
    // entered from its top: a parent with the same letter would have
    // consumed this node already.
    SymbolId a = t->sym;
    std::uint64_t total = 0;
    Term cur = t;
    while (cur->kind == NodeKind::Letter && cur->sym == a) {
      total += cur->exp;
      cur = cur->children[0];
    }
    Term below = chainRec(gamma1, cur, sig, log);
    if (total >= 2) {
      SymbolId into = log.internChain(sig, a, total);
      return mkLetter(into, {std::move(below)});
    }
    return mkLetter(a, {std::move(below)});
  }
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& c : t->children) {
    Term r = chainRec(gamma1, c, sig, log);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

Term pairRec(const Partition& p, const Term& t, Signature& sig,
             CompressionLog& log) {
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  bool changed = false;
  for (const Term& c : t->children) {
    Term r = pairRec(p, c, sig, log);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  if (t->kind == NodeKind::Letter && isUnaryLetter(t, sig) &&
      p.upper.count(t->sym)) {
    // The child keeps its root label through its own rewrite: a lower-side
    // letter never acts as a parent, so classifying against the rewritten
    // child equals classifying against the original labels.
    const Term& orig = t->children[0];
    if (orig->kind == NodeKind::Letter && p.lower.count(orig->sym) &&
        isUnaryLetter(orig, sig)) {
      SymbolId into = log.internPair(sig, t->sym, orig->sym);
      Term& r = kids[0];
      Term tail = r->exp > 1 ? mkPower(r->sym, r->exp - 1, r->children[0])
                             : r->children[0];
      Term fused = mkLetter(into, {std::move(tail)});
      if (t->exp > 1) return mkPower(t->sym, t->exp - 1, std::move(fused));
      return fused;
    }
  }
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

Term leafRec(const std::set<SymbolId>& gammaGe1, const std::set<SymbolId>& gamma0,
             const Term& t, Signature& sig, CompressionLog& log) {
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  bool changed = false;
  for (const Term& c : t->children) {
    Term r = leafRec(gammaGe1, gamma0, c, sig, log);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  if (t->kind == NodeKind::Letter && gammaGe1.count(t->sym)) {
    // Absorption looks at the original child labels, so constants created by
    // this very pass are not re-absorbed.
    std::vector<std::pair<int, SymbolId>> absorbed;
    for (std::size_t i = 0; i < t->children.size(); ++i) {
      const Term& orig = t->children[i];
      if (orig->kind == NodeKind::Letter && orig->children.empty() &&
          gamma0.count(orig->sym))
        absorbed.emplace_back(static_cast<int>(i) + 1, orig->sym);
    }
    if (!absorbed.empty()) {
      if (t->exp > 1) {
        // Only the bottom letter of a power run touches the constant.
        SymbolId into = log.internLeaf(sig, t->sym, absorbed);
        return mkPower(t->sym, t->exp - 1, mkLetter(into));
      }
      SymbolId into = log.internLeaf(sig, t->sym, absorbed);
      std::vector<Term> rest;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        bool taken = false;
        for (const auto& [pos, sym] : absorbed)
          if (pos == static_cast<int>(i) + 1) taken = true;
        if (!taken) rest.push_back(kids[i]);
      }
      return mkLetter(into, std::move(rest));
    }
  }
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

void countPairs(const Term& t, const Signature& sig,
                std::map<std::pair<SymbolId, SymbolId>, std::uint64_t>& out) {
  if (isUnaryLetter(t, sig)) {
    const Term& c = t->children[0];
    if (isUnaryLetter(c, sig) && c->sym != t->sym) ++out[{t->sym, c->sym}];
  }
  for (const Term& c : t->children) countPairs(c, sig, out);
}

void chainProfileRec(const Term& t, const Signature& sig, bool parentUnary,
                     std::uint64_t& n1, std::uint64_t& chains) {
  bool unary = isUnaryLetter(t, sig);
  if (unary) {
    n1 += t->exp;
    if (!parentUnary) ++chains;
  }
  for (const Term& c : t->children) chainProfileRec(c, sig, unary, n1, chains);
}

std::uint64_t coverageOf(const Partition& p,
                         const std::map<std::pair<SymbolId, SymbolId>, std::uint64_t>& pairs) {
  std::uint64_t total = 0;
  for (const auto& [ab, n] : pairs)
    if (p.upper.count(ab.first) && p.lower.count(ab.second)) total += n;
  return total;
}

}  // namespace

Term compressChains(const std::set<SymbolId>& gamma1, const Term& t,
                    Signature& sig, CompressionLog& log) {
  return chainRec(gamma1, t, sig, log);
}

Term compressPairs(const Partition& p, const Term& t, Signature& sig,
                   CompressionLog& log) {
  for (SymbolId a : p.upper)
    if (p.lower.count(a))
      throw PreconditionViolated("partition sides overlap on " + sig.name(a));
  return pairRec(p, t, sig, log);
}

Term compressLeaves(const std::set<SymbolId>& gammaGe1,
                    const std::set<SymbolId>& gamma0, const Term& t,
                    Signature& sig, CompressionLog& log) {
  for (SymbolId f : gammaGe1)
    if (sig.arity(f) < 1)
      throw PreconditionViolated("non-constant set contains constant " + sig.name(f));
  for (SymbolId a : gamma0)
    if (sig.arity(a) != 0)
      throw PreconditionViolated("constant set contains non-constant " + sig.name(a));
  return leafRec(gammaGe1, gamma0, t, sig, log);
}

std::set<SymbolId> unaryLettersIn(const Term& t, const Signature& sig) {
  std::map<SymbolId, std::uint64_t> all;
  collectLetters(t, all);
  std::set<SymbolId> out;
  for (const auto& [sym, n] : all)
    if (sig.arity(sym) == 1) out.insert(sym);
  return out;
}

std::set<SymbolId> lettersOfArityAtLeast(const Term& t, const Signature& sig,
                                         int minArity) {
  std::map<SymbolId, std::uint64_t> all;
  collectLetters(t, all);
  std::set<SymbolId> out;
  for (const auto& [sym, n] : all)
    if (sig.arity(sym) >= minArity) out.insert(sym);
  return out;
}

std::set<SymbolId> constantsIn(const Term& t, const Signature& sig) {
  std::map<SymbolId, std::uint64_t> all;
  collectLetters(t, all);
  std::set<SymbolId> out;
  for (const auto& [sym, n] : all)
    if (sig.arity(sym) == 0) out.insert(sym);
  return out;
}

std::uint64_t pairCoverage(const Partition& p, const std::vector<Term>& ts) {
  // Exponent-carrying nodes are internally same-letter runs, so they never
  // contribute a two-letter occurrence except at their seam, which the
  // node-level walk already sees.
  std::uint64_t total = 0;
  for (const Term& t : ts) {
    struct Walk {
      const Partition& p;
      std::uint64_t n = 0;
      void go(const Term& t) {
        if (t->kind == NodeKind::Letter && t->children.size() == 1 &&
            p.upper.count(t->sym)) {
          const Term& c = t->children[0];
          if (c->kind == NodeKind::Letter && c->children.size() == 1 &&
              p.lower.count(c->sym) && c->sym != t->sym)
            ++n;
        }
        for (const Term& c : t->children) go(c);
      }
    } w{p};
    w.go(t);
    total += w.n;
  }
  return total;
}

std::pair<std::uint64_t, std::uint64_t> chainProfile(const std::vector<Term>& ts) {
  std::uint64_t n1 = 0, chains = 0;
  for (const Term& t : ts) {
    struct Walk {
      std::uint64_t n1 = 0, chains = 0;
      void go(const Term& t, bool parentUnary) {
        bool unary = t->kind == NodeKind::Letter && t->children.size() == 1;
        if (unary) {
          n1 += t->exp;
          if (!parentUnary) ++chains;
        }
        for (const Term& c : t->children) go(c, unary);
      }
    } w;
    w.go(t, false);
    n1 += w.n1;
    chains += w.chains;
  }
  return {n1, chains};
}

Partition findGoodPartition(const std::vector<Term>& ts, const Signature& sig) {
  std::map<std::pair<SymbolId, SymbolId>, std::uint64_t> pairs;
  for (const Term& t : ts) countPairs(t, sig, pairs);
  std::set<SymbolId> lettersSet;
  for (const Term& t : ts)
    for (SymbolId a : unaryLettersIn(t, sig)) lettersSet.insert(a);
  std::vector<SymbolId> letters(lettersSet.begin(), lettersSet.end());

  auto build = [&](std::uint64_t mask) {
    Partition p;
    for (std::size_t i = 0; i < letters.size(); ++i)
      (mask >> i & 1 ? p.upper : p.lower).insert(letters[i]);
    return p;
  };

  if (letters.size() <= 12) {
    Partition best = build(0);
    std::uint64_t bestCov = coverageOf(best, pairs);
    for (std::uint64_t mask = 1; mask < (1ull << letters.size()); ++mask) {
      Partition p = build(mask);
      std::uint64_t cov = coverageOf(p, pairs);
      if (cov > bestCov) {
        best = std::move(p);
        bestCov = cov;
      }
    }
    return best;
  }

  // Sampling plus greedy conditional-expectation derandomization; the greedy
  // pass alone already meets the (n1 - c)/4 average.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  Partition best;
  std::uint64_t bestCov = 0;
  bool haveBest = false;
  for (int draw = 0; draw < 1000; ++draw) {
    Partition p;
    for (SymbolId a : letters) (rng() & 1 ? p.upper : p.lower).insert(a);
    std::uint64_t cov = coverageOf(p, pairs);
    if (!haveBest || cov > bestCov) {
      best = std::move(p);
      bestCov = cov;
      haveBest = true;
    }
  }
  Partition greedy;
  for (SymbolId a : letters) {
    // Expected coverage if a goes up vs down, undecided letters at 1/2.
    auto expected = [&](bool aUpper) {
      auto pUpper = [&](SymbolId s) -> double {
        if (s == a) return aUpper ? 1.0 : 0.0;
        if (greedy.upper.count(s)) return 1.0;
        if (greedy.lower.count(s)) return 0.0;
        return 0.5;
      };
      double e = 0;
      for (const auto& [ab, n] : pairs)
        e += pUpper(ab.first) * (1.0 - pUpper(ab.second)) * static_cast<double>(n);
      return e;
    };
    (expected(true) >= expected(false) ? greedy.upper : greedy.lower).insert(a);
  }
  std::uint64_t greedyCov = coverageOf(greedy, pairs);
  return greedyCov > bestCov ? greedy : best;
}

Term compressTree(const Term& t, Signature& sig, CompressionLog& log,
                  const PartitionChooser& choosePartition) {
  Term t1 = compressChains(unaryLettersIn(t, sig), t, sig, log);
  Partition p = choosePartition(t1);
  Term t2 = compressPairs(p, t1, sig, log);
  Term t3 = compressLeaves(lettersOfArityAtLeast(t2, sig, 1), constantsIn(t2, sig),
                           t2, sig, log);
  return t3;
}

Term compressTree(const Term& t, Signature& sig, CompressionLog& log) {
  Signature* sigp = &sig;
  return compressTree(t, sig, log,
                      [sigp](const Term& u) { return findGoodPartition(u, *sigp); });
}

namespace {

Term rewriteLetters(const Term& t, SymbolId target,
                    const std::function<Term(const Term&)>& repl) {
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  bool changed = false;
  for (const Term& c : t->children) {
    Term r = rewriteLetters(c, target, repl);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  Term base = t;
  if (changed) {
    switch (t->kind) {
      case NodeKind::Letter:
        base = t->exp > 1 ? mkPower(t->sym, t->exp, kids[0])
                          : mkLetter(t->sym, kids);
        break;
      case NodeKind::CVar:
        base = mkCVar(t->sym, kids[0]);
        break;
      default:
        base = t;
        break;
    }
  }
  if (base->kind == NodeKind::Letter && base->sym == target) return repl(base);
  return base;
}

}  // namespace

Term decompress(const CompressionLog& log, const Term& t) {
  // Letters introduced by events; anything else must be initial alphabet.
  std::set<SymbolId> introduced;
  for (const CompressionEvent& ev : log.events)
    std::visit([&](const auto& e) { introduced.insert(e.into); }, ev);
  std::map<SymbolId, std::uint64_t> used;
  collectLetters(t, used);
  for (const auto& [sym, n] : used)
    if (sym >= log.initialLetterCount && !introduced.count(sym))
      throw UnknownLetter("letter id " + std::to_string(sym) +
                          " is neither initial nor introduced by the log");

  Term cur = expandPowers(t);  // replay yields a plain tree
  for (auto it = log.events.rbegin(); it != log.events.rend(); ++it) {
    if (const auto* ce = std::get_if<ChainCollapse>(&*it)) {
      cur = rewriteLetters(cur, ce->into, [&](const Term& node) {
        Term body = node->children[0];
        std::uint64_t count = ce->length * node->exp;
        for (std::uint64_t i = 0; i < count; ++i)
          body = mkLetter(ce->letter, {body});
        return body;
      });
    } else if (const auto* pe = std::get_if<PairCollapse>(&*it)) {
      cur = rewriteLetters(cur, pe->into, [&](const Term& node) {
        Term body = node->children[0];
        for (std::uint64_t i = 0; i < node->exp; ++i)
          body = mkLetter(pe->upper, {mkLetter(pe->lower, {body})});
        return body;
      });
    } else {
      const auto& le = std::get<LeafAbsorb>(*it);
      cur = rewriteLetters(cur, le.into, [&](const Term& node) {
        auto rebuild = [&](std::vector<Term> rest) {
          std::vector<Term> kids;
          std::size_t restIdx = 0;
          int arity = static_cast<int>(rest.size() + le.absorbed.size());
          for (int pos = 1; pos <= arity; ++pos) {
            bool isAbsorbed = false;
            for (const auto& [p, sym] : le.absorbed)
              if (p == pos) {
                kids.push_back(mkLetter(sym));
                isAbsorbed = true;
              }
            if (!isAbsorbed) kids.push_back(rest[restIdx++]);
          }
          return mkLetter(le.parent, std::move(kids));
        };
        if (node->exp > 1) {
          // exp > 1 forces into unary: one surviving child per copy.
          Term body = node->children[0];
          for (std::uint64_t i = 0; i < node->exp; ++i) body = rebuild({body});
          return body;
        }
        return rebuild(node->children);
      });
    }
  }
  return cur;
}

namespace {

std::vector<std::string> splitTokens(const std::string& line) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : line) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) toks.push_back(std::move(cur));
  return toks;
}

std::uint64_t parseCount(const std::string& tok, const std::string& line) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw InconsistentGuess("bad number '" + tok + "' in log line: " + line);
  return std::stoull(tok);
}

}  // namespace

CompressionEvent ingestEvent(const std::string& line, Signature& sig,
                             CompressionLog& log) {
  std::vector<std::string> toks = splitTokens(line);
  auto malformed = [&]() -> InconsistentGuess {
    return InconsistentGuess("malformed log line: " + line);
  };
  auto resolve = [&](const std::string& nm) -> SymbolId {
    auto id = sig.find(nm);
    if (!id) throw UnknownLetter("log line mentions unknown letter '" + nm + "'");
    return *id;
  };
  auto target = [&](const std::string& nm, int arity) -> SymbolId {
    if (sig.find(nm))
      throw InconsistentGuess("log reintroduces letter '" + nm + "'");
    return sig.add(nm, arity);
  };
  if (toks.size() >= 2 && toks[toks.size() - 2] != "->") throw malformed();

  if (toks.size() == 5 && toks[0] == "CHAIN") {
    SymbolId a = resolve(toks[1]);
    std::uint64_t len = parseCount(toks[2], line);
    if (sig.arity(a) != 1 || len < 2) throw malformed();
    auto key = std::make_pair(a, len);
    if (log.chainTable.count(key))
      throw InconsistentGuess("log collapses the same chain twice: " + line);
    SymbolId into = target(toks[4], 1);
    log.chainTable.emplace(key, into);
    log.events.push_back(ChainCollapse{a, len, into});
    return log.events.back();
  }
  if (toks.size() == 5 && toks[0] == "PAIR") {
    SymbolId up = resolve(toks[1]);
    SymbolId lo = resolve(toks[2]);
    if (sig.arity(up) != 1 || sig.arity(lo) != 1) throw malformed();
    auto key = std::make_pair(up, lo);
    if (log.pairTable.count(key))
      throw InconsistentGuess("log collapses the same pair twice: " + line);
    SymbolId into = target(toks[4], 1);
    log.pairTable.emplace(key, into);
    log.events.push_back(PairCollapse{up, lo, into});
    return log.events.back();
  }
  if (toks.size() == 5 && toks[0] == "LEAF") {
    SymbolId parent = resolve(toks[1]);
    const std::string& body = toks[2];
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') throw malformed();
    std::vector<std::pair<int, SymbolId>> absorbed;
    std::size_t at = 1;
    while (at < body.size() - 1) {
      std::size_t colon = body.find(':', at);
      std::size_t comma = body.find(',', at);
      if (comma == std::string::npos || comma > body.size() - 1) comma = body.size() - 1;
      if (colon == std::string::npos || colon > comma) throw malformed();
      std::uint64_t pos = parseCount(body.substr(at, colon - at), line);
      SymbolId c = resolve(body.substr(colon + 1, comma - colon - 1));
      if (pos < 1 || pos > static_cast<std::uint64_t>(sig.arity(parent))) throw malformed();
      if (!absorbed.empty() && absorbed.back().first >= static_cast<int>(pos))
        throw malformed();
      if (sig.arity(c) != 0) throw malformed();
      absorbed.push_back({static_cast<int>(pos), c});
      at = comma + 1;
    }
    if (absorbed.empty()) throw malformed();
    auto key = std::make_pair(parent, absorbed);
    if (log.leafTable.count(key))
      throw InconsistentGuess("log absorbs the same leaves twice: " + line);
    SymbolId into = target(toks[4], sig.arity(parent) - static_cast<int>(absorbed.size()));
    log.leafTable.emplace(key, into);
    log.events.push_back(LeafAbsorb{parent, absorbed, into});
    return log.events.back();
  }
  throw malformed();
}

std::string formatEvent(const CompressionEvent& ev, const Signature& sig) {
  if (const auto* ce = std::get_if<ChainCollapse>(&ev))
    return "CHAIN " + sig.name(ce->letter) + " " + std::to_string(ce->length) +
           " -> " + sig.name(ce->into);
  if (const auto* pe = std::get_if<PairCollapse>(&ev))
    return "PAIR " + sig.name(pe->upper) + " " + sig.name(pe->lower) + " -> " +
           sig.name(pe->into);
  const auto& le = std::get<LeafAbsorb>(ev);
  std::string s = "LEAF " + sig.name(le.parent) + " [";
  for (std::size_t i = 0; i < le.absorbed.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(le.absorbed[i].first) + ":" + sig.name(le.absorbed[i].second);
  }
  s += "] -> " + sig.name(le.into);
  return s;
}

}  // namespace recomp
