#pragma once

#include <functional>
#include <set>
#include <variant>

#include "recomp/term.hpp"

namespace recomp {

// Split of the unary letters in play: pair compression replaces every
// two-letter chain a(b(.)) with a from `upper` and b from `lower` by a fresh
// letter. The two sides must be disjoint.
struct Partition {
  std::set<SymbolId> upper;  // parents (the paper's left part)
  std::set<SymbolId> lower;  // children (the right part)
};

// One replayable compression step. `into` letters appear in at most one
// event across a log; replaying events newest-first restores the original.
struct ChainCollapse {
  SymbolId letter;
  std::uint64_t length;  // >= 2
  SymbolId into;
};
struct PairCollapse {
  SymbolId upper, lower;
  SymbolId into;
};
struct LeafAbsorb {
  SymbolId parent;
  // 1-based child positions with the constant absorbed there, ascending.
  std::vector<std::pair<int, SymbolId>> absorbed;
  SymbolId into;
};
using CompressionEvent = std::variant<ChainCollapse, PairCollapse, LeafAbsorb>;

// Event list plus the interning tables that keep fresh letters canonical:
// the same (letter, length), (upper, lower) or (parent, absorbed tuple)
// always maps to the same fresh letter, so replay sees one event per letter.
struct CompressionLog {
  std::vector<CompressionEvent> events;
  std::size_t initialLetterCount = 0;  // snapshot of the alphabet size

  std::map<std::pair<SymbolId, std::uint64_t>, SymbolId> chainTable;
  std::map<std::pair<SymbolId, SymbolId>, SymbolId> pairTable;
  std::map<std::pair<SymbolId, std::vector<std::pair<int, SymbolId>>>, SymbolId>
      leafTable;

  explicit CompressionLog(const Signature& sig) : initialLetterCount(sig.size()) {}
  CompressionLog() = default;

  SymbolId internChain(Signature& sig, SymbolId letter, std::uint64_t length);
  SymbolId internPair(Signature& sig, SymbolId upper, SymbolId lower);
  SymbolId internLeaf(Signature& sig, SymbolId parent,
                      const std::vector<std::pair<int, SymbolId>>& absorbed);
};

// Replaces every maximal chain of >= 2 equal unary letters from `gamma1` by
// one fresh letter; exponent-carrying nodes contribute their exponent to the
// run length. Length-1 chains stay untouched.
Term compressChains(const std::set<SymbolId>& gamma1, const Term& t,
                    Signature& sig, CompressionLog& log);

// Replaces every a(b(.)) with a in upper, b in lower by a fresh letter.
// Classification is against the labels before the pass, so freshly created
// letters are not re-examined.
Term compressPairs(const Partition& p, const Term& t, Signature& sig,
                   CompressionLog& log);

// For every node labelled with a letter from gammaGe1 whose children include
// at least one constant from gamma0, absorbs exactly those constant children
// into a fresh letter of accordingly smaller arity. Children that are not
// gamma0 constants are kept; fresh letters are not re-examined.
Term compressLeaves(const std::set<SymbolId>& gammaGe1,
                    const std::set<SymbolId>& gamma0, const Term& t,
                    Signature& sig, CompressionLog& log);

using PartitionChooser = std::function<Partition(const Term&)>;

// One full compression round: chain compression over all unary letters of t,
// pair compression with the chosen partition, then leaf compression with the
// non-constants/constants of the intermediate tree.
Term compressTree(const Term& t, Signature& sig, CompressionLog& log,
                  const PartitionChooser& choosePartition);
Term compressTree(const Term& t, Signature& sig, CompressionLog& log);

// Unary letters occurring in t (carrier for partitions).
std::set<SymbolId> unaryLettersIn(const Term& t, const Signature& sig);
std::set<SymbolId> lettersOfArityAtLeast(const Term& t, const Signature& sig, int minArity);
std::set<SymbolId> constantsIn(const Term& t, const Signature& sig);

// Number of two-letter chain occurrences a(b(.)) with a from upper, b from
// lower (a != b), counted across all the given trees.
std::uint64_t pairCoverage(const Partition& p, const std::vector<Term>& ts);
// Unary node count and maximal-chain count; every maximal chain of length l
// contributes l-1 two-letter occurrences, so coverage totals n1 - c.
std::pair<std::uint64_t, std::uint64_t> chainProfile(const std::vector<Term>& ts);

// Picks a partition of the unary letters of the trees covering at least
// (n1 - c)/4 two-letter occurrences: exhaustively for <= 12 unary letters,
// otherwise the best of 1000 seeded random draws and a greedy
// conditional-expectation pass. Deterministic.
Partition findGoodPartition(const std::vector<Term>& ts, const Signature& sig);
inline Partition findGoodPartition(const Term& t, const Signature& sig) {
  return findGoodPartition(std::vector<Term>{t}, sig);
}

// Replays the log backwards, expanding every fresh letter introduced by an
// event and every exponent node; the result is a plain tree. Throws
// UnknownLetter if t mentions a letter that is neither from the initial
// alphabet nor introduced by an event.
Term decompress(const CompressionLog& log, const Term& t);

std::string formatEvent(const CompressionEvent& ev, const Signature& sig);

// Inverse of formatEvent: parses a log line, defines the target letter in
// sig and seeds the matching table, so a later pass reuses the recorded
// letter instead of minting its own. This is how a recorded log is replayed
// when the original interning order is not locally reproducible. Throws
// InconsistentGuess on malformed or contradictory lines and UnknownLetter
// on unresolvable source letters.
CompressionEvent ingestEvent(const std::string& line, Signature& sig,
                             CompressionLog& log);

}  // namespace recomp
