#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recomp/compress.hpp"
#include "recomp/equation.hpp"
#include "recomp/uncross.hpp"

namespace recomp {

// Search limits. All knobs must be positive; maxEquationSize == 0 means
// "sizeConstantC * |eq| * maxArity, taken from the input equation".
struct Limits {
  int maxPhases = 40;
  std::uint64_t maxEquationSize = 0;
  std::uint64_t sizeConstantC = 100;
  std::uint64_t exponentCap = std::uint64_t{1} << 16;
  std::uint64_t maxNodes = 400000;
  std::uint64_t randomSeed = 0;  // reserved for sampled partition search
  bool checkInvariants = true;
};

enum class Outcome : std::uint8_t { Sat, Unsat, Unknown };

// Payload of a Sat verdict. substitution is a verified certificate for the
// input equation: declared-empty context variables map to the bare hole and
// the rest to non-empty contexts / ground terms (powers expanded).
// grammarImages gives the same images over the final compressed alphabet
// (finalSig carries the names) and grammar the rules to expand them; trace
// replays the successful branch.
struct SatCertificate {
  Substitution substitution;
  std::set<CVarId> declaredEmpty;
  Substitution grammarImages;
  CompressionLog grammar;
  Signature finalSig;
  std::vector<std::string> trace;
};

struct SearchStats {
  std::uint64_t nodes = 0;
  std::uint64_t maxEquationSeen = 0;
  int satPhases = 0;  // full phases entered on the reported branch
};

struct Verdict {
  Outcome outcome = Outcome::Unknown;
  std::optional<SatCertificate> certificate;  // Sat only
  std::string limitFired;                     // Unknown only
  SearchStats stats;
};

// Decides an equation whose sides are single nodes: equal constants,
// constant vs. constant, variable vs. constant, variable vs. variable.
// Throws PreconditionViolated when a side has more than one node.
Verdict trivialSolve(const Equation& eq);

// Bounded depth-first search over guess sheets: guesses a set of initially
// empty context variables, then runs phases of two identical subphases
// (chain pops + chain compression, a guessed partition with pops + pair
// compression, constant/parent pops + leaf absorption) until both sides are
// trivial. Sat carries a verified certificate. Unsat is only reported when
// every branch was exhausted and no limit or enumeration bound clipped the
// search; otherwise Unknown names the first limit that fired.
Verdict solve(const Equation& eq0, const Limits& limits);

// Re-runs one recorded branch from a certificate trace: same stage cadence,
// sheets parsed instead of enumerated, compression events checked against
// the recorded lines. Throws InconsistentGuess when the trace diverges or
// ends before the equation closes.
Verdict replaySolve(const Equation& eq0, const Limits& limits,
                    const std::vector<std::string>& trace);

// One guess point of the search, with the letter sets the pass will use.
// For Pop the partition must be filled in; for GenPop the caller provides
// gammaGe1/gamma0 (including any letters reserved for images).
enum class StageKind : std::uint8_t { PrefSuff, Pop, GenPop };
struct Stage {
  StageKind kind = StageKind::PrefSuff;
  std::set<SymbolId> gamma1;  // PrefSuff: unary letters in scope
  Partition partition;        // Pop
  std::set<SymbolId> gammaGe1, gamma0;  // GenPop
};

// Materializes every guess sheet the search would try at this stage, in
// search order: the all-empty sheet first, then letters by interned order
// with exponents ascending and hole positions ascending, each action without
// and with the emptiness flag. Pops are only offered where the equation has
// an adjacency that could make the guessed pattern crossing. Throws
// PreconditionViolated if the sheet space is too large to materialize.
std::vector<GuessSheet> enumerateGuessSheets(const Equation& eq, const Stage& st,
                                             const Limits& limits);

// Sound unsatisfiability test by counting: for every letter (and for node
// counts) the occurrences on both sides must be reconcilable by some
// assignment of per-image counts. True means the equation has no solution.
bool arithmeticallyInfeasible(const Equation& eq);

// Runs the solver's stage pipeline along the branch dictated by a known
// solution instead of searching, carrying the solution through every pass.
// Reports the solution size at each phase boundary and the largest equation
// seen; the verdict is the reconstructed certificate (it must come out Sat,
// anything else is an InvariantViolation).
struct GuidedReport {
  Verdict verdict;
  std::vector<std::uint64_t> solutionSizes;
  std::uint64_t maxEquationSize = 0;
  int phases = 0;
};
GuidedReport solveGuided(const Equation& eq0, const Substitution& s0,
                         const std::set<CVarId>& declaredEmpty, const Limits& limits);

}  // namespace recomp
