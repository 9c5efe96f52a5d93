#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "recomp/compress.hpp"
#include "recomp/equation.hpp"

namespace recomp {

// A guess sheet fixes every nondeterministic choice of one uncrossing pass.
// Sheets are plain data so the solver can enumerate, serialize and replay
// them, and so a sheet can be derived from a known solution in tests.

struct CVarGuess {
  std::optional<SymbolId> lastLetter;   // guessed last letter of the image
  bool popDownLast = false;             // pop it below X
  std::optional<SymbolId> firstLetter;  // guessed first letter of the image
  bool popUpFirst = false;              // pop it above X
  bool emptyAfter = false;              // image becomes the bare hole; remove X
  std::optional<std::uint64_t> prefixExp;  // chain pass: first-letter run, >= 1
  std::optional<std::uint64_t> suffixExp;  // chain pass: last-letter run, >= 1
  std::optional<int> holePosition;  // parent-leaf pass: 1-based child of f
};

struct VarGuess {
  std::optional<SymbolId> firstLetter;     // guessed root letter of the image
  std::optional<SymbolId> isConstant;      // image is exactly this constant
  std::optional<std::uint64_t> prefixExp;  // chain pass: root run, >= 1
};

struct GuessSheet {
  Partition partition;  // for pop(); ignored by the other passes
  std::map<CVarId, CVarGuess> perCvar;
  std::map<VarId, VarGuess> perVar;
  // Constant guesses for variables that will only be minted mid-pass by a
  // parent-leaf pop-down, keyed by the name the mint will produce.
  std::map<std::string, SymbolId> newVarConst;
  std::uint64_t exponentCap = std::uint64_t{1} << 16;
};

// Reconstruction events. Replaying them backward turns any substitution
// satisfying the output equation into one satisfying the input equation.
struct PrependToCvar {
  CVarId cvar;
  Term chunk;  // ground context; occurrences X(t) became chunk[X(t)]
};
struct AppendToCvar {
  CVarId cvar;
  Term chunk;  // ground context; occurrences X(t) became X(chunk[t])
};
struct PrependToVar {
  VarId var;
  Term chunk;  // ground context; occurrences x became chunk[x]
};
struct RemoveEmptyCvar {
  CVarId cvar;  // occurrences X(t) became t
};
struct SubstVarConst {
  VarId var;
  SymbolId letter;  // occurrences x became the constant
};
struct GenPopDown {
  CVarId cvar;
  SymbolId letter;  // f, arity m
  int holePosition;  // 1-based
  std::vector<VarId> introduced;  // the m-1 fresh variables, in child order
};

using ReconstructionEvent = std::variant<PrependToCvar, AppendToCvar, PrependToVar,
                                         RemoveEmptyCvar, SubstVarConst, GenPopDown>;

// Partition pass: pop guessed last letters in p.upper below context
// variables, then guessed first letters in p.lower above context variables
// and variables, removing emptied context variables. Afterwards the
// partition has no crossing pairs with respect to the corresponding
// solution. Throws InconsistentGuess on a sheet that contradicts the rules.
Equation pop(const Partition& p, const Equation& eq, const GuessSheet& g,
             std::vector<ReconstructionEvent>& events);

// Chain pass: prepend guessed first-letter runs a^l (letters in gamma1) to
// variables and context variables, then append guessed last-letter runs b^r
// below context variables, removing emptied ones. Runs are stored as single
// exponent nodes. Throws ExponentOverCap when a guessed run exceeds the
// sheet's cap.
Equation prefSuff(const std::set<SymbolId>& gamma1, const Equation& eq,
                  const GuessSheet& g, std::vector<ReconstructionEvent>& events);

// Parent-leaf pass: substitute variables guessed to be constants in gamma0,
// then pop guessed last letters f in gammaGe1 below context variables that
// are applied to a gamma0 constant somewhere (minting fresh variables for
// the non-hole children of f), then substitute new variables guessed
// constant. Updates the ownership bookkeeping in eq.ownedVars.
Equation genPop(const std::set<SymbolId>& gammaGe1, const std::set<SymbolId>& gamma0,
                const Equation& eq, const GuessSheet& g,
                std::vector<ReconstructionEvent>& events);

// True iff some occurrence X(c) exists with c a constant in gamma0: the
// condition gating a parent-leaf pop-down.
bool appliedToConstant(const Equation& eq, CVarId cvar, const std::set<SymbolId>& gamma0);

// Inverts events in reverse order: prepended/appended chunks are glued back
// onto images, removed context variables become the bare hole again,
// substituted variables get their constant back, and parent-leaf chunks are
// rebuilt from the current images of the introduced variables.
Substitution replaySolutionBackward(const std::vector<ReconstructionEvent>& events,
                                    Substitution s);

// A sheet derived from a known solution, together with the solution of the
// transformed equation it induces (images stripped of whatever was popped).
struct GuidedGuess {
  GuessSheet sheet;
  Substitution after;
};

GuidedGuess derivePopGuess(const Equation& eq, const Substitution& s, const Partition& p);
GuidedGuess derivePrefSuffGuess(const Equation& eq, const Substitution& s,
                                const std::set<SymbolId>& gamma1, std::uint64_t cap);
GuidedGuess deriveGenPopGuess(const Equation& eq, const Substitution& s,
                              const std::set<SymbolId>& gammaGe1,
                              const std::set<SymbolId>& gamma0);

// Trace serialization: one line per guessed action, e.g. "X last f hole 1
// empty", "x const b", "X prefix a 3". parseGuessSheet resolves names
// against the equation's pools; a yet-unknown variable name may only carry a
// const guess (it lands in newVarConst).
std::vector<std::string> formatGuessSheet(const GuessSheet& g, const Equation& eq);
GuessSheet parseGuessSheet(const std::vector<std::string>& lines, const Equation& eq);

}  // namespace recomp
