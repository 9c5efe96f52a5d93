#pragma once

#include <set>

#include "recomp/term.hpp"

namespace recomp {

// A context equation u = v. The pools double as the variable sets: every id
// below pool.size() is a known (context) variable; occurrence helpers tell
// which ones actually appear. ownedVars tracks, per context variable, the
// variables minted for it by generalized pops (the arity bookkeeping that
// bounds the variable count).
struct Equation {
  Term lhs, rhs;
  Signature sig;
  NamePool vars{"v"};
  NamePool cvars{"C"};
  std::map<CVarId, std::vector<VarId>> ownedVars;
};

struct EquationStats {
  std::uint64_t size = 0;   // termSize(lhs) + termSize(rhs)
  std::uint64_t n0 = 0;     // constant occurrences
  std::uint64_t n1 = 0;     // unary occurrences, exponents included
  std::uint64_t nGe2 = 0;   // arity >= 2 occurrences
  std::uint64_t varOcc = 0;
  std::uint64_t cvarOcc = 0;
  std::size_t distinctVars = 0;
  std::size_t distinctCVars = 0;
};

EquationStats stats(const Equation& eq);
inline std::uint64_t equationSize(const Equation& eq) {
  return termSize(eq.lhs) + termSize(eq.rhs);
}

std::set<SymbolId> equationLetters(const Equation& eq);
std::set<SymbolId> equationUnaryLetters(const Equation& eq);
std::set<SymbolId> equationConstants(const Equation& eq);
std::set<SymbolId> equationNonConstants(const Equation& eq);
std::map<VarId, std::uint64_t> varOccurrences(const Equation& eq);
std::map<CVarId, std::uint64_t> cvarOccurrences(const Equation& eq);

// Root letter of a ground term or context; nullopt for the bare hole.
std::optional<SymbolId> rootLetter(const Term& t);
// Label of the hole's parent in a ground context ("last letter"); nullopt
// for the empty context. Throws NotAContext unless t has exactly one hole.
std::optional<SymbolId> holeParentLetter(const Term& ctx);

// True iff s makes both sides equal as plain trees AND maps every context
// variable occurring in eq to a non-empty context. Exponents are expanded
// before comparison. Missing images propagate UndefinedVariable.
bool verifySolution(const Equation& eq, const Substitution& s);

// Equality check only: empty context images are fine here.
bool satisfies(const Equation& eq, const Substitution& s);

// Replaces X(t) by t throughout for every X in the set.
Equation removeEmptyCVars(const Equation& eq, const std::set<CVarId>& empty);

// Certificate convention: images of declared-empty context variables must be
// the bare hole, the substitution must satisfy the equation as-is, and it
// must be a proper solution of the equation with those variables removed.
bool verifyCertificate(const Equation& eq, const Substitution& s,
                       const std::set<CVarId>& declaredEmpty);

// Extends the signature with one fresh letter per arity 1..maxArity that has
// no letter yet. Throws NoConstant when the signature cannot build any
// ground term at all.
void normalizeSignature(Equation& eq);

// Shrinks a solution: per arity, merges all letters absent from the equation
// into one of them, then splices out the remaining absent unary letter
// wherever that empties no context-variable image. Throws NotASolution if s
// does not verify; the result verifies again.
Substitution simplifySolution(const Equation& eq, const Substitution& s);

// --- Crossing classification -------------------------------------------

enum class OccurrenceClass : std::uint8_t { Explicit, Implicit, Crossing };

// One parent/child adjacency in the substituted tree S(side), addressed by
// the child-index path from the root to the parent node.
struct AdjacencyOccurrence {
  int side = 0;  // 0 = lhs, 1 = rhs
  std::vector<int> path;
  OccurrenceClass cls = OccurrenceClass::Explicit;
};

// Classification of the two-letter pattern a(b(.)) under s: the tag route
// classifies every occurrence in S(u), S(v) by provenance (both letters from
// the equation text = Explicit, both from the same image occurrence =
// Implicit, otherwise Crossing); the operational route evaluates the
// first/last-letter conditions CP1-CP3 on the equation text.
struct PairReport {
  std::vector<AdjacencyOccurrence> occurrences;
  bool crossing = false;  // some occurrence is Crossing
  bool cp1 = false, cp2 = false, cp3 = false;
  std::vector<std::string> witnesses;
  bool operationalCrossing() const { return cp1 || cp2 || cp3; }
};
PairReport classifyPairOccurrences(const Equation& eq, const Substitution& s,
                                   SymbolId a, SymbolId b);

// Crossing chains of a unary letter a: the tag route checks a-over-a
// adjacencies, the operational route the conditions CC1-CC3.
struct ChainReport {
  bool crossing = false;
  bool cc1 = false, cc2 = false, cc3 = false;
  std::vector<std::string> witnesses;
  bool operationalCrossing() const { return cc1 || cc2 || cc3; }
};
ChainReport classifyChain(const Equation& eq, const Substitution& s, SymbolId a);

// Crossing father-leaf pairs (f, a) with f of arity >= 1 and a constant:
// tag route checks f-nodes with a constant son a, operational route the
// conditions CFL1-CFL3.
struct ParentLeafReport {
  bool crossing = false;
  bool cfl1 = false, cfl2 = false, cfl3 = false;
  std::vector<std::string> witnesses;
  bool operationalCrossing() const { return cfl1 || cfl2 || cfl3; }
};
ParentLeafReport classifyParentLeaf(const Equation& eq, const Substitution& s,
                                    SymbolId f, SymbolId a);

}  // namespace recomp
