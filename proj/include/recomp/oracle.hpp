#pragma once

#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "recomp/equation.hpp"

namespace recomp {

// Brute-force ground truth. Everything here is deliberately naive: memoized
// size-indexed enumeration plus a filtered cartesian product. It shares no
// machinery with the solver so the two can check each other.

struct EnumBounds {
  std::uint64_t maxSolutionSize = 16;  // node count of the substituted lhs
  std::uint64_t maxPerImageSize = 8;   // node count per image (hole included)
  // Letters available to images. Left empty, oracleSolve fills it with
  // enumerationSignature(eq).
  Signature signature;
};

// The equation's signature plus one fresh letter per arity 0..maxArity. A
// size-minimal solution needs at most one letter per arity beyond those in
// the equation, so enumerating over this signature loses no solutions.
Signature enumerationSignature(const Equation& eq);

// Memoized size-indexed pools of ground terms and ground contexts (exactly
// one hole; the bare hole is the size-1 context). Buckets are sorted by
// termLess, so concatenating buckets yields size-then-lexicographic order.
class TermPool {
 public:
  explicit TermPool(Signature sig);  // throws NoConstant

  const std::vector<Term>& termsOfSize(std::uint64_t n);
  const std::vector<Term>& contextsOfSize(std::uint64_t n);
  std::vector<Term> termsUpTo(std::uint64_t maxSize);
  std::vector<Term> contextsUpTo(std::uint64_t maxSize);

  const Signature& signature() const { return sig_; }

 private:
  // deque keeps bucket references stable while later buckets are built
  Signature sig_;
  std::deque<std::vector<Term>> terms_;  // index = size; [0] unused
  std::deque<std::vector<Term>> contexts_;
};

// Every ground term (resp. ground context) over sig of size <= maxSize,
// exactly once, in size-then-lexicographic order.
std::vector<Term> enumerateGroundTerms(const Signature& sig, std::uint64_t maxSize);
std::vector<Term> enumerateGroundContexts(const Signature& sig, std::uint64_t maxSize);

struct OracleSolution {
  // Images for every occurring variable and context variable; members of
  // declaredEmpty map to the bare hole.
  Substitution substitution;
  std::set<CVarId> declaredEmpty;
  std::uint64_t size = 0;  // |S(lhs)|
};

struct OracleOutcome {
  // nullopt means bounded-unsat: no solution exists within the bounds.
  std::optional<OracleSolution> solution;
  EnumBounds bounds;  // the bounds actually used (signature filled in)
};

// Tries every subset of context variables as "empty", then every assignment
// of pool terms/contexts to the remaining variables, and returns the verified
// solution minimizing |S(lhs)| (ties broken lexicographically by image).
OracleOutcome oracleSolve(const Equation& eq, EnumBounds b);

std::optional<std::uint64_t> minimalSolutionSize(const Equation& eq, const EnumBounds& b);

}  // namespace recomp
