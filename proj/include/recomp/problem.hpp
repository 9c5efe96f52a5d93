#pragma once

#include <set>
#include <string>
#include <vector>

#include "recomp/equation.hpp"

namespace recomp {

// Problem files are line-oriented:
//   sig NAME/ARITY ...
//   var NAME ...
//   cvar NAME ...
//   eq TERM = TERM
// Blank lines and lines starting with # are skipped; names must be distinct
// across the three namespaces. The signature is normalized on load (missing
// arities get one spare letter); a signature without a constant is rejected.
Equation parseProblem(const std::string& text);

// Canonical rendering; parseProblem(printProblem(eq)) reproduces eq.
std::string printProblem(const Equation& eq);

// Substitution files hold one `NAME := TERM` line per image. The hole `_`
// is allowed here: context-variable images carry exactly one, and a bare
// `_` declares the context variable empty.
struct SubstitutionFile {
  Substitution substitution;
  std::set<CVarId> declaredEmpty;
};

SubstitutionFile parseSubstitutionFile(const std::string& text, const Equation& eq);

// One `NAME := TERM` line per image, context variables first.
std::string printSubstitutionLines(const Equation& eq, const Substitution& s);

// Parses a ground term over an unknown alphabet: every name's arity is
// inferred from its child count and must stay consistent. Used by the
// stand-alone compressor, which has no declarations to read.
Term parseGroundTerm(const std::string& text, Signature& sig);

// Deterministic corpus of small problem files: a fixed seed yields
// byte-identical texts. Instances stay within the desk-scale envelope
// (<= 3 letters of arity <= 2, <= 2 variables, <= 2 context variables,
// equation size <= 7); roughly half are built from a planted solution.
struct CorpusParams {
  std::uint64_t seed = 1;
  int count = 500;
};
struct CorpusItem {
  std::string name;  // e.g. "0001.eq"
  std::string text;
};
std::vector<CorpusItem> generateCorpus(const CorpusParams& params);

}  // namespace recomp
