#pragma once

#include <string>

#include "recomp/term.hpp"

namespace recomp {

// Textual term syntax: `name`, `name(t1,...,tm)`, `_` for the hole, and
// `name^3(t)` for an exponent-carrying unary node. Fresh letters keep their
// `$`-names (`p$7`).
struct TermFormat {
  bool allowHole = false;   // `_` (substitution files, printed contexts)
  bool allowPower = false;  // `name^3(...)` (traces, debugging)
};

std::string printTerm(const Term& t, const Signature& sig, const NamePool& vars,
                      const NamePool& cvars);

// Parses a term. Names resolve against the context-variable pool, then the
// variable pool, then the signature; unknown names raise SyntaxError and
// wrong child counts raise ArityMismatch. line0 is added to reported line
// numbers so callers can report file positions.
Term parseTerm(const std::string& text, const Signature& sig, const NamePool& vars,
               const NamePool& cvars, TermFormat fmt = {}, int line0 = 1);

}  // namespace recomp
