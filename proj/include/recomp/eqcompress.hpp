#pragma once

#include "recomp/compress.hpp"
#include "recomp/equation.hpp"

namespace recomp {

// The reserved arity-2 label "=" joining the two sides while a pass runs over
// the equation as one tree. Interned on first use; never occurs in a side.
SymbolId equationRootLetter(Signature& sig);

// Tree compression applied to the equation as a single tree. Variable and
// context-variable nodes act as barriers exactly as in the tree passes, the
// root is never rewritten, and fresh letters flow into the returned
// equation's signature and the shared log. Use only when the targeted
// letters have no crossing occurrences; these passes do not check that.
Equation pairCompNcr(const Partition& p, const Equation& eq, CompressionLog& log);
Equation chainCompNcr(const std::set<SymbolId>& gamma1, const Equation& eq,
                      CompressionLog& log);
Equation childCompNcr(std::set<SymbolId> gammaGe1, const std::set<SymbolId>& gamma0,
                      const Equation& eq, CompressionLog& log);

}  // namespace recomp
