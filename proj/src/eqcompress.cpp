#include "recomp/eqcompress.hpp"

namespace recomp {

SymbolId equationRootLetter(Signature& sig) {
  if (auto id = sig.find("=")) {
    if (sig.arity(*id) != 2)
      throw PreconditionViolated("reserved letter '=' exists with arity " +
                                 std::to_string(sig.arity(*id)));
    return *id;
  }
  return sig.add("=", 2);
}

namespace {

// Runs one tree pass over =(lhs, rhs) and splits the result back. The shared
// interning tables make the two sides agree on every fresh letter.
template <typename Pass>
Equation onEquationTree(const Equation& eq, Pass&& pass) {
  Equation out = eq;
  SymbolId root = equationRootLetter(out.sig);
  Term tree = mkLetter(root, {eq.lhs, eq.rhs});
  Term done = pass(tree, out.sig, root);
  out.lhs = done->children[0];
  out.rhs = done->children[1];
  return out;
}

}  // namespace

Equation pairCompNcr(const Partition& p, const Equation& eq, CompressionLog& log) {
  // The root has arity 2, so the unary-only pair rule skips it by itself.
  return onEquationTree(eq, [&](const Term& t, Signature& sig, SymbolId) {
    return compressPairs(p, t, sig, log);
  });
}

Equation chainCompNcr(const std::set<SymbolId>& gamma1, const Equation& eq,
                      CompressionLog& log) {
  return onEquationTree(eq, [&](const Term& t, Signature& sig, SymbolId) {
    return compressChains(gamma1, t, sig, log);
  });
}

Equation childCompNcr(std::set<SymbolId> gammaGe1, const std::set<SymbolId>& gamma0,
                      const Equation& eq, CompressionLog& log) {
  // Unlike the unary passes, absorption would accept the arity-2 root as a
  // parent, so it is excluded here explicitly.
  return onEquationTree(eq, [&](const Term& t, Signature& sig, SymbolId root) {
    gammaGe1.erase(root);
    return compressLeaves(gammaGe1, gamma0, t, sig, log);
  });
}

}  // namespace recomp
