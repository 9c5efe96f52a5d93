#include "recomp/uncross.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>
#include <string>

#include "recomp/errors.hpp"

namespace recomp {

namespace {

// Rewrites every occurrence of the context variable: fn gets the (already
// rewritten) argument and returns the replacement subtree.
Term mapCVarOcc(const Term& t, CVarId cv, const std::function<Term(const Term&)>& fn) {
  if (!(t->flags & kHasCVar)) return t;
  if (t->kind == NodeKind::CVar) {
    Term arg = mapCVarOcc(t->children[0], cv, fn);
    if (t->sym == cv) return fn(arg);
    return arg == t->children[0] ? t : mkCVar(t->sym, arg);
  }
  // only letter nodes remain: vars and holes carry no context variable
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& k : t->children) {
    Term nk = mapCVarOcc(k, cv, fn);
    changed |= nk != k;
    kids.push_back(std::move(nk));
  }
  if (!changed) return t;
  if (t->exp > 1) return mkPower(t->sym, t->exp, kids[0]);
  return mkLetter(t->sym, std::move(kids));
}

Term mapVarOcc(const Term& t, VarId v, const Term& repl) {
  if (!(t->flags & kHasVar)) return t;
  if (t->kind == NodeKind::Var) return t->sym == v ? repl : t;
  if (t->kind == NodeKind::CVar) {
    Term arg = mapVarOcc(t->children[0], v, repl);
    return arg == t->children[0] ? t : mkCVar(t->sym, arg);
  }
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& k : t->children) {
    Term nk = mapVarOcc(k, v, repl);
    changed |= nk != k;
    kids.push_back(std::move(nk));
  }
  if (!changed) return t;
  if (t->exp > 1) return mkPower(t->sym, t->exp, kids[0]);
  return mkLetter(t->sym, std::move(kids));
}

bool cvarOccurs(const Equation& e, CVarId cv) {
  return countCVarOccurrences(e.lhs, cv) + countCVarOccurrences(e.rhs, cv) > 0;
}
bool varOccurs(const Equation& e, VarId v) {
  return countVarOccurrences(e.lhs, v) + countVarOccurrences(e.rhs, v) > 0;
}

bool isConstantNode(const Term& t) {
  return t->kind == NodeKind::Letter && t->children.empty();
}

void requireUnary(const Signature& sig, SymbolId a, const char* what) {
  if (a >= sig.size()) throw InconsistentGuess(std::string(what) + ": unknown letter id");
  if (sig.arity(a) != 1)
    throw InconsistentGuess(std::string(what) + " needs a unary letter, got " + sig.name(a) +
                            "/" + std::to_string(sig.arity(a)));
}

void requireKnownIds(const Equation& eq, const GuessSheet& g, bool varsToo) {
  for (const auto& [cv, cg] : g.perCvar) {
    (void)cg;
    if (cv >= eq.cvars.size()) throw InconsistentGuess("guess for unknown context variable");
  }
  if (!varsToo) return;
  for (const auto& [v, vg] : g.perVar) {
    (void)vg;
    if (v >= eq.vars.size()) throw InconsistentGuess("guess for unknown variable");
  }
}

Term unaryChunk(SymbolId a) { return mkLetter(a, {mkHole()}); }
Term runChunk(SymbolId a, std::uint64_t e) {
  return e == 1 ? unaryChunk(a) : mkPower(a, e, mkHole());
}

void applyCvar(Equation& out, CVarId cv, const std::function<Term(const Term&)>& fn) {
  out.lhs = mapCVarOcc(out.lhs, cv, fn);
  out.rhs = mapCVarOcc(out.rhs, cv, fn);
}

void disownEverywhere(Equation& out, VarId v) {
  for (auto& [cv, owned] : out.ownedVars) {
    (void)cv;
    owned.erase(std::remove(owned.begin(), owned.end(), v), owned.end());
  }
}

void substConst(Equation& out, VarId v, SymbolId c, std::vector<ReconstructionEvent>& events) {
  Term repl = mkLetter(c);
  out.lhs = mapVarOcc(out.lhs, v, repl);
  out.rhs = mapVarOcc(out.rhs, v, repl);
  events.push_back(SubstVarConst{v, c});
  disownEverywhere(out, v);
}

// Shared tail of pop/prefSuff: splice out the variables guessed empty.
void removeGuessedEmpties(Equation& out, const GuessSheet& g, const std::set<CVarId>& popped,
                          std::vector<ReconstructionEvent>& events) {
  for (const auto& [cv, cg] : g.perCvar) {
    if (!cg.emptyAfter) continue;
    if (!popped.count(cv))
      throw InconsistentGuess("emptyAfter without a pop for " + out.cvars.name(cv));
    applyCvar(out, cv, [](const Term& arg) { return arg; });
    out.ownedVars.erase(cv);
    events.push_back(RemoveEmptyCvar{cv});
  }
}

}  // namespace

bool appliedToConstant(const Equation& eq, CVarId cvar, const std::set<SymbolId>& gamma0) {
  std::function<bool(const Term&)> scan = [&](const Term& t) -> bool {
    if (!(t->flags & kHasCVar)) return false;
    if (t->kind == NodeKind::CVar) {
      const Term& arg = t->children[0];
      if (t->sym == cvar && isConstantNode(arg) && gamma0.count(arg->sym)) return true;
      return scan(arg);
    }
    for (const Term& k : t->children)
      if (scan(k)) return true;
    return false;
  };
  return scan(eq.lhs) || scan(eq.rhs);
}

Equation pop(const Partition& p, const Equation& eq, const GuessSheet& g,
             std::vector<ReconstructionEvent>& events) {
  for (SymbolId a : p.upper)
    if (p.lower.count(a)) throw PreconditionViolated("partition sides overlap");
  requireKnownIds(eq, g, true);
  Equation out = eq;
  std::set<CVarId> popped;

  // guessed last letters from the upper class go below their variable
  for (const auto& [cv, cg] : g.perCvar) {
    bool memb = cg.lastLetter && p.upper.count(*cg.lastLetter) != 0;
    if (cg.popDownLast != memb)
      throw InconsistentGuess("last-letter guess and pop-down flag disagree for " +
                              out.cvars.name(cv));
    if (!memb) continue;
    if (!cvarOccurs(out, cv))
      throw InconsistentGuess("pop for non-occurring " + out.cvars.name(cv));
    requireUnary(out.sig, *cg.lastLetter, "pop-down");
    Term chunk = unaryChunk(*cg.lastLetter);
    applyCvar(out, cv, [&](const Term& arg) { return mkCVar(cv, composeContext(chunk, arg)); });
    events.push_back(AppendToCvar{cv, chunk});
    popped.insert(cv);
  }

  // guessed first letters from the lower class go above
  for (const auto& [cv, cg] : g.perCvar) {
    bool memb = cg.firstLetter && p.lower.count(*cg.firstLetter) != 0;
    if (cg.popUpFirst != memb)
      throw InconsistentGuess("first-letter guess and pop-up flag disagree for " +
                              out.cvars.name(cv));
    if (!memb) continue;
    if (!cvarOccurs(out, cv))
      throw InconsistentGuess("pop for non-occurring " + out.cvars.name(cv));
    requireUnary(out.sig, *cg.firstLetter, "pop-up");
    Term chunk = unaryChunk(*cg.firstLetter);
    applyCvar(out, cv, [&](const Term& arg) { return composeContext(chunk, mkCVar(cv, arg)); });
    events.push_back(PrependToCvar{cv, chunk});
    popped.insert(cv);
  }
  for (const auto& [v, vg] : g.perVar) {
    if (!vg.firstLetter || !p.lower.count(*vg.firstLetter)) continue;
    if (!varOccurs(out, v)) throw InconsistentGuess("pop for non-occurring " + out.vars.name(v));
    requireUnary(out.sig, *vg.firstLetter, "pop-up");
    Term chunk = unaryChunk(*vg.firstLetter);
    Term repl = composeContext(chunk, mkVar(v));
    out.lhs = mapVarOcc(out.lhs, v, repl);
    out.rhs = mapVarOcc(out.rhs, v, repl);
    events.push_back(PrependToVar{v, chunk});
  }

  removeGuessedEmpties(out, g, popped, events);
  return out;
}

Equation prefSuff(const std::set<SymbolId>& gamma1, const Equation& eq, const GuessSheet& g,
                  std::vector<ReconstructionEvent>& events) {
  for (SymbolId a : gamma1) {
    if (a >= eq.sig.size() || eq.sig.arity(a) != 1)
      throw PreconditionViolated("gamma1 must be unary letters of the signature");
  }
  requireKnownIds(eq, g, true);
  Equation out = eq;
  std::set<CVarId> popped;

  auto runOf = [&](const std::optional<std::uint64_t>& e, const std::string& who) {
    if (!e || *e == 0) throw InconsistentGuess("run guess needs an exponent >= 1 for " + who);
    if (*e > g.exponentCap)
      throw ExponentOverCap("guessed run " + std::to_string(*e) + " for " + who +
                            " exceeds cap " + std::to_string(g.exponentCap));
    return *e;
  };

  // first-letter runs are popped up, for variables too
  for (const auto& [cv, cg] : g.perCvar) {
    if (!cg.firstLetter || !gamma1.count(*cg.firstLetter)) continue;
    if (!cvarOccurs(out, cv))
      throw InconsistentGuess("pop for non-occurring " + out.cvars.name(cv));
    Term chunk = runChunk(*cg.firstLetter, runOf(cg.prefixExp, out.cvars.name(cv)));
    applyCvar(out, cv, [&](const Term& arg) { return composeContext(chunk, mkCVar(cv, arg)); });
    events.push_back(PrependToCvar{cv, chunk});
    popped.insert(cv);
  }
  for (const auto& [v, vg] : g.perVar) {
    if (!vg.firstLetter || !gamma1.count(*vg.firstLetter)) continue;
    if (!varOccurs(out, v)) throw InconsistentGuess("pop for non-occurring " + out.vars.name(v));
    Term chunk = runChunk(*vg.firstLetter, runOf(vg.prefixExp, out.vars.name(v)));
    Term repl = composeContext(chunk, mkVar(v));
    out.lhs = mapVarOcc(out.lhs, v, repl);
    out.rhs = mapVarOcc(out.rhs, v, repl);
    events.push_back(PrependToVar{v, chunk});
  }

  // last-letter runs are popped down (context variables only)
  for (const auto& [cv, cg] : g.perCvar) {
    if (!cg.lastLetter || !gamma1.count(*cg.lastLetter)) continue;
    if (!cvarOccurs(out, cv))
      throw InconsistentGuess("pop for non-occurring " + out.cvars.name(cv));
    Term chunk = runChunk(*cg.lastLetter, runOf(cg.suffixExp, out.cvars.name(cv)));
    applyCvar(out, cv, [&](const Term& arg) { return mkCVar(cv, composeContext(chunk, arg)); });
    events.push_back(AppendToCvar{cv, chunk});
    popped.insert(cv);
  }

  removeGuessedEmpties(out, g, popped, events);
  return out;
}

Equation genPop(const std::set<SymbolId>& gammaGe1, const std::set<SymbolId>& gamma0,
                const Equation& eq, const GuessSheet& g,
                std::vector<ReconstructionEvent>& events) {
  for (SymbolId a : gammaGe1)
    if (a >= eq.sig.size() || eq.sig.arity(a) < 1)
      throw PreconditionViolated("gammaGe1 must have arity >= 1");
  for (SymbolId a : gamma0)
    if (a >= eq.sig.size() || eq.sig.arity(a) != 0)
      throw PreconditionViolated("gamma0 must be constants");
  requireKnownIds(eq, g, false);  // fresh variable ids may legitimately be ahead
  const VarId oldVarCount = static_cast<VarId>(eq.vars.size());
  Equation out = eq;

  // variables guessed to be constants of the equation
  for (const auto& [v, vg] : g.perVar) {
    if (v >= oldVarCount) continue;  // handled after the pops
    if (!vg.isConstant) continue;
    if (*vg.isConstant >= out.sig.size() || out.sig.arity(*vg.isConstant) != 0)
      throw InconsistentGuess("constant guess with a non-constant letter for " +
                              out.vars.name(v));
    if (!gamma0.count(*vg.isConstant)) continue;
    if (!varOccurs(out, v))
      throw InconsistentGuess("constant guess for non-occurring " + out.vars.name(v));
    substConst(out, v, *vg.isConstant, events);
  }

  // guessed last letters pop below, but only for a variable that is applied
  // on a constant somewhere: that keeps the variable count bounded
  std::vector<VarId> minted;
  for (const auto& [cv, cg] : g.perCvar) {
    bool memb = cg.lastLetter && gammaGe1.count(*cg.lastLetter) != 0;
    bool occurs = cvarOccurs(out, cv);
    bool gate = occurs && appliedToConstant(out, cv, gamma0);
    if (!cg.popDownLast) {
      if (memb && gate)
        throw InconsistentGuess("pop-down declined for " + out.cvars.name(cv) +
                                " though it applies to a constant");
      if (cg.emptyAfter)
        throw InconsistentGuess("emptyAfter without a pop for " + out.cvars.name(cv));
      continue;
    }
    if (!memb)
      throw InconsistentGuess("pop-down needs a guessed last letter of arity >= 1 for " +
                              out.cvars.name(cv));
    if (!occurs) throw InconsistentGuess("pop for non-occurring " + out.cvars.name(cv));
    if (!gate)
      throw InconsistentGuess("pop-down for " + out.cvars.name(cv) +
                              " though no occurrence applies to a constant");
    SymbolId f = *cg.lastLetter;
    int m = out.sig.arity(f);
    if (!cg.holePosition)
      throw InconsistentGuess("pop-down needs a hole position for " + out.cvars.name(cv));
    int hole = *cg.holePosition;
    if (hole < 1 || hole > m)
      throw HolePositionOutOfRange("hole " + std::to_string(hole) + " not in 1.." +
                                   std::to_string(m) + " for " + out.sig.name(f));
    if (auto it = out.ownedVars.find(cv); it != out.ownedVars.end() && !it->second.empty())
      throw InvariantViolation(out.cvars.name(cv) + " pops down while owning variables");

    std::vector<VarId> intro;
    std::vector<Term> kids;
    kids.reserve(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) {
      if (j == hole) {
        kids.push_back(mkHole());
        continue;
      }
      VarId nv = out.vars.fresh();
      intro.push_back(nv);
      minted.push_back(nv);
      kids.push_back(mkVar(nv));
    }
    Term chunk = mkLetter(f, std::move(kids));
    applyCvar(out, cv, [&](const Term& arg) { return mkCVar(cv, composeContext(chunk, arg)); });
    events.push_back(GenPopDown{cv, f, hole, intro});
    out.ownedVars[cv] = intro;
    if (cg.emptyAfter) {
      applyCvar(out, cv, [](const Term& arg) { return arg; });
      out.ownedVars.erase(cv);
      events.push_back(RemoveEmptyCvar{cv});
    }
  }

  // fresh variables guessed to be constants
  std::set<VarId> mintedSet(minted.begin(), minted.end());
  for (VarId v : minted) {
    std::optional<SymbolId> c;
    if (auto it = g.perVar.find(v); it != g.perVar.end()) c = it->second.isConstant;
    if (!c) {
      auto byName = g.newVarConst.find(out.vars.name(v));
      if (byName != g.newVarConst.end()) c = byName->second;
    }
    if (!c) continue;
    if (*c >= out.sig.size() || out.sig.arity(*c) != 0)
      throw InconsistentGuess("constant guess with a non-constant letter for " +
                              out.vars.name(v));
    if (!gamma0.count(*c)) continue;
    substConst(out, v, *c, events);
  }

  for (const auto& [v, vg] : g.perVar) {
    (void)vg;
    if (v >= oldVarCount && !mintedSet.count(v))
      throw InconsistentGuess("guess for a variable that was never introduced");
  }
  for (const auto& [nm, c] : g.newVarConst) {
    (void)c;
    auto id = out.vars.find(nm);
    if (!id || !mintedSet.count(*id))
      throw InconsistentGuess("constant guess for unknown fresh variable " + nm);
  }
  return out;
}

Substitution replaySolutionBackward(const std::vector<ReconstructionEvent>& events,
                                    Substitution s) {
  auto cvarImage = [&](CVarId cv) -> Term {
    auto it = s.cvarImages.find(cv);
    if (it == s.cvarImages.end())
      throw UndefinedVariable("replay needs an image for context variable #" +
                              std::to_string(cv));
    return it->second;
  };
  auto varImage = [&](VarId v) -> Term {
    auto it = s.varImages.find(v);
    if (it == s.varImages.end())
      throw UndefinedVariable("replay needs an image for variable #" + std::to_string(v));
    return it->second;
  };
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if (const auto* pc = std::get_if<PrependToCvar>(&*it)) {
      s.cvarImages[pc->cvar] = composeContext(pc->chunk, cvarImage(pc->cvar));
    } else if (const auto* ac = std::get_if<AppendToCvar>(&*it)) {
      s.cvarImages[ac->cvar] = composeContext(cvarImage(ac->cvar), ac->chunk);
    } else if (const auto* pv = std::get_if<PrependToVar>(&*it)) {
      s.varImages[pv->var] = composeContext(pv->chunk, varImage(pv->var));
    } else if (const auto* re = std::get_if<RemoveEmptyCvar>(&*it)) {
      s.cvarImages[re->cvar] = mkHole();
    } else if (const auto* sc = std::get_if<SubstVarConst>(&*it)) {
      s.varImages[sc->var] = mkLetter(sc->letter);
    } else if (const auto* gp = std::get_if<GenPopDown>(&*it)) {
      std::size_t m = gp->introduced.size() + 1;
      std::vector<Term> kids;
      kids.reserve(m);
      std::size_t next = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (static_cast<int>(j) == gp->holePosition)
          kids.push_back(mkHole());
        else
          kids.push_back(varImage(gp->introduced[next++]));
      }
      Term chunk = mkLetter(gp->letter, std::move(kids));
      s.cvarImages[gp->cvar] = composeContext(cvarImage(gp->cvar), chunk);
    }
  }
  return s;
}

// --- deriving sheets from a known solution --------------------------------

namespace {

Term imageOfCVar(const Substitution& s, CVarId cv) {
  auto it = s.cvarImages.find(cv);
  if (it == s.cvarImages.end())
    throw UndefinedVariable("no image for context variable #" + std::to_string(cv));
  return it->second;
}
Term imageOfVar(const Substitution& s, VarId v) {
  auto it = s.varImages.find(v);
  if (it == s.varImages.end())
    throw UndefinedVariable("no image for variable #" + std::to_string(v));
  return it->second;
}

Substitution expandAll(const Substitution& s) {
  Substitution out;
  for (const auto& [cv, img] : s.cvarImages) out.cvarImages[cv] = expandPowers(img);
  for (const auto& [v, img] : s.varImages) out.varImages[v] = expandPowers(img);
  return out;
}

// Nodes from the root of a plain ground context down to the hole's parent.
std::vector<Term> holePathNodes(const Term& ctx) {
  std::vector<Term> path;
  Term cur = ctx;
  while (cur->kind != NodeKind::Hole) {
    path.push_back(cur);
    const Term* next = nullptr;
    for (const Term& k : cur->children)
      if (k->holes == 1) {
        next = &k;
        break;
      }
    if (!next) throw NotAContext("node on the hole path lost its hole");
    cur = *next;
  }
  return path;
}

// Replaces the hole-path node at 0-based depth k by the bare hole, cutting
// off that node together with everything hanging off it.
Term cutHolePath(const Term& ctx, std::size_t k) {
  std::function<Term(const Term&, std::size_t)> rec = [&](const Term& t, std::size_t d) -> Term {
    if (d == k) return mkHole();
    std::vector<Term> kids = t->children;
    for (auto& kid : kids)
      if (kid->holes == 1) {
        kid = rec(kid, d + 1);
        break;
      }
    return mkLetter(t->sym, std::move(kids));
  };
  if (isEmptyContext(ctx)) throw NotAContext("cannot cut the empty context");
  return rec(ctx, 0);
}

std::uint64_t prefixRunLen(const Term& t, SymbolId a) {
  std::uint64_t n = 0;
  Term cur = t;
  while (cur->kind == NodeKind::Letter && cur->sym == a && cur->children.size() == 1) {
    ++n;
    cur = cur->children[0];
  }
  return n;
}

Term stripPrefixRun(const Term& t, std::uint64_t l) {
  Term cur = t;
  for (std::uint64_t i = 0; i < l; ++i) cur = cur->children[0];
  return cur;
}

int holeChildIndex(const Term& parent) {
  for (std::size_t i = 0; i < parent->children.size(); ++i)
    if (parent->children[i]->holes == 1) return static_cast<int>(i);
  throw NotAContext("no hole below the hole parent");
}

}  // namespace

GuidedGuess derivePopGuess(const Equation& eq, const Substitution& s, const Partition& p) {
  GuidedGuess out;
  out.sheet.partition = p;
  Substitution after = expandAll(s);

  for (const auto& [cv, cnt] : cvarOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfCVar(s, cv));
    if (isEmptyContext(img))
      throw PreconditionViolated("pop guesses need non-empty images, but " + eq.cvars.name(cv) +
                                 " maps to the hole");
    CVarGuess cg;
    auto path = holePathNodes(img);
    cg.lastLetter = path.back()->sym;
    cg.popDownLast = p.upper.count(*cg.lastLetter) != 0;
    Term cur = img;
    if (cg.popDownLast) cur = cutHolePath(cur, path.size() - 1);
    if (!isEmptyContext(cur)) {
      cg.firstLetter = cur->sym;
      cg.popUpFirst = p.lower.count(*cg.firstLetter) != 0;
      if (cg.popUpFirst) cur = cur->children[0];
    }
    if (isEmptyContext(cur)) {
      cg.emptyAfter = true;
      after.cvarImages[cv] = mkHole();
    } else {
      after.cvarImages[cv] = cur;
    }
    out.sheet.perCvar[cv] = cg;
  }

  for (const auto& [v, cnt] : varOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfVar(s, v));
    VarGuess vg;
    vg.firstLetter = img->sym;
    if (p.lower.count(*vg.firstLetter)) after.varImages[v] = img->children[0];
    out.sheet.perVar[v] = vg;
  }

  out.after = std::move(after);
  return out;
}

GuidedGuess derivePrefSuffGuess(const Equation& eq, const Substitution& s,
                                const std::set<SymbolId>& gamma1, std::uint64_t cap) {
  GuidedGuess out;
  out.sheet.exponentCap = cap;
  Substitution after = expandAll(s);

  for (const auto& [cv, cnt] : cvarOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfCVar(s, cv));
    if (isEmptyContext(img))
      throw PreconditionViolated("run guesses need non-empty images, but " + eq.cvars.name(cv) +
                                 " maps to the hole");
    CVarGuess cg;
    Term cur = img;
    cg.firstLetter = cur->sym;
    if (gamma1.count(*cg.firstLetter)) {
      std::uint64_t l = prefixRunLen(cur, *cg.firstLetter);
      if (l > cap)
        throw ExponentOverCap("prefix run " + std::to_string(l) + " exceeds cap " +
                              std::to_string(cap));
      cg.prefixExp = l;
      cur = stripPrefixRun(cur, l);
    }
    if (!isEmptyContext(cur)) {
      auto path = holePathNodes(cur);
      cg.lastLetter = path.back()->sym;
      if (gamma1.count(*cg.lastLetter)) {
        std::uint64_t r = 0;
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
          if ((*it)->kind == NodeKind::Letter && (*it)->sym == *cg.lastLetter &&
              (*it)->children.size() == 1)
            ++r;
          else
            break;
        }
        if (r > cap)
          throw ExponentOverCap("suffix run " + std::to_string(r) + " exceeds cap " +
                                std::to_string(cap));
        cg.suffixExp = r;
        cur = cutHolePath(cur, path.size() - r);
      }
    }
    if (isEmptyContext(cur)) {
      cg.emptyAfter = true;
      after.cvarImages[cv] = mkHole();
    } else {
      after.cvarImages[cv] = cur;
    }
    out.sheet.perCvar[cv] = cg;
  }

  for (const auto& [v, cnt] : varOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfVar(s, v));
    VarGuess vg;
    vg.firstLetter = img->sym;
    if (gamma1.count(*vg.firstLetter)) {
      std::uint64_t l = prefixRunLen(img, *vg.firstLetter);
      if (l > cap)
        throw ExponentOverCap("prefix run " + std::to_string(l) + " exceeds cap " +
                              std::to_string(cap));
      vg.prefixExp = l;
      after.varImages[v] = stripPrefixRun(img, l);
    }
    out.sheet.perVar[v] = vg;
  }

  out.after = std::move(after);
  return out;
}

GuidedGuess deriveGenPopGuess(const Equation& eq, const Substitution& s,
                              const std::set<SymbolId>& gammaGe1,
                              const std::set<SymbolId>& gamma0) {
  GuidedGuess out;
  Substitution after = expandAll(s);
  Equation sim = eq;  // mirrors what genPop will do, so gates and fresh ids match

  for (const auto& [v, cnt] : varOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfVar(s, v));
    if (!isConstantNode(img)) continue;
    VarGuess vg;
    vg.isConstant = img->sym;
    out.sheet.perVar[v] = vg;
    if (gamma0.count(img->sym)) {
      sim.lhs = mapVarOcc(sim.lhs, v, img);
      sim.rhs = mapVarOcc(sim.rhs, v, img);
    }
  }

  for (const auto& [cv, cnt] : cvarOccurrences(eq)) {
    (void)cnt;
    Term img = expandPowers(imageOfCVar(s, cv));
    if (isEmptyContext(img))
      throw PreconditionViolated("pop guesses need non-empty images, but " + eq.cvars.name(cv) +
                                 " maps to the hole");
    CVarGuess cg;
    auto path = holePathNodes(img);
    const Term& parent = path.back();
    cg.lastLetter = parent->sym;
    if (gammaGe1.count(parent->sym) && appliedToConstant(sim, cv, gamma0)) {
      cg.popDownLast = true;
      int hi = holeChildIndex(parent);
      cg.holePosition = hi + 1;
      std::vector<Term> kids;
      kids.reserve(parent->children.size());
      for (std::size_t j = 0; j < parent->children.size(); ++j) {
        if (static_cast<int>(j) == hi) {
          kids.push_back(mkHole());
          continue;
        }
        VarId nv = sim.vars.fresh();
        const Term& tj = parent->children[j];
        after.varImages[nv] = tj;
        if (isConstantNode(tj) && gamma0.count(tj->sym)) {
          VarGuess vg;
          vg.isConstant = tj->sym;
          out.sheet.perVar[nv] = vg;
        }
        kids.push_back(mkVar(nv));
      }
      Term chunk = mkLetter(parent->sym, std::move(kids));
      applyCvar(sim, cv, [&](const Term& arg) { return mkCVar(cv, composeContext(chunk, arg)); });
      Term cur = cutHolePath(img, path.size() - 1);
      if (isEmptyContext(cur)) {
        cg.emptyAfter = true;
        after.cvarImages[cv] = mkHole();
        applyCvar(sim, cv, [](const Term& arg) { return arg; });
      } else {
        after.cvarImages[cv] = cur;
      }
    }
    out.sheet.perCvar[cv] = cg;
  }

  out.after = std::move(after);
  return out;
}

// --- trace serialization ---------------------------------------------------

std::vector<std::string> formatGuessSheet(const GuessSheet& g, const Equation& eq) {
  std::vector<std::string> lines;
  NamePool vnames = eq.vars;  // extend a copy so predicted fresh ids have names
  if (!g.perVar.empty()) {
    VarId maxId = g.perVar.rbegin()->first;
    while (vnames.size() <= maxId) vnames.fresh();
  }
  auto letter = [&](SymbolId a) -> const std::string& { return eq.sig.name(a); };

  for (const auto& [cv, cg] : g.perCvar) {
    if (cv >= eq.cvars.size())
      throw InconsistentGuess("cannot format a guess for an unknown context variable");
    const std::string& who = eq.cvars.name(cv);
    std::vector<std::string> mine;
    if (cg.popDownLast && cg.lastLetter) {
      std::string l = who + " last " + letter(*cg.lastLetter);
      if (cg.holePosition) l += " hole " + std::to_string(*cg.holePosition);
      mine.push_back(std::move(l));
    }
    if (cg.popUpFirst && cg.firstLetter) mine.push_back(who + " first " + letter(*cg.firstLetter));
    if (cg.prefixExp && cg.firstLetter)
      mine.push_back(who + " prefix " + letter(*cg.firstLetter) + " " +
                     std::to_string(*cg.prefixExp));
    if (cg.suffixExp && cg.lastLetter)
      mine.push_back(who + " suffix " + letter(*cg.lastLetter) + " " +
                     std::to_string(*cg.suffixExp));
    if (cg.emptyAfter) {
      if (mine.empty())
        throw InconsistentGuess("emptyAfter without any action for " + who);
      mine.back() += " empty";
    }
    for (auto& l : mine) lines.push_back(std::move(l));
  }

  for (const auto& [v, vg] : g.perVar) {
    const std::string& who = vnames.name(v);
    if (vg.isConstant) lines.push_back(who + " const " + letter(*vg.isConstant));
    if (vg.prefixExp && vg.firstLetter)
      lines.push_back(who + " prefix " + letter(*vg.firstLetter) + " " +
                      std::to_string(*vg.prefixExp));
    else if (vg.firstLetter && g.partition.lower.count(*vg.firstLetter))
      lines.push_back(who + " first " + letter(*vg.firstLetter));
  }

  for (const auto& [nm, c] : g.newVarConst) lines.push_back(nm + " const " + letter(c));
  return lines;
}

GuessSheet parseGuessSheet(const std::vector<std::string>& lines, const Equation& eq) {
  GuessSheet g;
  int ln = 0;
  for (const std::string& raw : lines) {
    ++ln;
    std::istringstream in(raw);
    std::vector<std::string> tok;
    std::string w;
    while (in >> w) tok.push_back(w);
    if (tok.empty()) continue;
    if (tok.size() < 3) throw SyntaxError("guess line too short", ln, 1);

    auto letterId = [&](const std::string& nm) -> SymbolId {
      auto id = eq.sig.find(nm);
      if (!id) throw SyntaxError("unknown letter " + nm, ln, 1);
      return *id;
    };
    auto number = [&](const std::string& nm) -> std::uint64_t {
      std::uint64_t val = 0;
      auto [p, ec] = std::from_chars(nm.data(), nm.data() + nm.size(), val);
      if (ec != std::errc{} || p != nm.data() + nm.size())
        throw SyntaxError("bad number " + nm, ln, 1);
      return val;
    };

    const std::string& who = tok[0];
    const std::string& verb = tok[1];
    std::size_t i = 0;

    if (auto cvid = eq.cvars.find(who)) {
      CVarGuess& cg = g.perCvar[*cvid];
      if (verb == "last") {
        cg.lastLetter = letterId(tok[2]);
        cg.popDownLast = true;
        i = 3;
        if (i + 1 < tok.size() && tok[i] == "hole") {
          cg.holePosition = static_cast<int>(number(tok[i + 1]));
          i += 2;
        }
      } else if (verb == "first") {
        cg.firstLetter = letterId(tok[2]);
        cg.popUpFirst = true;
        i = 3;
      } else if (verb == "prefix") {
        if (tok.size() < 4) throw SyntaxError("prefix guess needs letter and run", ln, 1);
        cg.firstLetter = letterId(tok[2]);
        cg.prefixExp = number(tok[3]);
        i = 4;
      } else if (verb == "suffix") {
        if (tok.size() < 4) throw SyntaxError("suffix guess needs letter and run", ln, 1);
        cg.lastLetter = letterId(tok[2]);
        cg.suffixExp = number(tok[3]);
        i = 4;
      } else {
        throw SyntaxError("unknown guess verb " + verb, ln, 1);
      }
      if (i < tok.size() && tok[i] == "empty") {
        cg.emptyAfter = true;
        ++i;
      }
      if (i != tok.size()) throw SyntaxError("trailing tokens on guess line", ln, 1);
    } else if (auto vid = eq.vars.find(who)) {
      VarGuess& vg = g.perVar[*vid];
      if (verb == "const") {
        vg.isConstant = letterId(tok[2]);
        i = 3;
      } else if (verb == "first") {
        vg.firstLetter = letterId(tok[2]);
        i = 3;
      } else if (verb == "prefix") {
        if (tok.size() < 4) throw SyntaxError("prefix guess needs letter and run", ln, 1);
        vg.firstLetter = letterId(tok[2]);
        vg.prefixExp = number(tok[3]);
        i = 4;
      } else {
        throw SyntaxError("unknown guess verb " + verb, ln, 1);
      }
      if (i != tok.size()) throw SyntaxError("trailing tokens on guess line", ln, 1);
    } else {
      if (verb != "const" || tok.size() != 3)
        throw SyntaxError("unknown variable " + who, ln, 1);
      g.newVarConst[who] = letterId(tok[2]);
    }
  }
  return g;
}

}  // namespace recomp
