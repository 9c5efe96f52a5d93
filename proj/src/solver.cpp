#include "recomp/solver.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "recomp/eqcompress.hpp"
#include "recomp/errors.hpp"

namespace recomp {

namespace {

bool cvarOccursIn(const Equation& eq, CVarId cv) {
  return countCVarOccurrences(eq.lhs, cv) + countCVarOccurrences(eq.rhs, cv) > 0;
}
bool varOccursIn(const Equation& eq, VarId v) {
  return countVarOccurrences(eq.lhs, v) + countVarOccurrences(eq.rhs, v) > 0;
}
bool sidesTrivial(const Equation& eq) {
  return termSize(eq.lhs) <= 1 && termSize(eq.rhs) <= 1;
}
bool sidesGround(const Equation& eq) { return isGround(eq.lhs) && isGround(eq.rhs); }

bool rootsConflict(const Equation& eq) {
  auto l = rootLetter(eq.lhs), r = rootLetter(eq.rhs);
  return l && r && *l != *r;
}

void validateLimits(const Limits& lim) {
  if (lim.maxPhases < 1 || lim.exponentCap < 1 || lim.maxNodes < 1 || lim.sizeConstantC < 1)
    throw PreconditionViolated("limits must be positive");
}

std::uint64_t runBoundFor(const Equation& eq, const Limits& lim) {
  // Exponents are enumerated up to this; anything that enumerates one marks
  // the branch truncated, so an exhausted search still reports Unknown.
  return std::min<std::uint64_t>(lim.exponentCap,
                                 std::max<std::uint64_t>(12, stats(eq).n1 + 2));
}

// ---- adjacency ----------------------------------------------------------
//
// Which letters sit directly above an occurrence of each variable, and which
// letters start the argument of each context variable. An occurrence under a
// context variable's hole (or an argument headed by a variable) leaves the
// side open: any letter of the image could end up adjacent there. Pops are
// only offered where the guessed pattern could actually be crossing.

struct Adjacency {
  std::map<CVarId, std::set<SymbolId>> cvarParents, cvarArgRoots;
  std::set<CVarId> cvarParentOpen, cvarArgOpen;
  std::map<VarId, std::set<SymbolId>> varParents;
  std::set<VarId> varParentOpen;
};

void scanAdjacency(const Term& t, Adjacency& a) {
  if (!(t->flags & (kHasVar | kHasCVar))) return;
  if (t->kind == NodeKind::CVar) {
    const Term& arg = t->children[0];
    if (arg->kind == NodeKind::Letter) a.cvarArgRoots[t->sym].insert(arg->sym);
    else
      a.cvarArgOpen.insert(t->sym);
    if (arg->kind == NodeKind::Var) a.varParentOpen.insert(arg->sym);
    if (arg->kind == NodeKind::CVar) a.cvarParentOpen.insert(arg->sym);
    scanAdjacency(arg, a);
    return;
  }
  for (const Term& c : t->children) {
    if (t->kind == NodeKind::Letter) {
      if (c->kind == NodeKind::Var) a.varParents[c->sym].insert(t->sym);
      if (c->kind == NodeKind::CVar) a.cvarParents[c->sym].insert(t->sym);
    }
    scanAdjacency(c, a);
  }
}

Adjacency scanAdjacency(const Equation& eq) {
  Adjacency a;
  scanAdjacency(eq.lhs, a);
  scanAdjacency(eq.rhs, a);
  return a;
}

const std::set<SymbolId>& setOf(const std::map<std::uint32_t, std::set<SymbolId>>& m,
                                std::uint32_t id) {
  static const std::set<SymbolId> none;
  auto it = m.find(id);
  return it == m.end() ? none : it->second;
}

bool intersects(const std::set<SymbolId>& a, const std::set<SymbolId>& b) {
  for (SymbolId x : a)
    if (b.count(x)) return true;
  return false;
}

// ---- counting prune -----------------------------------------------------

// sum(coef_i * z_i) == target for some z_i >= 0?
bool feasibleLine(std::int64_t target, const std::vector<std::int64_t>& coefs) {
  std::vector<std::int64_t> cs;
  for (std::int64_t c : coefs)
    if (c != 0) cs.push_back(c);
  if (cs.empty()) return target == 0;
  if (target == 0) return true;
  bool pos = false, neg = false;
  std::int64_t g = 0;
  for (std::int64_t c : cs) {
    pos |= c > 0;
    neg |= c < 0;
    g = std::gcd(g, c < 0 ? -c : c);
  }
  if (target % g != 0) return false;
  if (pos && neg) return true;
  if (neg) {
    target = -target;
    for (std::int64_t& c : cs) c = -c;
  }
  if (target < 0) return false;
  if (target > (1 << 15)) return true;  // beyond the window: assume reachable
  std::vector<char> can(static_cast<std::size_t>(target) + 1, 0);
  can[0] = 1;
  for (std::int64_t c : cs)
    for (std::int64_t i = c; i <= target; ++i)
      if (can[static_cast<std::size_t>(i - c)]) can[static_cast<std::size_t>(i)] = 1;
  return can[static_cast<std::size_t>(target)] != 0;
}

std::int64_t weightedLetterNodes(const Term& t) {
  std::int64_t n = t->kind == NodeKind::Letter ? static_cast<std::int64_t>(t->exp) : 0;
  for (const Term& c : t->children) n += weightedLetterNodes(c);
  return n;
}

// ---- canonical form for memoization -------------------------------------

struct Canon {
  const Signature* sig = nullptr;
  std::map<std::uint32_t, unsigned> letters, vars, cvars;
  std::string out;

  unsigned slot(std::map<std::uint32_t, unsigned>& m, std::uint32_t k) {
    auto it = m.find(k);
    if (it != m.end()) return it->second;
    unsigned i = static_cast<unsigned>(m.size());
    m.emplace(k, i);
    return i;
  }

  void walk(const Term& t) {
    switch (t->kind) {
      case NodeKind::Hole:
        out += '_';
        return;
      case NodeKind::Var:
        out += 'v';
        out += std::to_string(slot(vars, t->sym));
        return;
      case NodeKind::CVar:
        out += 'C';
        out += std::to_string(slot(cvars, t->sym));
        break;
      case NodeKind::Letter:
        out += 'L';
        out += std::to_string(slot(letters, t->sym));
        out += ':';
        out += std::to_string(sig->arity(t->sym));
        if (t->exp > 1) {
          out += '^';
          out += std::to_string(t->exp);
        }
        break;
    }
    if (!t->children.empty()) {
      out += '(';
      for (std::size_t i = 0; i < t->children.size(); ++i) {
        if (i) out += ',';
        walk(t->children[i]);
      }
      out += ')';
    }
  }
};

// Letters/variables relabelled by first occurrence; ownership (which gates
// later parent pops) appended in canonical order.
std::string canonicalKey(const Equation& eq) {
  Canon c;
  c.sig = &eq.sig;
  c.walk(eq.lhs);
  c.out += '=';
  c.walk(eq.rhs);
  std::vector<std::pair<unsigned, std::string>> own;
  for (const auto& [cv, owned] : eq.ownedVars) {
    if (owned.empty()) continue;
    auto it = c.cvars.find(cv);
    if (it == c.cvars.end()) continue;  // no occurrence left, irrelevant
    std::string enc;
    for (VarId v : owned) {
      enc += std::to_string(c.slot(c.vars, v));
      enc += ' ';
    }
    own.emplace_back(it->second, std::move(enc));
  }
  std::sort(own.begin(), own.end());
  c.out += '|';
  for (const auto& [idx, enc] : own) {
    c.out += 'O';
    c.out += std::to_string(idx);
    c.out += '[';
    c.out += enc;
    c.out += ']';
  }
  return c.out;
}

// ---- invariants ----------------------------------------------------------

void enforceInvariants(const Equation& eq, const std::map<CVarId, std::uint64_t>& caps, int k0,
                       std::uint64_t varOccBound) {
  for (const auto& [cv, n] : cvarOccurrences(eq)) {
    auto it = caps.find(cv);
    std::uint64_t cap = it == caps.end() ? 0 : it->second;
    if (n > cap)
      throw InvariantViolation("occurrences of " + eq.cvars.name(cv) + " grew to " +
                               std::to_string(n));
  }
  EquationStats s = stats(eq);
  if (s.varOcc > varOccBound)
    throw InvariantViolation("variable occurrences " + std::to_string(s.varOcc) +
                             " exceed the k*n bound " + std::to_string(varOccBound));
  std::uint64_t ownCap = k0 > 1 ? static_cast<std::uint64_t>(k0 - 1) : 0;
  for (const auto& [cv, owned] : eq.ownedVars)
    if (owned.size() > ownCap)
      throw InvariantViolation(eq.cvars.name(cv) + " owns " + std::to_string(owned.size()) +
                               " variables, cap " + std::to_string(ownCap));
  for (SymbolId a : equationLetters(eq))
    if (eq.sig.arity(a) > k0)
      throw InvariantViolation("letter " + eq.sig.name(a) + " has arity above the input bound");
}

// ---- guess levels --------------------------------------------------------
//
// Each stage branches one variable and one direction at a time; an option is
// a one-entry sheet applied through the full pass. The option order fixes
// the search order: no action first, then letters by id, exponents and hole
// positions ascending, each action before its empty variant.

enum class LevelKind : std::uint8_t {
  CvarPrefix,
  VarPrefix,
  CvarSuffix,  // PrefSuff
  CvarDown,
  CvarUp,
  VarUp,  // Pop
  VarConst,
  CvarChunk,  // GenPop
};

struct Level {
  LevelKind kind;
  std::uint32_t id;
};

std::vector<Level> levelsFor(const Stage& st, const Equation& eq) {
  std::vector<Level> out;
  auto cvs = cvarOccurrences(eq);
  auto vs = varOccurrences(eq);
  switch (st.kind) {
    case StageKind::PrefSuff:
      for (const auto& [cv, n] : cvs) out.push_back({LevelKind::CvarPrefix, cv});
      for (const auto& [v, n] : vs) out.push_back({LevelKind::VarPrefix, v});
      for (const auto& [cv, n] : cvs) out.push_back({LevelKind::CvarSuffix, cv});
      break;
    case StageKind::Pop:
      for (const auto& [cv, n] : cvs) out.push_back({LevelKind::CvarDown, cv});
      for (const auto& [cv, n] : cvs) out.push_back({LevelKind::CvarUp, cv});
      for (const auto& [v, n] : vs) out.push_back({LevelKind::VarUp, v});
      break;
    case StageKind::GenPop:
      for (const auto& [v, n] : vs) out.push_back({LevelKind::VarConst, v});
      for (const auto& [cv, n] : cvs) out.push_back({LevelKind::CvarChunk, cv});
      break;
  }
  return out;
}

bool levelApplies(const Equation& eq, const Level& lv) {
  switch (lv.kind) {
    case LevelKind::VarPrefix:
    case LevelKind::VarUp:
    case LevelKind::VarConst:
      return varOccursIn(eq, lv.id);
    default:
      return cvarOccursIn(eq, lv.id);
  }
}

std::vector<GuessSheet> levelOptions(const Equation& eq, const Stage& stg, const Level& lv,
                                     std::uint64_t runB, bool& runSite) {
  std::vector<GuessSheet> out;
  out.emplace_back();  // no action
  Adjacency adj = scanAdjacency(eq);

  auto cvarRuns = [&](const std::set<SymbolId>& cand, bool suffix) {
    if (!cand.empty()) runSite = true;
    for (SymbolId a : cand)
      for (std::uint64_t e = 1; e <= runB; ++e)
        for (int emp = 0; emp < 2; ++emp) {
          GuessSheet g;
          CVarGuess& cg = g.perCvar[lv.id];
          if (suffix) {
            cg.lastLetter = a;
            cg.suffixExp = e;
          } else {
            cg.firstLetter = a;
            cg.prefixExp = e;
          }
          cg.emptyAfter = emp != 0;
          out.push_back(std::move(g));
        }
  };
  auto cvarPops = [&](const std::set<SymbolId>& letters, bool down) {
    for (SymbolId a : letters)
      for (int emp = 0; emp < 2; ++emp) {
        GuessSheet g;
        CVarGuess& cg = g.perCvar[lv.id];
        if (down) {
          cg.lastLetter = a;
          cg.popDownLast = true;
        } else {
          cg.firstLetter = a;
          cg.popUpFirst = true;
        }
        cg.emptyAfter = emp != 0;
        out.push_back(std::move(g));
      }
  };
  auto gammaAmong = [&](const std::set<SymbolId>& seen, bool open) {
    std::set<SymbolId> cand;
    for (SymbolId a : stg.gamma1)
      if (open || seen.count(a)) cand.insert(a);
    return cand;
  };

  switch (lv.kind) {
    case LevelKind::CvarPrefix:
      cvarRuns(gammaAmong(setOf(adj.cvarParents, lv.id), adj.cvarParentOpen.count(lv.id) != 0),
               false);
      break;
    case LevelKind::CvarSuffix:
      cvarRuns(gammaAmong(setOf(adj.cvarArgRoots, lv.id), adj.cvarArgOpen.count(lv.id) != 0),
               true);
      break;
    case LevelKind::VarPrefix: {
      std::set<SymbolId> cand =
          gammaAmong(setOf(adj.varParents, lv.id), adj.varParentOpen.count(lv.id) != 0);
      if (!cand.empty()) runSite = true;
      for (SymbolId a : cand)
        for (std::uint64_t e = 1; e <= runB; ++e) {
          GuessSheet g;
          VarGuess& vg = g.perVar[lv.id];
          vg.firstLetter = a;
          vg.prefixExp = e;
          out.push_back(std::move(g));
        }
      break;
    }
    case LevelKind::CvarDown:
      if (adj.cvarArgOpen.count(lv.id) ||
          intersects(setOf(adj.cvarArgRoots, lv.id), stg.partition.lower))
        cvarPops(stg.partition.upper, true);
      break;
    case LevelKind::CvarUp:
      if (adj.cvarParentOpen.count(lv.id) ||
          intersects(setOf(adj.cvarParents, lv.id), stg.partition.upper))
        cvarPops(stg.partition.lower, false);
      break;
    case LevelKind::VarUp:
      if (adj.varParentOpen.count(lv.id) ||
          intersects(setOf(adj.varParents, lv.id), stg.partition.upper))
        for (SymbolId b : stg.partition.lower) {
          GuessSheet g;
          g.perVar[lv.id].firstLetter = b;
          out.push_back(std::move(g));
        }
      break;
    case LevelKind::VarConst:
      for (SymbolId c : stg.gamma0) {
        GuessSheet g;
        g.perVar[lv.id].isConstant = c;
        out.push_back(std::move(g));
      }
      break;
    case LevelKind::CvarChunk: {
      auto owned = eq.ownedVars.find(lv.id);
      bool owning = owned != eq.ownedVars.end() && !owned->second.empty();
      if (!owning && appliedToConstant(eq, lv.id, stg.gamma0))
        for (SymbolId f : stg.gammaGe1)
          for (int hole = 1; hole <= eq.sig.arity(f); ++hole)
            for (int emp = 0; emp < 2; ++emp) {
              GuessSheet g;
              CVarGuess& cg = g.perCvar[lv.id];
              cg.lastLetter = f;
              cg.popDownLast = true;
              cg.holePosition = hole;
              cg.emptyAfter = emp != 0;
              out.push_back(std::move(g));
            }
      break;
    }
  }
  return out;
}

bool miniEmpty(const GuessSheet& g) {
  return g.perCvar.empty() && g.perVar.empty() && g.newVarConst.empty();
}

Equation applyPass(const Stage& stg, const Equation& eq, const GuessSheet& mini,
                   std::uint64_t cap, std::vector<ReconstructionEvent>& events) {
  GuessSheet g = mini;
  g.exponentCap = cap;
  switch (stg.kind) {
    case StageKind::PrefSuff:
      return prefSuff(stg.gamma1, eq, g, events);
    case StageKind::Pop:
      return pop(stg.partition, eq, g, events);
    case StageKind::GenPop:
      return genPop(stg.gammaGe1, stg.gamma0, eq, g, events);
  }
  throw PreconditionViolated("unreachable stage kind");
}

// Fold a one-entry sheet into the stage's merged sheet. Constants for
// variables minted this stage travel by predicted name so the merged sheet
// replays through a single pass call.
void absorbMini(GuessSheet& merged, const GuessSheet& mini, const Stage& stg,
                const Equation& after, VarId preVarCount) {
  for (const auto& [cv, cg] : mini.perCvar) {
    CVarGuess& dst = merged.perCvar[cv];
    if (cg.lastLetter) {
      dst.lastLetter = cg.lastLetter;
      dst.popDownLast = cg.popDownLast;
    }
    if (cg.firstLetter) {
      dst.firstLetter = cg.firstLetter;
      dst.popUpFirst = cg.popUpFirst;
    }
    if (cg.prefixExp) dst.prefixExp = cg.prefixExp;
    if (cg.suffixExp) dst.suffixExp = cg.suffixExp;
    if (cg.holePosition) dst.holePosition = cg.holePosition;
    dst.emptyAfter = dst.emptyAfter || cg.emptyAfter;
  }
  for (const auto& [v, vg] : mini.perVar) {
    if (stg.kind == StageKind::GenPop && v >= preVarCount && vg.isConstant) {
      merged.newVarConst[after.vars.name(v)] = *vg.isConstant;
      continue;
    }
    VarGuess& dst = merged.perVar[v];
    if (vg.firstLetter) dst.firstLetter = vg.firstLetter;
    if (vg.prefixExp) dst.prefixExp = vg.prefixExp;
    if (vg.isConstant) dst.isConstant = vg.isConstant;
  }
}

// ---- stage construction ---------------------------------------------------

const char* stageName(StageKind k) {
  switch (k) {
    case StageKind::PrefSuff:
      return "prefsuff";
    case StageKind::Pop:
      return "pop";
    case StageKind::GenPop:
      return "genpop";
  }
  return "?";
}

std::string partitionLine(const Partition& p, const Signature& sig) {
  std::string ln = "partition";
  for (SymbolId a : p.upper) ln += " " + sig.name(a);
  ln += " /";
  for (SymbolId b : p.lower) ln += " " + sig.name(b);
  return ln;
}

SymbolId spareLetter(Signature& sig, const std::set<SymbolId>& occurring, int arity) {
  for (SymbolId a = 0; a < sig.size(); ++a)
    if (sig.arity(a) == arity && !occurring.count(a)) return a;
  // named by content, not by the signature's fresh counter, so a replay
  // that reached the same alphabet by ingesting a log mints the same spare
  for (int k = 1;; ++k) {
    std::string nm = "w$" + std::to_string(arity) + "$" + std::to_string(k);
    if (!sig.find(nm)) return sig.add(nm, arity);
  }
}

// GenPop works over the equation's letters plus one spare per arity: fresh
// parents for the chunks and a fresh constant. The log treats the spares as
// initial alphabet so certificates decompress.
Stage genPopStage(Equation& eq, CompressionLog& log, int k0) {
  Stage stg;
  stg.kind = StageKind::GenPop;
  stg.gammaGe1 = equationNonConstants(eq);
  stg.gamma0 = equationConstants(eq);
  std::set<SymbolId> occ = equationLetters(eq);
  for (int ar = 2; ar <= k0; ++ar) stg.gammaGe1.insert(spareLetter(eq.sig, occ, ar));
  stg.gamma0.insert(spareLetter(eq.sig, occ, 0));
  log.initialLetterCount = eq.sig.size();
  return stg;
}

Equation compressForStage(const Stage& stg, const Equation& eq, CompressionLog& log) {
  switch (stg.kind) {
    case StageKind::PrefSuff:
      return chainCompNcr(stg.gamma1, eq, log);
    case StageKind::Pop:
      return pairCompNcr(stg.partition, eq, log);
    case StageKind::GenPop:
      return childCompNcr(stg.gammaGe1, stg.gamma0, eq, log);
  }
  throw PreconditionViolated("unreachable stage kind");
}

// ---- branches and certificates --------------------------------------------

struct BranchState {
  Equation eq;
  std::vector<ReconstructionEvent> events;
  CompressionLog log;
  std::vector<std::string> trace;
  std::string phaseKey;  // canonical form at the last phase start
};

void appendStageTrace(BranchState& st, const Stage& stg, const GuessSheet& merged,
                      const Equation& preEq, std::size_t logMark) {
  st.trace.push_back(std::string("stage ") + stageName(stg.kind));
  if (stg.kind == StageKind::Pop) st.trace.push_back(partitionLine(stg.partition, st.eq.sig));
  for (std::string& ln : formatGuessSheet(merged, preEq)) st.trace.push_back(std::move(ln));
  for (std::size_t i = logMark; i < st.log.events.size(); ++i)
    st.trace.push_back(formatEvent(st.log.events[i], st.eq.sig));
}

std::string emptyHeader(const Equation& eq0, const std::set<CVarId>& declaredEmpty) {
  std::string head = "empty";
  for (CVarId cv : declaredEmpty) head += " " + eq0.cvars.name(cv);
  return head;
}

SatCertificate buildCertificate(const Equation& eq0, const Equation& eqE,
                                const std::set<CVarId>& declaredEmpty,
                                const std::vector<ReconstructionEvent>& events,
                                const CompressionLog& log, const Signature& finalSig,
                                const Substitution& base,
                                std::vector<std::string> trace) {
  Substitution replayed = replaySolutionBackward(events, base);
  SatCertificate cert;
  cert.declaredEmpty = declaredEmpty;
  cert.grammar = log;
  cert.finalSig = finalSig;
  cert.trace = std::move(trace);
  for (const auto& [v, n] : varOccurrences(eqE)) {
    (void)n;
    auto it = replayed.varImages.find(v);
    if (it == replayed.varImages.end())
      throw InvariantViolation("reconstruction lost the image of " + eqE.vars.name(v));
    cert.grammarImages.varImages[v] = it->second;
  }
  for (const auto& [cv, n] : cvarOccurrences(eqE)) {
    (void)n;
    auto it = replayed.cvarImages.find(cv);
    if (it == replayed.cvarImages.end())
      throw InvariantViolation("reconstruction lost the image of " + eqE.cvars.name(cv));
    cert.grammarImages.cvarImages[cv] = it->second;
  }
  cert.substitution = cert.grammarImages;
  for (auto& [v, t] : cert.substitution.varImages) t = decompress(log, t);
  for (auto& [cv, t] : cert.substitution.cvarImages) t = decompress(log, t);
  for (CVarId cv : declaredEmpty) cert.substitution.cvarImages[cv] = mkHole();
  if (!verifyCertificate(eq0, cert.substitution, declaredEmpty))
    throw InvariantViolation("reconstructed certificate fails verification");
  return cert;
}

// ---- the search ------------------------------------------------------------

struct MemoEntry {
  int budget = -1;
  bool truncated = false;
};

struct Shared {
  const Limits* lim = nullptr;
  int k0 = 0;
  std::uint64_t maxEq = 0;
  std::uint64_t varOccBound = 0;
  std::uint64_t nodes = 0;
  std::uint64_t maxEqSeen = 0;
  std::string firstLimit;
  std::map<std::string, MemoEntry> memo;

  void hitLimit(const char* what) {
    if (firstLimit.empty()) firstLimit = what;
  }
};

struct SearchResult {
  std::optional<SatCertificate> cert;
  bool truncated = false;
  int satPhases = 0;
};

class Searcher {
 public:
  Searcher(const Equation& eq0, Equation eqE, std::set<CVarId> declaredEmpty, Shared& sh)
      : eq0_(eq0), eqE_(std::move(eqE)), empty_(std::move(declaredEmpty)), sh_(sh) {
    caps_ = cvarOccurrences(eqE_);
  }

  SearchResult run(int depth) {
    depth_ = depth;
    BranchState root;
    root.eq = eqE_;
    root.log = CompressionLog(eqE_.sig);
    root.trace.push_back(emptyHeader(eq0_, empty_));
    return atStage(std::move(root), 0, depth);
  }

 private:
  SearchResult atStage(BranchState st, int stageIdx, int phasesLeft) {
    if (++sh_.nodes > sh_.lim->maxNodes) {
      sh_.hitLimit("max-nodes");
      return {std::nullopt, true, 0};
    }
    sh_.maxEqSeen = std::max(sh_.maxEqSeen, equationSize(st.eq));
    if (sidesTrivial(st.eq)) {
      Verdict tv = trivialSolve(st.eq);
      if (tv.outcome != Outcome::Sat) return {};
      return leaf(std::move(st), tv.certificate->substitution, phasesLeft);
    }
    if (sidesGround(st.eq)) {
      if (!termEq(expandPowers(st.eq.lhs), expandPowers(st.eq.rhs))) return {};
      return leaf(std::move(st), Substitution{}, phasesLeft);
    }
    if (rootsConflict(st.eq) || arithmeticallyInfeasible(st.eq)) return {};
    if (equationSize(st.eq) > sh_.maxEq) {
      sh_.hitLimit("max-equation-size");
      return {std::nullopt, true, 0};
    }
    std::string canon = canonicalKey(st.eq);
    if (stageIdx == 0) {
      // a whole phase that changed nothing would only replay this subtree
      // one phase poorer; the parent already explores all of it
      if (canon == st.phaseKey) return {};
      st.phaseKey = canon;
      if (phasesLeft <= 0) {
        // only the outermost deepening round reports this as the binding
        // limit; shallower rounds hit it by design
        if (depth_ >= sh_.lim->maxPhases) sh_.hitLimit("max-phases");
        return {std::nullopt, true, 0};
      }
    }
    std::string key = std::to_string(stageIdx) + '|' + canon;
    // an untruncated exhaustion holds for any budget; a truncated one only
    // for budgets it already covered
    if (auto it = sh_.memo.find(key);
        it != sh_.memo.end() && (!it->second.truncated || it->second.budget >= phasesLeft))
      return {std::nullopt, it->second.truncated, 0};
    SearchResult r = exploreStage(std::move(st), stageIdx, phasesLeft);
    if (r.cert) return r;
    MemoEntry& e = sh_.memo[key];
    if (phasesLeft > e.budget) {
      e.budget = phasesLeft;
      e.truncated = r.truncated;
    }
    return r;
  }

  SearchResult exploreStage(BranchState st, int stageIdx, int phasesLeft) {
    if (stageIdx == 0)
      st.trace.push_back("# phase " + std::to_string(depth_ - phasesLeft + 1));
    StageKind kind = static_cast<StageKind>(stageIdx % 3);
    if (kind == StageKind::PrefSuff) {
      Stage stg;
      stg.kind = kind;
      stg.gamma1 = equationUnaryLetters(st.eq);
      return walkStage(std::move(st), stg, stageIdx, phasesLeft);
    }
    if (kind == StageKind::Pop) {
      bool sampled = false;
      std::vector<Partition> parts = partitionsFor(st.eq, sampled);
      if (sampled) sh_.hitLimit("partition-sample");
      SearchResult agg;
      agg.truncated = sampled;
      for (const Partition& p : parts) {
        Stage stg;
        stg.kind = kind;
        stg.partition = p;
        SearchResult r = walkStage(st, stg, stageIdx, phasesLeft);
        if (r.cert) return r;
        agg.truncated |= r.truncated;
      }
      return agg;
    }
    Stage stg = genPopStage(st.eq, st.log, sh_.k0);
    return walkStage(std::move(st), stg, stageIdx, phasesLeft);
  }

  // Good split first (it is what makes compression shrink the equation),
  // then the rest of the cube; beyond 12 letters only the good split and its
  // mirror are tried and the branch counts as truncated.
  std::vector<Partition> partitionsFor(const Equation& eq, bool& sampled) {
    std::set<SymbolId> gamma = equationUnaryLetters(eq);
    std::vector<Partition> out;
    if (gamma.empty()) {
      out.emplace_back();
      return out;
    }
    Partition good = findGoodPartition(std::vector<Term>{eq.lhs, eq.rhs}, eq.sig);
    out.push_back(good);
    std::vector<SymbolId> order(gamma.begin(), gamma.end());
    if (order.size() <= 12) {
      std::uint64_t total = std::uint64_t{1} << order.size();
      for (std::uint64_t mask = 0; mask < total; ++mask) {
        Partition p;
        for (std::size_t i = 0; i < order.size(); ++i)
          ((mask >> i) & 1 ? p.upper : p.lower).insert(order[i]);
        if (p.upper == good.upper) continue;
        out.push_back(std::move(p));
      }
    } else {
      Partition mirror{good.lower, good.upper};
      if (mirror.upper != good.upper) out.push_back(std::move(mirror));
      sampled = true;
    }
    return out;
  }

  SearchResult walkStage(BranchState st, const Stage& stg, int stageIdx, int phasesLeft) {
    Equation preEq = st.eq;
    std::size_t logMark = st.log.events.size();
    std::uint64_t runB = runBoundFor(st.eq, *sh_.lim);
    std::vector<Level> levels = levelsFor(stg, st.eq);
    VarId preVarCount = static_cast<VarId>(preEq.vars.size());
    return levelRec(std::move(st), stg, std::move(levels), 0, GuessSheet{}, preEq, logMark,
                    runB, preVarCount, false, stageIdx, phasesLeft);
  }

  SearchResult levelRec(BranchState st, const Stage& stg, std::vector<Level> levels,
                        std::size_t li, GuessSheet merged, const Equation& preEq,
                        std::size_t logMark, std::uint64_t runB, VarId preVarCount,
                        bool mintedDone, int stageIdx, int phasesLeft) {
    while (li < levels.size() && !levelApplies(st.eq, levels[li])) ++li;
    if (li == levels.size()) {
      if (stg.kind == StageKind::GenPop && !mintedDone) {
        // chunk pops minted fresh variables; give each its constant guess
        for (VarId v = preVarCount; v < st.eq.vars.size(); ++v)
          levels.push_back({LevelKind::VarConst, v});
        return levelRec(std::move(st), stg, std::move(levels), li, std::move(merged), preEq,
                        logMark, runB, preVarCount, true, stageIdx, phasesLeft);
      }
      return finishStage(std::move(st), stg, std::move(merged), preEq, logMark, stageIdx,
                         phasesLeft);
    }
    const Level lv = levels[li];
    bool runSite = false;
    std::vector<GuessSheet> options = levelOptions(st.eq, stg, lv, runB, runSite);
    SearchResult agg;
    if (runSite) {
      agg.truncated = true;  // exponents beyond runB stay unexplored
      sh_.hitLimit("exponent-bound");
    }
    for (const GuessSheet& mini : options) {
      if (++sh_.nodes > sh_.lim->maxNodes) {
        sh_.hitLimit("max-nodes");
        agg.truncated = true;
        break;
      }
      BranchState child = st;
      if (!miniEmpty(mini)) {
        try {
          child.eq = applyPass(stg, child.eq, mini, sh_.lim->exponentCap, child.events);
        } catch (const InconsistentGuess&) {
          continue;
        }
      }
      GuessSheet m2 = merged;
      absorbMini(m2, mini, stg, child.eq, preVarCount);
      SearchResult r = levelRec(std::move(child), stg, levels, li + 1, std::move(m2), preEq,
                                logMark, runB, preVarCount, mintedDone, stageIdx, phasesLeft);
      if (r.cert) return r;
      agg.truncated |= r.truncated;
    }
    return agg;
  }

  SearchResult finishStage(BranchState st, const Stage& stg, GuessSheet merged,
                           const Equation& preEq, std::size_t logMark, int stageIdx,
                           int phasesLeft) {
    if (stg.kind == StageKind::Pop) merged.partition = stg.partition;
    st.eq = compressForStage(stg, st.eq, st.log);
    appendStageTrace(st, stg, merged, preEq, logMark);
    if (sh_.lim->checkInvariants) enforceInvariants(st.eq, caps_, sh_.k0, sh_.varOccBound);
    sh_.maxEqSeen = std::max(sh_.maxEqSeen, equationSize(st.eq));
    int next = stageIdx + 1;
    int pl = phasesLeft;
    if (next == 6) {
      next = 0;
      --pl;
    }
    return atStage(std::move(st), next, pl);
  }

  SearchResult leaf(BranchState st, const Substitution& base, int phasesLeft) {
    SearchResult r;
    r.satPhases = depth_ - phasesLeft;
    r.cert = buildCertificate(eq0_, eqE_, empty_, st.events, st.log, st.eq.sig, base,
                            std::move(st.trace));
    return r;
  }

  const Equation& eq0_;
  Equation eqE_;
  std::set<CVarId> empty_;
  Shared& sh_;
  std::map<CVarId, std::uint64_t> caps_;
  int depth_ = 0;
};

template <class F>
Substitution mapImages(const Substitution& s, F&& f) {
  Substitution out;
  for (const auto& [v, t] : s.varImages) out.varImages[v] = f(t);
  for (const auto& [cv, t] : s.cvarImages) out.cvarImages[cv] = f(t);
  return out;
}

void collectImageLetters(const Substitution& s, const Signature& sig, std::set<SymbolId>& ge1,
                         std::set<SymbolId>& g0) {
  std::map<SymbolId, std::uint64_t> used;
  for (const auto& [v, t] : s.varImages) collectLetters(t, used);
  for (const auto& [cv, t] : s.cvarImages) collectLetters(t, used);
  for (const auto& [a, n] : used) {
    (void)n;
    (sig.arity(a) >= 1 ? ge1 : g0).insert(a);
  }
}

// ---- trace parsing (replay) -----------------------------------------------

struct TraceStage {
  StageKind kind = StageKind::PrefSuff;
  int headerLine = 0;
  std::vector<std::string> upperNames, lowerNames;
  bool sawPartition = false;
  std::vector<std::string> sheetLines;
  std::vector<std::string> eventLines;
};

std::vector<std::string> tokenize(const std::string& ln) {
  std::istringstream in(ln);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

bool isEventLine(const std::vector<std::string>& toks) {
  return !toks.empty() && (toks[0] == "CHAIN" || toks[0] == "PAIR" || toks[0] == "LEAF");
}

std::optional<StageKind> stageKindNamed(const std::string& s) {
  if (s == "prefsuff") return StageKind::PrefSuff;
  if (s == "pop") return StageKind::Pop;
  if (s == "genpop") return StageKind::GenPop;
  return std::nullopt;
}

struct ParsedTrace {
  std::vector<std::string> emptyNames;
  std::vector<TraceStage> stages;
};

ParsedTrace parseTrace(const std::vector<std::string>& lines) {
  ParsedTrace out;
  bool sawHeader = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    int lineNo = static_cast<int>(i) + 1;
    std::vector<std::string> toks = tokenize(lines[i]);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (!sawHeader) {
      if (toks[0] != "empty")
        throw SyntaxError("trace must start with an 'empty' line", lineNo, 1);
      out.emptyNames.assign(toks.begin() + 1, toks.end());
      sawHeader = true;
      continue;
    }
    if (toks[0] == "stage" && toks.size() == 2) {
      if (auto k = stageKindNamed(toks[1])) {
        TraceStage ts;
        ts.kind = *k;
        ts.headerLine = lineNo;
        out.stages.push_back(std::move(ts));
        continue;
      }
    }
    if (out.stages.empty()) throw SyntaxError("guess line before any stage", lineNo, 1);
    TraceStage& cur = out.stages.back();
    if (toks[0] == "partition" &&
        std::find(toks.begin(), toks.end(), "/") != toks.end() && cur.sheetLines.empty() &&
        cur.eventLines.empty() && !cur.sawPartition) {
      bool below = false;
      for (std::size_t j = 1; j < toks.size(); ++j) {
        if (toks[j] == "/") {
          below = true;
          continue;
        }
        (below ? cur.lowerNames : cur.upperNames).push_back(toks[j]);
      }
      cur.sawPartition = true;
      continue;
    }
    if (isEventLine(toks)) {
      cur.eventLines.push_back(lines[i]);
      continue;
    }
    if (!cur.eventLines.empty())
      throw SyntaxError("guess line after compression events", lineNo, 1);
    cur.sheetLines.push_back(lines[i]);
  }
  if (!sawHeader) throw SyntaxError("trace must start with an 'empty' line", 1, 1);
  return out;
}

}  // namespace

// ---- public API -------------------------------------------------------------

Verdict trivialSolve(const Equation& eq) {
  if (termSize(eq.lhs) > 1 || termSize(eq.rhs) > 1)
    throw PreconditionViolated("trivialSolve needs single-node sides");
  const Term& l = eq.lhs;
  const Term& r = eq.rhs;
  Verdict v;
  auto sat = [&](Substitution s) {
    v.outcome = Outcome::Sat;
    SatCertificate cert;
    cert.substitution = std::move(s);
    cert.finalSig = eq.sig;
    v.certificate = std::move(cert);
    return v;
  };
  if (l->kind == NodeKind::Letter && r->kind == NodeKind::Letter) {
    if (l->sym == r->sym) return sat({});
    v.outcome = Outcome::Unsat;
    return v;
  }
  auto firstConstant = [&]() -> SymbolId {
    for (SymbolId a = 0; a < eq.sig.size(); ++a)
      if (eq.sig.arity(a) == 0) return a;
    throw NoConstant("no constant closes a variable-only equation");
  };
  if (l->kind == NodeKind::Var && r->kind == NodeKind::Var) {
    Substitution s;
    Term c = mkLetter(firstConstant());
    s.varImages[l->sym] = c;
    s.varImages[r->sym] = c;
    return sat(std::move(s));
  }
  if (l->kind == NodeKind::Var && r->kind == NodeKind::Letter) {
    Substitution s;
    s.varImages[l->sym] = r;
    return sat(std::move(s));
  }
  if (r->kind == NodeKind::Var && l->kind == NodeKind::Letter) {
    Substitution s;
    s.varImages[r->sym] = l;
    return sat(std::move(s));
  }
  throw PreconditionViolated("trivialSolve saw an unexpected node kind");
}

bool arithmeticallyInfeasible(const Equation& eq) {
  std::map<VarId, std::uint64_t> vl, vr;
  std::map<CVarId, std::uint64_t> cl, cr;
  collectVars(eq.lhs, vl);
  collectVars(eq.rhs, vr);
  collectCVars(eq.lhs, cl);
  collectCVars(eq.rhs, cr);
  auto at = [](const auto& m, std::uint32_t k) -> std::int64_t {
    auto it = m.find(k);
    return it == m.end() ? 0 : static_cast<std::int64_t>(it->second);
  };
  std::vector<std::int64_t> coefs;
  std::set<std::uint32_t> keys;
  for (const auto& [v, n] : vl) keys.insert(v);
  for (const auto& [v, n] : vr) keys.insert(v);
  for (std::uint32_t v : keys) coefs.push_back(at(vl, v) - at(vr, v));
  keys.clear();
  for (const auto& [cv, n] : cl) keys.insert(cv);
  for (const auto& [cv, n] : cr) keys.insert(cv);
  std::int64_t cvarL = 0, cvarR = 0;
  for (std::uint32_t cv : keys) {
    coefs.push_back(at(cl, cv) - at(cr, cv));
    cvarL += at(cl, cv);
    cvarR += at(cr, cv);
  }
  // one line per letter: explicit occurrences balanced by image contents
  std::map<SymbolId, std::uint64_t> ll, lr;
  collectLetters(eq.lhs, ll);
  collectLetters(eq.rhs, lr);
  std::set<SymbolId> ls;
  for (const auto& [a, n] : ll) ls.insert(a);
  for (const auto& [a, n] : lr) ls.insert(a);
  for (SymbolId a : ls)
    if (!feasibleLine(at(lr, a) - at(ll, a), coefs)) return true;
  // the size line: variables contribute >= 1 node, context variables >= 2
  std::int64_t varL = 0, varR = 0;
  for (const auto& [v, n] : vl) varL += static_cast<std::int64_t>(n);
  for (const auto& [v, n] : vr) varR += static_cast<std::int64_t>(n);
  std::int64_t base = (weightedLetterNodes(eq.lhs) + varL + cvarL) -
                      (weightedLetterNodes(eq.rhs) + varR + cvarR);
  return !feasibleLine(-base, coefs);
}

Verdict solve(const Equation& input, const Limits& limits) {
  validateLimits(limits);
  Equation eq0 = input;
  normalizeSignature(eq0);
  Shared sh;
  sh.lim = &limits;
  sh.k0 = eq0.sig.maxArity();  // before compression interns its root marker
  std::uint64_t n0 = equationSize(eq0);
  sh.maxEq = limits.maxEquationSize
                 ? limits.maxEquationSize
                 : limits.sizeConstantC * n0 * std::max<std::uint64_t>(sh.k0, 1);
  sh.varOccBound = std::max<std::uint64_t>(sh.k0, 1) * n0;

  std::vector<CVarId> occurring;
  for (const auto& [cv, n] : cvarOccurrences(eq0)) {
    (void)n;
    occurring.push_back(cv);
  }
  std::vector<std::uint32_t> masks(std::uint64_t{1} << occurring.size());
  for (std::uint32_t m = 0; m < masks.size(); ++m) masks[m] = m;
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    return pa != pb ? pa < pb : a < b;
  });

  // deepen on the phase budget: an early wrong guess then fails within a few
  // phases instead of dragging a full-depth subtree behind it, and the memo
  // carries everything learned into the next round
  bool truncated = false;
  for (int depth = 1; depth <= limits.maxPhases; ++depth) {
    truncated = false;
    for (std::uint32_t mask : masks) {
      std::set<CVarId> declaredEmpty;
      for (std::size_t i = 0; i < occurring.size(); ++i)
        if ((mask >> i) & 1) declaredEmpty.insert(occurring[i]);
      Searcher srch(eq0, removeEmptyCVars(eq0, declaredEmpty), declaredEmpty, sh);
      SearchResult r = srch.run(depth);
      if (r.cert) {
        Verdict v;
        v.outcome = Outcome::Sat;
        v.certificate = std::move(r.cert);
        v.stats = {sh.nodes, sh.maxEqSeen, r.satPhases};
        return v;
      }
      truncated |= r.truncated;
    }
    if (!truncated) break;  // exhausted with nothing left out: unsatisfiable
    if (sh.nodes > limits.maxNodes) break;
  }
  Verdict v;
  v.stats = {sh.nodes, sh.maxEqSeen, 0};
  if (truncated) {
    v.outcome = Outcome::Unknown;
    v.limitFired = sh.firstLimit.empty() ? "exponent-bound" : sh.firstLimit;
  } else {
    v.outcome = Outcome::Unsat;
  }
  return v;
}

std::vector<GuessSheet> enumerateGuessSheets(const Equation& eq, const Stage& st,
                                             const Limits& limits) {
  validateLimits(limits);
  std::uint64_t runB = runBoundFor(eq, limits);
  std::vector<GuessSheet> out;
  std::function<void(Equation, std::vector<Level>, std::size_t, GuessSheet, VarId, bool)> rec =
      [&](Equation cur, std::vector<Level> levels, std::size_t li, GuessSheet merged,
          VarId preVarCount, bool mintedDone) {
        while (li < levels.size() && !levelApplies(cur, levels[li])) ++li;
        if (li == levels.size()) {
          if (st.kind == StageKind::GenPop && !mintedDone) {
            for (VarId v = preVarCount; v < cur.vars.size(); ++v)
              levels.push_back({LevelKind::VarConst, v});
            rec(std::move(cur), std::move(levels), li, std::move(merged), preVarCount, true);
            return;
          }
          if (st.kind == StageKind::Pop) merged.partition = st.partition;
          merged.exponentCap = limits.exponentCap;
          out.push_back(std::move(merged));
          if (out.size() > 200000)
            throw PreconditionViolated("guess sheet space too large to materialize");
          return;
        }
        const Level lv = levels[li];
        bool runSite = false;
        for (const GuessSheet& mini : levelOptions(cur, st, lv, runB, runSite)) {
          Equation next = cur;
          std::vector<ReconstructionEvent> ev;
          if (!miniEmpty(mini)) {
            try {
              next = applyPass(st, cur, mini, limits.exponentCap, ev);
            } catch (const InconsistentGuess&) {
              continue;
            }
          }
          GuessSheet m2 = merged;
          absorbMini(m2, mini, st, next, preVarCount);
          rec(std::move(next), levels, li + 1, std::move(m2), preVarCount, mintedDone);
        }
      };
  rec(eq, levelsFor(st, eq), 0, GuessSheet{}, static_cast<VarId>(eq.vars.size()), false);
  return out;
}

Verdict replaySolve(const Equation& input, const Limits& limits,
                    const std::vector<std::string>& trace) {
  validateLimits(limits);
  ParsedTrace pt = parseTrace(trace);
  Equation eq0 = input;
  normalizeSignature(eq0);
  int k0 = eq0.sig.maxArity();
  std::set<CVarId> declaredEmpty;
  for (const std::string& nm : pt.emptyNames) {
    auto id = eq0.cvars.find(nm);
    if (!id) throw SyntaxError("unknown context variable '" + nm + "' in the empty line", 1, 1);
    declaredEmpty.insert(*id);
  }

  BranchState st;
  st.eq = removeEmptyCVars(eq0, declaredEmpty);
  Equation eqE = st.eq;
  st.log = CompressionLog(st.eq.sig);
  st.trace = trace;
  auto caps = cvarOccurrences(st.eq);
  std::uint64_t varOccBound = std::max<std::uint64_t>(k0, 1) * equationSize(st.eq);

  int expect = 0;  // position in the prefsuff/pop/genpop cadence
  for (const TraceStage& ts : pt.stages) {
    if (sidesTrivial(st.eq))
      throw InconsistentGuess("trace continues past a closed equation (line " +
                              std::to_string(ts.headerLine) + ")");
    if (ts.kind != static_cast<StageKind>(expect % 3))
      throw InconsistentGuess("stage out of order at line " + std::to_string(ts.headerLine));
    Stage stg;
    stg.kind = ts.kind;
    switch (ts.kind) {
      case StageKind::PrefSuff:
        stg.gamma1 = equationUnaryLetters(st.eq);
        break;
      case StageKind::Pop: {
        if (!ts.sawPartition)
          throw InconsistentGuess("pop stage without a partition at line " +
                                  std::to_string(ts.headerLine));
        auto resolve = [&](const std::vector<std::string>& names, std::set<SymbolId>& into) {
          for (const std::string& nm : names) {
            auto id = st.eq.sig.find(nm);
            if (!id)
              throw InconsistentGuess("unknown letter '" + nm + "' in a partition (line " +
                                      std::to_string(ts.headerLine) + ")");
            into.insert(*id);
          }
        };
        resolve(ts.upperNames, stg.partition.upper);
        resolve(ts.lowerNames, stg.partition.lower);
        break;
      }
      case StageKind::GenPop:
        stg = genPopStage(st.eq, st.log, k0);
        break;
    }
    GuessSheet g = parseGuessSheet(ts.sheetLines, st.eq);
    g.exponentCap = limits.exponentCap;
    if (stg.kind == StageKind::GenPop) {
      // guided sheets may pop letters that live only in the recorded
      // solution; honour them by widening the stage sets
      for (const auto& [cv, cg] : g.perCvar) {
        (void)cv;
        if (cg.lastLetter) stg.gammaGe1.insert(*cg.lastLetter);
      }
      for (const auto& [v, vg] : g.perVar) {
        (void)v;
        if (vg.isConstant) stg.gamma0.insert(*vg.isConstant);
      }
      for (const auto& [nm, c] : g.newVarConst) {
        (void)nm;
        stg.gamma0.insert(c);
      }
    }
    // the recorded compressions seed the tables first: a trace written next
    // to a known solution interns letters for the solution images too, in an
    // order a blind rerun cannot reproduce
    for (const std::string& ln : ts.eventLines) ingestEvent(ln, st.eq.sig, st.log);
    std::size_t seeded = st.log.events.size();
    st.eq = applyPass(stg, st.eq, g, limits.exponentCap, st.events);
    st.eq = compressForStage(stg, st.eq, st.log);
    if (st.log.events.size() != seeded)
      throw InconsistentGuess(
          "trace diverged at the stage of line " + std::to_string(ts.headerLine) +
          ": it misses " + formatEvent(st.log.events[seeded], st.eq.sig));
    if (limits.checkInvariants) enforceInvariants(st.eq, caps, k0, varOccBound);
    ++expect;
  }
  if (!sidesTrivial(st.eq))
    throw InconsistentGuess("trace ends before the equation closes");
  Verdict tv = trivialSolve(st.eq);
  if (tv.outcome != Outcome::Sat) return tv;
  Verdict v;
  v.outcome = Outcome::Sat;
  v.certificate = buildCertificate(eq0, eqE, declaredEmpty, st.events, st.log, st.eq.sig,
                                   tv.certificate->substitution, st.trace);
  v.stats.maxEquationSeen = equationSize(eqE);
  return v;
}

GuidedReport solveGuided(const Equation& input, const Substitution& s0,
                         const std::set<CVarId>& declaredEmpty, const Limits& limits) {
  validateLimits(limits);
  Equation eq0 = input;
  normalizeSignature(eq0);
  int k0 = eq0.sig.maxArity();
  Equation eqE = removeEmptyCVars(eq0, declaredEmpty);
  auto caps = cvarOccurrences(eqE);
  std::uint64_t varOccBound = std::max<std::uint64_t>(k0, 1) * equationSize(eqE);

  Substitution s;
  for (const auto& [v, n] : varOccurrences(eqE)) {
    (void)n;
    auto it = s0.varImages.find(v);
    if (it == s0.varImages.end())
      throw NotASolution("guided run lacks an image for " + eqE.vars.name(v));
    s.varImages[v] = expandPowers(it->second);
  }
  for (const auto& [cv, n] : cvarOccurrences(eqE)) {
    (void)n;
    auto it = s0.cvarImages.find(cv);
    if (it == s0.cvarImages.end())
      throw NotASolution("guided run lacks an image for " + eqE.cvars.name(cv));
    s.cvarImages[cv] = expandPowers(it->second);
  }
  if (!verifySolution(eqE, s))
    throw NotASolution("guided run needs a solution of the reduced equation");

  GuidedReport rep;
  BranchState st;
  st.eq = eqE;
  st.log = CompressionLog(eqE.sig);
  st.trace.push_back(emptyHeader(eq0, declaredEmpty));

  auto solutionSize = [&]() {
    return termSize(expandPowers(applySubstitution(st.eq.lhs, s)));
  };
  auto afterStage = [&](const Stage& stg, const GuessSheet& sheet, const Equation& preEq,
                        std::size_t logMark) {
    appendStageTrace(st, stg, sheet, preEq, logMark);
    if (limits.checkInvariants) enforceInvariants(st.eq, caps, k0, varOccBound);
    rep.maxEquationSize = std::max(rep.maxEquationSize, equationSize(st.eq));
    if (!verifySolution(st.eq, s))
      throw InvariantViolation("carried solution broke after a " +
                               std::string(stageName(stg.kind)) + " stage");
  };

  rep.maxEquationSize = equationSize(st.eq);
  rep.solutionSizes.push_back(solutionSize());
  int phase = 0;
  while (!sidesTrivial(st.eq)) {
    if (phase >= limits.maxPhases) {
      rep.verdict.outcome = Outcome::Unknown;
      rep.verdict.limitFired = "max-phases";
      rep.phases = phase;
      rep.verdict.stats.maxEquationSeen = rep.maxEquationSize;
      return rep;
    }
    st.trace.push_back("# phase " + std::to_string(phase + 1));
    s = simplifySolution(st.eq, s);
    for (int sub = 0; sub < 2 && !sidesTrivial(st.eq); ++sub) {
      {
        Stage stg;
        stg.kind = StageKind::PrefSuff;
        stg.gamma1 = equationUnaryLetters(st.eq);
        Equation pre = st.eq;
        std::size_t mark = st.log.events.size();
        GuidedGuess gg = derivePrefSuffGuess(st.eq, s, stg.gamma1, limits.exponentCap);
        st.eq = prefSuff(stg.gamma1, st.eq, gg.sheet, st.events);
        s = gg.after;
        st.eq = chainCompNcr(stg.gamma1, st.eq, st.log);
        s = mapImages(s, [&](const Term& t) {
          return compressChains(stg.gamma1, t, st.eq.sig, st.log);
        });
        afterStage(stg, gg.sheet, pre, mark);
      }
      if (sidesTrivial(st.eq)) break;
      {
        Stage stg;
        stg.kind = StageKind::Pop;
        stg.partition = findGoodPartition(applySubstitution(st.eq.lhs, s), st.eq.sig);
        Equation pre = st.eq;
        std::size_t mark = st.log.events.size();
        GuidedGuess gg = derivePopGuess(st.eq, s, stg.partition);
        st.eq = pop(stg.partition, st.eq, gg.sheet, st.events);
        s = gg.after;
        st.eq = pairCompNcr(stg.partition, st.eq, st.log);
        s = mapImages(s, [&](const Term& t) {
          return compressPairs(stg.partition, t, st.eq.sig, st.log);
        });
        afterStage(stg, gg.sheet, pre, mark);
      }
      if (sidesTrivial(st.eq)) break;
      {
        // letters live only in the solution still matter: take them along
        // instead of minting spares, so the derived pops always find their
        // parent letter in scope
        Stage stg;
        stg.kind = StageKind::GenPop;
        stg.gammaGe1 = equationNonConstants(st.eq);
        stg.gamma0 = equationConstants(st.eq);
        collectImageLetters(s, st.eq.sig, stg.gammaGe1, stg.gamma0);
        st.log.initialLetterCount = st.eq.sig.size();
        Equation pre = st.eq;
        std::size_t mark = st.log.events.size();
        GuidedGuess gg = deriveGenPopGuess(st.eq, s, stg.gammaGe1, stg.gamma0);
        st.eq = genPop(stg.gammaGe1, stg.gamma0, st.eq, gg.sheet, st.events);
        s = gg.after;
        st.eq = childCompNcr(stg.gammaGe1, stg.gamma0, st.eq, st.log);
        s = mapImages(s, [&](const Term& t) {
          return compressLeaves(stg.gammaGe1, stg.gamma0, t, st.eq.sig, st.log);
        });
        afterStage(stg, gg.sheet, pre, mark);
      }
    }
    ++phase;
    rep.solutionSizes.push_back(solutionSize());
  }
  rep.phases = phase;
  Verdict tv = trivialSolve(st.eq);
  if (tv.outcome != Outcome::Sat)
    throw InvariantViolation("guided run closed the equation without satisfying it");
  rep.verdict.outcome = Outcome::Sat;
  rep.verdict.certificate = buildCertificate(eq0, eqE, declaredEmpty, st.events, st.log,
                                             st.eq.sig, tv.certificate->substitution,
                                             st.trace);
  rep.verdict.stats.maxEquationSeen = rep.maxEquationSize;
  rep.verdict.stats.satPhases = phase;
  return rep;
}

}  // namespace recomp
