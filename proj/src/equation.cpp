#include "recomp/equation.hpp"

#include <algorithm>

namespace recomp {

namespace {

void statsRec(const Term& t, const Signature& sig, EquationStats& st) {
  switch (t->kind) {
    case NodeKind::Letter: {
      int ar = sig.arity(t->sym);
      if (ar == 0)
        ++st.n0;
      else if (ar == 1)
        st.n1 += t->exp;
      else
        ++st.nGe2;
      break;
    }
    case NodeKind::Var:
      ++st.varOcc;
      break;
    case NodeKind::CVar:
      ++st.cvarOcc;
      break;
    case NodeKind::Hole:
      break;
  }
  for (const Term& c : t->children) statsRec(c, sig, st);
}

template <typename Collect>
std::set<SymbolId> lettersWhere(const Equation& eq, Collect pred) {
  std::map<SymbolId, std::uint64_t> all;
  collectLetters(eq.lhs, all);
  collectLetters(eq.rhs, all);
  std::set<SymbolId> out;
  for (const auto& [sym, n] : all)
    if (pred(eq.sig.arity(sym))) out.insert(sym);
  return out;
}

}  // namespace

EquationStats stats(const Equation& eq) {
  EquationStats st;
  st.size = equationSize(eq);
  statsRec(eq.lhs, eq.sig, st);
  statsRec(eq.rhs, eq.sig, st);
  st.distinctVars = varOccurrences(eq).size();
  st.distinctCVars = cvarOccurrences(eq).size();
  return st;
}

std::set<SymbolId> equationLetters(const Equation& eq) {
  return lettersWhere(eq, [](int) { return true; });
}
std::set<SymbolId> equationUnaryLetters(const Equation& eq) {
  return lettersWhere(eq, [](int ar) { return ar == 1; });
}
std::set<SymbolId> equationConstants(const Equation& eq) {
  return lettersWhere(eq, [](int ar) { return ar == 0; });
}
std::set<SymbolId> equationNonConstants(const Equation& eq) {
  return lettersWhere(eq, [](int ar) { return ar >= 1; });
}

std::map<VarId, std::uint64_t> varOccurrences(const Equation& eq) {
  std::map<VarId, std::uint64_t> out;
  collectVars(eq.lhs, out);
  collectVars(eq.rhs, out);
  return out;
}

std::map<CVarId, std::uint64_t> cvarOccurrences(const Equation& eq) {
  std::map<CVarId, std::uint64_t> out;
  collectCVars(eq.lhs, out);
  collectCVars(eq.rhs, out);
  return out;
}

std::optional<SymbolId> rootLetter(const Term& t) {
  if (t->kind == NodeKind::Letter) return t->sym;
  return std::nullopt;
}

std::optional<SymbolId> holeParentLetter(const Term& ctx) {
  if (ctx->holes != 1) throw NotAContext("holeParentLetter needs exactly one hole");
  if (ctx->kind == NodeKind::Hole) return std::nullopt;
  for (const Term& c : ctx->children)
    if (c->holes == 1) {
      if (c->kind == NodeKind::Hole) return ctx->sym;
      return holeParentLetter(c);
    }
  throw NotAContext("hole count bookkeeping went wrong");
}

bool satisfies(const Equation& eq, const Substitution& s) {
  Term l = expandPowers(applySubstitution(eq.lhs, s));
  Term r = expandPowers(applySubstitution(eq.rhs, s));
  return termEq(l, r);
}

bool verifySolution(const Equation& eq, const Substitution& s) {
  for (const auto& [cv, n] : cvarOccurrences(eq)) {
    auto it = s.cvarImages.find(cv);
    if (it == s.cvarImages.end())
      throw UndefinedVariable("no image for context variable " + eq.cvars.name(cv));
    if (isEmptyContext(it->second)) return false;
  }
  return satisfies(eq, s);
}

namespace {

Term dropCVars(const Term& t, const std::set<CVarId>& empty) {
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& c : t->children) {
    Term r = dropCVars(c, empty);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  if (t->kind == NodeKind::CVar && empty.count(t->sym)) return kids[0];
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

}  // namespace

Equation removeEmptyCVars(const Equation& eq, const std::set<CVarId>& empty) {
  Equation out = eq;
  out.lhs = dropCVars(eq.lhs, empty);
  out.rhs = dropCVars(eq.rhs, empty);
  return out;
}

bool verifyCertificate(const Equation& eq, const Substitution& s,
                       const std::set<CVarId>& declaredEmpty) {
  for (CVarId cv : declaredEmpty) {
    auto it = s.cvarImages.find(cv);
    if (it == s.cvarImages.end() || !isEmptyContext(it->second)) return false;
  }
  if (!satisfies(eq, s)) return false;
  return verifySolution(removeEmptyCVars(eq, declaredEmpty), s);
}

void normalizeSignature(Equation& eq) {
  if (!eq.sig.hasConstant())
    throw NoConstant("signature has no constant, so no ground term exists");
  std::set<int> present;
  for (SymbolId id = 0; id < eq.sig.size(); ++id) present.insert(eq.sig.arity(id));
  for (int m = 1; m <= eq.sig.maxArity(); ++m)
    if (!present.count(m)) eq.sig.fresh(m, Origin::Input);
}

namespace {

Term renameLetters(const Term& t, const std::map<SymbolId, SymbolId>& ren) {
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  bool changed = false;
  for (const Term& c : t->children) {
    Term r = renameLetters(c, ren);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  SymbolId sym = t->sym;
  if (t->kind == NodeKind::Letter) {
    auto it = ren.find(sym);
    if (it != ren.end()) sym = it->second;
  }
  if (!changed && sym == t->sym) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(sym, t->exp, std::move(kids[0]));
      return mkLetter(sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

// Splices out every node labelled with the unary letter a.
Term spliceLetter(const Term& t, SymbolId a) {
  if (t->kind == NodeKind::Letter && t->sym == a)
    return spliceLetter(t->children[0], a);
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& c : t->children) {
    Term r = spliceLetter(c, a);
    changed = changed || r.get() != c.get();
    kids.push_back(std::move(r));
  }
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter:
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar:
      return mkCVar(t->sym, std::move(kids[0]));
    default:
      return t;
  }
}

}  // namespace

Substitution simplifySolution(const Equation& eq, const Substitution& s) {
  if (!verifySolution(eq, s))
    throw NotASolution("simplifySolution needs a verified solution");

  std::set<SymbolId> inEq = equationLetters(eq);
  std::map<SymbolId, std::uint64_t> used;
  for (const auto& [v, img] : s.varImages) collectLetters(img, used);
  for (const auto& [cv, img] : s.cvarImages) collectLetters(img, used);

  // Per arity, merge every absent letter into the smallest absent one used.
  std::map<int, SymbolId> target;
  std::map<SymbolId, SymbolId> ren;
  for (const auto& [sym, n] : used) {
    if (inEq.count(sym)) continue;
    int ar = eq.sig.arity(sym);
    auto it = target.find(ar);
    if (it == target.end())
      target.emplace(ar, sym);
    else if (it->second != sym)
      ren[sym] = it->second;
  }

  Substitution out;
  for (const auto& [v, img] : s.varImages) out.varImages[v] = renameLetters(img, ren);
  for (const auto& [cv, img] : s.cvarImages)
    out.cvarImages[cv] = renameLetters(img, ren);

  // Drop the surviving absent unary letter, unless that would empty the
  // image of a context variable that occurs in the equation.
  auto it1 = target.find(1);
  if (it1 != target.end()) {
    SymbolId a = it1->second;
    bool safe = true;
    for (const auto& [cv, n] : cvarOccurrences(eq)) {
      Term spliced = spliceLetter(out.cvarImages.at(cv), a);
      if (isEmptyContext(spliced)) {
        safe = false;
        break;
      }
    }
    if (safe) {
      for (auto& [v, img] : out.varImages) img = spliceLetter(img, a);
      for (auto& [cv, img] : out.cvarImages) img = spliceLetter(img, a);
    }
  }

  if (!verifySolution(eq, out))
    throw InvariantViolation("simplifySolution produced a non-solution");
  return out;
}

// --- Crossing classification -------------------------------------------

namespace {

constexpr int kTextTag = -1;

struct TagNode {
  SymbolId sym = 0;
  int tag = kTextTag;
  std::vector<std::unique_ptr<TagNode>> children;
};
using TagTree = std::unique_ptr<TagNode>;

// Tags a ground image (term or context), plugging `fill` into the hole.
TagTree tagGround(const Term& t, int tag, TagTree* fill) {
  if (t->kind == NodeKind::Hole) {
    if (!fill || !*fill)
      throw PreconditionViolated("image hole without an argument");
    return std::move(*fill);
  }
  auto n = std::make_unique<TagNode>();
  n->sym = t->sym;
  n->tag = tag;
  for (const Term& c : t->children) n->children.push_back(tagGround(c, tag, fill));
  return n;
}

TagTree tagApply(const Term& t, const Substitution& s, int& occ) {
  switch (t->kind) {
    case NodeKind::Var: {
      auto it = s.varImages.find(t->sym);
      if (it == s.varImages.end())
        throw UndefinedVariable("no image for variable id " + std::to_string(t->sym));
      int id = occ++;
      return tagGround(expandPowers(it->second), id, nullptr);
    }
    case NodeKind::CVar: {
      auto it = s.cvarImages.find(t->sym);
      if (it == s.cvarImages.end())
        throw UndefinedVariable("no image for context variable id " +
                                std::to_string(t->sym));
      int id = occ++;
      TagTree arg = tagApply(t->children[0], s, occ);
      return tagGround(expandPowers(it->second), id, &arg);
    }
    case NodeKind::Letter: {
      auto n = std::make_unique<TagNode>();
      n->sym = t->sym;
      n->tag = kTextTag;
      for (const Term& c : t->children) n->children.push_back(tagApply(c, s, occ));
      return n;
    }
    case NodeKind::Hole:
      throw PreconditionViolated("equation side contains a hole");
  }
  return nullptr;
}

OccurrenceClass classifyTags(int parent, int child) {
  if (parent == kTextTag && child == kTextTag) return OccurrenceClass::Explicit;
  if (parent == child) return OccurrenceClass::Implicit;
  return OccurrenceClass::Crossing;
}

void walkPairs(const TagNode* n, SymbolId a, SymbolId b, int side,
               std::vector<int>& path, std::vector<AdjacencyOccurrence>& out) {
  if (n->sym == a && n->children.size() == 1) {
    const TagNode* c = n->children[0].get();
    if (c->sym == b && c->children.size() == 1)
      out.push_back({side, path, classifyTags(n->tag, c->tag)});
  }
  for (std::size_t i = 0; i < n->children.size(); ++i) {
    path.push_back(static_cast<int>(i));
    walkPairs(n->children[i].get(), a, b, side, path, out);
    path.pop_back();
  }
}

bool anyCrossingParentLeaf(const TagNode* n, SymbolId f, SymbolId a) {
  if (n->sym == f && !n->children.empty()) {
    for (const auto& c : n->children)
      if (c->sym == a && c->children.empty() &&
          classifyTags(n->tag, c->tag) == OccurrenceClass::Crossing)
        return true;
  }
  for (const auto& c : n->children)
    if (anyCrossingParentLeaf(c.get(), f, a)) return true;
  return false;
}

// First letter of an image: nullopt only for the empty context.
std::optional<SymbolId> firstLetterOf(const Term& image) { return rootLetter(image); }

const Term& imageOfVar(const Substitution& s, VarId v) {
  auto it = s.varImages.find(v);
  if (it == s.varImages.end())
    throw UndefinedVariable("no image for variable id " + std::to_string(v));
  return it->second;
}

const Term& imageOfCVar(const Substitution& s, CVarId cv) {
  auto it = s.cvarImages.find(cv);
  if (it == s.cvarImages.end())
    throw UndefinedVariable("no image for context variable id " + std::to_string(cv));
  return it->second;
}

// Operational scans share this walk over the equation text.
template <typename Visit>
void scanText(const Term& t, Visit&& visit) {
  visit(t);
  for (const Term& c : t->children) scanText(c, visit);
}

}  // namespace

PairReport classifyPairOccurrences(const Equation& eq, const Substitution& s,
                                   SymbolId a, SymbolId b) {
  PairReport rep;

  int occ = 0;
  TagTree l = tagApply(expandPowers(eq.lhs), s, occ);
  TagTree r = tagApply(expandPowers(eq.rhs), s, occ);
  std::vector<int> path;
  walkPairs(l.get(), a, b, 0, path, rep.occurrences);
  walkPairs(r.get(), a, b, 1, path, rep.occurrences);
  for (const auto& o : rep.occurrences)
    if (o.cls == OccurrenceClass::Crossing) rep.crossing = true;

  auto note = [&](const char* tagName, const std::string& what) {
    rep.witnesses.push_back(std::string(tagName) + ": " + what);
  };
  for (const Term* side : {&eq.lhs, &eq.rhs}) {
    scanText(*side, [&](const Term& n) {
      if (n->kind == NodeKind::Letter && n->sym == a && n->children.size() == 1) {
        const Term& c = n->children[0];
        if (c->kind == NodeKind::CVar &&
            firstLetterOf(imageOfCVar(s, c->sym)) == b) {
          rep.cp1 = true;
          note("CP1", eq.sig.name(a) + "(" + eq.cvars.name(c->sym) +
                          ") with S(" + eq.cvars.name(c->sym) +
                          ") starting " + eq.sig.name(b));
        }
        if (c->kind == NodeKind::Var && firstLetterOf(imageOfVar(s, c->sym)) == b) {
          rep.cp1 = true;
          note("CP1", eq.sig.name(a) + "(" + eq.vars.name(c->sym) + ") with S(" +
                          eq.vars.name(c->sym) + ") starting " + eq.sig.name(b));
        }
      }
      if (n->kind == NodeKind::CVar) {
        const Term& c = n->children[0];
        auto last = holeParentLetter(imageOfCVar(s, n->sym));
        if (c->kind == NodeKind::Letter && c->sym == b &&
            c->children.size() == 1 && last == a) {
          rep.cp2 = true;
          note("CP2", eq.cvars.name(n->sym) + "(" + eq.sig.name(b) +
                          ") with S(" + eq.cvars.name(n->sym) + ") ending " +
                          eq.sig.name(a));
        }
        if (c->kind == NodeKind::CVar && last == a &&
            firstLetterOf(imageOfCVar(s, c->sym)) == b) {
          rep.cp3 = true;
          note("CP3", eq.cvars.name(n->sym) + "(" + eq.cvars.name(c->sym) + ")");
        }
        if (c->kind == NodeKind::Var && last == a &&
            firstLetterOf(imageOfVar(s, c->sym)) == b) {
          rep.cp3 = true;
          note("CP3", eq.cvars.name(n->sym) + "(" + eq.vars.name(c->sym) + ")");
        }
      }
    });
  }
  return rep;
}

ChainReport classifyChain(const Equation& eq, const Substitution& s, SymbolId a) {
  PairReport aa = classifyPairOccurrences(eq, s, a, a);
  ChainReport rep;
  rep.crossing = aa.crossing;
  rep.cc1 = aa.cp1;
  rep.cc2 = aa.cp2;
  rep.cc3 = aa.cp3;
  for (const auto& w : aa.witnesses) {
    std::string cw = w;
    cw.replace(0, 2, "CC");  // CPn -> CCn
    rep.witnesses.push_back(std::move(cw));
  }
  return rep;
}

ParentLeafReport classifyParentLeaf(const Equation& eq, const Substitution& s,
                                    SymbolId f, SymbolId a) {
  ParentLeafReport rep;

  int occ = 0;
  TagTree l = tagApply(expandPowers(eq.lhs), s, occ);
  TagTree r = tagApply(expandPowers(eq.rhs), s, occ);
  rep.crossing =
      anyCrossingParentLeaf(l.get(), f, a) || anyCrossingParentLeaf(r.get(), f, a);

  auto note = [&](const char* tagName, const std::string& what) {
    rep.witnesses.push_back(std::string(tagName) + ": " + what);
  };
  for (const Term* side : {&eq.lhs, &eq.rhs}) {
    scanText(*side, [&](const Term& n) {
      if (n->kind == NodeKind::Letter && n->sym == f) {
        for (const Term& c : n->children) {
          if (c->kind == NodeKind::Var) {
            const Term& img = imageOfVar(s, c->sym);
            if (img->kind == NodeKind::Letter && img->sym == a &&
                img->children.empty()) {
              rep.cfl1 = true;
              note("CFL1", eq.sig.name(f) + " with son " + eq.vars.name(c->sym) +
                               " = " + eq.sig.name(a));
            }
          }
        }
      }
      if (n->kind == NodeKind::CVar) {
        const Term& c = n->children[0];
        auto last = holeParentLetter(imageOfCVar(s, n->sym));
        if (c->kind == NodeKind::Letter && c->sym == a && c->children.empty() &&
            last == f) {
          rep.cfl2 = true;
          note("CFL2", eq.cvars.name(n->sym) + "(" + eq.sig.name(a) +
                           ") with S(" + eq.cvars.name(n->sym) + ") ending " +
                           eq.sig.name(f));
        }
        if (c->kind == NodeKind::Var && last == f) {
          const Term& img = imageOfVar(s, c->sym);
          if (img->kind == NodeKind::Letter && img->sym == a && img->children.empty()) {
            rep.cfl3 = true;
            note("CFL3", eq.cvars.name(n->sym) + "(" + eq.vars.name(c->sym) + ")");
          }
        }
      }
    });
  }
  return rep;
}

}  // namespace recomp
