#include "recomp/term.hpp"

#include <algorithm>

namespace recomp {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h * kFnvPrime;
}

Term finish(TermNode&& n) {
  std::uint64_t h = kFnvOffset;
  h = mix(h, static_cast<std::uint64_t>(n.kind));
  h = mix(h, n.sym);
  h = mix(h, n.exp);
  std::uint64_t size = 1;
  std::uint32_t holes = n.kind == NodeKind::Hole ? 1u : 0u;
  std::uint8_t flags = 0;
  if (n.kind == NodeKind::Var) flags |= kHasVar;
  if (n.kind == NodeKind::CVar) flags |= kHasCVar;
  for (const Term& c : n.children) {
    h = mix(h, c->hash);
    size += c->size;
    holes += c->holes;
    flags |= c->flags;
  }
  n.hash = h;
  n.size = size;
  n.holes = holes;
  n.flags = flags;
  return std::make_shared<const TermNode>(std::move(n));
}

}  // namespace

SymbolId Signature::add(const std::string& name, int arity, Origin origin) {
  if (byName_.count(name)) throw DuplicateName("duplicate letter name: " + name);
  SymbolId id = static_cast<SymbolId>(letters_.size());
  letters_.push_back(Letter{name, arity, origin});
  byName_[name] = id;
  maxArity_ = std::max(maxArity_, arity);
  return id;
}

SymbolId Signature::fresh(int arity, Origin origin) {
  if (arity > maxArity_)
    throw ArityTooLarge("fresh letter arity " + std::to_string(arity) +
                        " exceeds the signature's maximal arity " +
                        std::to_string(maxArity_));
  const char* prefix = "n";
  switch (origin) {
    case Origin::Input: prefix = "n"; break;
    case Origin::FreshChain: prefix = "c"; break;
    case Origin::FreshPair: prefix = "p"; break;
    case Origin::FreshLeaf: prefix = "l"; break;
  }
  std::string name;
  do {
    name = std::string(prefix) + "$" + std::to_string(++freshCounter_);
  } while (byName_.count(name));
  SymbolId id = static_cast<SymbolId>(letters_.size());
  letters_.push_back(Letter{name, arity, origin});
  byName_[name] = id;
  return id;
}

SymbolId Signature::freshChain(SymbolId base, std::uint64_t len) {
  if (maxArity_ < 1)
    throw ArityTooLarge("chain letter in a constants-only signature");
  std::string name = letters_[base].name + "$" + std::to_string(len);
  // A pair/leaf name could in principle occupy base$len; disambiguate with
  // the counter while keeping determinism.
  while (byName_.count(name))
    name += "$" + std::to_string(++freshCounter_);
  SymbolId id = static_cast<SymbolId>(letters_.size());
  letters_.push_back(Letter{name, 1, Origin::FreshChain});
  byName_[name] = id;
  return id;
}

std::optional<SymbolId> Signature::find(const std::string& name) const {
  auto it = byName_.find(name);
  if (it == byName_.end()) return std::nullopt;
  return it->second;
}

bool Signature::hasConstant() const {
  for (const Letter& l : letters_)
    if (l.arity == 0) return true;
  return false;
}

Term mkLetter(SymbolId sym, std::vector<Term> children) {
  TermNode n;
  n.kind = NodeKind::Letter;
  n.sym = sym;
  n.exp = 1;
  n.children = std::move(children);
  return finish(std::move(n));
}

Term mkPower(SymbolId sym, std::uint64_t exp, Term child) {
  if (exp == 0) throw PreconditionViolated("power node with exponent 0");
  TermNode n;
  n.kind = NodeKind::Letter;
  n.sym = sym;
  n.exp = exp;
  n.children = {std::move(child)};
  return finish(std::move(n));
}

Term mkVar(VarId v) {
  TermNode n;
  n.kind = NodeKind::Var;
  n.sym = v;
  n.exp = 1;
  return finish(std::move(n));
}

Term mkCVar(CVarId cv, Term child) {
  TermNode n;
  n.kind = NodeKind::CVar;
  n.sym = cv;
  n.exp = 1;
  n.children = {std::move(child)};
  return finish(std::move(n));
}

Term mkHole() {
  TermNode n;
  n.kind = NodeKind::Hole;
  n.sym = 0;
  n.exp = 1;
  return finish(std::move(n));
}

bool termEq(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash || a->kind != b->kind || a->sym != b->sym ||
      a->exp != b->exp || a->size != b->size ||
      a->children.size() != b->children.size())
    return false;
  for (std::size_t i = 0; i < a->children.size(); ++i)
    if (!termEq(a->children[i], b->children[i])) return false;
  return true;
}

bool termLess(const Term& a, const Term& b) {
  if (a->size != b->size) return a->size < b->size;
  if (a->kind != b->kind) return a->kind == NodeKind::Hole;  // holes first
  if (a->sym != b->sym) return a->sym < b->sym;
  if (a->exp != b->exp) return a->exp < b->exp;
  for (std::size_t i = 0; i < std::min(a->children.size(), b->children.size()); ++i) {
    if (!termEq(a->children[i], b->children[i]))
      return termLess(a->children[i], b->children[i]);
  }
  return a->children.size() < b->children.size();
}

bool wellFormed(const Term& t, const Signature& sig) {
  switch (t->kind) {
    case NodeKind::Letter: {
      if (t->sym >= sig.size()) return false;
      int ar = sig.arity(t->sym);
      if (t->children.size() != static_cast<std::size_t>(ar)) return false;
      if (t->exp != 1 && ar != 1) return false;
      if (t->exp == 0) return false;
      break;
    }
    case NodeKind::Var:
      if (!t->children.empty() || t->exp != 1) return false;
      break;
    case NodeKind::CVar:
      if (t->children.size() != 1 || t->exp != 1) return false;
      break;
    case NodeKind::Hole:
      if (!t->children.empty() || t->exp != 1) return false;
      break;
  }
  for (const Term& c : t->children)
    if (!wellFormed(c, sig)) return false;
  return true;
}

namespace {

std::uint64_t expandedSize(const Term& t, std::uint64_t cap) {
  std::uint64_t n = t->exp;  // a power node expands to exp nodes
  for (const Term& c : t->children) {
    n += expandedSize(c, cap);
    if (n > cap) return cap + 1;
  }
  return n;
}

Term expandPowersRec(const Term& t) {
  if (t->kind == NodeKind::Letter && t->exp > 1) {
    Term body = expandPowersRec(t->children[0]);
    for (std::uint64_t i = 0; i < t->exp; ++i) body = mkLetter(t->sym, {body});
    return body;
  }
  bool changed = false;
  std::vector<Term> kids;
  kids.reserve(t->children.size());
  for (const Term& c : t->children) {
    Term e = expandPowersRec(c);
    changed = changed || e.get() != c.get();
    kids.push_back(std::move(e));
  }
  if (!changed) return t;
  switch (t->kind) {
    case NodeKind::Letter: return mkLetter(t->sym, std::move(kids));
    case NodeKind::CVar: return mkCVar(t->sym, std::move(kids[0]));
    default: return t;
  }
}

}  // namespace

Term expandPowers(const Term& t, std::uint64_t maxNodes) {
  if (expandedSize(t, maxNodes) > maxNodes)
    throw PreconditionViolated("power expansion exceeds the node budget");
  return expandPowersRec(t);
}

Term applySubstitution(const Term& t, const Substitution& s) {
  switch (t->kind) {
    case NodeKind::Var: {
      auto it = s.varImages.find(t->sym);
      if (it == s.varImages.end())
        throw UndefinedVariable("no image for variable id " + std::to_string(t->sym));
      return it->second;
    }
    case NodeKind::CVar: {
      auto it = s.cvarImages.find(t->sym);
      if (it == s.cvarImages.end())
        throw UndefinedVariable("no image for context variable id " +
                                std::to_string(t->sym));
      Term arg = applySubstitution(t->children[0], s);
      return composeContext(it->second, arg);
    }
    case NodeKind::Hole:
      return t;
    case NodeKind::Letter: {
      if (t->flags == 0) return t;  // ground subtree, reuse
      std::vector<Term> kids;
      kids.reserve(t->children.size());
      for (const Term& c : t->children) kids.push_back(applySubstitution(c, s));
      if (t->exp > 1) return mkPower(t->sym, t->exp, std::move(kids[0]));
      return mkLetter(t->sym, std::move(kids));
    }
  }
  return t;
}

Term composeContext(const Term& ctx, const Term& arg) {
  if (ctx->holes != 1)
    throw NotAContext("composeContext needs a context with exactly one hole");
  if (ctx->kind == NodeKind::Hole) return arg;
  std::vector<Term> kids = ctx->children;
  for (Term& c : kids) {
    if (c->holes == 1) {
      c = composeContext(c, arg);
      if (ctx->kind == NodeKind::CVar) return mkCVar(ctx->sym, std::move(c));
      if (ctx->exp > 1) return mkPower(ctx->sym, ctx->exp, std::move(c));
      return mkLetter(ctx->sym, std::move(kids));
    }
  }
  throw NotAContext("hole count bookkeeping went wrong");
}

std::uint64_t countVarOccurrences(const Term& t, VarId v) {
  if (!(t->flags & kHasVar)) return 0;
  std::uint64_t n = t->kind == NodeKind::Var && t->sym == v ? 1 : 0;
  for (const Term& c : t->children) n += countVarOccurrences(c, v);
  return n;
}

std::uint64_t countCVarOccurrences(const Term& t, CVarId cv) {
  if (!(t->flags & kHasCVar)) return 0;
  std::uint64_t n = t->kind == NodeKind::CVar && t->sym == cv ? 1 : 0;
  for (const Term& c : t->children) n += countCVarOccurrences(c, cv);
  return n;
}

std::uint64_t countAllVarOccurrences(const Term& t) {
  if (!(t->flags & kHasVar)) return 0;
  std::uint64_t n = t->kind == NodeKind::Var ? 1 : 0;
  for (const Term& c : t->children) n += countAllVarOccurrences(c);
  return n;
}

void collectVars(const Term& t, std::map<VarId, std::uint64_t>& out) {
  if (!(t->flags & kHasVar)) return;
  if (t->kind == NodeKind::Var) ++out[t->sym];
  for (const Term& c : t->children) collectVars(c, out);
}

void collectCVars(const Term& t, std::map<CVarId, std::uint64_t>& out) {
  if (!(t->flags & kHasCVar)) return;
  if (t->kind == NodeKind::CVar) ++out[t->sym];
  for (const Term& c : t->children) collectCVars(c, out);
}

void collectLetters(const Term& t, std::map<SymbolId, std::uint64_t>& out) {
  if (t->kind == NodeKind::Letter) out[t->sym] += t->exp;
  for (const Term& c : t->children) collectLetters(c, out);
}

std::uint32_t NamePool::add(const std::string& name) {
  if (byName_.count(name)) throw DuplicateName("duplicate name: " + name);
  std::uint32_t id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(name);
  byName_[name] = id;
  return id;
}

std::uint32_t NamePool::fresh() {
  std::string name;
  do {
    name = freshPrefix_ + "$" + std::to_string(++freshCounter_);
  } while (byName_.count(name));
  return add(name);
}

std::optional<std::uint32_t> NamePool::find(const std::string& name) const {
  auto it = byName_.find(name);
  if (it == byName_.end()) return std::nullopt;
  return it->second;
}

}  // namespace recomp
