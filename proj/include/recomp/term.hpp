#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recomp/errors.hpp"

namespace recomp {

using SymbolId = std::uint32_t;
using VarId = std::uint32_t;
using CVarId = std::uint32_t;

// Where a letter came from. Input letters are declared by the problem (or
// minted by signature normalization); the three fresh kinds are introduced by
// the corresponding compression steps.
enum class Origin : std::uint8_t { Input, FreshChain, FreshPair, FreshLeaf };

struct Letter {
  std::string name;
  int arity = 0;
  Origin origin = Origin::Input;
};

// Ranked alphabet. Append-only: letter ids stay stable for the lifetime of
// the signature, and copies share the id space of their common prefix (the
// solver copies signatures per search branch). The maximal arity is set by
// the input letters; fresh letters may not exceed it.
class Signature {
 public:
  SymbolId add(const std::string& name, int arity, Origin origin = Origin::Input);
  // Mints a letter with a deterministic name: origin prefix + "$" + counter,
  // skipping counters whose name is already taken.
  SymbolId fresh(int arity, Origin origin);
  // Mints (or finds) the letter named base$len used by chain compression.
  SymbolId freshChain(SymbolId base, std::uint64_t len);

  bool has(const std::string& name) const { return byName_.count(name) != 0; }
  std::optional<SymbolId> find(const std::string& name) const;
  const Letter& letter(SymbolId id) const { return letters_[id]; }
  int arity(SymbolId id) const { return letters_[id].arity; }
  const std::string& name(SymbolId id) const { return letters_[id].name; }
  std::size_t size() const { return letters_.size(); }
  int maxArity() const { return maxArity_; }
  bool hasConstant() const;

 private:
  std::vector<Letter> letters_;
  std::map<std::string, SymbolId> byName_;
  std::uint64_t freshCounter_ = 0;
  int maxArity_ = 0;
};

enum class NodeKind : std::uint8_t { Letter, Var, CVar, Hole };

struct TermNode;
// Terms are immutable values shared by pointer; every rewrite builds new
// nodes and reuses untouched subtrees.
using Term = std::shared_ptr<const TermNode>;

inline constexpr std::uint8_t kHasVar = 1;
inline constexpr std::uint8_t kHasCVar = 2;

struct TermNode {
  NodeKind kind;
  std::uint8_t flags;   // kHasVar / kHasCVar anywhere in the subtree
  std::uint32_t sym;    // SymbolId, VarId or CVarId depending on kind
  std::uint64_t exp;    // chain exponent; == 1 except on unary letter nodes
  std::uint64_t size;   // node count; a node carrying an exponent counts once
  std::uint64_t hash;
  std::uint32_t holes;  // hole count in the subtree (1 for a ground context)
  std::vector<Term> children;
};

// Node factories. They keep the cached size/hash/flags consistent; arity
// validity against a signature is wellFormed's job.
Term mkLetter(SymbolId sym, std::vector<Term> children = {});
Term mkPower(SymbolId sym, std::uint64_t exp, Term child);
Term mkVar(VarId v);
Term mkCVar(CVarId cv, Term child);
Term mkHole();

inline std::uint64_t termSize(const Term& t) { return t->size; }
inline bool isGround(const Term& t) {
  return t->flags == 0 && t->holes == 0;
}
inline bool isContext(const Term& t) {
  return t->flags == 0 && t->holes == 1;
}
inline bool isEmptyContext(const Term& t) { return t->kind == NodeKind::Hole; }

bool termEq(const Term& a, const Term& b);
// Total order used by the enumeration oracle: size first, then root symbol
// (holes before letters), then children lexicographically.
bool termLess(const Term& a, const Term& b);

// True iff every letter node matches its declared arity (power nodes only on
// unary letters, exponent >= 1), variables are leaves and context variables
// have exactly one child.
bool wellFormed(const Term& t, const Signature& sig);

// Expands every exponent-carrying node into a plain run of unary nodes.
// Throws PreconditionViolated if the expansion would exceed maxNodes.
Term expandPowers(const Term& t, std::uint64_t maxNodes = 1u << 22);

// Ground substitution: context variables map to ground contexts (exactly one
// hole; the bare hole is the empty context), variables to ground terms.
struct Substitution {
  std::map<CVarId, Term> cvarImages;
  std::map<VarId, Term> varImages;

  bool definesVar(VarId v) const { return varImages.count(v) != 0; }
  bool definesCVar(CVarId cv) const { return cvarImages.count(cv) != 0; }
};

// Replaces every variable by its image and every context variable
// application X(t) by the image with the hole replaced by the rewritten t.
// Throws UndefinedVariable for a missing image, NotAContext for a context
// image without exactly one hole.
Term applySubstitution(const Term& t, const Substitution& s);

// Plugs `arg` into the unique hole of the ground context `ctx`.
Term composeContext(const Term& ctx, const Term& arg);

// Occurrence helpers.
std::uint64_t countVarOccurrences(const Term& t, VarId v);
std::uint64_t countCVarOccurrences(const Term& t, CVarId cv);
std::uint64_t countAllVarOccurrences(const Term& t);
void collectVars(const Term& t, std::map<VarId, std::uint64_t>& out);
void collectCVars(const Term& t, std::map<CVarId, std::uint64_t>& out);
void collectLetters(const Term& t, std::map<SymbolId, std::uint64_t>& out);

// Name pool for variables or context variables: declared names plus
// deterministically named fresh ones ("v$3").
class NamePool {
 public:
  explicit NamePool(std::string freshPrefix) : freshPrefix_(std::move(freshPrefix)) {}

  std::uint32_t add(const std::string& name);
  std::uint32_t fresh();
  std::optional<std::uint32_t> find(const std::string& name) const;
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::string freshPrefix_;
  std::vector<std::string> names_;
  std::map<std::string, std::uint32_t> byName_;
  std::uint64_t freshCounter_ = 0;
};

}  // namespace recomp
