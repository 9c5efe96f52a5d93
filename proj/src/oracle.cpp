#include "recomp/oracle.hpp"

#include <algorithm>
#include <bit>
#include <functional>

namespace recomp {

Signature enumerationSignature(const Equation& eq) {
  Signature sig = eq.sig;
  for (int ar = 0; ar <= eq.sig.maxArity(); ++ar) sig.fresh(ar, Origin::Input);
  return sig;
}

TermPool::TermPool(Signature sig) : sig_(std::move(sig)) {
  if (!sig_.hasConstant())
    throw NoConstant("enumeration needs a constant in the signature");
  terms_.resize(1);
  contexts_.resize(1);
}

namespace {

// Enumerates all child tuples with sizes >= 1 summing to `left`, drawing
// child i from pick(i, size).
void forEachTuple(int m, std::uint64_t left,
                  const std::function<const std::vector<Term>&(int, std::uint64_t)>& pick,
                  std::vector<Term>& kids,
                  const std::function<void()>& emit) {
  std::function<void(int, std::uint64_t)> rec = [&](int i, std::uint64_t rest) {
    if (i == m) {
      if (rest == 0) emit();
      return;
    }
    std::uint64_t maxHere = rest - static_cast<std::uint64_t>(m - 1 - i);
    for (std::uint64_t s = 1; s <= maxHere; ++s)
      for (const Term& c : pick(i, s)) {
        kids[static_cast<std::size_t>(i)] = c;
        rec(i + 1, rest - s);
      }
  };
  rec(0, left);
}

}  // namespace

const std::vector<Term>& TermPool::termsOfSize(std::uint64_t n) {
  while (terms_.size() <= n) {
    std::uint64_t sz = terms_.size();
    std::vector<Term> bucket;
    for (SymbolId id = 0; id < sig_.size(); ++id) {
      int m = sig_.arity(id);
      if (m == 0) {
        if (sz == 1) bucket.push_back(mkLetter(id));
        continue;
      }
      if (sz < 1 + static_cast<std::uint64_t>(m)) continue;
      std::vector<Term> kids(static_cast<std::size_t>(m));
      forEachTuple(
          m, sz - 1,
          [&](int, std::uint64_t s) -> const std::vector<Term>& { return terms_[s]; },
          kids, [&] { bucket.push_back(mkLetter(id, kids)); });
    }
    std::sort(bucket.begin(), bucket.end(), termLess);
    terms_.push_back(std::move(bucket));
  }
  return terms_[n];
}

const std::vector<Term>& TermPool::contextsOfSize(std::uint64_t n) {
  if (n >= 2) termsOfSize(n - 1);  // ground children are strictly smaller
  while (contexts_.size() <= n) {
    std::uint64_t sz = contexts_.size();
    std::vector<Term> bucket;
    if (sz == 1) {
      bucket.push_back(mkHole());
    } else {
      for (SymbolId id = 0; id < sig_.size(); ++id) {
        int m = sig_.arity(id);
        if (m == 0 || sz < 1 + static_cast<std::uint64_t>(m)) continue;
        for (int h = 0; h < m; ++h) {
          std::vector<Term> kids(static_cast<std::size_t>(m));
          forEachTuple(
              m, sz - 1,
              [&](int i, std::uint64_t s) -> const std::vector<Term>& {
                return i == h ? contexts_[s] : terms_[s];
              },
              kids, [&] { bucket.push_back(mkLetter(id, kids)); });
        }
      }
      std::sort(bucket.begin(), bucket.end(), termLess);
    }
    contexts_.push_back(std::move(bucket));
  }
  return contexts_[n];
}

std::vector<Term> TermPool::termsUpTo(std::uint64_t maxSize) {
  std::vector<Term> out;
  for (std::uint64_t n = 1; n <= maxSize; ++n) {
    const auto& bucket = termsOfSize(n);
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  return out;
}

std::vector<Term> TermPool::contextsUpTo(std::uint64_t maxSize) {
  std::vector<Term> out;
  for (std::uint64_t n = 1; n <= maxSize; ++n) {
    const auto& bucket = contextsOfSize(n);
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  return out;
}

std::vector<Term> enumerateGroundTerms(const Signature& sig, std::uint64_t maxSize) {
  TermPool pool(sig);
  return pool.termsUpTo(maxSize);
}

std::vector<Term> enumerateGroundContexts(const Signature& sig, std::uint64_t maxSize) {
  TermPool pool(sig);
  return pool.contextsUpTo(maxSize);
}

OracleOutcome oracleSolve(const Equation& eq, EnumBounds b) {
  if (b.signature.size() == 0) b.signature = enumerationSignature(eq);
  TermPool pool(b.signature);

  std::vector<VarId> varIds;
  for (const auto& [id, n] : varOccurrences(eq)) varIds.push_back(id);
  std::vector<CVarId> cvarIds;
  for (const auto& [id, n] : cvarOccurrences(eq)) cvarIds.push_back(id);

  std::vector<std::uint32_t> masks(std::size_t{1} << cvarIds.size());
  for (std::uint32_t i = 0; i < masks.size(); ++i) masks[i] = i;
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t c) {
    int pa = std::popcount(a), pc = std::popcount(c);
    return pa != pc ? pa < pc : a < c;
  });

  std::optional<OracleSolution> best;

  auto better = [&](const OracleSolution& cand) {
    if (!best) return true;
    if (cand.size != best->size) return cand.size < best->size;
    for (VarId v : varIds) {
      const Term& x = cand.substitution.varImages.at(v);
      const Term& y = best->substitution.varImages.at(v);
      if (!termEq(x, y)) return termLess(x, y);
    }
    for (CVarId cv : cvarIds) {
      const Term& x = cand.substitution.cvarImages.at(cv);
      const Term& y = best->substitution.cvarImages.at(cv);
      if (!termEq(x, y)) return termLess(x, y);
    }
    return false;
  };
  auto budget = [&] {
    return best ? std::min(b.maxSolutionSize, best->size) : b.maxSolutionSize;
  };

  for (std::uint32_t mask : masks) {
    std::set<CVarId> declaredEmpty;
    for (std::size_t i = 0; i < cvarIds.size(); ++i)
      if (mask >> i & 1) declaredEmpty.insert(cvarIds[i]);
    Equation pruned = removeEmptyCVars(eq, declaredEmpty);

    struct Slot {
      bool isCVar;
      std::uint32_t id;
      std::uint64_t occL, occR;
    };
    std::vector<Slot> slots;
    for (VarId v : varIds)
      slots.push_back({false, v, countVarOccurrences(pruned.lhs, v),
                       countVarOccurrences(pruned.rhs, v)});
    for (CVarId cv : cvarIds)
      if (!declaredEmpty.count(cv))
        slots.push_back({true, cv, countCVarOccurrences(pruned.lhs, cv),
                         countCVarOccurrences(pruned.rhs, cv)});

    // An image larger than the whole solution budget can never fit: every
    // slot occurs on some side (adding n-1 nodes per variable occurrence,
    // n-2 per context variable occurrence, against a base of >= 2 there).
    const std::uint64_t maxImg = std::min(b.maxPerImageSize, b.maxSolutionSize);

    Substitution s;
    for (CVarId cv : declaredEmpty) s.cvarImages[cv] = mkHole();

    std::function<void(std::size_t, std::uint64_t, std::uint64_t)> rec =
        [&](std::size_t i, std::uint64_t szL, std::uint64_t szR) {
          if (szL > budget() || szR > budget()) return;
          if (i == slots.size()) {
            if (szL != szR) return;
            if (!verifySolution(pruned, s)) return;
            OracleSolution cand{s, declaredEmpty, szL};
            if (better(cand)) best = std::move(cand);
            return;
          }
          const Slot& sl = slots[i];
          // A context image of size n replaces each occurrence's application
          // node and hole with n nodes: the side grows by n-2 per occurrence.
          for (std::uint64_t n = sl.isCVar ? 2 : 1; n <= maxImg; ++n) {
            std::uint64_t grow = n - (sl.isCVar ? 2 : 1);
            std::uint64_t addL = sl.occL * grow;
            std::uint64_t addR = sl.occR * grow;
            if (szL + addL > budget() || szR + addR > budget()) break;
            const auto& bucket =
                sl.isCVar ? pool.contextsOfSize(n) : pool.termsOfSize(n);
            for (const Term& img : bucket) {
              if (sl.isCVar)
                s.cvarImages[sl.id] = img;
              else
                s.varImages[sl.id] = img;
              rec(i + 1, szL + addL, szR + addR);
            }
          }
          if (sl.isCVar)
            s.cvarImages.erase(sl.id);
          else
            s.varImages.erase(sl.id);
        };
    rec(0, termSize(pruned.lhs), termSize(pruned.rhs));
  }

  return OracleOutcome{std::move(best), std::move(b)};
}

std::optional<std::uint64_t> minimalSolutionSize(const Equation& eq, const EnumBounds& b) {
  OracleOutcome out = oracleSolve(eq, b);
  if (out.solution) return out.solution->size;
  return std::nullopt;
}

}  // namespace recomp
