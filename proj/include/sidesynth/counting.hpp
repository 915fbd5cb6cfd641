#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>

#include "sidesynth/dfa.hpp"

namespace sidesynth {

struct CountResult {
    mpz_class count;
    int bound = 0;
    LengthMode mode = LengthMode::Exact;
};

// Exact number of accepted tuple strings of length == k (Exact) or <= k
// (UpTo). Arbitrary-precision integers throughout; never floating point.
CountResult count_paths(const Dfa& a, int k, LengthMode mode);

// The k a DFA is counted at: the longest of its track bounds.
int counting_bound(const Dfa& a);

// Key a constraint is cached under: track list plus commutativity-invariant
// serialization. Structurally equal constraints up to and/or order collide.
std::string cache_key(const Constraint& c, const std::vector<std::string>& tracks);

// Constraint-keyed store of solution automata. Lookups may run concurrently;
// insertions are serialized. Re-inserting a key overwrites with an equivalent
// automaton, which is harmless.
class DfaCache {
  public:
    struct Stats {
        uint64_t hits = 0;
        uint64_t misses = 0;
        uint64_t constructed = 0;
        uint64_t states_built = 0;
    };

    std::shared_ptr<const Dfa> lookup(const std::string& key) const;
    bool contains(const std::string& key) const;
    void insert(const std::string& key, std::shared_ptr<const Dfa> dfa);
    void reset();
    size_t size() const;
    Stats stats() const;
    void note_constructed(uint64_t states);

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::shared_ptr<const Dfa>> map_;
    mutable Stats stats_;
};

// Binds a domain and its variables to a DFA cache and runs the three counting
// routes: cache-backed, from-scratch, and the incremental cached product.
class ModelCounter {
  public:
    struct Meters {
        uint64_t queries = 0;
        uint64_t fresh_queries = 0;
        uint64_t incremental_queries = 0;
        uint64_t verified_queries = 0;
        double fresh_seconds = 0;
        double incremental_seconds = 0;
        double cached_seconds = 0;
    };

    ModelCounter(Domain d, SymbolTable symbols);

    const Domain& domain() const { return domain_; }
    const SymbolTable& symbols() const { return symbols_; }
    const Var& high() const;
    const Var& low() const;

    // Cache-backed count; default track list is the constraint's free
    // variables (all declared string variables when there are none).
    CountResult model_count(const Constraint& c, std::vector<std::string> tracks = {});

    // From-scratch count: rebuilds every sub-automaton, never touches the
    // cache. This is the non-incremental route.
    CountResult model_count_fresh(const Constraint& c, std::vector<std::string> tracks = {});

    // Incremental count of C_h ∧ ψ_o ∧ (l = l_val): C_h's automaton must
    // already be cached (ProtocolError otherwise), ψ_o's is built at most
    // once, the l = l_val automaton is built fresh, and the three are
    // combined by automata product.
    CountResult model_count_incremental(const Constraint& c_h, const Constraint& psi,
                                        const std::string& l_val);

    // Cache-backed automaton fetch/build.
    std::shared_ptr<const Dfa> dfa_for(const Constraint& c, std::vector<std::string> tracks = {});
    std::shared_ptr<const Dfa> cached_only(const Constraint& c,
                                           const std::vector<std::string>& tracks) const;
    void prime(const Constraint& c, std::shared_ptr<const Dfa> dfa,
               const std::vector<std::string>& tracks);

    DfaCache& cache() { return cache_; }
    const DfaCache& cache() const { return cache_; }
    const Meters& meters() const { return meters_; }
    void reset_meters() { meters_ = Meters{}; }

    // When set, every incremental count is recomputed from scratch and the
    // two integers compared; a mismatch throws.
    bool verify_incremental = false;

  private:
    std::vector<std::string> default_tracks(const Constraint& c) const;

    Domain domain_;
    SymbolTable symbols_;
    DfaCache cache_;
    Meters meters_;
};

}  // namespace sidesynth
