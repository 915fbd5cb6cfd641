#include "sidesynth/counting.hpp"

#include <chrono>

namespace sidesynth {

namespace {

// Adjacency with symbol multiplicities; the DP below is the k-th power of
// this matrix applied to the start vector.
std::vector<std::vector<std::pair<int, unsigned long>>> adjacency(const Dfa& a) {
    const int codes = a.tuple_symbols();
    std::vector<std::vector<std::pair<int, unsigned long>>> edges(a.num_states());
    std::vector<unsigned long> row(a.num_states());
    for (int s = 0; s < a.num_states(); ++s) {
        std::fill(row.begin(), row.end(), 0);
        const int* r = &a.next[s * codes];
        for (int code = 0; code < codes; ++code) ++row[r[code]];
        for (int t = 0; t < a.num_states(); ++t)
            if (row[t]) edges[s].emplace_back(t, row[t]);
    }
    return edges;
}

class Timer {
  public:
    explicit Timer(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

CountResult count_paths(const Dfa& a, int k, LengthMode mode) {
    if (k < 0) throw ValidationError("counting bound must be >= 0");
    auto edges = adjacency(a);
    std::vector<mpz_class> cur(a.num_states(), 0);
    cur[a.start] = 1;
    mpz_class total = 0;
    auto accumulate = [&] {
        for (int s = 0; s < a.num_states(); ++s)
            if (a.accepting[s] && cur[s] != 0) total += cur[s];
    };
    if (mode == LengthMode::UpTo) accumulate();
    for (int step = 0; step < k; ++step) {
        std::vector<mpz_class> nxt(a.num_states(), 0);
        for (int s = 0; s < a.num_states(); ++s) {
            if (cur[s] == 0) continue;
            for (auto [t, m] : edges[s]) {
                mpz_class term = cur[s] * m;
                nxt[t] += term;
            }
        }
        cur = std::move(nxt);
        if (mode == LengthMode::UpTo || step + 1 == k) accumulate();
    }
    return {std::move(total), k, mode};
}

int counting_bound(const Dfa& a) { return a.max_track_length(); }

std::string cache_key(const Constraint& c, const std::vector<std::string>& tracks) {
    std::string key;
    for (const std::string& t : tracks) {
        key += t;
        key += ',';
    }
    key += '|';
    key += canonical_key(c);
    return key;
}

std::shared_ptr<const Dfa> DfaCache::lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        ++stats_.misses;
        return nullptr;
    }
    ++stats_.hits;
    return it->second;
}

bool DfaCache::contains(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.count(key) != 0;
}

void DfaCache::insert(const std::string& key, std::shared_ptr<const Dfa> dfa) {
    std::lock_guard<std::mutex> lock(mu_);
    map_[key] = std::move(dfa);
}

void DfaCache::reset() {
    std::lock_guard<std::mutex> lock(mu_);
    map_.clear();
}

size_t DfaCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
}

DfaCache::Stats DfaCache::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

void DfaCache::note_constructed(uint64_t states) {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.constructed;
    stats_.states_built += states;
}

ModelCounter::ModelCounter(Domain d, SymbolTable symbols)
    : domain_(std::move(d)), symbols_(std::move(symbols)) {
    domain_.validate();
}

const Var& ModelCounter::high() const {
    for (const Var& v : symbols_.all())
        if (v.track == Track::High && v.sort == Sort::String) return v;
    throw ValidationError("no high string variable declared");
}

const Var& ModelCounter::low() const {
    for (const Var& v : symbols_.all())
        if (v.track == Track::Low && v.sort == Sort::String) return v;
    throw ValidationError("no low string variable declared");
}

std::vector<std::string> ModelCounter::default_tracks(const Constraint& c) const {
    std::vector<std::string> tracks = free_variables(c);
    if (tracks.empty())
        for (const Var& v : symbols_.all())
            if (v.sort == Sort::String) tracks.push_back(v.name);
    return tracks;
}

std::shared_ptr<const Dfa> ModelCounter::dfa_for(const Constraint& c,
                                                 std::vector<std::string> tracks) {
    if (tracks.empty()) tracks = default_tracks(c);
    std::sort(tracks.begin(), tracks.end());
    const std::string key = cache_key(c, tracks);
    if (auto hit = cache_.lookup(key)) return hit;
    auto built = std::make_shared<Dfa>(from_constraint(c, domain_, symbols_, tracks));
    cache_.note_constructed(built->num_states());
    cache_.insert(key, built);
    return built;
}

std::shared_ptr<const Dfa> ModelCounter::cached_only(
    const Constraint& c, const std::vector<std::string>& tracks) const {
    std::vector<std::string> sorted = tracks;
    std::sort(sorted.begin(), sorted.end());
    return cache_.lookup(cache_key(c, sorted));
}

void ModelCounter::prime(const Constraint& c, std::shared_ptr<const Dfa> dfa,
                         const std::vector<std::string>& tracks) {
    std::vector<std::string> sorted = tracks;
    std::sort(sorted.begin(), sorted.end());
    cache_.insert(cache_key(c, sorted), std::move(dfa));
}

CountResult ModelCounter::model_count(const Constraint& c, std::vector<std::string> tracks) {
    Timer timer(meters_.cached_seconds);
    ++meters_.queries;
    auto dfa = dfa_for(c, std::move(tracks));
    return count_paths(*dfa, counting_bound(*dfa), domain_.mode);
}

CountResult ModelCounter::model_count_fresh(const Constraint& c,
                                            std::vector<std::string> tracks) {
    Timer timer(meters_.fresh_seconds);
    ++meters_.queries;
    ++meters_.fresh_queries;
    if (tracks.empty()) tracks = default_tracks(c);
    Dfa dfa = from_constraint(c, domain_, symbols_, std::move(tracks));
    return count_paths(dfa, counting_bound(dfa), domain_.mode);
}

CountResult ModelCounter::model_count_incremental(const Constraint& c_h, const Constraint& psi,
                                                  const std::string& l_val) {
    CountResult result;
    {
        Timer timer(meters_.incremental_seconds);
        ++meters_.queries;
        ++meters_.incremental_queries;
        const Var& h = high();
        const Var& l = low();
        check_value_in_domain(l_val, l, domain_);

        auto a_ch = cached_only(c_h, {h.name});
        if (!a_ch)
            throw ProtocolError("incremental count requires a cached C_h automaton (key: " +
                                cache_key(c_h, {h.name}) + ")");
        auto a_psi = dfa_for(psi, {h.name, l.name});
        Dfa a_eq = from_constraint(Constraint::eq_const(l.name, l_val), domain_, symbols_,
                                   {l.name});
        Dfa product = intersect(intersect(*a_ch, *a_psi), a_eq);
        result = count_paths(product, counting_bound(product), domain_.mode);
    }
    if (verify_incremental) {
        ++meters_.verified_queries;
        Constraint conjoined =
            c_h.and_with(psi).and_with(Constraint::eq_const(low().name, l_val));
        CountResult fresh = model_count_fresh(conjoined, {high().name, low().name});
        if (fresh.count != result.count)
            throw ProtocolError("incremental count mismatch: " + result.count.get_str() +
                                " (incremental) vs " + fresh.count.get_str() + " (fresh)");
    }
    return result;
}

}  // namespace sidesynth
