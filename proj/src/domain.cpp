#include "sidesynth/domain.hpp"

#include <algorithm>

namespace sidesynth {

void Domain::validate() const {
    if (alphabet.empty()) throw ValidationError("domain alphabet must be nonempty");
    if (length_bound < 1) throw ValidationError("domain length bound must be >= 1");
    std::string sorted = alphabet;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("domain alphabet has duplicate symbols");
}

int lex_compare(const std::string& a, const std::string& b, const Domain& d) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        int ra = d.rank(a[i]);
        int rb = d.rank(b[i]);
        if (ra < 0 || rb < 0) throw ValidationError("symbol outside alphabet in comparison");
        if (ra != rb) return ra < rb ? -1 : 1;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

void check_value_in_domain(const std::string& s, const Var& v, const Domain& d) {
    for (char c : s)
        if (!d.contains(c))
            throw ValidationError("symbol '" + std::string(1, c) + "' outside alphabet for " +
                                  v.name);
    int len = v.effective_length(d);
    int got = static_cast<int>(s.size());
    if (d.mode == LengthMode::Exact ? got != len : got > len)
        throw ValidationError("value \"" + s + "\" violates length bound of " + v.name + " (" +
                              std::to_string(len) + ", " + to_string(d.mode) + ")");
}

const char* to_string(LengthMode m) { return m == LengthMode::Exact ? "exact" : "upto"; }
const char* to_string(Sort s) { return s == Sort::String ? "string" : "int"; }
const char* to_string(Track t) { return t == Track::High ? "high" : "low"; }

}  // namespace sidesynth
