#pragma once

#include <string>
#include <vector>

#include "sidesynth/errors.hpp"

namespace sidesynth {

enum class LengthMode { Exact, UpTo };
enum class Sort { String, Integer };
enum class Track { High, Low };

// Bounded string domain: an ordered alphabet and a default length bound.
// The order of symbols in `alphabet` defines the lexicographic order used by
// every comparison; it need not coincide with byte order.
struct Domain {
    std::string alphabet;
    int length_bound = 1;
    LengthMode mode = LengthMode::Exact;

    void validate() const;

    // Position of c in the alphabet, -1 if absent.
    int rank(char c) const {
        for (int i = 0; i < static_cast<int>(alphabet.size()); ++i)
            if (alphabet[i] == c) return i;
        return -1;
    }
    bool contains(char c) const { return rank(c) >= 0; }
    int size() const { return static_cast<int>(alphabet.size()); }
    bool same_as(const Domain& other) const {
        return alphabet == other.alphabet && length_bound == other.length_bound &&
               mode == other.mode;
    }
};

struct Var {
    std::string name;
    Sort sort = Sort::String;
    Track track = Track::High;
    // Per-variable length bound; 0 means "use the domain default". Needed for
    // targets whose secret and input have different lengths.
    int length = 0;

    int effective_length(const Domain& d) const { return length > 0 ? length : d.length_bound; }
};

// Lexicographic comparison by alphabet rank with the dictionary prefix rule
// (a proper prefix is smaller). Throws ValidationError on foreign symbols.
int lex_compare(const std::string& a, const std::string& b, const Domain& d);

// Checks that every symbol of s is in the alphabet and |s| fits v's bound.
void check_value_in_domain(const std::string& s, const Var& v, const Domain& d);

const char* to_string(LengthMode m);
const char* to_string(Sort s);
const char* to_string(Track t);

}  // namespace sidesynth
