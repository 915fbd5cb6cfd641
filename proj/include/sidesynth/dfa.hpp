#pragma once

#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sidesynth/constraint.hpp"

namespace sidesynth {

struct TrackRef {
    std::string var;
    int length = 0;  // effective length bound for this track
};

// Multi-track DFA over tuples of symbols from alphabet ∪ {PAD}. Total and
// deterministic by construction: `next` is fully populated, missing behavior
// flows into an ordinary non-accepting sink state. Tracks are kept sorted by
// variable name so tuple encodings of independently built automata line up.
//
// Tuple encoding: with S = |alphabet| + 1 symbols per track (PAD is symbol
// S-1), a tuple code is sum_t digit_t * S^t over track positions t.
class Dfa {
  public:
    Domain domain;
    std::vector<TrackRef> tracks;
    int start = 0;
    std::vector<char> accepting;
    std::vector<int> next;  // row-major: state * tuple_symbols() + code

    int num_states() const { return static_cast<int>(accepting.size()); }
    int symbols_per_track() const { return domain.size() + 1; }
    int pad_digit() const { return domain.size(); }
    int tuple_symbols() const {
        int n = 1;
        for (size_t i = 0; i < tracks.size(); ++i) n *= symbols_per_track();
        return n;
    }
    int step(int state, int code) const { return next[state * tuple_symbols() + code]; }
    int track_index(const std::string& var) const {
        for (size_t i = 0; i < tracks.size(); ++i)
            if (tracks[i].var == var) return static_cast<int>(i);
        return -1;
    }
    int max_track_length() const {
        int m = 0;
        for (const TrackRef& t : tracks) m = std::max(m, t.length);
        return m;
    }
};

struct Assignment {
    std::map<std::string, std::string> values;
};

std::vector<TrackRef> make_track_refs(const Domain& d, const SymbolTable& symbols,
                                      std::vector<std::string> names);

// Accepts exactly the well-formed tuple strings (each track: its symbols, then
// terminal padding; exact mode pins every track to its length). The all-PAD
// tuple is rejected everywhere so every assignment has one encoding.
Dfa domain_automaton(const Domain& d, std::vector<TrackRef> tracks);

// Compiles c into a DFA whose language is the solution set of c over the given
// tracks (default: free variables of c), restricted to the domain.
Dfa from_constraint(const Constraint& c, const Domain& d, const SymbolTable& symbols,
                    std::vector<std::string> tracks = {});

// Boolean closure. Intersection/union merge track lists by variable name; a
// track missing from one operand is unconstrained on that side. Complement is
// taken over the full tuple monoid; combine with domain_automaton before
// counting.
Dfa intersect(const Dfa& a, const Dfa& b);
Dfa unite(const Dfa& a, const Dfa& b);
Dfa complement(const Dfa& a);

// Language-preserving state reduction (Moore partition refinement). Products
// and projections apply it internally; knowledge automata would otherwise grow
// multiplicatively across attack steps.
Dfa minimize(const Dfa& a);

// Existential projection onto one track (drops the others, determinizes, and
// strips trailing padding), restricted to that track's domain.
Dfa project(const Dfa& a, const std::string& keep);

bool accepts(const Dfa& a, const Assignment& asg);
bool is_empty(const Dfa& a);

// Uniform sample over the accepted assignments within the counting bound.
Assignment sample_model(const Dfa& a, std::mt19937_64& rng);
// Least accepted assignment in tuple-code order; deterministic.
Assignment first_model(const Dfa& a);

void write_dot(const Dfa& a, std::ostream& os, const std::string& name = "dfa");

}  // namespace sidesynth
