#include "sidesynth/dfa.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <ostream>
#include <unordered_map>

#include <gmpxx.h>

namespace sidesynth {

namespace {

void digits_of(int code, int arity, int base, std::vector<int>& out) {
    out.resize(arity);
    for (int t = 0; t < arity; ++t) {
        out[t] = code % base;
        code /= base;
    }
}

// Breadth-first machine builder over explicit state keys. Step functions must
// be total; all atom automata are built through this.
class MachineBuilder {
  public:
    using Key = std::vector<int>;
    using StepFn = std::function<Key(const Key&, const std::vector<int>&)>;
    using AcceptFn = std::function<bool(const Key&)>;

    static Dfa build(const Domain& d, std::vector<TrackRef> tracks, Key init, const StepFn& step,
                     const AcceptFn& accept) {
        Dfa out;
        out.domain = d;
        out.tracks = std::move(tracks);
        const int arity = static_cast<int>(out.tracks.size());
        const int base = out.domain.size() + 1;
        int codes = 1;
        for (int t = 0; t < arity; ++t) codes *= base;

        std::map<Key, int> ids;
        std::vector<Key> order;
        auto intern = [&](Key k) {
            auto [it, fresh] = ids.emplace(std::move(k), static_cast<int>(order.size()));
            if (fresh) order.push_back(it->first);
            return it->second;
        };
        out.start = intern(std::move(init));

        std::vector<int> digits;
        for (size_t s = 0; s < order.size(); ++s) {
            Key key = order[s];  // copy: order may reallocate while interning
            for (int code = 0; code < codes; ++code) {
                digits_of(code, arity, base, digits);
                int t = intern(step(key, digits));
                out.next.push_back(t);
            }
        }
        out.accepting.resize(order.size());
        for (size_t s = 0; s < order.size(); ++s) out.accepting[s] = accept(order[s]) ? 1 : 0;
        return out;
    }
};

constexpr int kDead = -1;  // shared sentinel inside state keys

Dfa universal_automaton(const Domain& d, std::vector<TrackRef> tracks, bool accepting) {
    Dfa out;
    out.domain = d;
    out.tracks = std::move(tracks);
    out.start = 0;
    out.accepting = {static_cast<char>(accepting ? 1 : 0)};
    out.next.assign(out.tuple_symbols(), 0);
    return out;
}

// ---------------------------------------------------------------------------
// Atom automata
// ---------------------------------------------------------------------------

// One side of a lexicographic comparison: an optional leading variable track
// followed by a fixed literal tail. Covers v, "lit" and concat(v, "lit") with
// arbitrary literal nesting; a variable anywhere else is outside the supported
// fragment.
struct SeqSide {
    int track = -1;  // -1: literal-only side
    std::string tail;
};

void flatten_concat(const Term& t, std::vector<Term>& out) {
    if (t.kind() == TermKind::Concat) {
        flatten_concat(t.lhs(), out);
        flatten_concat(t.rhs(), out);
    } else {
        out.push_back(t);
    }
}

SeqSide side_of_term(const Term& t, const Dfa& shape) {
    std::vector<Term> pieces;
    flatten_concat(t, pieces);
    SeqSide side;
    for (size_t i = 0; i < pieces.size(); ++i) {
        const Term& p = pieces[i];
        if (p.kind() == TermKind::StrLit) {
            side.tail += p.str_value();
        } else if (p.kind() == TermKind::VarRef) {
            if (i != 0)
                throw UnsupportedAtomError(
                    "variable after a literal inside concat is not supported: " + serialize(t));
            side.track = shape.track_index(p.var_name());
            if (side.track < 0)
                throw UnsupportedAtomError("variable " + p.var_name() + " not among tracks");
        } else {
            throw UnsupportedAtomError("unsupported term in string comparison: " + serialize(t));
        }
    }
    return side;
}

bool op_matches(CmpOp op, int cmp) {
    switch (op) {
        case CmpOp::Eq: return cmp == 0;
        case CmpOp::Ne: return cmp != 0;
        case CmpOp::Lt: return cmp < 0;
        case CmpOp::Le: return cmp <= 0;
        case CmpOp::Gt: return cmp > 0;
        case CmpOp::Ge: return cmp >= 0;
    }
    return false;
}

int lex_compare_ranked(const std::string& a, const std::string& b, const Domain& d) {
    return lex_compare(a, b, d);
}

// Lexicographic/equality comparison of two sides, PAD-aware. State key:
// {status, phase1, phase2} with status in {-1,0,1} (decided lt/gt absorb) and
// phase -1 while the side still reads its variable track, k = tail symbols
// already emitted otherwise.
Dfa compare_automaton(const SeqSide& s1, const SeqSide& s2, CmpOp op, const Domain& d,
                      std::vector<TrackRef> tracks) {
    const int pad = d.size();
    auto emit = [&](const SeqSide& side, int phase, const std::vector<int>& digits, int& sym,
                    int& next_phase) {
        // sym: alphabet rank, or -1 for "stream ended".
        if (phase < 0) {
            int dg = digits[side.track];
            if (dg != pad) {
                sym = dg;
                next_phase = -1;
                return;
            }
            phase = 0;  // variable just ended; fall through to the tail
        }
        if (phase < static_cast<int>(side.tail.size())) {
            sym = d.rank(side.tail[phase]);
            next_phase = phase + 1;
        } else {
            sym = -1;
            next_phase = phase;
        }
    };
    auto initial_phase = [](const SeqSide& s) { return s.track >= 0 ? -1 : 0; };

    // Verdict if the input ends in this state: pending literal tails decide
    // ties (ending input means every variable track has ended too).
    auto final_cmp = [&](const MachineBuilder::Key& k) {
        int status = k[0];
        if (status != 0) return status;
        auto rest = [&](const SeqSide& side, int phase) {
            size_t from = phase < 0 ? 0 : static_cast<size_t>(phase);
            return side.tail.substr(std::min(from, side.tail.size()));
        };
        return lex_compare_ranked(rest(s1, k[1]), rest(s2, k[2]), d);
    };

    MachineBuilder::Key init{0, initial_phase(s1), initial_phase(s2)};
    auto step = [&](const MachineBuilder::Key& k, const std::vector<int>& digits) {
        int status = k[0];
        if (status != 0) return MachineBuilder::Key{status, 0, 0};
        int sym1, ph1, sym2, ph2;
        emit(s1, k[1], digits, sym1, ph1);
        emit(s2, k[2], digits, sym2, ph2);
        if (sym1 < 0 && sym2 < 0) return MachineBuilder::Key{0, ph1, ph2};  // both ended
        if (sym1 < 0) return MachineBuilder::Key{-1, 0, 0};                 // s1 is a prefix
        if (sym2 < 0) return MachineBuilder::Key{1, 0, 0};
        if (sym1 != sym2) return MachineBuilder::Key{sym1 < sym2 ? -1 : 1, 0, 0};
        return MachineBuilder::Key{0, ph1, ph2};
    };
    auto accept = [&](const MachineBuilder::Key& k) { return op_matches(op, final_cmp(k)); };
    return MachineBuilder::build(d, std::move(tracks), std::move(init), step, accept);
}

// charAt(v,i) OP charAt(w,j) (i <= j; callers mirror otherwise) and
// charAt(v,i) OP 'c'. Out-of-range access (track padded before the index)
// makes the atom false. Key: {pos} until the first index, then {pos, sym}
// between the indices, then a verdict sink {kDead or acceptance marker}.
Dfa charat_automaton(int track1, int idx1, int track2, int idx2, int lit_rank, CmpOp op,
                     const Domain& d, std::vector<TrackRef> tracks) {
    const int pad = d.size();
    const bool vs_lit = track2 < 0;
    // Key layout: {tag, pos, sym}; tag 0 = running, 1 = accept sink, 2 = reject sink.
    auto sink = [](bool ok) { return MachineBuilder::Key{ok ? 1 : 2, 0, 0}; };
    MachineBuilder::Key init{0, 0, -2};
    auto verdict = [&](int r1, int r2) { return sink(op_matches(op, r1 == r2 ? 0 : (r1 < r2 ? -1 : 1))); };
    auto step = [&](const MachineBuilder::Key& k, const std::vector<int>& digits) {
        if (k[0] != 0) return k;
        int pos = k[1];
        int remembered = k[2];
        if (vs_lit) {
            if (pos < idx1) return MachineBuilder::Key{0, pos + 1, -2};
            int dg = digits[track1];
            if (dg == pad) return sink(false);
            return verdict(dg, lit_rank);
        }
        if (idx1 == idx2) {
            if (pos < idx1) return MachineBuilder::Key{0, pos + 1, -2};
            int d1 = digits[track1], d2 = digits[track2];
            if (d1 == pad || d2 == pad) return sink(false);
            return verdict(d1, d2);
        }
        // idx1 < idx2: remember track1's symbol until idx2.
        if (pos < idx1) return MachineBuilder::Key{0, pos + 1, -2};
        if (pos == idx1) {
            int d1 = digits[track1];
            if (d1 == pad) return sink(false);
            return MachineBuilder::Key{0, pos + 1, d1};
        }
        if (pos < idx2) return MachineBuilder::Key{0, pos + 1, remembered};
        int d2 = digits[track2];
        if (d2 == pad) return sink(false);
        return verdict(remembered, d2);
    };
    auto accept = [](const MachineBuilder::Key& k) { return k[0] == 1; };
    return MachineBuilder::build(d, std::move(tracks), std::move(init), step, accept);
}

// length(v) OP n  /  length(v) OP length(w): count symbols until padding.
// Counts saturate one past the track bound; the domain product rules out
// anything longer.
Dfa length_automaton(int track1, int track2, long long rhs_const, CmpOp op, const Domain& d,
                     std::vector<TrackRef> tracks) {
    const int pad = d.size();
    int cap = 0;
    for (const TrackRef& t : tracks) cap = std::max(cap, t.length);
    cap += 1;
    auto bump = [&](int count, int dg) { return dg == pad ? count : std::min(count + 1, cap); };
    MachineBuilder::Key init{0, 0};
    auto step = [&](const MachineBuilder::Key& k, const std::vector<int>& digits) {
        int c1 = bump(k[0], digits[track1]);
        int c2 = track2 >= 0 ? bump(k[1], digits[track2]) : 0;
        return MachineBuilder::Key{c1, c2};
    };
    auto accept = [&](const MachineBuilder::Key& k) {
        long long lhs = k[0];
        long long rhs = track2 >= 0 ? k[1] : rhs_const;
        return op_matches(op, lhs == rhs ? 0 : (lhs < rhs ? -1 : 1));
    };
    return MachineBuilder::build(d, std::move(tracks), std::move(init), step, accept);
}

// Track v spells exactly `lit`, then pads.
Dfa eq_const_automaton(int track, const std::string& lit, const Domain& d,
                       std::vector<TrackRef> tracks) {
    const int pad = d.size();
    const int n = static_cast<int>(lit.size());
    MachineBuilder::Key init{0};
    auto step = [&](const MachineBuilder::Key& k, const std::vector<int>& digits) {
        int pos = k[0];
        if (pos == kDead) return MachineBuilder::Key{kDead};
        int dg = digits[track];
        if (pos < n) {
            if (dg == d.rank(lit[pos])) return MachineBuilder::Key{pos + 1};
            return MachineBuilder::Key{kDead};
        }
        return dg == pad ? MachineBuilder::Key{n} : MachineBuilder::Key{kDead};
    };
    auto accept = [&](const MachineBuilder::Key& k) { return k[0] == n; };
    return MachineBuilder::build(d, std::move(tracks), std::move(init), step, accept);
}

// ---------------------------------------------------------------------------
// Products and boolean closure
// ---------------------------------------------------------------------------

enum class BoolMode { And, Or };

Dfa product_aligned(const Dfa& a, const Dfa& b, BoolMode mode) {
    assert(a.tracks.size() == b.tracks.size());
    Dfa out;
    out.domain = a.domain;
    out.tracks = a.tracks;
    const int codes = a.tuple_symbols();

    std::unordered_map<long long, int> ids;
    std::vector<std::pair<int, int>> order;
    auto intern = [&](int sa, int sb) {
        long long key = static_cast<long long>(sa) * b.num_states() + sb;
        auto [it, fresh] = ids.emplace(key, static_cast<int>(order.size()));
        if (fresh) order.emplace_back(sa, sb);
        return it->second;
    };
    out.start = intern(a.start, b.start);
    for (size_t s = 0; s < order.size(); ++s) {
        auto [sa, sb] = order[s];
        const int* ra = &a.next[sa * codes];
        const int* rb = &b.next[sb * codes];
        for (int code = 0; code < codes; ++code) out.next.push_back(intern(ra[code], rb[code]));
    }
    out.accepting.resize(order.size());
    for (size_t s = 0; s < order.size(); ++s) {
        auto [sa, sb] = order[s];
        bool acc = mode == BoolMode::And ? (a.accepting[sa] && b.accepting[sb])
                                         : (a.accepting[sa] || b.accepting[sb]);
        out.accepting[s] = acc ? 1 : 0;
    }
    return out;
}

// Maps merged tuple codes onto an operand's own code space.
std::vector<int> code_projection(const Dfa& merged_shape, const std::vector<TrackRef>& merged,
                                 const Dfa& operand) {
    const int base = merged_shape.symbols_per_track();
    const int arity = static_cast<int>(merged.size());
    int codes = 1;
    for (int t = 0; t < arity; ++t) codes *= base;
    std::vector<int> weight(arity, 0);  // weight in operand code space, 0 if absent
    for (int t = 0; t < arity; ++t) {
        int idx = operand.track_index(merged[t].var);
        if (idx >= 0) {
            int w = 1;
            for (int i = 0; i < idx; ++i) w *= base;
            weight[t] = w;
        }
    }
    std::vector<int> map(codes);
    std::vector<int> digits;
    for (int code = 0; code < codes; ++code) {
        digits_of(code, arity, base, digits);
        int oc = 0;
        for (int t = 0; t < arity; ++t) oc += digits[t] * weight[t];
        map[code] = oc;
    }
    return map;
}

// Extends an automaton whose tracks are all shorter than the merged tuple so
// it keeps accepting through the trailing all-PAD positions. Only meaningful
// for domain-restricted operands (their native all-PAD transitions are dead).
Dfa pad_extend(const Dfa& a) {
    const int n = a.num_states();
    const int codes = a.tuple_symbols();
    const int allpad = codes - 1;
    const int sink = n, dead = n + 1;
    Dfa out;
    out.domain = a.domain;
    out.tracks = a.tracks;
    out.start = a.start;
    out.accepting = a.accepting;
    out.accepting.push_back(1);
    out.accepting.push_back(0);
    out.next.resize(static_cast<size_t>(n + 2) * codes);
    for (int s = 0; s < n; ++s)
        for (int c = 0; c < codes; ++c)
            out.next[static_cast<size_t>(s) * codes + c] =
                (c == allpad && a.accepting[s]) ? sink : a.next[static_cast<size_t>(s) * codes + c];
    for (int c = 0; c < codes; ++c) {
        out.next[static_cast<size_t>(sink) * codes + c] = c == allpad ? sink : dead;
        out.next[static_cast<size_t>(dead) * codes + c] = dead;
    }
    return out;
}

Dfa product_merged(const Dfa& a_in, const Dfa& b_in, BoolMode mode) {
    const Dfa& a0 = a_in;
    const Dfa& b0 = b_in;
    if (a0.domain.alphabet != b0.domain.alphabet || a0.domain.mode != b0.domain.mode)
        throw TrackMismatchError("automata domains differ");
    const int merged_max = std::max(a0.max_track_length(), b0.max_track_length());
    Dfa a = a0.max_track_length() < merged_max ? pad_extend(a0) : a0;
    Dfa b = b0.max_track_length() < merged_max ? pad_extend(b0) : b0;
    std::vector<TrackRef> merged = a.tracks;
    for (const TrackRef& t : b.tracks) {
        int idx = -1;
        for (size_t i = 0; i < merged.size(); ++i)
            if (merged[i].var == t.var) idx = static_cast<int>(i);
        if (idx < 0)
            merged.push_back(t);
        else if (merged[idx].length != t.length)
            throw TrackMismatchError("track " + t.var + " has inconsistent length bounds");
    }
    std::sort(merged.begin(), merged.end(),
              [](const TrackRef& x, const TrackRef& y) { return x.var < y.var; });

    Dfa shape;
    shape.domain = a.domain;
    shape.domain.length_bound = std::max(a.domain.length_bound, b.domain.length_bound);
    shape.tracks = merged;
    const int codes = shape.tuple_symbols();
    std::vector<int> map_a = code_projection(shape, merged, a);
    std::vector<int> map_b = code_projection(shape, merged, b);

    Dfa out;
    out.domain = shape.domain;
    out.tracks = merged;
    std::unordered_map<long long, int> ids;
    std::vector<std::pair<int, int>> order;
    auto intern = [&](int sa, int sb) {
        long long key = static_cast<long long>(sa) * b.num_states() + sb;
        auto [it, fresh] = ids.emplace(key, static_cast<int>(order.size()));
        if (fresh) order.emplace_back(sa, sb);
        return it->second;
    };
    out.start = intern(a.start, b.start);
    const int ca = a.tuple_symbols();
    const int cb = b.tuple_symbols();
    for (size_t s = 0; s < order.size(); ++s) {
        auto [sa, sb] = order[s];
        const int* ra = &a.next[sa * ca];
        const int* rb = &b.next[sb * cb];
        for (int code = 0; code < codes; ++code)
            out.next.push_back(intern(ra[map_a[code]], rb[map_b[code]]));
    }
    out.accepting.resize(order.size());
    for (size_t s = 0; s < order.size(); ++s) {
        auto [sa, sb] = order[s];
        bool acc = mode == BoolMode::And ? (a.accepting[sa] && b.accepting[sb])
                                         : (a.accepting[sa] || b.accepting[sb]);
        out.accepting[s] = acc ? 1 : 0;
    }
    return out;
}

Dfa minimize_impl(const Dfa& a) {
    const int n = a.num_states();
    const int codes = a.tuple_symbols();
    std::vector<int> cls(n);
    for (int s = 0; s < n; ++s) cls[s] = a.accepting[s] ? 1 : 0;

    int classes = 2;
    std::vector<int> ncls(n);
    std::vector<int> sig;
    while (true) {
        std::map<std::vector<int>, int> ids;
        for (int s = 0; s < n; ++s) {
            sig.assign(1, cls[s]);
            const int* row = &a.next[s * codes];
            for (int c = 0; c < codes; ++c) sig.push_back(cls[row[c]]);
            auto [it, fresh] = ids.emplace(sig, static_cast<int>(ids.size()));
            ncls[s] = it->second;
        }
        int next_classes = static_cast<int>(ids.size());
        cls.swap(ncls);
        if (next_classes == classes) break;
        classes = next_classes;
    }

    // Renumber classes in order of first occurrence so the result is stable.
    std::vector<int> remap(n, -1);
    int count = 0;
    for (int s = 0; s < n; ++s)
        if (remap[cls[s]] < 0) remap[cls[s]] = count++;
    Dfa out;
    out.domain = a.domain;
    out.tracks = a.tracks;
    out.start = remap[cls[a.start]];
    out.accepting.assign(count, 0);
    out.next.assign(static_cast<size_t>(count) * codes, -1);
    for (int s = 0; s < n; ++s) {
        int q = remap[cls[s]];
        if (out.accepting[q] == 0 && a.accepting[s]) out.accepting[q] = 1;
        if (out.next[static_cast<size_t>(q) * codes] < 0) {
            const int* row = &a.next[s * codes];
            for (int c = 0; c < codes; ++c)
                out.next[static_cast<size_t>(q) * codes + c] = remap[cls[row[c]]];
        }
    }
    return out;
}

bool same_track_layout(const Dfa& a, const Dfa& b) {
    if (a.tracks.size() != b.tracks.size()) return false;
    for (size_t i = 0; i < a.tracks.size(); ++i)
        if (a.tracks[i].var != b.tracks[i].var || a.tracks[i].length != b.tracks[i].length)
            return false;
    return a.domain.alphabet == b.domain.alphabet && a.domain.mode == b.domain.mode;
}

}  // namespace

std::vector<TrackRef> make_track_refs(const Domain& d, const SymbolTable& symbols,
                                      std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::vector<TrackRef> refs;
    refs.reserve(names.size());
    for (const std::string& n : names) {
        const Var& v = symbols.at(n);
        if (v.sort != Sort::String)
            throw UnsupportedAtomError("track variable must be string-sorted: " + n);
        refs.push_back({n, v.effective_length(d)});
    }
    return refs;
}

Dfa domain_automaton(const Domain& d, std::vector<TrackRef> tracks) {
    if (tracks.empty()) throw ValidationError("domain automaton needs at least one track");
    const int pad = d.size();
    const bool exact = d.mode == LengthMode::Exact;
    const int arity = static_cast<int>(tracks.size());
    // Key: per track, emitted count in 0..len, or len+1 once padding started;
    // {kDead} absorbs violations.
    MachineBuilder::Key init(arity, 0);
    auto step = [&, tracks](const MachineBuilder::Key& k, const std::vector<int>& digits) {
        if (k[0] == kDead && k.size() == 1) return MachineBuilder::Key{kDead};
        bool all_pad = true;
        for (int t = 0; t < arity; ++t)
            if (digits[t] != pad) all_pad = false;
        if (all_pad) return MachineBuilder::Key{kDead};
        MachineBuilder::Key nk(arity);
        for (int t = 0; t < arity; ++t) {
            const int len = tracks[t].length;
            const int padded = len + 1;
            int c = k[t];
            int dg = digits[t];
            if (c == padded) {
                if (dg != pad) return MachineBuilder::Key{kDead};
                nk[t] = padded;
            } else if (dg == pad) {
                if (exact && c != len) return MachineBuilder::Key{kDead};
                nk[t] = padded;
            } else {
                if (c >= len) return MachineBuilder::Key{kDead};
                nk[t] = c + 1;
            }
        }
        return nk;
    };
    auto accept = [&, tracks](const MachineBuilder::Key& k) {
        if (k.size() == 1 && k[0] == kDead) return false;
        for (int t = 0; t < arity; ++t) {
            const int len = tracks[t].length;
            if (exact && k[t] != len && k[t] != len + 1) return false;
        }
        return true;
    };
    return MachineBuilder::build(d, tracks, std::move(init), step, accept);
}

namespace {

enum class AtomSort { Str, Chr, Int };

AtomSort classify_term(const Term& t, const SymbolTable& symbols) {
    switch (t.kind()) {
        case TermKind::VarRef:
            return symbols.at(t.var_name()).sort == Sort::String ? AtomSort::Str : AtomSort::Int;
        case TermKind::StrLit: return AtomSort::Str;
        case TermKind::IntLit: return AtomSort::Int;
        case TermKind::CharAt: return AtomSort::Chr;
        case TermKind::Length: return AtomSort::Int;
        case TermKind::Concat: return AtomSort::Str;
    }
    return AtomSort::Str;
}

CmpOp mirror(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return CmpOp::Gt;
        case CmpOp::Le: return CmpOp::Ge;
        case CmpOp::Gt: return CmpOp::Lt;
        case CmpOp::Ge: return CmpOp::Le;
        default: return op;
    }
}

struct CharOperand {
    int track = -1;  // -1 for a literal
    int index = 0;
    int lit_rank = -1;
};

CharOperand char_operand(const Term& t, const Dfa& shape, const Domain& d) {
    CharOperand op;
    if (t.kind() == TermKind::CharAt) {
        op.track = shape.track_index(t.var_name());
        if (op.track < 0) throw UnsupportedAtomError("variable not among tracks: " + t.var_name());
        op.index = t.index();
    } else if (t.kind() == TermKind::StrLit && t.str_value().size() == 1) {
        op.lit_rank = d.rank(t.str_value()[0]);
        if (op.lit_rank < 0) throw ValidationError("literal symbol outside alphabet");
    } else {
        throw UnsupportedAtomError("expected charAt or one-symbol literal: " + serialize(t));
    }
    return op;
}

Dfa compile_atom(const Constraint& c, const Domain& d, const SymbolTable& symbols,
                 const Dfa& shape) {
    AtomSort sa = classify_term(c.lhs(), symbols);
    AtomSort sb = classify_term(c.rhs(), symbols);
    auto is_char_side = [&](const Term& t, AtomSort s) {
        return s == AtomSort::Chr ||
               (t.kind() == TermKind::StrLit && t.str_value().size() == 1);
    };

    if (sa == AtomSort::Chr || sb == AtomSort::Chr) {
        if (!is_char_side(c.lhs(), sa) || !is_char_side(c.rhs(), sb))
            throw SortError("character compared with non-character: " + serialize(c));
        CharOperand l = char_operand(c.lhs(), shape, d);
        CharOperand r = char_operand(c.rhs(), shape, d);
        if (l.track < 0 && r.track < 0) {
            bool truth = op_matches(c.op(), l.lit_rank == r.lit_rank ? 0
                                            : l.lit_rank < r.lit_rank ? -1
                                                                      : 1);
            return universal_automaton(d, shape.tracks, truth);
        }
        if (l.track < 0) return charat_automaton(r.track, r.index, -1, 0, l.lit_rank,
                                                 mirror(c.op()), d, shape.tracks);
        if (r.track < 0)
            return charat_automaton(l.track, l.index, -1, 0, r.lit_rank, c.op(), d, shape.tracks);
        if (l.index <= r.index)
            return charat_automaton(l.track, l.index, r.track, r.index, -1, c.op(), d,
                                    shape.tracks);
        return charat_automaton(r.track, r.index, l.track, l.index, -1, mirror(c.op()), d,
                                shape.tracks);
    }

    if (sa == AtomSort::Int || sb == AtomSort::Int) {
        if (sa != sb) throw SortError("integer compared with non-integer: " + serialize(c));
        const Term& lt = c.lhs();
        const Term& rt = c.rhs();
        auto int_const = [](const Term& t) -> long long { return t.int_value(); };
        if (lt.kind() == TermKind::IntLit && rt.kind() == TermKind::IntLit) {
            long long a = int_const(lt), b = int_const(rt);
            return universal_automaton(d, shape.tracks,
                                       op_matches(c.op(), a == b ? 0 : (a < b ? -1 : 1)));
        }
        auto length_track = [&](const Term& t) {
            if (t.kind() != TermKind::Length)
                throw UnsupportedAtomError(
                    "integer atoms support only length() and constants: " + serialize(c));
            int idx = shape.track_index(t.var_name());
            if (idx < 0)
                throw UnsupportedAtomError("variable not among tracks: " + t.var_name());
            return idx;
        };
        if (lt.kind() == TermKind::Length && rt.kind() == TermKind::Length)
            return length_automaton(length_track(lt), length_track(rt), 0, c.op(), d,
                                    shape.tracks);
        if (lt.kind() == TermKind::Length && rt.kind() == TermKind::IntLit)
            return length_automaton(length_track(lt), -1, int_const(rt), c.op(), d, shape.tracks);
        if (lt.kind() == TermKind::IntLit && rt.kind() == TermKind::Length)
            return length_automaton(length_track(rt), -1, int_const(lt), mirror(c.op()), d,
                                    shape.tracks);
        throw UnsupportedAtomError("unsupported integer atom: " + serialize(c));
    }

    // String-sorted lexicographic / equality comparison.
    SeqSide s1 = side_of_term(c.lhs(), shape);
    SeqSide s2 = side_of_term(c.rhs(), shape);
    return compare_automaton(s1, s2, c.op(), d, shape.tracks);
}

Dfa compile_node(const Constraint& c, const Domain& d, const SymbolTable& symbols,
                 const Dfa& shape) {
    switch (c.kind()) {
        case ConstraintKind::Atom: return compile_atom(c, d, symbols, shape);
        case ConstraintKind::EqConst: {
            int track = shape.track_index(c.var_name());
            if (track < 0)
                throw UnsupportedAtomError("variable not among tracks: " + c.var_name());
            return eq_const_automaton(track, c.literal(), d, shape.tracks);
        }
        case ConstraintKind::Not: {
            Dfa inner = compile_node(c.children()[0], d, symbols, shape);
            for (char& f : inner.accepting) f = f ? 0 : 1;
            return inner;
        }
        case ConstraintKind::And:
        case ConstraintKind::Or: {
            const bool conj = c.kind() == ConstraintKind::And;
            Dfa acc = universal_automaton(d, shape.tracks, conj);
            for (const Constraint& k : c.children()) {
                Dfa kd = compile_node(k, d, symbols, shape);
                acc = minimize_impl(
                    product_aligned(acc, kd, conj ? BoolMode::And : BoolMode::Or));
            }
            return acc;
        }
    }
    throw UnsupportedAtomError("unknown constraint node");
}

}  // namespace

Dfa from_constraint(const Constraint& c, const Domain& d, const SymbolTable& symbols,
                    std::vector<std::string> tracks) {
    d.validate();
    check_well_sorted(c, symbols, d);
    if (tracks.empty()) tracks = free_variables(c);
    if (tracks.empty())
        throw ValidationError("constraint has no free variables; pass tracks explicitly");
    for (const std::string& v : free_variables(c)) {
        if (std::find(tracks.begin(), tracks.end(), v) == tracks.end())
            throw ValidationError("free variable " + v + " missing from track list");
        if (symbols.at(v).sort != Sort::String)
            throw UnsupportedAtomError("free integer variables are not supported: " + v);
    }
    Dfa dom = domain_automaton(d, make_track_refs(d, symbols, tracks));
    Dfa body = compile_node(c, d, symbols, dom);
    return minimize_impl(product_aligned(body, dom, BoolMode::And));
}

Dfa intersect(const Dfa& a, const Dfa& b) {
    if (same_track_layout(a, b)) return minimize_impl(product_aligned(a, b, BoolMode::And));
    return minimize_impl(product_merged(a, b, BoolMode::And));
}

Dfa unite(const Dfa& a, const Dfa& b) {
    if (same_track_layout(a, b)) return minimize_impl(product_aligned(a, b, BoolMode::Or));
    return minimize_impl(product_merged(a, b, BoolMode::Or));
}

Dfa complement(const Dfa& a) {
    // Complement over assignments: flip acceptance, then restrict to the
    // well-formed tuple strings so ill-formed padding never becomes a model.
    Dfa flipped = a;
    for (char& f : flipped.accepting) f = f ? 0 : 1;
    Dfa dom = domain_automaton(a.domain, a.tracks);
    return minimize_impl(product_aligned(flipped, dom, BoolMode::And));
}

Dfa minimize(const Dfa& a) { return minimize_impl(a); }

Dfa project(const Dfa& a, const std::string& keep) {
    const int kidx = a.track_index(keep);
    if (kidx < 0) throw TrackMismatchError("unknown track: " + keep);
    const int base = a.symbols_per_track();
    const int codes = a.tuple_symbols();
    const int arity = static_cast<int>(a.tracks.size());

    // Group tuple codes by the kept track's digit.
    std::vector<std::vector<int>> by_digit(base);
    std::vector<int> digits;
    for (int code = 0; code < codes; ++code) {
        digits_of(code, arity, base, digits);
        by_digit[digits[kidx]].push_back(code);
    }

    // Subset construction over the single-track alphabet.
    std::map<std::vector<int>, int> ids;
    std::vector<std::vector<int>> order;
    auto intern = [&](std::vector<int> set) {
        auto [it, fresh] = ids.emplace(std::move(set), static_cast<int>(order.size()));
        if (fresh) order.push_back(it->first);
        return it->second;
    };

    Dfa out;
    out.domain = a.domain;
    out.tracks = {a.tracks[kidx]};
    out.start = intern({a.start});
    for (size_t s = 0; s < order.size(); ++s) {
        std::vector<int> cur = order[s];
        for (int dg = 0; dg < base; ++dg) {
            std::vector<int> nxt;
            for (int st : cur)
                for (int code : by_digit[dg]) nxt.push_back(a.step(st, code));
            std::sort(nxt.begin(), nxt.end());
            nxt.erase(std::unique(nxt.begin(), nxt.end()), nxt.end());
            out.next.push_back(intern(std::move(nxt)));
        }
    }
    out.accepting.resize(order.size(), 0);
    for (size_t s = 0; s < order.size(); ++s)
        for (int st : order[s])
            if (a.accepting[st]) out.accepting[s] = 1;

    // A kept track shorter than the tuple may only reach acceptance through
    // trailing PADs; fold that reachability into the accepting set.
    const int pad = a.pad_digit();
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < out.num_states(); ++s) {
            if (!out.accepting[s] && out.accepting[out.step(s, pad)]) {
                out.accepting[s] = 1;
                changed = true;
            }
        }
    }
    Dfa dom = domain_automaton(out.domain, out.tracks);
    return minimize_impl(product_aligned(out, dom, BoolMode::And));
}

namespace {

int counting_span(const Dfa& a) { return a.max_track_length(); }

void encode_assignment(const Dfa& a, const Assignment& asg, std::vector<int>& codes) {
    const int base = a.symbols_per_track();
    const int pad = a.pad_digit();
    int k = 0;
    for (const TrackRef& t : a.tracks) {
        auto it = asg.values.find(t.var);
        if (it == asg.values.end())
            throw ValidationError("assignment missing track: " + t.var);
        const std::string& val = it->second;
        Var v{t.var, Sort::String, Track::High, t.length};
        check_value_in_domain(val, v, a.domain);
        k = std::max(k, static_cast<int>(val.size()));
    }
    if (a.domain.mode == LengthMode::Exact) k = counting_span(a);
    codes.assign(k, 0);
    for (int pos = 0; pos < k; ++pos) {
        int code = 0;
        int w = 1;
        for (const TrackRef& t : a.tracks) {
            const std::string& val = asg.values.at(t.var);
            int dg = pos < static_cast<int>(val.size()) ? a.domain.rank(val[pos]) : pad;
            code += dg * w;
            w *= base;
        }
        codes[pos] = code;
    }
}

// Suffix counts: weights[j][s] = number of accepted completions when s is
// reached after j symbols. Used for sampling and emptiness.
std::vector<std::vector<mpz_class>> suffix_counts(const Dfa& a, int k) {
    const bool upto = a.domain.mode == LengthMode::UpTo;
    const int codes = a.tuple_symbols();
    std::vector<std::vector<mpz_class>> w(k + 1,
                                          std::vector<mpz_class>(a.num_states(), 0));
    for (int s = 0; s < a.num_states(); ++s)
        if (a.accepting[s]) w[k][s] = 1;
    for (int j = k - 1; j >= 0; --j) {
        for (int s = 0; s < a.num_states(); ++s) {
            mpz_class total = (upto && a.accepting[s]) ? 1 : 0;
            const int* row = &a.next[s * codes];
            for (int code = 0; code < codes; ++code) {
                const mpz_class& t = w[j + 1][row[code]];
                if (t != 0) total += t;
            }
            w[j][s] = std::move(total);
        }
    }
    return w;
}

mpz_class uniform_below(const mpz_class& n, std::mt19937_64& rng) {
    size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
    size_t words = (bits + 63) / 64;
    while (true) {
        mpz_class r = 0;
        for (size_t i = 0; i < words; ++i) {
            r <<= 64;
            r += mpz_class(static_cast<unsigned long>(rng()));
        }
        r >>= words * 64 - bits;
        if (r < n) return r;
    }
}

Assignment unrank(const Dfa& a, const std::vector<std::vector<mpz_class>>& w, mpz_class r) {
    const int k = counting_span(a);
    const bool upto = a.domain.mode == LengthMode::UpTo;
    if (w[0][a.start] == 0) throw ValidationError("cannot sample from an empty language");
    const int codes = a.tuple_symbols();
    const int base = a.symbols_per_track();
    const int pad = a.pad_digit();

    std::vector<std::string> vals(a.tracks.size());
    std::vector<char> padded(a.tracks.size(), 0);
    int s = a.start;
    for (int j = 0; j < k; ++j) {
        if (upto && a.accepting[s]) {
            if (r == 0) break;
            r -= 1;
        }
        bool advanced = false;
        for (int code = 0; code < codes; ++code) {
            const mpz_class& t = w[j + 1][a.step(s, code)];
            if (r < t) {
                int c = code;
                for (size_t tr = 0; tr < a.tracks.size(); ++tr) {
                    int dg = c % base;
                    c /= base;
                    if (dg == pad)
                        padded[tr] = 1;
                    else
                        vals[tr] += a.domain.alphabet[dg];
                }
                s = a.step(s, code);
                advanced = true;
                break;
            }
            r -= t;
        }
        assert(advanced);
        if (!advanced) break;
    }
    Assignment out;
    for (size_t tr = 0; tr < a.tracks.size(); ++tr) out.values[a.tracks[tr].var] = vals[tr];
    return out;
}

}  // namespace

bool accepts(const Dfa& a, const Assignment& asg) {
    std::vector<int> codes;
    encode_assignment(a, asg, codes);
    int s = a.start;
    for (int code : codes) s = a.step(s, code);
    return a.accepting[s] != 0;
}

bool is_empty(const Dfa& a) {
    const int k = counting_span(a);
    const bool upto = a.domain.mode == LengthMode::UpTo;
    std::vector<char> cur(a.num_states(), 0);
    cur[a.start] = 1;
    auto any_accepting = [&](const std::vector<char>& set) {
        for (int s = 0; s < a.num_states(); ++s)
            if (set[s] && a.accepting[s]) return true;
        return false;
    };
    if ((upto || k == 0) && any_accepting(cur)) return false;
    const int codes = a.tuple_symbols();
    for (int j = 0; j < k; ++j) {
        std::vector<char> nxt(a.num_states(), 0);
        for (int s = 0; s < a.num_states(); ++s) {
            if (!cur[s]) continue;
            const int* row = &a.next[s * codes];
            for (int code = 0; code < codes; ++code) nxt[row[code]] = 1;
        }
        cur = std::move(nxt);
        if ((upto || j + 1 == k) && any_accepting(cur)) return false;
    }
    return true;
}

Assignment sample_model(const Dfa& a, std::mt19937_64& rng) {
    auto w = suffix_counts(a, counting_span(a));
    const mpz_class& total = w[0][a.start];
    if (total == 0) throw ValidationError("cannot sample from an empty language");
    return unrank(a, w, uniform_below(total, rng));
}

Assignment first_model(const Dfa& a) { return unrank(a, suffix_counts(a, counting_span(a)), 0); }

void write_dot(const Dfa& a, std::ostream& os, const std::string& name) {
    const int codes = a.tuple_symbols();
    const int base = a.symbols_per_track();
    os << "digraph " << name << " {\n  rankdir=LR;\n";
    os << "  init [shape=point];\n  init -> s" << a.start << ";\n";
    for (int s = 0; s < a.num_states(); ++s) {
        os << "  s" << s << " [shape=" << (a.accepting[s] ? "doublecircle" : "circle") << "];\n";
    }
    std::vector<int> digits;
    for (int s = 0; s < a.num_states(); ++s) {
        std::map<int, std::vector<int>> by_target;
        for (int code = 0; code < codes; ++code) by_target[a.step(s, code)].push_back(code);
        for (auto& [t, cs] : by_target) {
            std::string label;
            for (size_t i = 0; i < cs.size() && i < 3; ++i) {
                digits_of(cs[i], static_cast<int>(a.tracks.size()), base, digits);
                if (i) label += " ";
                label += "(";
                for (size_t tr = 0; tr < digits.size(); ++tr) {
                    if (tr) label += ",";
                    label += digits[tr] == a.pad_digit()
                                 ? std::string("#")
                                 : std::string(1, a.domain.alphabet[digits[tr]]);
                }
                label += ")";
            }
            if (cs.size() > 3) label += " +" + std::to_string(cs.size() - 3);
            os << "  s" << s << " -> s" << t << " [label=\"" << label << "\"];\n";
        }
    }
    os << "}\n";
}

}  // namespace sidesynth
