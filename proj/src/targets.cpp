#include "sidesynth/targets.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "sidesynth/dfa.hpp"
#include "sidesynth/parser.hpp"

namespace sidesynth {

namespace {

SymbolTable hl_symbols(int h_len, int l_len) {
    SymbolTable symbols;
    symbols.declare({"h", Sort::String, Track::High, h_len});
    symbols.declare({"l", Sort::String, Track::Low, l_len});
    return symbols;
}

Constraint char_eq(int i) {
    return Constraint::atom(CmpOp::Eq, Term::char_at("h", i), Term::char_at("l", i));
}

Constraint char_ne(int i) {
    return Constraint::atom(CmpOp::Ne, Term::char_at("h", i), Term::char_at("l", i));
}

}  // namespace

TargetSpec gen_pin_check(int n, const std::string& alphabet) {
    if (n < 1) throw ValidationError("pin length must be >= 1");
    TargetSpec t;
    t.id = "pci";
    t.name = "passCheckInsec";
    t.domain = {alphabet, n, LengthMode::Exact};
    t.domain.validate();
    t.symbols = hl_symbols(0, 0);

    // Mismatch after a common prefix of length i costs 63 + 15i; the full
    // match runs the loop to the end.
    for (int i = 0; i < n; ++i) {
        std::vector<Constraint> parts;
        for (int j = 0; j < i; ++j) parts.push_back(char_eq(j));
        parts.push_back(char_ne(i));
        t.paths.push_back({parts.size() == 1 ? parts.front() : Constraint::conj(parts),
                           63 + 15LL * i});
    }
    std::vector<Constraint> full;
    for (int j = 0; j < n; ++j) full.push_back(char_eq(j));
    t.paths.push_back({Constraint::conj(full), 63 + 15LL * n});

    t.concrete_cost = [n](const std::string& h, const std::string& l) -> long long {
        for (int i = 0; i < n; ++i)
            if (h[i] != l[i]) return 63 + 15LL * i;
        return 63 + 15LL * n;
    };
    return t;
}

TargetSpec gen_constant_time_check(int n, const std::string& alphabet) {
    if (n < 1) throw ValidationError("pin length must be >= 1");
    if (n > 16) throw ValidationError("constant-time generator capped at 2^16 paths");
    TargetSpec t;
    t.id = "pcs";
    t.name = "passCheckSec";
    t.domain = {alphabet, n, LengthMode::Exact};
    t.domain.validate();
    t.symbols = hl_symbols(0, 0);

    constexpr long long kFlatCost = 120;
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<Constraint> parts;
        for (int i = 0; i < n; ++i)
            parts.push_back((mask >> i) & 1 ? char_eq(i) : char_ne(i));
        t.paths.push_back({Constraint::conj(parts), kFlatCost});
    }
    t.concrete_cost = [](const std::string&, const std::string&) { return kFlatCost; };
    return t;
}

TargetSpec gen_string_inequality(InequalityKind kind, const Domain& domain) {
    domain.validate();
    TargetSpec t;
    t.domain = domain;

    switch (kind) {
        case InequalityKind::Direct: {
            t.id = "si";
            t.name = "stringInequality";
            t.symbols = hl_symbols(0, 0);
            t.paths.push_back(
                {Constraint::atom(CmpOp::Le, Term::var("h"), Term::var("l")), 42});
            t.paths.push_back(
                {Constraint::atom(CmpOp::Gt, Term::var("h"), Term::var("l")), 67});
            Domain d = domain;
            t.concrete_cost = [d](const std::string& h, const std::string& l) -> long long {
                return lex_compare(h, l, d) <= 0 ? 42 : 67;
            };
            break;
        }
        case InequalityKind::Concat: {
            t.id = "scoi";
            t.name = "stringConcatInequality";
            t.symbols = hl_symbols(0, 0);
            const std::string pad(1, domain.alphabet[domain.size() / 2]);
            Term lhs = Term::concat(Term::var("h"), Term::str(pad));
            Term rhs = Term::concat(Term::var("l"), Term::str(pad));
            t.paths.push_back({Constraint::atom(CmpOp::Le, lhs, rhs), 50});
            t.paths.push_back({Constraint::atom(CmpOp::Gt, lhs, rhs), 80});
            Domain d = domain;
            t.concrete_cost = [d, pad](const std::string& h, const std::string& l) -> long long {
                return lex_compare(h + pad, l + pad, d) <= 0 ? 50 : 80;
            };
            break;
        }
        case InequalityKind::Equals: {
            t.id = "se";
            t.name = "stringEquals";
            t.symbols = hl_symbols(0, 0);
            const int n = domain.length_bound;
            // Ordered-mismatch ladder: at each position the lower and higher
            // mismatch run different branch sequences, then the full match.
            long long cost = 60;
            for (int i = 0; i < n; ++i) {
                std::vector<Constraint> prefix;
                for (int j = 0; j < i; ++j) prefix.push_back(char_eq(j));
                auto with_prefix = [&](Constraint last) {
                    std::vector<Constraint> parts = prefix;
                    parts.push_back(std::move(last));
                    return parts.size() == 1 ? parts.front() : Constraint::conj(parts);
                };
                t.paths.push_back({with_prefix(Constraint::atom(
                                      CmpOp::Lt, Term::char_at("h", i), Term::char_at("l", i))),
                                  cost});
                cost += 15;
                t.paths.push_back({with_prefix(Constraint::atom(
                                      CmpOp::Gt, Term::char_at("h", i), Term::char_at("l", i))),
                                  cost});
                cost += 15;
            }
            std::vector<Constraint> full;
            for (int j = 0; j < n; ++j) full.push_back(char_eq(j));
            t.paths.push_back({Constraint::conj(full), cost});
            Domain d = domain;
            t.concrete_cost = [d, n](const std::string& h, const std::string& l) -> long long {
                for (int i = 0; i < n; ++i) {
                    if (h[i] == l[i]) continue;
                    return 60 + 30LL * i + (d.rank(h[i]) < d.rank(l[i]) ? 0 : 15);
                }
                return 60 + 30LL * n;
            };
            break;
        }
        case InequalityKind::IndexOf: {
            t.id = "io";
            t.name = "indexOf";
            const int n = domain.length_bound;
            t.symbols = hl_symbols(n, 1);
            auto probe_ne = [&](int i) {
                return Constraint::atom(CmpOp::Ne, Term::char_at("h", i), Term::char_at("l", 0));
            };
            auto probe_eq = [&](int i) {
                return Constraint::atom(CmpOp::Eq, Term::char_at("h", i), Term::char_at("l", 0));
            };
            for (int i = 0; i < n; ++i) {
                std::vector<Constraint> parts;
                for (int j = 0; j < i; ++j) parts.push_back(probe_ne(j));
                parts.push_back(probe_eq(i));
                t.paths.push_back({parts.size() == 1 ? parts.front() : Constraint::conj(parts),
                                  60 + 15LL * i});
            }
            std::vector<Constraint> none;
            for (int j = 0; j < n; ++j) none.push_back(probe_ne(j));
            t.paths.push_back({Constraint::conj(none), 60 + 15LL * n});
            t.concrete_cost = [n](const std::string& h, const std::string& l) -> long long {
                for (int i = 0; i < n; ++i)
                    if (h[i] == l[0]) return 60 + 15LL * i;
                return 60 + 15LL * n;
            };
            break;
        }
    }
    return t;
}

namespace {

const std::string kDigits = "0123456789";
const std::string kUpper = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

}  // namespace

std::vector<std::string> builtin_target_names() {
    return {"pci", "pcs", "se", "si", "scoi", "io"};
}

TargetSpec builtin_target(const std::string& id, int length_override) {
    const int len = length_override;
    if (id == "pci") return gen_pin_check(len ? len : 4, kDigits);
    if (id == "pcs") return gen_constant_time_check(len ? len : 4, kUpper);
    if (id == "se")
        return gen_string_inequality(InequalityKind::Equals,
                                     {kUpper, len ? len : 4, LengthMode::Exact});
    if (id == "si")
        return gen_string_inequality(InequalityKind::Direct,
                                     {kUpper, len ? len : 2, LengthMode::Exact});
    if (id == "scoi")
        return gen_string_inequality(InequalityKind::Concat,
                                     {kUpper, len ? len : 4, LengthMode::Exact});
    if (id == "io")
        return gen_string_inequality(InequalityKind::IndexOf,
                                     {kUpper, len ? len : 8, LengthMode::Exact});
    throw ValidationError("unknown built-in target: " + id +
                          " (expected pci, pcs, se, si, scoi, io)");
}

TargetSpec load_target_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open target file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ParsedFile parsed = path.size() > 5 && path.substr(path.size() - 5) == ".json"
                            ? parse_json_file(buf.str())
                            : parse_file(buf.str());
    if (!parsed.has_domain) throw ValidationError("target file lacks a (domain ...) declaration");
    if (parsed.observations.empty())
        throw ValidationError("target file declares no (obs COST expr) paths");

    TargetSpec t;
    t.id = path;
    t.name = path;
    t.domain = parsed.domain;
    t.symbols = parsed.symbols;
    for (const ObsEntry& o : parsed.observations) t.paths.push_back({o.constraint, o.cost});
    return t;
}

AuditReport validate_target(const TargetSpec& target, uint64_t seed, size_t samples) {
    AuditReport report;
    auto fail = [&](std::string msg) {
        report.ok = false;
        report.errors.push_back(std::move(msg));
    };
    if (target.paths.empty()) {
        fail("target has no paths");
        return report;
    }

    const Var& h = target.symbols.at("h");
    const Var& l = target.symbols.at("l");
    std::vector<std::string> tracks{h.name, l.name};

    std::vector<Dfa> dfas;
    dfas.reserve(target.paths.size());
    for (const PathConstraint& p : target.paths)
        dfas.push_back(from_constraint(p.constraint, target.domain, target.symbols, tracks));

    // Exact partition check: pairwise-disjoint and jointly total.
    for (size_t i = 0; i < dfas.size(); ++i)
        for (size_t j = i + 1; j < dfas.size(); ++j)
            if (!is_empty(intersect(dfas[i], dfas[j])))
                fail("paths " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    Dfa all = dfas.front();
    for (size_t i = 1; i < dfas.size(); ++i) all = unite(all, dfas[i]);
    Dfa dom = domain_automaton(target.domain,
                               make_track_refs(target.domain, target.symbols, tracks));
    if (!is_empty(intersect(complement(all), dom)))
        fail("paths do not cover the full (h, l) space");

    // Sampled agreement between the constraint classes and the concrete cost.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> sym(0, target.domain.size() - 1);
    auto random_string = [&](int len) {
        std::string s(len, ' ');
        for (char& c : s) c = target.domain.alphabet[sym(rng)];
        return s;
    };
    for (size_t k = 0; k < samples; ++k) {
        Assignment asg;
        std::string hs = random_string(h.effective_length(target.domain));
        std::string ls = random_string(l.effective_length(target.domain));
        asg.values[h.name] = hs;
        asg.values[l.name] = ls;
        int matched = -1;
        for (size_t i = 0; i < dfas.size(); ++i) {
            if (!accepts(dfas[i], asg)) continue;
            if (matched >= 0) {
                fail("sample (" + hs + ", " + ls + ") satisfies two paths");
                break;
            }
            matched = static_cast<int>(i);
        }
        if (matched < 0) {
            fail("sample (" + hs + ", " + ls + ") satisfies no path");
            continue;
        }
        if (target.concrete_cost &&
            target.concrete_cost(hs, ls) != target.paths[matched].cost)
            fail("concrete cost disagrees with path " + std::to_string(matched) + " on (" + hs +
                 ", " + ls + ")");
        ++report.samples;
    }
    return report;
}

}  // namespace sidesynth
