#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sidesynth/observations.hpp"

namespace sidesynth {

// One benchmark target: its domain, declared variables, symbolic paths with
// costs, and a concrete cost function used to cross-check the constraint
// oracle.
struct TargetSpec {
    std::string id;
    std::string name;
    Domain domain;
    SymbolTable symbols;
    std::vector<PathConstraint> paths;
    std::function<long long(const std::string&, const std::string&)> concrete_cost;
    long long default_delta = 10;
};

enum class InequalityKind { Direct, Concat, Equals, IndexOf };

// Early-terminating character-by-character comparison: n+1 paths with costs
// 63, 78, ..., 63 + 15n.
TargetSpec gen_pin_check(int n, const std::string& alphabet);

// Constant-time comparison: 2^n mismatch-pattern paths, all the same cost, so
// everything merges into one observation class.
TargetSpec gen_constant_time_check(int n, const std::string& alphabet);

// Lexicographic comparison family: Direct (h <= l / h > l, costs 42/67),
// Concat (the same split through concat), Equals (ordered-mismatch ladder,
// 9 paths), IndexOf (first match of a one-symbol input in a length-8 secret,
// 9 paths).
TargetSpec gen_string_inequality(InequalityKind kind, const Domain& domain);

std::vector<std::string> builtin_target_names();

// Builds a built-in by id (pci, pcs, se, si, scoi, io); length_override
// rescales the domain (0 keeps the default).
TargetSpec builtin_target(const std::string& id, int length_override = 0);

// Loads a target from a DSL (.sct) or JSON file; no concrete cost function.
TargetSpec load_target_file(const std::string& path);

struct AuditReport {
    bool ok = true;
    std::vector<std::string> errors;
    size_t samples = 0;
};

// Checks that the paths partition the (h, l) space (pairwise-disjoint, union
// total, via automata) and that the concrete cost matches the unique
// satisfied path's cost on random samples.
AuditReport validate_target(const TargetSpec& target, uint64_t seed, size_t samples = 1000);

}  // namespace sidesynth
