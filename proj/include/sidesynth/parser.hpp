#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sidesynth/constraint.hpp"

namespace sidesynth {

// One (obs COST expr) entry: a path constraint with its observed cost.
struct ObsEntry {
    long long cost = 0;
    Constraint constraint;
};

// Result of parsing a constraint file:
//   (domain ALPHABET BOUND [exact|upto])
//   (var NAME (string|int) (high|low) [LENGTH])
//   (obs COST expr)
//   expr            ; bare formulas, for counting tools
struct ParsedFile {
    Domain domain;
    bool has_domain = false;
    SymbolTable symbols;
    std::vector<ObsEntry> observations;
    std::vector<Constraint> formulas;
};

ParsedFile parse_file(std::string_view text);

// JSON mirror of the same structure:
// {"domain": {"alphabet": "...", "bound": 4, "mode": "exact"},
//  "vars": [{"name": "h", "sort": "string", "track": "high", "length": 4}],
//  "observations": [{"cost": 63, "expr": ["!=", ["charAt","h",0], ["charAt","l",0]]}],
//  "formulas": [ ... ]}
ParsedFile parse_json_file(const std::string& json_text);

// Parses a single expression against existing declarations.
Constraint parse_constraint(std::string_view text, const SymbolTable& symbols, const Domain& d);

// Renders a whole system back to DSL text (used to ship target data files).
std::string render_file(const Domain& d, const SymbolTable& symbols,
                        const std::vector<ObsEntry>& observations);

}  // namespace sidesynth
