#pragma once

#include <stdexcept>
#include <string>

namespace sidesynth {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// DSL syntax error with source position.
struct ParseError : Error {
    ParseError(const std::string& msg, int line, int col)
        : Error(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line),
          col(col) {}
    int line = 0;
    int col = 0;
};

// Ill-sorted constraint (string predicate over integer term, etc.).
struct SortError : Error {
    using Error::Error;
};

// Domain violations: symbols outside the alphabet, length bounds, duplicate vars.
struct ValidationError : Error {
    using Error::Error;
};

// Atom shape outside the supported fragment.
struct UnsupportedAtomError : Error {
    using Error::Error;
};

// Automata combined over incompatible domains or track specs.
struct TrackMismatchError : Error {
    using Error::Error;
};

// Protocol misuse between engine and counting layer (e.g. C_h automaton not
// cached before an incremental count) or a non-partitioning observation set.
struct ProtocolError : Error {
    using Error::Error;
};

}  // namespace sidesynth
