#pragma once

#include <span>

#include "sidesynth/counting.hpp"
#include "sidesynth/observations.hpp"

namespace sidesynth {

struct Bits {
    double value = 0.0;
};

// Which counting route feeds the probabilities: Fresh rebuilds every automaton
// per query, Incremental reuses cached sub-automata.
enum class CountRoute { Fresh, Incremental };

// log2 of a positive big integer to full double precision (bit length plus a
// 64-bit mantissa correction; exact enough beyond 12 significant digits).
double log2_mpz(const mpz_class& x);

Bits entropy_of_count(const mpz_class& count);

// H(H) = log2(#C_h) under the uniform prior. Count 0 means the attack
// invariant (the true secret stays feasible) broke: ProtocolError.
Bits entropy(const Constraint& c_h, ModelCounter& counter,
             CountRoute route = CountRoute::Incremental);

// H(H | O, L = l_val) = sum_o p(o|l_val) log2 #(C_h ∧ ψ_o)[l -> l_val], with
// p(o|l_val) formed from exact integer counts; zero-count classes contribute
// nothing. Throws ProtocolError when the class counts fail to add up to #C_h
// (non-partitioning observation constraints).
Bits conditional_entropy(const Constraint& c_h, std::span<const ObservationConstraint> psi,
                         const std::string& l_val, ModelCounter& counter,
                         CountRoute route = CountRoute::Incremental);

// I(H; O | L = l_val) = H(H) − H(H | O, L = l_val), clamped at 0 against
// floating-point underflow.
Bits mutual_info(const Constraint& c_h, std::span<const ObservationConstraint> psi,
                 const std::string& l_val, ModelCounter& counter,
                 CountRoute route = CountRoute::Incremental);

}  // namespace sidesynth
