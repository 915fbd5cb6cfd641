#include "sidesynth/infotheory.hpp"

#include <algorithm>
#include <cmath>

namespace sidesynth {

double log2_mpz(const mpz_class& x) {
    if (x <= 0) throw ValidationError("log2 of a non-positive count");
    size_t bits = mpz_sizeinbase(x.get_mpz_t(), 2);
    if (bits <= 53) return std::log2(x.get_d());
    mpz_class top = x >> (bits - 64);
    return std::log2(top.get_d()) + static_cast<double>(bits - 64);
}

Bits entropy_of_count(const mpz_class& count) {
    if (count == 0)
        throw ProtocolError("knowledge constraint is unsatisfiable; the true secret was excluded");
    if (count == 1) return {0.0};
    return {log2_mpz(count)};
}

namespace {

CountResult count_secret(const Constraint& c_h, ModelCounter& counter, CountRoute route) {
    std::vector<std::string> tracks{counter.high().name};
    return route == CountRoute::Fresh ? counter.model_count_fresh(c_h, tracks)
                                      : counter.model_count(c_h, tracks);
}

}  // namespace

Bits entropy(const Constraint& c_h, ModelCounter& counter, CountRoute route) {
    return entropy_of_count(count_secret(c_h, counter, route).count);
}

Bits conditional_entropy(const Constraint& c_h, std::span<const ObservationConstraint> psi,
                         const std::string& l_val, ModelCounter& counter, CountRoute route) {
    if (psi.empty()) throw ValidationError("conditional entropy needs observation constraints");
    const mpz_class total = count_secret(c_h, counter, route).count;
    if (total == 0)
        throw ProtocolError("knowledge constraint is unsatisfiable; the true secret was excluded");

    const Var& l = counter.low();
    mpz_class covered = 0;
    double h = 0.0;
    for (const ObservationConstraint& oc : psi) {
        mpz_class c;
        if (route == CountRoute::Incremental) {
            c = counter.model_count_incremental(c_h, oc.constraint, l_val).count;
        } else {
            Constraint conjoined =
                c_h.and_with(oc.constraint).and_with(Constraint::eq_const(l.name, l_val));
            c = counter
                    .model_count_fresh(conjoined, {counter.high().name, l.name})
                    .count;
        }
        if (c == 0) continue;  // 0 * log 0 := 0
        covered += c;
        double p = mpq_class(c, total).get_d();
        h += p * log2_mpz(c);
    }
    if (covered != total)
        throw ProtocolError("observation classes do not partition the secret space for l = " +
                            l_val + " (covered " + covered.get_str() + " of " + total.get_str() +
                            ")");
    return {h};
}

Bits mutual_info(const Constraint& c_h, std::span<const ObservationConstraint> psi,
                 const std::string& l_val, ModelCounter& counter, CountRoute route) {
    double gain =
        entropy(c_h, counter, route).value - conditional_entropy(c_h, psi, l_val, counter, route).value;
    return {std::max(gain, 0.0)};
}

}  // namespace sidesynth
