#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sidesynth/attack.hpp"
#include "sidesynth/parser.hpp"
#include "sidesynth/targets.hpp"
#include "oracle.hpp"

using namespace sidesynth;

namespace {

AttackEngine engine_for(const TargetSpec& t) {
    return AttackEngine(t.domain, t.symbols, t.paths, t.default_delta, t.concrete_cost);
}

mpz_class language_size(const Dfa& a) {
    return count_paths(a, counting_bound(a), a.domain.mode).count;
}

Domain upper(int n) { return {"ABCDEFGHIJKLMNOPQRSTUVWXYZ", n, LengthMode::Exact}; }

}  // namespace

TEST_CASE("cost clustering follows the greedy gap rule") {
    SymbolTable symbols;
    symbols.declare({"h", Sort::String, Track::High, 0});
    symbols.declare({"l", Sort::String, Track::Low, 0});
    Domain d{"01", 1, LengthMode::Exact};
    Constraint any = Constraint::truth();

    auto classes_for = [&](std::vector<long long> costs, long long delta) {
        std::vector<PathConstraint> paths;
        for (long long c : costs) paths.push_back({any, c});
        return generate_constraints(paths, delta);
    };

    SUBCASE("the pin ladder costs split into five classes at delta 10") {
        auto psi = classes_for({63, 78, 93, 108, 123}, 10);
        REQUIRE(psi.size() == 5);
        CHECK(psi[0].representative_cost == 63);
        CHECK(psi[4].representative_cost == 123);
    }
    SUBCASE("the inequality pair stays distinguishable") {
        CHECK(classes_for({42, 67}, 10).size() == 2);
    }
    SUBCASE("equal costs collapse into one class") {
        CHECK(classes_for({50, 50, 50, 50}, 10).size() == 1);
    }
    SUBCASE("chained near costs merge even when the extremes differ by more than delta") {
        auto psi = classes_for({10, 19, 28}, 10);
        REQUIRE(psi.size() == 1);
        CHECK(psi[0].cost_min == 10);
        CHECK(psi[0].cost_max == 28);
    }
    SUBCASE("a gap of exactly delta starts a new class") {
        CHECK(classes_for({10, 20}, 10).size() == 2);
        CHECK(classes_for({10, 19, 29}, 10).size() == 2);
    }
    SUBCASE("degenerate inputs are rejected") {
        CHECK_THROWS_AS(generate_constraints({}, 10), ValidationError);
        std::vector<PathConstraint> one{{any, 5}};
        CHECK_THROWS_AS(generate_constraints(one, 0), ValidationError);
    }
}

TEST_CASE("merged observation constraints cover exactly the union of their paths") {
    TargetSpec t = gen_pin_check(2, "0123");
    auto psi = generate_constraints(t.paths, 1000);  // merge everything
    REQUIRE(psi.size() == 1);
    Dfa merged = from_constraint(psi[0].constraint, t.domain, t.symbols, {"h", "l"});
    CHECK(language_size(merged) == 16 * 16);  // tautology over (h, l)
}

TEST_CASE("observe picks the unique matching class") {
    TargetSpec t = gen_pin_check(4, "0123456789");
    AttackEngine eng = engine_for(t);

    CHECK(eng.observations().size() == 5);
    CHECK(eng.observe("1337", "1058") == 1);  // cost 78: one matching prefix char
    CHECK(eng.observations()[eng.observe("1337", "1058")].representative_cost == 78);
    CHECK(eng.observe("1337", "1337") == 4);  // full match, cost 123
    CHECK(eng.observations()[4].representative_cost == 123);
    CHECK(eng.observe("1337", "8299") == 0);  // cost 63

    TargetSpec si = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine seng = engine_for(si);
    int cls = seng.observe("LL", "MZ");
    CHECK(seng.observations()[cls].representative_cost == 42);  // h <= l
}

TEST_CASE("observe rejects non-partitioning observation sets") {
    SymbolTable symbols;
    symbols.declare({"h", Sort::String, Track::High, 0});
    symbols.declare({"l", Sort::String, Track::Low, 0});
    Domain d = upper(2);
    SymbolTable parse_syms;
    parse_syms.declare({"h", Sort::String, Track::High, 0});
    parse_syms.declare({"l", Sort::String, Track::Low, 0});
    std::vector<PathConstraint> overlapping{
        {parse_constraint("(<= h l)", parse_syms, d), 10},
        {parse_constraint("(>= h l)", parse_syms, d), 40},
    };
    AttackEngine eng(d, symbols, overlapping, 10);
    CHECK_THROWS_AS(eng.observe("LL", "LL"), ProtocolError);  // both classes match

    std::vector<PathConstraint> gappy{
        {parse_constraint("(< h l)", parse_syms, d), 10},
        {parse_constraint("(> h l)", parse_syms, d), 40},
    };
    AttackEngine eng2(d, symbols, gappy, 10);
    CHECK_THROWS_AS(eng2.observe("LL", "LL"), ProtocolError);  // no class matches
}

TEST_CASE("the low-input set concentrates on informative probes") {
    SUBCASE("initially every checkPIN input splits the secrets") {
        TargetSpec t = gen_pin_check(4, "0123456789");
        AttackEngine eng = engine_for(t);
        LowInputs low = eng.project_low(Constraint::truth());
        CHECK(low.splitting);
        CHECK(language_size(low.dfa) == 10000);
    }

    SUBCASE("the inequality residual interval admits 168 splitting probes") {
        TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
        AttackEngine eng = engine_for(t);
        SymbolTable symbols = t.symbols;
        Constraint c_h =
            parse_constraint("(and (> h \"GM\") (<= h \"MZ\"))", symbols, t.domain);
        LowInputs low = eng.project_low(c_h);
        CHECK(low.splitting);

        // Enumeration oracle: l splits iff some feasible h <= l and some > l.
        int expected = 0;
        std::vector<std::string> candidates;
        oracle::for_each_assignment({symbols.at("h")}, t.domain,
                                    [&](const oracle::StringMap& asg) {
                                        if (oracle::eval(c_h, asg, t.domain))
                                            candidates.push_back(asg.at("h"));
                                    });
        oracle::for_each_assignment(
            {symbols.at("l")}, t.domain, [&](const oracle::StringMap& asg) {
                const std::string& l = asg.at("l");
                bool le = false, gt = false;
                for (const std::string& h : candidates) {
                    if (lex_compare(h, l, t.domain) <= 0) le = true;
                    else gt = true;
                }
                if (le && gt) ++expected;
            });
        CHECK(expected == 168);
        CHECK(language_size(low.dfa) == expected);
    }

    SUBCASE("a single observation class leaves only the full-domain fallback") {
        SymbolTable symbols;
        symbols.declare({"h", Sort::String, Track::High, 0});
        symbols.declare({"l", Sort::String, Track::Low, 0});
        Domain d = upper(2);
        std::vector<PathConstraint> trivial{{Constraint::truth(), 50}};
        AttackEngine eng(d, symbols, trivial, 10);
        LowInputs low = eng.project_low(Constraint::truth());
        CHECK(!low.splitting);
        CHECK(language_size(low.dfa) == 676);
    }
}

TEST_CASE("model strategy samples prefix-consistent probes after learning a digit") {
    TargetSpec t = gen_pin_check(4, "0123456789");
    AttackEngine eng = engine_for(t);
    SymbolTable symbols = t.symbols;
    // Learned: charAt(h,0) = '1', charAt(h,1) != '0'.
    Constraint c_h = parse_constraint(
        "(and (= (charAt h 0) \"1\") (!= (charAt h 1) \"0\"))", symbols, t.domain);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 30; ++i) {
        std::string l = eng.attack_input_model(c_h, rng);
        REQUIRE(l.size() == 4);
        CHECK(l[0] == '1');
        CHECK(l[1] != '0');
    }
}

TEST_CASE("a singleton splitting set is returned deterministically") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    SymbolTable symbols = t.symbols;
    // Two candidates LL and LM: only l = LL separates them.
    Constraint c_h = parse_constraint("(and (> h \"LK\") (<= h \"LM\"))", symbols, t.domain);
    LowInputs low = eng.project_low(c_h);
    REQUIRE(low.splitting);
    CHECK(language_size(low.dfa) == 1);
    std::mt19937_64 rng(3);
    CHECK(eng.get_input(c_h, rng) == "LL");
    SAParams params;
    eng.counter().model_count(c_h, {"h"});
    auto before = eng.counter().meters();
    auto [l_star, gain] = eng.attack_input_sa(c_h, params, rng, CountRoute::Incremental);
    CHECK(l_star == "LL");
    CHECK(gain == doctest::Approx(1.0).epsilon(1e-9));
    // Every candidate repeats the same input, so the gain memo keeps the
    // whole annealing loop at a single mutual-information evaluation.
    auto after = eng.counter().meters();
    CHECK(after.incremental_queries - before.incremental_queries ==
          eng.observations().size());
}

TEST_CASE("model sampling covers a 20-input splitting set quickly") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    SymbolTable symbols = t.symbols;
    // Candidates BA..BU (21 secrets) -> splitting inputs BA..BT (20 values).
    Constraint c_h = parse_constraint("(and (> h \"AZ\") (<= h \"BU\"))", symbols, t.domain);
    LowInputs low = eng.project_low(c_h);
    REQUIRE(language_size(low.dfa) == 20);
    std::mt19937_64 rng(8);
    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) seen.insert(eng.attack_input_model(c_h, rng));
    CHECK(seen.size() >= 18);  // >= 90% coverage
}

TEST_CASE("neighbor inputs mutate one position and stay inside the input set") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    Constraint c_h = Constraint::truth();
    LowInputs low = eng.project_low(c_h);
    std::mt19937_64 rng(14);
    int pos_counts[2] = {0, 0};
    const int kCalls = 1000;
    for (int i = 0; i < kCalls; ++i) {
        std::string next = eng.get_neighbor_input("MZ", c_h, rng);
        REQUIRE(next.size() == 2);
        int differing = (next[0] != 'M') + (next[1] != 'Z');
        CHECK(differing == 1);
        if (next[0] != 'M') ++pos_counts[0];
        else ++pos_counts[1];
        Assignment asg;
        asg.values["l"] = next;
        CHECK(accepts(low.dfa, asg));
    }
    CHECK(pos_counts[0] > kCalls * 0.45);
    CHECK(pos_counts[0] < kCalls * 0.55);
}

TEST_CASE("simulated annealing finds a near-optimal split of the inequality domain") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    std::mt19937_64 rng(21);
    SAParams params;
    auto [l_star, gain] = eng.attack_input_sa(Constraint::truth(), params, rng,
                                              CountRoute::Incremental);
    // The optimum is the 1.000-bit halving split (l = MZ and neighbors).
    CHECK(gain >= 0.95);
    double direct = mutual_info(Constraint::truth(), eng.observations(), l_star, eng.counter())
                        .value;
    CHECK(direct == doctest::Approx(gain).epsilon(1e-9));
}

TEST_CASE("model strategy recovers the PIN digit by digit") {
    TargetSpec t = gen_pin_check(4, "0123456789");
    AttackEngine eng = engine_for(t);
    AttackTrace trace = eng.run("1337", Strategy::Model, 7);

    CHECK(trace.outcome == Outcome::Complete);
    CHECK(trace.stop == StopReason::SecretRecovered);
    CHECK(trace.recovered == "1337");
    REQUIRE(!trace.rows.empty());
    CHECK(trace.rows.back().input == "1337");
    CHECK(trace.rows.back().cost == 123);
    CHECK(trace.h_init == doctest::Approx(std::log2(10000.0)).epsilon(1e-12));
    CHECK(trace.h_final == 0.0);
    for (size_t i = 0; i < trace.rows.size(); ++i) {
        CHECK(trace.rows[i].entropy_after <= trace.rows[i].entropy_before + 1e-9);
        if (i) CHECK(trace.rows[i].entropy_before ==
                     doctest::Approx(trace.rows[i - 1].entropy_after));
    }
}

TEST_CASE("annealing completes the inequality attack near the information bound") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    AttackTrace trace = eng.run("LL", Strategy::SimAnneal, 5);
    CHECK(trace.outcome == Outcome::Complete);
    CHECK(trace.recovered == "LL");
    CHECK(trace.rows.size() <= 12);
}

TEST_CASE("constant-time comparison leaks nothing") {
    TargetSpec t = gen_constant_time_check(4, "ABCDEFGHIJKLMNOPQRSTUVWXYZ");
    for (Strategy s : {Strategy::Model, Strategy::SimAnneal, Strategy::SimAnnealIncremental}) {
        AttackEngine eng = engine_for(t);
        AttackTrace trace = eng.run("WXYZ", s, 9);
        CHECK(trace.outcome == Outcome::Incomplete);
        CHECK(trace.stop == StopReason::NoLeak);
        CHECK(trace.rows.empty());
        CHECK(trace.h_final == doctest::Approx(trace.h_init));
        CHECK(trace.h_init == doctest::Approx(4.0 * std::log2(26.0)).epsilon(1e-9));
    }
}

TEST_CASE("annealing traces are identical with and without incremental counting") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        AttackEngine sa = engine_for(t);
        AttackEngine sai = engine_for(t);
        sai.set_verify_incremental(true);
        AttackTrace a = sa.run("QX", Strategy::SimAnneal, seed);
        AttackTrace b = sai.run("QX", Strategy::SimAnnealIncremental, seed);
        REQUIRE(a.rows.size() == b.rows.size());
        for (size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].input == b.rows[i].input);
            CHECK(a.rows[i].observation_id == b.rows[i].observation_id);
            CHECK(a.rows[i].entropy_after == b.rows[i].entropy_after);
        }
        CHECK(a.meters.fresh_queries > 0);
        CHECK(b.meters.incremental_queries > 0);
        CHECK(b.meters.verified_queries == b.meters.incremental_queries);
    }
}

TEST_CASE("the objective is flat for checkPIN before any knowledge") {
    TargetSpec t = gen_pin_check(4, "0123456789");
    AttackEngine eng = engine_for(t);
    eng.counter().model_count(Constraint::truth(), {"h"});
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> digit(0, 9);
    double reference = -1;
    for (int i = 0; i < 50; ++i) {
        std::string l;
        for (int j = 0; j < 4; ++j) l += static_cast<char>('0' + digit(rng));
        double gain =
            mutual_info(Constraint::truth(), eng.observations(), l, eng.counter()).value;
        if (reference < 0) reference = gain;
        CHECK(gain == doctest::Approx(reference).epsilon(1e-9));
    }
}

TEST_CASE("indexOf exhausts its leakage on a two-letter periodic secret") {
    // After every character's first-occurrence index is known, the candidates
    // {A,B}^8 with h0=A, h1=B (64 of them) are observationally identical: the
    // attack must stop with exactly 6 bits left.
    TargetSpec t = builtin_target("io");
    AttackEngine eng = engine_for(t);
    AttackTrace trace = eng.run("ABABABAB", Strategy::Model, 2);
    CHECK(trace.outcome == Outcome::Incomplete);
    CHECK(trace.stop == StopReason::LeakExhausted);
    CHECK(trace.rows.size() == 26);  // each symbol probed exactly once
    CHECK(trace.h_final == doctest::Approx(6.0).epsilon(1e-12));

    // A secret with eight distinct symbols is fully determined by the index
    // map, so the same strategy recovers it completely.
    AttackEngine eng2 = engine_for(t);
    AttackTrace full = eng2.run("QWERTYUI", Strategy::Model, 2);
    CHECK(full.outcome == Outcome::Complete);
    CHECK(full.recovered == "QWERTYUI");
}

TEST_CASE("vanishing information gain registers as stagnation") {
    // Full-string equality over 26^8: every probe carries ~2e-10 bits, below
    // the 1e-6 floor, so annealing gives up after three stagnant selections.
    Domain d{"ABCDEFGHIJKLMNOPQRSTUVWXYZ", 8, LengthMode::Exact};
    SymbolTable symbols;
    symbols.declare({"h", Sort::String, Track::High, 0});
    symbols.declare({"l", Sort::String, Track::Low, 0});
    SymbolTable parse_syms;
    parse_syms.declare({"h", Sort::String, Track::High, 0});
    parse_syms.declare({"l", Sort::String, Track::Low, 0});
    std::vector<PathConstraint> paths{
        {parse_constraint("(= h l)", parse_syms, d), 100},
        {parse_constraint("(!= h l)", parse_syms, d), 200},
    };
    AttackEngine eng(d, symbols, paths, 10);
    AttackTrace trace = eng.run("KSURYBWQ", Strategy::SimAnnealIncremental, 7);
    CHECK(trace.outcome == Outcome::Incomplete);
    CHECK(trace.stop == StopReason::Stagnation);
    CHECK(trace.rows.size() == 2);  // two probed stagnant steps, stop on the third
    CHECK(trace.h_final == doctest::Approx(trace.h_init).epsilon(1e-6));
}

TEST_CASE("budget exhaustion stops the attack with the budget reason") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine eng = engine_for(t);
    Budgets budgets;
    budgets.max_steps = 2;
    AttackTrace trace = eng.run("LL", Strategy::Model, 3, SAParams{}, budgets);
    CHECK(trace.outcome == Outcome::Incomplete);
    CHECK(trace.stop == StopReason::StepBudget);
    CHECK(trace.rows.size() == 2);
}

TEST_CASE("the true secret always remains feasible along a run") {
    for (const char* id : {"pci", "si"}) {
        TargetSpec t = builtin_target(id);
        AttackEngine eng = engine_for(t);
        std::mt19937_64 rng(77);
        std::uniform_int_distribution<int> sym(0, t.domain.size() - 1);
        std::string secret;
        for (int i = 0; i < t.symbols.at("h").effective_length(t.domain); ++i)
            secret += t.domain.alphabet[sym(rng)];
        // run() itself asserts feasibility after every update and throws on
        // violation; completing is the positive signal.
        AttackTrace trace = eng.run(secret, Strategy::Model, 123);
        CHECK(trace.outcome == Outcome::Complete);
        CHECK(trace.recovered == secret);
    }
}

TEST_CASE("trace CSV is deterministic and carries the pinned header") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct, upper(2));
    AttackEngine a = engine_for(t);
    AttackEngine b = engine_for(t);
    AttackTrace ta = a.run("GQ", Strategy::SimAnnealIncremental, 42);
    AttackTrace tb = b.run("GQ", Strategy::SimAnnealIncremental, 42);
    std::ostringstream csv_a, csv_b;
    write_trace_csv(ta, csv_a);
    write_trace_csv(tb, csv_b);
    CHECK(csv_a.str() == csv_b.str());
    CHECK(csv_a.str().rfind("step,entropy_bits,input,observation_id,cost\n", 0) == 0);

    std::ostringstream report;
    write_report_json(ta, "si", "GQ", Strategy::SimAnnealIncremental, 42, 10, t.domain, report);
    CHECK(report.str().find("\"entropy_initial_bits\"") != std::string::npos);
    CHECK(report.str().find("\"cache\"") != std::string::npos);
}
