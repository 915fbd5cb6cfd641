#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "sidesynth/attack.hpp"
#include "sidesynth/parser.hpp"
#include "sidesynth/targets.hpp"
#include "oracle.hpp"

using namespace sidesynth;

#ifndef SIDESYNTH_SOURCE_DIR
#define SIDESYNTH_SOURCE_DIR "."
#endif

namespace {

struct Shape {
    const char* id;
    size_t paths;
    size_t classes;
};

constexpr Shape kTable5[] = {
    {"pci", 5, 5}, {"pcs", 16, 1}, {"se", 9, 9}, {"si", 2, 2}, {"scoi", 2, 2}, {"io", 9, 9},
};

}  // namespace

TEST_CASE("built-in targets reproduce the benchmark path and class counts") {
    for (const Shape& s : kTable5) {
        TargetSpec t = builtin_target(s.id);
        CAPTURE(s.id);
        CHECK(t.paths.size() == s.paths);
        auto psi = generate_constraints(t.paths, t.default_delta);
        CHECK(psi.size() == s.classes);
    }
}

TEST_CASE("pin check generator produces the expected cost ladder") {
    TargetSpec t = gen_pin_check(4, "0123456789");
    REQUIRE(t.paths.size() == 5);
    const long long expected_costs[] = {63, 78, 93, 108, 123};
    for (size_t i = 0; i < 5; ++i) CHECK(t.paths[i].cost == expected_costs[i]);

    SymbolTable symbols = t.symbols;
    Constraint psi2 = parse_constraint(
        "(and (= (charAt h 0) (charAt l 0)) (!= (charAt h 1) (charAt l 1)))", symbols, t.domain);
    CHECK(canonical_key(t.paths[1].constraint) == canonical_key(psi2));

    TargetSpec tiny = gen_pin_check(1, "0123456789");
    CHECK(tiny.paths.size() == 2);
}

TEST_CASE("string inequality generator carries the reference costs") {
    TargetSpec t = gen_string_inequality(InequalityKind::Direct,
                                         {"ABCDEFGHIJKLMNOPQRSTUVWXYZ", 2, LengthMode::Exact});
    REQUIRE(t.paths.size() == 2);
    CHECK(t.paths[0].cost == 42);
    CHECK(t.paths[1].cost == 67);
    CHECK(serialize(t.paths[0].constraint) == "(<= h l)");
    CHECK(serialize(t.paths[1].constraint) == "(> h l)");
    CHECK(t.concrete_cost("LL", "MZ") == 42);
    CHECK(t.concrete_cost("LL", "GM") == 67);
}

TEST_CASE("equals target classifies a full match uniquely") {
    TargetSpec t = builtin_target("se");
    AttackEngine eng(t.domain, t.symbols, t.paths, t.default_delta, t.concrete_cost);
    int cls = eng.observe("MSHX", "MSHX");
    CHECK(cls == static_cast<int>(eng.observations().size()) - 1);
    CHECK(eng.observations()[cls].member_costs.size() == 1);
}

TEST_CASE("indexOf target uses a length-8 secret and a single-symbol input") {
    TargetSpec t = builtin_target("io");
    CHECK(t.symbols.at("h").effective_length(t.domain) == 8);
    CHECK(t.symbols.at("l").effective_length(t.domain) == 1);
    ModelCounter counter(t.domain, t.symbols);
    double h_init = log2_mpz(counter.model_count(Constraint::truth(), {"h"}).count);
    CHECK(h_init == doctest::Approx(8.0 * std::log2(26.0)).epsilon(1e-12));
    CHECK(h_init == doctest::Approx(37.6).epsilon(1e-3));

    CHECK(t.concrete_cost("ABCDEFGH", "C") == 60 + 15 * 2);
    CHECK(t.concrete_cost("ABCDEFGH", "Z") == 60 + 15 * 8);
}

TEST_CASE("every built-in passes the partition and cost audits") {
    for (const Shape& s : kTable5) {
        TargetSpec t = builtin_target(s.id);
        CAPTURE(s.id);
        AuditReport report = validate_target(t, 2024, 1000);
        for (const std::string& e : report.errors) MESSAGE(e);
        CHECK(report.ok);
        CHECK(report.samples == 1000);
    }
}

TEST_CASE("an overlapping path set fails the audit") {
    TargetSpec t = builtin_target("si");
    SymbolTable symbols = t.symbols;
    // h >= l overlaps h <= l at equality.
    t.paths[1].constraint = parse_constraint("(>= h l)", symbols, t.domain);
    t.concrete_cost = nullptr;
    AuditReport report = validate_target(t, 2024, 200);
    CHECK(!report.ok);
}

TEST_CASE("shipped target files parse to exactly the built-in path sets") {
    for (const Shape& s : kTable5) {
        CAPTURE(s.id);
        TargetSpec want = builtin_target(s.id);
        TargetSpec got = load_target_file(std::string(SIDESYNTH_SOURCE_DIR) + "/targets/" +
                                          s.id + ".sct");
        CHECK(got.domain.alphabet == want.domain.alphabet);
        CHECK(got.domain.length_bound == want.domain.length_bound);
        CHECK(got.domain.mode == want.domain.mode);
        REQUIRE(got.paths.size() == want.paths.size());
        for (size_t i = 0; i < want.paths.size(); ++i) {
            CHECK(got.paths[i].cost == want.paths[i].cost);
            CHECK(canonical_key(got.paths[i].constraint) ==
                  canonical_key(want.paths[i].constraint));
        }
        for (const Var& v : want.symbols.all()) {
            const Var* pv = got.symbols.find(v.name);
            REQUIRE(pv != nullptr);
            CHECK(pv->effective_length(got.domain) == v.effective_length(want.domain));
            CHECK(pv->track == v.track);
        }
    }
}

TEST_CASE("loading rejects files without paths or domain") {
    const char* path = "/tmp/sidesynth_empty_target.sct";
    {
        std::ofstream out(path);
        out << "(domain \"AB\" 2 exact)\n(var h string high)\n(var l string low)\n";
    }
    CHECK_THROWS_AS(load_target_file(path), ValidationError);
    {
        std::ofstream out(path);
        out << "(var h string high)\n(var l string low)\n(obs 10 (<= h l))\n";
    }
    CHECK_THROWS_AS(load_target_file(path), ValidationError);
    CHECK_THROWS_AS(load_target_file("/tmp/sidesynth_does_not_exist.sct"), ValidationError);
    std::remove(path);
}

TEST_CASE("unknown built-ins are rejected") {
    CHECK_THROWS_AS(builtin_target("ed"), ValidationError);
}
