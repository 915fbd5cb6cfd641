#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "sidesynth/attack.hpp"
#include "sidesynth/parser.hpp"
#include "sidesynth/targets.hpp"

using namespace sidesynth;

namespace {

bool looks_like_path(const std::string& target) {
    return target.find('/') != std::string::npos || target.find('.') != std::string::npos ||
           std::filesystem::exists(target);
}

TargetSpec resolve_target(const std::string& target, int length) {
    if (looks_like_path(target)) {
        if (length)
            throw ValidationError("--length applies to built-in targets only");
        return load_target_file(target);
    }
    return builtin_target(target, length);
}

std::string random_secret(const TargetSpec& t, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5ec2e7a11dULL);
    std::uniform_int_distribution<int> sym(0, t.domain.size() - 1);
    int len = t.symbols.at("h").effective_length(t.domain);
    std::string s;
    for (int i = 0; i < len; ++i) s += t.domain.alphabet[sym(rng)];
    return s;
}

int exit_code_for(const AttackTrace& trace) {
    switch (trace.stop) {
        case StopReason::SecretRecovered: return 0;
        case StopReason::NoLeak:
        case StopReason::LeakExhausted:
        case StopReason::Stagnation: return 2;
        case StopReason::StepBudget:
        case StopReason::TimeBudget: return 3;
    }
    return 1;
}

int cmd_synthesize(const std::string& target_name, int length, std::string secret,
                   const std::string& strategy_name, uint64_t seed, long long delta,
                   int max_steps, double time_budget, SAParams sa, const std::string& trace_out,
                   const std::string& report_out, const std::string& dot_dir) {
    TargetSpec target = resolve_target(target_name, length);
    auto strategy = strategy_from_name(strategy_name);
    if (!strategy) {
        std::cerr << "unknown strategy: " << strategy_name << " (model|sa|sa-inc)\n";
        return 1;
    }
    if (secret.empty()) secret = random_secret(target, seed);

    AttackEngine engine(target.domain, target.symbols, target.paths,
                        delta ? delta : target.default_delta, target.concrete_cost);
    if (!dot_dir.empty()) engine.set_dot_dir(dot_dir);

    Budgets budgets;
    budgets.max_steps = max_steps;
    budgets.time_budget_seconds = time_budget;
    AttackTrace trace = engine.run(secret, *strategy, seed, sa, budgets);

    std::cout << "target " << target.id << ", strategy " << to_string(*strategy) << ", seed "
              << seed << "\n";
    std::cout << "observation classes: " << engine.observations().size() << "\n";
    std::cout << "H_init " << trace.h_init << " bits, H_final " << trace.h_final << " bits, "
              << trace.rows.size() << " steps, " << to_string(trace.stop) << "\n";
    if (trace.outcome == Outcome::Complete)
        std::cout << "recovered secret: " << trace.recovered << "\n";

    if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        if (!out) {
            std::cerr << "cannot write " << trace_out << "\n";
            return 1;
        }
        write_trace_csv(trace, out);
    }
    if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) {
            std::cerr << "cannot write " << report_out << "\n";
            return 1;
        }
        write_report_json(trace, target.id, secret, *strategy, seed,
                          delta ? delta : target.default_delta, target.domain, out);
    }
    return exit_code_for(trace);
}

int cmd_count(const std::string& file, const std::string& alphabet, int bound,
              const std::string& mode) {
    std::ifstream in(file);
    if (!in) {
        std::cerr << "cannot open " << file << "\n";
        return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    ParsedFile parsed;
    try {
        parsed = file.size() > 5 && file.substr(file.size() - 5) == ".json"
                     ? parse_json_file(buf.str())
                     : parse_file(buf.str());
    } catch (const Error& e) {
        std::cerr << file << ": " << e.what() << "\n";
        return 1;
    }

    Domain domain = parsed.domain;
    if (!alphabet.empty()) domain.alphabet = alphabet;
    if (bound) domain.length_bound = bound;
    if (!mode.empty()) domain.mode = mode == "upto" ? LengthMode::UpTo : LengthMode::Exact;
    if (!parsed.has_domain && alphabet.empty()) {
        std::cerr << "no domain: declare (domain ...) in the file or pass --alphabet/--bound\n";
        return 1;
    }
    domain.validate();

    SymbolTable symbols = parsed.symbols;
    if (symbols.empty()) symbols.declare({"h", Sort::String, Track::High, 0});

    ModelCounter counter(domain, symbols);
    auto report = [&](const Constraint& c) {
        CountResult r = counter.model_count(c);
        std::cout << serialize(c) << "\n  count " << r.count.get_str();
        if (r.count > 0) std::cout << "  log2 " << log2_mpz(r.count);
        std::cout << "\n";
    };
    for (const Constraint& c : parsed.formulas) report(c);
    for (const ObsEntry& o : parsed.observations) report(o.constraint);
    if (parsed.formulas.empty() && parsed.observations.empty()) {
        std::cerr << "file contains no formulas\n";
        return 1;
    }
    return 0;
}

int cmd_validate(const std::string& target_name, int length, uint64_t seed) {
    TargetSpec target = resolve_target(target_name, length);
    auto psi = generate_constraints(target.paths, target.default_delta);
    std::cout << "target " << target.id << ": " << target.paths.size() << " paths, "
              << psi.size() << " observation classes (delta " << target.default_delta << ")\n";
    AuditReport report = validate_target(target, seed);
    std::cout << "partition/tautology audit over " << report.samples << " samples: "
              << (report.ok ? "ok" : "FAILED") << "\n";
    for (const std::string& e : report.errors) std::cout << "  " << e << "\n";
    return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive side-channel attack synthesis over cost-annotated path constraints"};
    app.require_subcommand(1);

    // synthesize
    std::string target = "pci";
    std::string secret;
    std::string strategy = "model";
    uint64_t seed = 0;
    long long delta = 0;
    int max_steps = 256;
    double time_budget = 3600.0;
    int length = 0;
    SAParams sa;
    std::string trace_out, report_out, dot_dir;

    CLI::App* syn = app.add_subcommand("synthesize", "synthesize an adaptive attack");
    syn->add_option("--target", target, "built-in target (pci|pcs|se|si|scoi|io) or file path")
        ->required();
    syn->add_option("--secret", secret, "secret value; random over the domain when omitted");
    syn->add_option("--strategy", strategy, "model | sa | sa-inc");
    syn->add_option("--seed", seed, "random seed");
    syn->add_option("--delta", delta, "indistinguishability threshold (target default if 0)");
    syn->add_option("--max-steps", max_steps, "attack step budget");
    syn->add_option("--time-budget", time_budget, "wall-clock budget in seconds");
    syn->add_option("--length", length, "override the built-in target's length");
    syn->add_option("--t0", sa.t0, "initial annealing temperature");
    syn->add_option("--tmin", sa.t_min, "annealing temperature floor");
    syn->add_option("--cooling", sa.cooling, "cooling rate");
    syn->add_option("--trace-out", trace_out, "write the trace CSV here");
    syn->add_option("--report-out", report_out, "write the JSON report here");
    syn->add_option("--emit-dot", dot_dir, "dump knowledge automata as DOT files here");

    // count
    std::string count_file, alphabet, mode;
    int bound = 0;
    CLI::App* cnt = app.add_subcommand("count", "model-count the formulas in a constraint file");
    cnt->add_option("file", count_file, "constraint file (.sct or .json)")->required();
    cnt->add_option("--alphabet", alphabet, "override the alphabet");
    cnt->add_option("--bound", bound, "override the length bound");
    cnt->add_option("--mode", mode, "exact | upto");

    // validate
    std::string val_target;
    uint64_t val_seed = 1;
    int val_length = 0;
    CLI::App* val = app.add_subcommand("validate", "audit a target's observation constraints");
    val->add_option("--target", val_target, "built-in target or file path")->required();
    val->add_option("--seed", val_seed, "sampling seed");
    val->add_option("--length", val_length, "override the built-in target's length");

    CLI11_PARSE(app, argc, argv);

    try {
        if (syn->parsed())
            return cmd_synthesize(target, length, secret, strategy, seed, delta, max_steps,
                                  time_budget, sa, trace_out, report_out, dot_dir);
        if (cnt->parsed()) return cmd_count(count_file, alphabet, bound, mode);
        if (val->parsed()) return cmd_validate(val_target, val_length, val_seed);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
