#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>

#include "sidesynth/infotheory.hpp"

namespace sidesynth {

struct SAParams {
    double t0 = 10.0;
    double t_min = 0.001;
    double cooling = 0.1;
};

enum class Strategy { Model, SimAnneal, SimAnnealIncremental };

struct Budgets {
    int max_steps = 256;
    double time_budget_seconds = 3600.0;
};

struct TraceRow {
    int step = 0;
    double entropy_before = 0;
    double entropy_after = 0;
    std::string input;
    int observation_id = 0;
    long long cost = 0;
};

// What the attacker knows: the conjunction of instantiated observation
// constraints, its solution automaton, and the remaining uncertainty. The
// true secret satisfies c_h at every step; entropy_bits never increases.
struct KnowledgeState {
    Constraint c_h;
    std::shared_ptr<const Dfa> dfa;
    double entropy_bits = 0;
    int step = 0;
};

enum class Outcome { Complete, Incomplete };
enum class StopReason { SecretRecovered, NoLeak, LeakExhausted, Stagnation, StepBudget, TimeBudget };

struct AttackTrace {
    std::vector<TraceRow> rows;
    Outcome outcome = Outcome::Incomplete;
    StopReason stop = StopReason::StepBudget;
    double h_init = 0;
    double h_final = 0;
    std::string recovered;  // empty unless outcome == Complete
    ModelCounter::Meters meters;
    DfaCache::Stats cache_stats;
    double wall_seconds = 0;
};

// The low-input search space for the current knowledge: an automaton over the
// l track. `splitting` is true when it is the set of inputs that can still
// distinguish at least two observation classes; when no such input exists the
// engine falls back to the full input domain and reports splitting = false,
// which doubles as the "no further leakage" signal.
struct LowInputs {
    Dfa dfa;
    bool splitting = false;
};

const char* to_string(Strategy s);
const char* to_string(StopReason s);
std::optional<Strategy> strategy_from_name(const std::string& name);

// Adaptive attack loop plus the input-selection strategies: Model
// samples the current low-input set; SimAnneal anneals the mutual-information
// objective over it, counting from scratch; SimAnnealIncremental is the same
// search with every count routed through the incremental product.
class AttackEngine {
  public:
    using CostFn = std::function<long long(const std::string&, const std::string&)>;

    AttackEngine(Domain domain, SymbolTable symbols, std::vector<PathConstraint> paths,
                 long long delta, CostFn concrete_cost = nullptr);

    const std::vector<ObservationConstraint>& observations() const { return psi_; }
    ModelCounter& counter() { return counter_; }
    const Domain& domain() const { return counter_.domain(); }
    const Var& high() const { return counter_.high(); }
    const Var& low() const { return counter_.low(); }

    AttackTrace run(const std::string& h_star, Strategy strategy, uint64_t seed,
                    SAParams sa = {}, Budgets budgets = {});

    // Individual attack-step operations, exposed for direct testing.
    LowInputs project_low(const Constraint& c_h);
    int observe(const std::string& h_star, const std::string& l_star);
    std::string attack_input_model(const Constraint& c_h, std::mt19937_64& rng);
    std::pair<std::string, double> attack_input_sa(const Constraint& c_h, const SAParams& params,
                                                   std::mt19937_64& rng, CountRoute route);
    std::string get_input(const Constraint& c_h, std::mt19937_64& rng);
    std::string get_neighbor_input(const std::string& l_val, const Constraint& c_h,
                                   std::mt19937_64& rng);

    // Test hook: cross-checks every incremental count against a fresh one.
    void set_verify_incremental(bool on) { counter_.verify_incremental = on; }
    // Optional DOT dump directory for per-step knowledge automata.
    void set_dot_dir(std::string dir) { dot_dir_ = std::move(dir); }

  private:
    const LowInputs& low_inputs_for(const Constraint& c_h);
    double mutual_info_for(const Constraint& c_h, const std::string& l_val, CountRoute route,
                           std::map<std::string, double>& memo);

    ModelCounter counter_;
    std::vector<ObservationConstraint> psi_;
    std::vector<std::shared_ptr<const Dfa>> psi_dfas_;  // over (h, l)
    CostFn concrete_cost_;
    std::string dot_dir_;

    // Per-step memo of the low-input automaton.
    std::string low_key_;
    LowInputs low_cache_;
};

// Trace CSV, header: step,entropy_bits,input,observation_id,cost. The entropy
// column is the uncertainty after the step's update.
void write_trace_csv(const AttackTrace& trace, std::ostream& os);

// Run report with configuration, entropy trajectory, query and cache counters.
void write_report_json(const AttackTrace& trace, const std::string& target,
                       const std::string& secret, Strategy strategy, uint64_t seed,
                       long long delta, const Domain& domain, std::ostream& os);

}  // namespace sidesynth
