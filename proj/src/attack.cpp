#include "sidesynth/attack.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

namespace sidesynth {

std::vector<ObservationConstraint> generate_constraints(std::span<const PathConstraint> paths,
                                                        long long delta) {
    if (paths.empty()) throw ValidationError("cannot merge an empty path list");
    if (delta < 1) throw ValidationError("indistinguishability threshold must be >= 1");

    std::vector<long long> costs;
    costs.reserve(paths.size());
    for (const PathConstraint& p : paths) costs.push_back(p.cost);
    std::sort(costs.begin(), costs.end());
    costs.erase(std::unique(costs.begin(), costs.end()), costs.end());

    // Greedy chaining over sorted distinct costs: a gap >= delta starts a new
    // class, anything closer stays merged.
    std::vector<std::pair<long long, long long>> ranges;  // [min, max] per class
    for (long long c : costs) {
        if (ranges.empty() || c - ranges.back().second >= delta)
            ranges.emplace_back(c, c);
        else
            ranges.back().second = c;
    }

    std::vector<ObservationConstraint> out;
    out.reserve(ranges.size());
    for (size_t i = 0; i < ranges.size(); ++i) {
        ObservationConstraint oc;
        oc.id = static_cast<int>(i);
        oc.cost_min = ranges[i].first;
        oc.cost_max = ranges[i].second;
        oc.representative_cost = ranges[i].first;
        std::vector<Constraint> members;
        for (const PathConstraint& p : paths) {
            if (p.cost >= oc.cost_min && p.cost <= oc.cost_max) {
                members.push_back(p.constraint);
                oc.member_costs.push_back(p.cost);
            }
        }
        oc.constraint = members.size() == 1 ? members.front()
                                            : Constraint::disj(std::move(members));
        out.push_back(std::move(oc));
    }
    return out;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Model: return "model";
        case Strategy::SimAnneal: return "sa";
        case Strategy::SimAnnealIncremental: return "sa-inc";
    }
    return "?";
}

const char* to_string(StopReason s) {
    switch (s) {
        case StopReason::SecretRecovered: return "secret-recovered";
        case StopReason::NoLeak: return "no-leak";
        case StopReason::LeakExhausted: return "leak-exhausted";
        case StopReason::Stagnation: return "stagnation";
        case StopReason::StepBudget: return "step-budget";
        case StopReason::TimeBudget: return "time-budget";
    }
    return "?";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
    if (name == "model" || name == "m") return Strategy::Model;
    if (name == "sa") return Strategy::SimAnneal;
    if (name == "sa-inc" || name == "sai" || name == "sa-i") return Strategy::SimAnnealIncremental;
    return std::nullopt;
}

AttackEngine::AttackEngine(Domain domain, SymbolTable symbols, std::vector<PathConstraint> paths,
                           long long delta, CostFn concrete_cost)
    : counter_(std::move(domain), std::move(symbols)),
      psi_(generate_constraints(paths, delta)),
      concrete_cost_(std::move(concrete_cost)) {
    const std::string h = counter_.high().name;
    const std::string l = counter_.low().name;
    psi_dfas_.reserve(psi_.size());
    for (const ObservationConstraint& oc : psi_)
        psi_dfas_.push_back(counter_.dfa_for(oc.constraint, {h, l}));
}

const LowInputs& AttackEngine::low_inputs_for(const Constraint& c_h) {
    const std::string key = canonical_key(c_h);
    if (key == low_key_ && !low_cache_.dfa.accepting.empty()) return low_cache_;

    const std::string h = counter_.high().name;
    const std::string l = counter_.low().name;
    auto a_ch = counter_.dfa_for(c_h, {h});

    // Inputs that can still split the candidate secrets into at least two
    // observation classes. Empty means no further query can reduce entropy.
    std::vector<Dfa> projections;
    projections.reserve(psi_.size());
    for (const auto& psi_dfa : psi_dfas_)
        projections.push_back(project(intersect(*a_ch, *psi_dfa), l));

    LowInputs result;
    bool have = false;
    for (size_t i = 0; i < projections.size(); ++i) {
        for (size_t j = i + 1; j < projections.size(); ++j) {
            Dfa both = intersect(projections[i], projections[j]);
            if (is_empty(both)) continue;
            result.dfa = have ? unite(result.dfa, both) : std::move(both);
            have = true;
        }
    }
    if (have && !is_empty(result.dfa)) {
        result.splitting = true;
    } else {
        result.dfa = domain_automaton(counter_.domain(),
                                      make_track_refs(counter_.domain(), counter_.symbols(), {l}));
        result.splitting = false;
    }
    low_key_ = key;
    low_cache_ = std::move(result);
    return low_cache_;
}

LowInputs AttackEngine::project_low(const Constraint& c_h) { return low_inputs_for(c_h); }

int AttackEngine::observe(const std::string& h_star, const std::string& l_star) {
    Assignment asg;
    asg.values[counter_.high().name] = h_star;
    asg.values[counter_.low().name] = l_star;
    int found = -1;
    for (size_t i = 0; i < psi_.size(); ++i) {
        if (!accepts(*psi_dfas_[i], asg)) continue;
        if (found >= 0)
            throw ProtocolError("observation constraints overlap on (" + h_star + ", " + l_star +
                                "): classes " + std::to_string(found) + " and " +
                                std::to_string(i));
        found = static_cast<int>(i);
    }
    if (found < 0)
        throw ProtocolError("no observation class covers (" + h_star + ", " + l_star + ")");
    if (concrete_cost_) {
        long long cost = concrete_cost_(h_star, l_star);
        const auto& mc = psi_[found].member_costs;
        if (std::find(mc.begin(), mc.end(), cost) == mc.end())
            throw ProtocolError("concrete cost " + std::to_string(cost) +
                                " disagrees with observation class " + std::to_string(found));
    }
    return found;
}

std::string AttackEngine::get_input(const Constraint& c_h, std::mt19937_64& rng) {
    const LowInputs& low = low_inputs_for(c_h);
    return sample_model(low.dfa, rng).values.at(counter_.low().name);
}

std::string AttackEngine::get_neighbor_input(const std::string& l_val, const Constraint& c_h,
                                             std::mt19937_64& rng) {
    const LowInputs& low = low_inputs_for(c_h);
    const Domain& d = counter_.domain();
    const std::string lname = counter_.low().name;
    constexpr int kRetries = 16;
    if (!l_val.empty() && d.size() > 1) {
        std::uniform_int_distribution<int> pos_dist(0, static_cast<int>(l_val.size()) - 1);
        std::uniform_int_distribution<int> sym_dist(0, d.size() - 2);
        for (int attempt = 0; attempt < kRetries; ++attempt) {
            std::string mutant = l_val;
            int pos = pos_dist(rng);
            int sym = sym_dist(rng);
            if (d.alphabet[sym] == l_val[pos]) sym = d.size() - 1;
            mutant[pos] = d.alphabet[sym];
            Assignment asg;
            asg.values[lname] = mutant;
            if (accepts(low.dfa, asg)) return mutant;
        }
    }
    return sample_model(low.dfa, rng).values.at(lname);
}

double AttackEngine::mutual_info_for(const Constraint& c_h, const std::string& l_val,
                                     CountRoute route, std::map<std::string, double>& memo) {
    auto it = memo.find(l_val);
    if (it != memo.end()) return it->second;
    double value = mutual_info(c_h, psi_, l_val, counter_, route).value;
    memo.emplace(l_val, value);
    return value;
}

std::string AttackEngine::attack_input_model(const Constraint& c_h, std::mt19937_64& rng) {
    return get_input(c_h, rng);
}

std::pair<std::string, double> AttackEngine::attack_input_sa(const Constraint& c_h,
                                                             const SAParams& params,
                                                             std::mt19937_64& rng,
                                                             CountRoute route) {
    std::map<std::string, double> memo;
    std::uniform_real_distribution<double> uniform01(0.0, 1.0);

    std::string current = get_input(c_h, rng);
    double objective = mutual_info_for(c_h, current, route, memo);
    std::string best = current;
    double best_objective = objective;

    for (double t = params.t0; t >= params.t_min; t -= t * params.cooling) {
        current = get_neighbor_input(current, c_h, rng);
        double candidate = mutual_info_for(c_h, current, route, memo);
        if (candidate > best_objective) {
            best = current;
            best_objective = candidate;
        }
        if (candidate > objective || std::exp((candidate - objective) / t) > uniform01(rng))
            objective = candidate;
    }
    return {best, best_objective};
}

AttackTrace AttackEngine::run(const std::string& h_star, Strategy strategy, uint64_t seed,
                              SAParams sa, Budgets budgets) {
    const auto start_time = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
            .count();
    };
    const Var& hvar = counter_.high();
    const Var& lvar = counter_.low();
    check_value_in_domain(h_star, hvar, counter_.domain());

    const CountRoute route =
        strategy == Strategy::SimAnneal ? CountRoute::Fresh : CountRoute::Incremental;

    AttackTrace trace;
    std::mt19937_64 rng(seed);

    KnowledgeState know;
    know.c_h = Constraint::truth();
    know.dfa = counter_.dfa_for(know.c_h, {hvar.name});
    know.entropy_bits = entropy(know.c_h, counter_, route).value;
    trace.h_init = know.entropy_bits;

    auto emit_dot = [&](const Dfa& dfa, const std::string& name) {
        if (dot_dir_.empty()) return;
        std::filesystem::create_directories(dot_dir_);
        std::ofstream out(dot_dir_ + "/" + name + ".dot");
        write_dot(dfa, out, name);
    };
    emit_dot(*know.dfa, "knowledge_step_0");

    trace.stop = StopReason::StepBudget;
    int stagnant = 0;
    bool done = false;

    if (psi_.size() <= 1) {
        trace.stop = StopReason::NoLeak;
        done = true;
    }

    while (!done && know.entropy_bits > 0.0) {
        if (know.step >= budgets.max_steps) {
            trace.stop = StopReason::StepBudget;
            break;
        }
        if (elapsed() > budgets.time_budget_seconds) {
            trace.stop = StopReason::TimeBudget;
            break;
        }
        const LowInputs& low = low_inputs_for(know.c_h);
        if (!low.splitting) {
            trace.stop = StopReason::LeakExhausted;
            break;
        }

        std::string l_star;
        if (strategy == Strategy::Model) {
            l_star = attack_input_model(know.c_h, rng);
        } else {
            auto [input, best_gain] = attack_input_sa(know.c_h, sa, rng, route);
            l_star = input;
            if (best_gain < 1e-6) {
                if (++stagnant >= 3) {
                    trace.stop = StopReason::Stagnation;
                    break;
                }
            } else {
                stagnant = 0;
            }
        }

        int obs = observe(h_star, l_star);
        Constraint instantiated =
            substitute(psi_[obs].constraint, lvar, l_star, counter_.domain());
        Constraint next_ch = know.c_h.and_with(instantiated);

        // Knowledge automaton is extended incrementally and re-registered so
        // the next incremental count finds it.
        Dfa a_inst = from_constraint(instantiated, counter_.domain(), counter_.symbols(),
                                     {hvar.name});
        auto next_a = std::make_shared<Dfa>(intersect(*know.dfa, a_inst));
        counter_.prime(next_ch, next_a, {hvar.name});

        Assignment secret_asg;
        secret_asg.values[hvar.name] = h_star;
        if (!accepts(*next_a, secret_asg))
            throw ProtocolError("true secret excluded at step " + std::to_string(know.step) +
                                " by input " + l_star);

        double h_next = entropy(next_ch, counter_, route).value;
        if (h_next > know.entropy_bits + 1e-9)
            throw ProtocolError("entropy increased at step " + std::to_string(know.step));

        TraceRow row;
        row.step = know.step + 1;
        row.entropy_before = know.entropy_bits;
        row.entropy_after = h_next;
        row.input = l_star;
        row.observation_id = psi_[obs].id;
        row.cost = concrete_cost_ ? concrete_cost_(h_star, l_star)
                                  : psi_[obs].representative_cost;
        trace.rows.push_back(std::move(row));

        know.c_h = std::move(next_ch);
        know.dfa = std::move(next_a);
        know.entropy_bits = h_next;
        ++know.step;
        emit_dot(*know.dfa, "knowledge_step_" + std::to_string(know.step));
    }

    if (know.entropy_bits == 0.0) {
        trace.outcome = Outcome::Complete;
        trace.stop = StopReason::SecretRecovered;
        trace.recovered = first_model(*know.dfa).values.at(hvar.name);
        if (trace.recovered != h_star)
            throw ProtocolError("recovered secret disagrees with the oracle's secret");
        bool probeable = true;  // the secret may not fit the input domain (e.g. indexOf)
        try {
            check_value_in_domain(trace.recovered, lvar, counter_.domain());
        } catch (const ValidationError&) {
            probeable = false;
        }
        if (probeable && (trace.rows.empty() || trace.rows.back().input != trace.recovered)) {
            // Confirm the recovered value with one final probe, as a real
            // attacker would; entropy is already zero.
            int obs = observe(h_star, trace.recovered);
            TraceRow row;
            row.step = know.step + 1;
            row.entropy_before = 0.0;
            row.entropy_after = 0.0;
            row.input = trace.recovered;
            row.observation_id = psi_[obs].id;
            row.cost = concrete_cost_ ? concrete_cost_(h_star, trace.recovered)
                                      : psi_[obs].representative_cost;
            trace.rows.push_back(std::move(row));
        }
    } else {
        trace.outcome = Outcome::Incomplete;
    }
    trace.h_final = know.entropy_bits;
    trace.meters = counter_.meters();
    trace.cache_stats = counter_.cache().stats();
    trace.wall_seconds = elapsed();
    return trace;
}

void write_trace_csv(const AttackTrace& trace, std::ostream& os) {
    os << "step,entropy_bits,input,observation_id,cost\n";
    char buf[64];
    for (const TraceRow& row : trace.rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", row.entropy_after);
        os << row.step << ',' << buf << ',' << row.input << ',' << row.observation_id << ','
           << row.cost << '\n';
    }
}

void write_report_json(const AttackTrace& trace, const std::string& target,
                       const std::string& secret, Strategy strategy, uint64_t seed,
                       long long delta, const Domain& domain, std::ostream& os) {
    nlohmann::json j;
    j["target"] = target;
    j["secret"] = secret;
    j["strategy"] = to_string(strategy);
    j["seed"] = seed;
    j["delta"] = delta;
    j["domain"] = {{"alphabet", domain.alphabet},
                   {"bound", domain.length_bound},
                   {"mode", to_string(domain.mode)}};
    j["outcome"] = trace.outcome == Outcome::Complete ? "complete" : "incomplete";
    j["stop_reason"] = to_string(trace.stop);
    j["steps"] = trace.rows.size();
    j["entropy_initial_bits"] = trace.h_init;
    j["entropy_final_bits"] = trace.h_final;
    j["recovered"] = trace.recovered;
    nlohmann::json rows = nlohmann::json::array();
    for (const TraceRow& row : trace.rows) {
        rows.push_back({{"step", row.step},
                        {"entropy_before", row.entropy_before},
                        {"entropy_after", row.entropy_after},
                        {"input", row.input},
                        {"observation_id", row.observation_id},
                        {"cost", row.cost}});
    }
    j["rows"] = std::move(rows);
    j["counting"] = {{"queries", trace.meters.queries},
                     {"fresh_queries", trace.meters.fresh_queries},
                     {"incremental_queries", trace.meters.incremental_queries},
                     {"verified_queries", trace.meters.verified_queries},
                     {"fresh_seconds", trace.meters.fresh_seconds},
                     {"incremental_seconds", trace.meters.incremental_seconds},
                     {"cached_seconds", trace.meters.cached_seconds}};
    j["cache"] = {{"hits", trace.cache_stats.hits},
                  {"misses", trace.cache_stats.misses},
                  {"constructed", trace.cache_stats.constructed},
                  {"states_built", trace.cache_stats.states_built}};
    j["wall_seconds"] = trace.wall_seconds;
    os << j.dump(2) << '\n';
}

}  // namespace sidesynth
