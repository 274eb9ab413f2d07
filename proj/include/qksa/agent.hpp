// Knowledge-seeking agent with a one-step episodic horizon.
//
// For every admitted strategy p and action a the agent computes the expected
// change of its model
//
//     V(a, p) = sum_e lambda_p(e | a) * Δ(update_p(a, e), rho_p)
//
// and picks argmax_a sum_p 2^-cost(p) V(a, p). The percept from the real
// environment then updates every strategy's statistics.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qksa/environment.hpp"
#include "qksa/evolve.hpp"
#include "qksa/genome.hpp"
#include "qksa/least.hpp"
#include "qksa/metrics.hpp"
#include "qksa/rng.hpp"
#include "qksa/tomography.hpp"

namespace qksa {

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QptEvaluation {
    bool admitted = false;
    LeastEstimate raw;
    LeastEstimate normalized;
    double cost = 0.0;
    double weight = 0.0;
    std::optional<DensityMatrix> rho;
    std::vector<double> values;  // V(a, p) per action; empty when not admitted
};

struct Selection {
    std::size_t action_index = 0;
    std::size_t qpt_index = 0;
    double u_pred = 0.0;
    std::vector<double> scores;
    std::vector<QptEvaluation> qpts;
};

// Relative tolerance under which two action scores count as tied; the lower index wins.
inline constexpr double kScoreTieTol = 1e-12;

/// V(a, p) for every action, given strategy p's current model.
inline std::vector<double> action_values(const QPTDescriptor& desc, const SufficientStats& stats,
                                         const DensityMatrix& rho, std::span<const BasisString> actions,
                                         const DistanceSpec& delta) {
    std::vector<double> values(actions.size(), 0.0);
    for (std::size_t a = 0; a < actions.size(); ++a) {
        const auto lambda = predict_distribution(desc, rho, actions[a]);
        double v = 0.0;
        for (std::size_t e = 0; e < lambda.size(); ++e) {
            if (lambda[e] <= 0.0) continue;
            v += lambda[e] * distance(delta, hypothetical_update(desc, stats, actions[a], e), rho);
        }
        values[a] = v;
    }
    return values;
}

/// `policy_rng` is only drawn from when the genome asks for weighted strategy choice.
inline Selection select_action(const Genome& genome, std::span<const SufficientStats> stats,
                               std::span<const BasisString> actions, Rng* policy_rng = nullptr) {
    const auto& pool = genome.pool;
    if (stats.size() != pool.size()) throw std::invalid_argument("select_action: one stats object per strategy required");
    if (actions.empty()) throw std::invalid_argument("select_action: empty action space");

    Selection sel;
    sel.qpts.resize(pool.size());
    for (std::size_t p = 0; p < pool.size(); ++p) {
        ReconstructProbe probe;
        sel.qpts[p].rho = reconstruct(pool[p], stats[p], &probe);
        sel.qpts[p].raw = estimate_least(pool[p], probe, stats[p].qubits(), genome.time_source);
        sel.qpts[p].admitted = within_bounds(sel.qpts[p].raw, genome.bounds);
    }

    std::vector<LeastEstimate> admitted_raw;
    for (const auto& q : sel.qpts)
        if (q.admitted) admitted_raw.push_back(q.raw);
    if (admitted_raw.empty()) throw PolicyError("no tomography strategy lies within the resource bounds");

    sel.scores.assign(actions.size(), 0.0);
    std::optional<std::size_t> best_qpt;
    for (std::size_t p = 0; p < pool.size(); ++p) {
        auto& q = sel.qpts[p];
        if (!q.admitted) continue;
        q.normalized = normalize(q.raw, admitted_raw);
        q.cost = eval_cost(genome.cost_tree, q.normalized, genome.weights);
        q.weight = weight(q.cost);
        q.values = action_values(pool[p], stats[p], *q.rho, actions, genome.distance);
        for (std::size_t a = 0; a < actions.size(); ++a) sel.scores[a] += q.weight * q.values[a];
        if (!best_qpt || q.weight > sel.qpts[*best_qpt].weight) best_qpt = p;
    }

    std::size_t best = 0;
    for (std::size_t a = 1; a < actions.size(); ++a)
        if (sel.scores[a] > sel.scores[best] + kScoreTieTol * std::abs(sel.scores[best])) best = a;
    sel.action_index = best;

    sel.qpt_index = *best_qpt;
    if (genome.qpt_choice == QptChoice::weighted) {
        if (!policy_rng) throw std::invalid_argument("select_action: weighted choice needs an rng");
        double total = 0.0;
        for (const auto& q : sel.qpts) total += q.admitted ? q.weight : 0.0;
        double u = uniform01(*policy_rng) * total;
        for (std::size_t p = 0; p < pool.size(); ++p) {
            if (!sel.qpts[p].admitted) continue;
            sel.qpt_index = p;
            if ((u -= sel.qpts[p].weight) < 0.0) break;
        }
    }
    sel.u_pred = sel.qpts[sel.qpt_index].values[best];
    return sel;
}

inline double knowledge(double u_pred, double u_perc) { return u_pred - u_perc; }

enum class AgentStatus { active, archived, dead };

inline std::string_view to_string(AgentStatus s) {
    switch (s) {
        case AgentStatus::active: return "active";
        case AgentStatus::archived: return "archived";
        case AgentStatus::dead: return "dead";
    }
    return "?";
}

struct LogRow {
    std::uint64_t step = 0;
    std::string qpt_id;
    std::string action;
    std::string percept;
    double u_pred = 0.0;
    double u_perc = 0.0;
    double knowledge = 0.0;
    double ret = 0.0;
    double cost_chosen = 0.0;
    std::optional<double> remaining;

    friend bool operator==(const LogRow&, const LogRow&) = default;
};

struct AgentState {
    std::vector<SufficientStats> stats{};
    DensityMatrix rho_t;
    DensityMatrix rho_prev;
    std::uint64_t step = 0;
    std::vector<LogRow> log{};
    std::uint64_t children_spawned = 0;
    AgentStatus status = AgentStatus::active;
    std::string diagnostic{};
};

/// Δ between the model after the latest update and the model before it.
inline double perceived_utility(const AgentState& state, const DistanceSpec& delta) {
    return distance(delta, state.rho_t, state.rho_prev);
}

struct ReturnSummary {
    double value = 0.0;     // R_t: with a one-step episodic horizon, the latest u'_t
    double gradient = 0.0;  // mean R over the last `window` steps
};

inline ReturnSummary cumulative_return(std::span<const LogRow> log, std::size_t window) {
    ReturnSummary r;
    if (log.empty()) return r;
    r.value = log.back().u_pred;
    const std::size_t n = std::min(window, log.size());
    double sum = 0.0;
    for (std::size_t i = log.size() - n; i < log.size(); ++i) sum += log[i].u_pred;
    r.gradient = sum / static_cast<double>(n);
    return r;
}

inline double mean_knowledge(std::span<const LogRow> log, std::size_t window) {
    const std::size_t n = std::min(window, log.size());
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = log.size() - n; i < log.size(); ++i) sum += log[i].knowledge;
    return sum / static_cast<double>(n);
}

enum class Transition { continue_, reproduce, die, archive };

inline std::string_view to_string(Transition t) {
    switch (t) {
        case Transition::continue_: return "continue";
        case Transition::reproduce: return "reproduce";
        case Transition::die: return "die";
        case Transition::archive: return "archive";
    }
    return "?";
}

/// Decides on the windowed mean knowledge K̄ over the last W steps. Checks
/// run in order (death, reproduction, archival) and at most one fires.
inline Transition lifecycle(const AgentState& state, const Genome& genome) {
    if (state.step < genome.trigger_window) return Transition::continue_;
    const double k_bar = mean_knowledge(state.log, genome.trigger_window);
    if (k_bar < genome.k_d) return Transition::die;
    if (k_bar < genome.k_r && state.children_spawned < genome.max_children) return Transition::reproduce;
    if (state.step >= genome.max_steps || state.children_spawned >= genome.max_children) return Transition::archive;
    return Transition::continue_;
}

struct StepOptions {
    bool diagnostics = false;  // record Δ(rho_t, true Choi state)
    bool lifecycle = true;     // off: run a fixed number of steps with no transitions
};

struct StepResult {
    Transition transition = Transition::continue_;
    std::optional<SpawnFile> spawn;
};

class Agent {
public:
    /// `n_qubits` is the Choi-state qubit count (twice the channel's).
    Agent(Genome genome, std::size_t n_qubits)
        : genome_(std::move(genome)),
          state_{.rho_t = DensityMatrix::maximally_mixed(std::size_t{1} << n_qubits),
                 .rho_prev = DensityMatrix::maximally_mixed(std::size_t{1} << n_qubits)},
          policy_rng_(derive_seed(genome_.master_seed, streams::policy)),
          mutation_rng_(derive_seed(genome_.master_seed, streams::mutation)) {
        genome_.validate();
        for (const auto& q : genome_.pool) state_.stats.emplace_back(n_qubits, q.window);
    }

    const Genome& genome() const { return genome_; }
    const AgentState& state() const { return state_; }
    bool active() const { return state_.status == AgentStatus::active; }

    StepResult step(Environment& env, const StepOptions& opts = {}) {
        if (!active()) throw std::logic_error("agent " + genome_.agent_id + " is not active");
        const auto& actions = env.action_space();

        Selection sel;
        try {
            sel = select_action(genome_, state_.stats, actions, &policy_rng_);
        } catch (const PolicyError& e) {
            state_.status = AgentStatus::dead;
            state_.diagnostic = e.what();
            return {Transition::die, std::nullopt};
        }

        const BasisString& action = actions[sel.action_index];
        const std::string percept = env.interact(action);
        const HistoryRecord rec{state_.step + 1, action, percept};
        for (auto& s : state_.stats) stats_insert(s, rec);

        const auto& chosen = genome_.pool[sel.qpt_index];
        state_.rho_prev = state_.rho_t;
        state_.rho_t = reconstruct(chosen, state_.stats[sel.qpt_index]);

        LogRow row;
        row.step = state_.step + 1;
        row.qpt_id = chosen.id;
        row.action = action.to_string();
        row.percept = percept;
        row.u_pred = sel.u_pred;
        row.u_perc = perceived_utility(state_, genome_.distance);
        row.knowledge = knowledge(row.u_pred, row.u_perc);
        row.cost_chosen = sel.qpts[sel.qpt_index].cost;
        if (opts.diagnostics) row.remaining = env.remaining_utility(state_.rho_t, genome_.distance);
        state_.log.push_back(std::move(row));
        ++state_.step;
        state_.log.back().ret = cumulative_return(state_.log, genome_.trigger_window).value;

        StepResult result;
        if (!opts.lifecycle) return result;
        result.transition = lifecycle(state_, genome_);
        switch (result.transition) {
            case Transition::die:
                state_.status = AgentStatus::dead;
                state_.diagnostic = "windowed knowledge fell below the death threshold";
                break;
            case Transition::reproduce:
                result.spawn = replicate(genome_, state_.children_spawned, mutation_rng_);
                ++state_.children_spawned;
                break;
            case Transition::archive:
                state_.status = AgentStatus::archived;
                break;
            case Transition::continue_:
                break;
        }
        return result;
    }

    /// Terminates the agent from outside (hypervisor fault handling).
    void kill(std::string diagnostic) {
        state_.status = AgentStatus::dead;
        state_.diagnostic = std::move(diagnostic);
    }

private:
    Genome genome_;
    AgentState state_;
    Rng policy_rng_;
    Rng mutation_rng_;
};

}  // namespace qksa
