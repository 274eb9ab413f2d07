// Orchestration: experiment configuration, the round-robin agent scheduler,
// run directories (manifest, per-agent CSV logs, spawn files), the
// random-unitary convergence experiment and run reports.
//
// Run directory layout:
//
//     <run_dir>/manifest.txt
//     <run_dir>/config.snapshot
//     <run_dir>/spawn/agent_<id>.genome
//     <run_dir>/agents/agent_<id>.csv
//
// With repeats > 1 each replica gets the layout under <run_dir>/rep_<k>/ and
// the top-level manifest lists the replicas.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qksa/agent.hpp"
#include "qksa/environment.hpp"
#include "qksa/evolve.hpp"
#include "qksa/genome.hpp"

namespace qksa {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SchedulerMode { dovetail, parallel };

struct EnvironmentConfig {
    enum class Kind { random, circuit } kind = Kind::random;
    std::vector<std::uint64_t> seeds{1};
    std::size_t qubits = 1;
    fs::path circuit_path;
    CircuitSpec circuit;
    std::optional<std::vector<BasisString>> bases;
};

struct ExperimentConfig {
    fs::path run_dir;
    EnvironmentConfig environment;
    Genome genome;  // seed-agent genes, including the strategy pool
    std::uint64_t max_active_agents = 4;
    std::uint64_t total_step_budget = 1'000'000;
    std::uint64_t repeats = 1;
    bool diagnostics = false;
    SchedulerMode scheduler = SchedulerMode::dovetail;
};

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

/// Output root: $QKSA_RUN_DIR when set, else ./runs.
inline fs::path default_output_root() {
    if (const char* env = std::getenv("QKSA_RUN_DIR"); env && *env) return fs::path(env);
    return fs::path("runs");
}

namespace detail {

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("key '" + std::string(key) + "': expected true or false");
}

}  // namespace detail

/// Parses the `[section]` / `key = value` config. Relative circuit paths are
/// resolved against `base_dir`; a missing run_dir defaults to
/// <output root>/<config_stem>.
inline ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir = {},
                                     std::string_view config_stem = "run") {
    ExperimentConfig cfg;
    cfg.genome.pool.clear();
    std::string section;
    std::set<std::string> seen;
    bool have_run_dir = false;
    bool have_source = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;

    auto fail = [&](const std::string& msg) -> ConfigError {
        return ConfigError("config line " + std::to_string(line_no) + ": " + msg);
    };

    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw fail("malformed section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (section != "run" && section != "environment" && section != "genome" && section != "qpt")
                throw fail("unknown section '" + section + "'");
            if (section == "qpt") cfg.genome.pool.push_back(QPTDescriptor{});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw fail("expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw fail("key '" + std::string(key) + "' outside of a section");
        const std::string qualified = section == "qpt" ? "" : section + "." + std::string(key);
        if (!qualified.empty() && !seen.insert(qualified).second) throw fail("duplicate key '" + std::string(key) + "'");

        try {
            if (section == "run") {
                if (key == "run_dir") {
                    cfg.run_dir = fs::path(std::string(value));
                    have_run_dir = true;
                } else if (key == "max_active_agents") cfg.max_active_agents = detail::parse_count(key, value);
                else if (key == "total_step_budget") cfg.total_step_budget = detail::parse_count(key, value);
                else if (key == "repeats") cfg.repeats = detail::parse_count(key, value);
                else if (key == "diagnostics") cfg.diagnostics = detail::parse_bool(key, value);
                else if (key == "scheduler") {
                    if (value == "dovetail") cfg.scheduler = SchedulerMode::dovetail;
                    else if (value == "parallel") cfg.scheduler = SchedulerMode::parallel;
                    else throw std::invalid_argument("key 'scheduler': expected dovetail or parallel");
                } else throw fail("unknown key '" + std::string(key) + "' in [run]");
            } else if (section == "environment") {
                auto& env = cfg.environment;
                if (key == "source") {
                    if (value == "random") env.kind = EnvironmentConfig::Kind::random;
                    else if (value == "circuit") env.kind = EnvironmentConfig::Kind::circuit;
                    else throw std::invalid_argument("key 'source': expected random or circuit");
                    have_source = true;
                } else if (key == "seeds" || key == "seed") {
                    env.seeds.clear();
                    for (auto item : detail::split_list(value)) env.seeds.push_back(detail::parse_count(key, item));
                    if (env.seeds.empty()) throw std::invalid_argument("key 'seeds': empty list");
                } else if (key == "qubits") env.qubits = detail::parse_count(key, value);
                else if (key == "circuit") {
                    fs::path p{std::string(value)};
                    env.circuit_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
                } else if (key == "bases") {
                    std::vector<BasisString> bases;
                    for (auto item : detail::split_list(value)) bases.push_back(BasisString::parse(item));
                    env.bases = std::move(bases);
                } else throw fail("unknown key '" + std::string(key) + "' in [environment]");
            } else if (section == "genome") {
                if (key == "qpt") throw fail("strategies are declared in [qpt] sections");
                if (!set_genome_key(cfg.genome, key, value)) throw fail("unknown key '" + std::string(key) + "' in [genome]");
            } else {
                auto& q = cfg.genome.pool.back();
                if (key == "id") q.id = std::string(value);
                else if (key == "approx_places") q.approx_places = detail::parse_places(key, value);
                else if (key == "window") q.window = detail::parse_count(key, value);
                else if (key == "length") q.length_const = detail::parse_real(key, value);
                else throw fail("unknown key '" + std::string(key) + "' in [qpt]");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
    }

    line_no = 0;
    auto invalid = [](const std::string& msg) { return ConfigError("config: " + msg); };
    if (!have_source) throw invalid("[environment] source is required");
    if (cfg.repeats < 1) throw invalid("repeats must be >= 1");
    if (cfg.max_active_agents < 1) throw invalid("max_active_agents must be >= 1");
    if (cfg.genome.pool.empty()) throw invalid("at least one [qpt] section is required");
    for (std::size_t i = 0; i < cfg.genome.pool.size(); ++i)
        if (cfg.genome.pool[i].id.empty()) throw invalid("[qpt] #" + std::to_string(i + 1) + " needs an id");
    if (cfg.environment.kind == EnvironmentConfig::Kind::circuit) {
        if (cfg.environment.circuit_path.empty()) throw invalid("circuit environments need a circuit path");
        if (!fs::exists(cfg.environment.circuit_path))
            throw invalid("circuit file not found: " + cfg.environment.circuit_path.string());
        try {
            cfg.environment.circuit = parse_circuit(read_text(cfg.environment.circuit_path));
        } catch (const ParseError& e) {
            throw invalid(cfg.environment.circuit_path.string() + ": " + e.what());
        }
    } else if (cfg.environment.qubits < 1) {
        throw invalid("qubits must be >= 1");
    }
    try {
        cfg.genome.validate();
    } catch (const std::exception& e) {
        throw invalid(e.what());
    }
    if (!have_run_dir) cfg.run_dir = default_output_root() / std::string(config_stem);
    else if (cfg.run_dir.is_relative()) cfg.run_dir = default_output_root() / cfg.run_dir;
    return cfg;
}

inline ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse_config(read_text(path), path.parent_path(), path.stem().string());
}

/// Canonical config text; circuit paths are written absolute so the snapshot stands alone.
inline std::string config_serialize(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[run]\n"
        << "run_dir = " << fs::absolute(cfg.run_dir).string() << "\n"
        << "max_active_agents = " << cfg.max_active_agents << "\n"
        << "total_step_budget = " << cfg.total_step_budget << "\n"
        << "repeats = " << cfg.repeats << "\n"
        << "diagnostics = " << (cfg.diagnostics ? "true" : "false") << "\n"
        << "scheduler = " << (cfg.scheduler == SchedulerMode::dovetail ? "dovetail" : "parallel") << "\n\n";
    const auto& env = cfg.environment;
    out << "[environment]\n";
    if (env.kind == EnvironmentConfig::Kind::random) {
        out << "source = random\nqubits = " << env.qubits << "\nseeds = ";
        for (std::size_t i = 0; i < env.seeds.size(); ++i) out << (i ? ", " : "") << env.seeds[i];
        out << "\n";
    } else {
        out << "source = circuit\ncircuit = " << fs::absolute(env.circuit_path).string() << "\n";
    }
    if (env.bases) {
        out << "bases = ";
        for (std::size_t i = 0; i < env.bases->size(); ++i) out << (i ? ", " : "") << (*env.bases)[i].to_string();
        out << "\n";
    }
    out << "\n[genome]\n";
    for (auto key : kGenomeScalarKeys) {
        if (key == "agent_id" || key == "parent_id" || key == "generation") continue;
        out << key << " = " << genome_value(cfg.genome, key) << "\n";
    }
    out << "cost_tree = " << tree_serialize(cfg.genome.cost_tree) << "\n";
    for (const auto& q : cfg.genome.pool)
        out << "\n[qpt]\nid = " << q.id << "\napprox_places = " << format_places(q.approx_places)
            << "\nwindow = " << q.window << "\nlength = " << format_real(q.length_const) << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// CSV logs

inline std::string csv_header(bool diagnostics) {
    std::string h = "step,agent_id,qpt_id,action,percept,u_pred,u_perc,knowledge,return,cost_chosen";
    if (diagnostics) h += ",remaining";
    return h;
}

inline std::string csv_row(const LogRow& r, std::string_view agent_id, bool diagnostics) {
    std::string s = std::to_string(r.step);
    s += ',';
    s += agent_id;
    s += ',' + r.qpt_id + ',' + r.action + ',' + r.percept;
    for (double v : {r.u_pred, r.u_perc, r.knowledge, r.ret, r.cost_chosen}) s += ',' + format_real(v);
    if (diagnostics) s += ',' + (r.remaining ? format_real(*r.remaining) : std::string());
    return s;
}

inline void write_agent_csv(const fs::path& path, const Agent& agent, bool diagnostics) {
    std::string text = csv_header(diagnostics) + "\n";
    for (const auto& r : agent.state().log) text += csv_row(r, agent.genome().agent_id, diagnostics) + "\n";
    fs::create_directories(path.parent_path());
    write_text_atomic(path, text);
}

// ---------------------------------------------------------------------------
// Scheduler

struct AgentRecord {
    std::string id;
    std::string parent;
    std::uint64_t generation = 0;
    std::uint64_t seed = 0;
    AgentStatus status = AgentStatus::active;
    std::uint64_t steps = 0;
    std::uint64_t children = 0;
    std::string diagnostic{};
};

struct ReplicaSummary {
    fs::path dir;
    std::vector<AgentRecord> agents;  // creation order
    std::uint64_t steps_executed = 0;
    std::uint64_t max_concurrent = 0;
};

struct RunSummary {
    fs::path run_dir;
    std::vector<ReplicaSummary> replicas;
};

/// One active agent with its private environment instance.
struct AgentSlot {
    std::unique_ptr<Agent> agent;
    std::unique_ptr<Environment> env;
    std::size_t record = 0;
};

inline Environment environment_for(const EnvironmentConfig& cfg, std::uint64_t env_seed, std::uint64_t agent_seed) {
    EnvironmentSource src = cfg.kind == EnvironmentConfig::Kind::circuit
                                ? EnvironmentSource{cfg.circuit}
                                : EnvironmentSource{RandomUnitaryRequest{cfg.qubits, env_seed}};
    return make_environment(src, derive_seed(agent_seed, streams::environment), cfg.bases);
}

/// Optional per-cycle observer: receives the cycle index and the ids of the agents stepped in it.
using CycleObserver = std::function<void(std::uint64_t, const std::vector<std::string>&)>;

inline ReplicaSummary run_replica(const ExperimentConfig& cfg, const fs::path& dir, std::uint64_t env_seed,
                                  std::uint64_t master_seed, const CycleObserver& observer = {}) {
    ReplicaSummary summary;
    summary.dir = dir;
    const fs::path spawn_dir = dir / "spawn";
    const fs::path agents_dir = dir / "agents";
    fs::create_directories(spawn_dir);
    fs::create_directories(agents_dir);

    Genome seed = cfg.genome;
    seed.agent_id = "0";
    seed.parent_id.clear();
    seed.generation = 0;
    seed.master_seed = master_seed;

    std::deque<fs::path> waitlist;
    waitlist.push_back(write_spawn_file(spawn_dir, SpawnFile{kSpawnFormatVersion, seed}));

    std::vector<AgentSlot> active;
    const StepOptions opts{cfg.diagnostics, true};
    std::uint64_t cycle = 0;

    auto finish = [&](AgentSlot& slot) {
        auto& rec = summary.agents[slot.record];
        rec.status = slot.agent->state().status;
        rec.steps = slot.agent->state().step;
        rec.children = slot.agent->state().children_spawned;
        if (rec.diagnostic.empty()) rec.diagnostic = slot.agent->state().diagnostic;
        write_agent_csv(agents_dir / ("agent_" + rec.id + ".csv"), *slot.agent, cfg.diagnostics);
    };

    while (summary.steps_executed < cfg.total_step_budget) {
        while (active.size() < cfg.max_active_agents && !waitlist.empty()) {
            const SpawnFile spawn = read_spawn_file(waitlist.front());
            waitlist.pop_front();
            const Genome& g = spawn.genome;
            AgentSlot slot;
            slot.env = std::make_unique<Environment>(environment_for(cfg.environment, env_seed, g.master_seed));
            slot.agent = std::make_unique<Agent>(g, slot.env->total_qubits());
            slot.record = summary.agents.size();
            summary.agents.push_back(AgentRecord{.id = g.agent_id, .parent = g.parent_id, .generation = g.generation, .seed = g.master_seed});
            active.push_back(std::move(slot));
        }
        summary.max_concurrent = std::max<std::uint64_t>(summary.max_concurrent, active.size());
        if (active.empty()) break;

        const std::size_t budget_left = cfg.total_step_budget - summary.steps_executed;
        const std::size_t n_step = std::min<std::size_t>(active.size(), budget_left);
        std::vector<StepResult> results(n_step);
        std::vector<std::string> faults(n_step);

        auto run_one = [&](std::size_t i) {
            try {
                results[i] = active[i].agent->step(*active[i].env, opts);
            } catch (const std::exception& e) {
                faults[i] = e.what();
            }
        };
        if (cfg.scheduler == SchedulerMode::parallel && n_step > 1) {
            std::vector<std::future<void>> jobs;
            for (std::size_t i = 0; i < n_step; ++i) jobs.push_back(std::async(std::launch::async, run_one, i));
            for (auto& j : jobs) j.get();
        } else {
            for (std::size_t i = 0; i < n_step; ++i) run_one(i);
        }

        std::vector<std::string> stepped;
        for (std::size_t i = 0; i < n_step; ++i) {
            auto& slot = active[i];
            stepped.push_back(slot.agent->genome().agent_id);
            ++summary.steps_executed;
            if (!faults[i].empty()) {
                slot.agent->kill("fault: " + faults[i]);
                continue;
            }
            if (results[i].spawn) waitlist.push_back(write_spawn_file(spawn_dir, *results[i].spawn));
        }
        if (observer) observer(cycle, stepped);
        ++cycle;

        std::vector<AgentSlot> still;
        for (auto& slot : active) {
            if (slot.agent->active()) still.push_back(std::move(slot));
            else finish(slot);
        }
        active = std::move(still);
    }
    for (auto& slot : active) finish(slot);
    // Spawn files never instantiated stay in the spawn directory.
    return summary;
}

inline void write_replica_manifest(const ReplicaSummary& rep, const ExperimentConfig& cfg, const std::string& config_hash,
                                   const std::string& config_rel, std::uint64_t env_seed, std::uint64_t master_seed) {
    std::ostringstream out;
    out << "format_version = 1\n"
        << "config = " << config_rel << "\n"
        << "config_hash = " << config_hash << "\n"
        << "scheduler = " << (cfg.scheduler == SchedulerMode::dovetail ? "dovetail" : "parallel") << "\n"
        << "time_source = " << genome_value(cfg.genome, "time_source") << "\n"
        << "diagnostics = " << (cfg.diagnostics ? "true" : "false") << "\n"
        << "environment_seed = " << env_seed << "\n"
        << "master_seed = " << master_seed << "\n"
        << "trigger_window = " << cfg.genome.trigger_window << "\n"
        << "steps_executed = " << rep.steps_executed << "\n";
    for (const auto& a : rep.agents) {
        out << "agent = id=" << a.id << " parent=" << (a.parent.empty() ? "-" : a.parent) << " generation=" << a.generation
            << " seed=" << a.seed << " status=" << to_string(a.status) << " steps=" << a.steps
            << " children=" << a.children << "\n";
        if (!a.diagnostic.empty()) out << "diagnostic = " << a.id << " " << a.diagnostic << "\n";
    }
    write_text_atomic(rep.dir / "manifest.txt", out.str());
}

/// Runs every replica. Replica k uses environment seed seeds[k mod |seeds|]
/// and agent master seed genome.master_seed + k.
inline RunSummary run(const ExperimentConfig& cfg, const CycleObserver& observer = {}) {
    RunSummary summary;
    summary.run_dir = cfg.run_dir;
    fs::create_directories(cfg.run_dir);
    const std::string snapshot = config_serialize(cfg);
    write_text_atomic(cfg.run_dir / "config.snapshot", snapshot);
    const std::string hash = hex64(fnv1a64(snapshot));

    for (std::uint64_t k = 0; k < cfg.repeats; ++k) {
        const fs::path dir = cfg.repeats == 1 ? cfg.run_dir : cfg.run_dir / ("rep_" + std::to_string(k));
        if (fs::exists(dir / "spawn")) fs::remove_all(dir / "spawn");
        if (fs::exists(dir / "agents")) fs::remove_all(dir / "agents");
        const auto& seeds = cfg.environment.seeds;
        const std::uint64_t env_seed = seeds[k % seeds.size()];
        const std::uint64_t master_seed = cfg.genome.master_seed + k;
        auto rep = run_replica(cfg, dir, env_seed, master_seed, observer);
        write_replica_manifest(rep, cfg, hash, cfg.repeats == 1 ? "config.snapshot" : "../config.snapshot", env_seed,
                               master_seed);
        summary.replicas.push_back(std::move(rep));
    }
    if (cfg.repeats > 1) {
        std::ostringstream out;
        out << "format_version = 1\nconfig = config.snapshot\nconfig_hash = " << hash << "\nreplicas = " << cfg.repeats << "\n";
        for (std::uint64_t k = 0; k < cfg.repeats; ++k) out << "replica = rep_" << k << "\n";
        write_text_atomic(cfg.run_dir / "manifest.txt", out.str());
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Random-unitary convergence experiment: two EAQPT variants, trace distance,
// one agent per random 1-qubit unitary, per-step means across seeds.

struct S5Options {
    std::uint64_t seeds = 20;
    std::uint64_t steps = 8192;
    std::uint64_t seed_base = 1;
    fs::path out_dir;              // empty: no files written
    bool per_seed_logs = true;
};

struct S5Row {
    std::uint64_t step = 0;
    double mean_u_pred = 0.0;
    double mean_u_perc = 0.0;
    double mean_knowledge = 0.0;
    double mean_remaining = 0.0;
};

inline std::vector<QPTDescriptor> s5_pool() {
    return {QPTDescriptor{"QPT-0", 5, 16384, 0.0}, QPTDescriptor{"QPT-1", 8, 8192, 0.0}};
}

inline Genome s5_genome(std::uint64_t seed) {
    Genome g;
    g.pool = s5_pool();
    g.distance = DistanceSpec{DistanceId::trace, 5};
    g.master_seed = seed;
    return g;
}

inline std::string s5_header() { return "step,mean_u_pred,mean_u_perc,mean_knowledge,mean_remaining"; }

inline std::vector<S5Row> experiment_s5(const S5Options& opt) {
    if (opt.seeds == 0 || opt.steps == 0) throw std::invalid_argument("experiment needs at least one seed and one step");
    std::vector<S5Row> rows(opt.steps);
    const auto n = static_cast<double>(opt.seeds);
    if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);

    for (std::uint64_t k = 0; k < opt.seeds; ++k) {
        const std::uint64_t seed = opt.seed_base + k;
        Environment env = make_environment(RandomUnitaryRequest{1, seed}, derive_seed(seed, streams::environment));
        Agent agent(s5_genome(seed), env.total_qubits());
        for (std::uint64_t t = 0; t < opt.steps; ++t) agent.step(env, StepOptions{true, false});
        const auto& log = agent.state().log;
        for (std::uint64_t t = 0; t < opt.steps; ++t) {
            rows[t].step = t + 1;
            rows[t].mean_u_pred += log[t].u_pred / n;
            rows[t].mean_u_perc += log[t].u_perc / n;
            rows[t].mean_knowledge += log[t].knowledge / n;
            rows[t].mean_remaining += log[t].remaining.value_or(0.0) / n;
        }
        if (!opt.out_dir.empty() && opt.per_seed_logs) write_agent_csv(opt.out_dir / ("seed_" + std::to_string(seed) + ".csv"), agent, true);
    }

    if (!opt.out_dir.empty()) {
        std::string text = s5_header() + "\n";
        for (const auto& r : rows)
            text += std::to_string(r.step) + ',' + format_real(r.mean_u_pred) + ',' + format_real(r.mean_u_perc) + ',' +
                    format_real(r.mean_knowledge) + ',' + format_real(r.mean_remaining) + '\n';
        write_text_atomic(opt.out_dir / "s5.csv", text);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::map<std::string, std::string> parse_fields(std::string_view text) {
    std::map<std::string, std::string> out;
    for (auto w : split_ws(text)) {
        const auto eq = w.find('=');
        if (eq != std::string_view::npos) out[std::string(w.substr(0, eq))] = std::string(w.substr(eq + 1));
    }
    return out;
}

struct CsvTail {
    double k_bar = 0.0;
    double gradient = 0.0;
    std::uint64_t rows = 0;
};

inline CsvTail read_csv_tail(const fs::path& path, std::size_t window) {
    CsvTail tail;
    std::ifstream in(path);
    if (!in) return tail;
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> k;
    std::vector<double> r;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 10) continue;
        k.push_back(std::stod(cells[7]));
        r.push_back(std::stod(cells[8]));
    }
    tail.rows = k.size();
    const std::size_t n = std::min(window, k.size());
    for (std::size_t i = k.size() - n; i < k.size(); ++i) {
        tail.k_bar += k[i] / static_cast<double>(n);
        tail.gradient += r[i] / static_cast<double>(n);
    }
    return tail;
}

inline void report_replica(const fs::path& dir, std::ostringstream& out) {
    const auto manifest = dir / "manifest.txt";
    if (!fs::exists(manifest)) throw std::runtime_error("no manifest in " + dir.string());
    std::istringstream in(read_text(manifest));
    std::string line;
    std::size_t window = 100;
    struct Entry {
        std::map<std::string, std::string> f;
        std::string tree;
        CsvTail tail;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key == "trigger_window") window = parse_count(key, value);
        if (key == "agent") entries.push_back(Entry{parse_fields(value), {}, {}});
    }
    for (auto& e : entries) {
        const auto& id = e.f["id"];
        try {
            e.tree = tree_serialize(read_spawn_file(spawn_path(dir / "spawn", id)).genome.cost_tree);
        } catch (const std::exception&) {
            e.tree = "?";
        }
        e.tail = read_csv_tail(dir / "agents" / ("agent_" + id + ".csv"), window);
    }

    out << "agents: " << entries.size() << "\n";
    out << "lineage:\n";
    std::function<void(const std::string&, int)> walk = [&](const std::string& parent, int depth) {
        for (const auto& e : entries) {
            const auto it = e.f.find("parent");
            const std::string p = it == e.f.end() || it->second == "-" ? "" : it->second;
            if (p != parent) continue;
            const auto& f = e.f;
            out << std::string(static_cast<std::size_t>(2 + 2 * depth), ' ') << "agent " << f.at("id")
                << "  gen=" << f.at("generation") << " status=" << f.at("status") << " steps=" << f.at("steps")
                << " k_bar=" << format_real(e.tail.k_bar) << " gradient=" << format_real(e.tail.gradient)
                << " cost_tree=" << e.tree << "\n";
            walk(f.at("id"), depth + 1);
        }
    };
    walk("", 0);

    std::vector<const Entry*> surviving;
    for (const auto& e : entries)
        if (e.f.at("status") != "dead") surviving.push_back(&e);
    std::stable_sort(surviving.begin(), surviving.end(),
                     [](const Entry* a, const Entry* b) { return a->tail.gradient > b->tail.gradient; });
    out << "surviving cost trees by learning gradient:\n";
    for (std::size_t i = 0; i < surviving.size(); ++i)
        out << "  " << (i + 1) << ". " << surviving[i]->tree << "  (agent " << surviving[i]->f.at("id")
            << ", gradient=" << format_real(surviving[i]->tail.gradient) << ")\n";
}

}  // namespace detail

/// Per-agent lineage, generation, final cost tree, final windowed knowledge
/// and steps lived, then surviving cost trees ranked by learning gradient.
inline std::string report(const fs::path& run_dir) {
    const auto manifest = run_dir / "manifest.txt";
    if (!fs::exists(manifest)) throw std::runtime_error("no manifest");
    std::ostringstream out;
    std::istringstream in(read_text(manifest));
    std::vector<std::string> replicas;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (detail::trim(std::string_view(line).substr(0, eq)) == "replica")
            replicas.emplace_back(detail::trim(std::string_view(line).substr(eq + 1)));
    }
    out << "run: " << run_dir.string() << "\n";
    if (replicas.empty()) {
        detail::report_replica(run_dir, out);
    } else {
        for (const auto& r : replicas) {
            out << "\n[" << r << "]\n";
            detail::report_replica(run_dir / r, out);
        }
    }
    return out.str();
}

}  // namespace qksa
