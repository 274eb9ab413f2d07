#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qksa/least.hpp"
#include "qksa/metrics.hpp"
#include "qksa/tomography.hpp"

namespace qksa {

enum class QptChoice { argmax, weighted };

/// Heritable parameters of one agent. Only `cost_tree` changes between
/// parent and child; identity fields (agent_id, parent_id, generation,
/// master_seed) are assigned at replication.
struct Genome {
    std::string agent_id = "0";
    std::string parent_id;  // empty for the seed agent
    std::uint64_t generation = 0;
    std::uint64_t master_seed = 1;

    std::vector<QPTDescriptor> pool;
    std::uint64_t t_f = 1;
    std::string gamma_mode = "episodic";
    DistanceSpec distance;
    LeastBounds bounds;
    Weights weights;
    double m_c = 0.25;
    double k_r = 0.01;
    double k_d = -0.05;
    std::uint64_t max_steps = 20000;
    std::uint64_t max_children = 4;
    std::uint64_t trigger_window = 100;
    TimeSource time_source = TimeSource::wall;
    QptChoice qpt_choice = QptChoice::argmax;
    CostTree cost_tree = tree_parse("(add A S)");

    void validate() const {
        if (pool.empty()) throw std::invalid_argument("genome: pool has no QPT strategy");
        for (const auto& q : pool) {
            if (q.window == 0) throw std::invalid_argument("genome: qpt '" + q.id + "' window must be positive");
            if (q.approx_places && *q.approx_places < 1)
                throw std::invalid_argument("genome: qpt '" + q.id + "' approx_places must be >= 1");
        }
        if (t_f != 1) throw std::invalid_argument("genome: only t_f = 1 is supported");
        if (gamma_mode != "episodic") throw std::invalid_argument("genome: only gamma_mode = episodic is supported");
        if (!(m_c >= 0.0 && m_c <= 1.0)) throw std::invalid_argument("genome: m_c must be in [0, 1]");
        if (!(k_d <= k_r)) throw std::invalid_argument("genome: k_d must not exceed k_r");
        if (trigger_window < 1) throw std::invalid_argument("genome: trigger_window must be >= 1");
        if (max_steps < trigger_window) throw std::invalid_argument("genome: max_steps must be >= trigger_window");
    }

    friend bool operator==(const Genome&, const Genome&) = default;
};

namespace detail {

inline double parse_real(std::string_view key, std::string_view v) {
    double x{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw std::invalid_argument("key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
    return x;
}

inline std::uint64_t parse_count(std::string_view key, std::string_view v) {
    std::uint64_t x{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw std::invalid_argument("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                                    std::string(v) + "'");
    return x;
}

inline std::optional<int> parse_places(std::string_view key, std::string_view v) {
    if (v == "none" || v == "inf") return std::nullopt;
    return static_cast<int>(parse_count(key, v));
}

}  // namespace detail

inline std::string format_places(const std::optional<int>& places) {
    return places ? std::to_string(*places) : "none";
}

/// `id=<id> places=<n|none> window=<n> length=<bytes>`
inline std::string format_qpt(const QPTDescriptor& q) {
    return "id=" + q.id + " places=" + format_places(q.approx_places) + " window=" + std::to_string(q.window) +
           " length=" + format_real(q.length_const);
}

inline QPTDescriptor parse_qpt(std::string_view text) {
    QPTDescriptor q;
    bool have_id = false;
    for (auto word : detail::split_ws(text)) {
        const auto eq = word.find('=');
        if (eq == std::string_view::npos) throw std::invalid_argument("qpt: expected key=value, got '" + std::string(word) + "'");
        const auto k = word.substr(0, eq);
        const auto v = word.substr(eq + 1);
        if (k == "id") {
            q.id = std::string(v);
            have_id = true;
        } else if (k == "places") {
            q.approx_places = detail::parse_places(k, v);
        } else if (k == "window") {
            q.window = detail::parse_count(k, v);
        } else if (k == "length") {
            q.length_const = detail::parse_real(k, v);
        } else {
            throw std::invalid_argument("qpt: unknown field '" + std::string(k) + "'");
        }
    }
    if (!have_id || q.id.empty()) throw std::invalid_argument("qpt: missing id");
    return q;
}

/// Scalar genome keys in file order. `qpt` (repeatable) and `cost_tree` are handled separately.
inline constexpr std::string_view kGenomeScalarKeys[] = {
    "agent_id", "parent_id", "generation", "master_seed", "t_f", "gamma_mode", "distance", "distance_places",
    "l_max", "e_max", "a_max", "s_max", "t_max", "w_l", "w_e", "w_a", "w_s", "w_t", "m_c", "k_r", "k_d",
    "max_steps", "max_children", "trigger_window", "time_source", "qpt_choice",
};

/// Sets one genome field from its text form. Returns false for an unknown key.
inline bool set_genome_key(Genome& g, std::string_view key, std::string_view value) {
    using detail::parse_count;
    using detail::parse_real;
    if (key == "agent_id") g.agent_id = std::string(value);
    else if (key == "parent_id") g.parent_id = value == "-" ? std::string() : std::string(value);
    else if (key == "generation") g.generation = parse_count(key, value);
    else if (key == "master_seed") g.master_seed = parse_count(key, value);
    else if (key == "t_f") g.t_f = parse_count(key, value);
    else if (key == "gamma_mode") g.gamma_mode = std::string(value);
    else if (key == "distance") g.distance.id = parse_distance(value);
    else if (key == "distance_places") g.distance.places = static_cast<int>(parse_count(key, value));
    else if (key == "l_max") g.bounds.l_max = parse_real(key, value);
    else if (key == "e_max") g.bounds.e_max = parse_real(key, value);
    else if (key == "a_max") g.bounds.a_max = parse_real(key, value);
    else if (key == "s_max") g.bounds.s_max = parse_real(key, value);
    else if (key == "t_max") g.bounds.t_max = parse_real(key, value);
    else if (key == "w_l") g.weights.w_l = parse_real(key, value);
    else if (key == "w_e") g.weights.w_e = parse_real(key, value);
    else if (key == "w_a") g.weights.w_a = parse_real(key, value);
    else if (key == "w_s") g.weights.w_s = parse_real(key, value);
    else if (key == "w_t") g.weights.w_t = parse_real(key, value);
    else if (key == "m_c") g.m_c = parse_real(key, value);
    else if (key == "k_r") g.k_r = parse_real(key, value);
    else if (key == "k_d") g.k_d = parse_real(key, value);
    else if (key == "max_steps") g.max_steps = parse_count(key, value);
    else if (key == "max_children") g.max_children = parse_count(key, value);
    else if (key == "trigger_window") g.trigger_window = parse_count(key, value);
    else if (key == "time_source") {
        if (value == "wall") g.time_source = TimeSource::wall;
        else if (value == "ops") g.time_source = TimeSource::ops;
        else throw std::invalid_argument("key 'time_source': expected wall or ops");
    } else if (key == "qpt_choice") {
        if (value == "argmax") g.qpt_choice = QptChoice::argmax;
        else if (value == "weighted") g.qpt_choice = QptChoice::weighted;
        else throw std::invalid_argument("key 'qpt_choice': expected argmax or weighted");
    } else if (key == "qpt") g.pool.push_back(parse_qpt(value));
    else if (key == "cost_tree") g.cost_tree = tree_parse(value);
    else return false;
    return true;
}

inline std::string genome_value(const Genome& g, std::string_view key) {
    if (key == "agent_id") return g.agent_id;
    if (key == "parent_id") return g.parent_id.empty() ? "-" : g.parent_id;
    if (key == "generation") return std::to_string(g.generation);
    if (key == "master_seed") return std::to_string(g.master_seed);
    if (key == "t_f") return std::to_string(g.t_f);
    if (key == "gamma_mode") return g.gamma_mode;
    if (key == "distance") return std::string(to_string(g.distance.id));
    if (key == "distance_places") return std::to_string(g.distance.places);
    if (key == "l_max") return format_real(g.bounds.l_max);
    if (key == "e_max") return format_real(g.bounds.e_max);
    if (key == "a_max") return format_real(g.bounds.a_max);
    if (key == "s_max") return format_real(g.bounds.s_max);
    if (key == "t_max") return format_real(g.bounds.t_max);
    if (key == "w_l") return format_real(g.weights.w_l);
    if (key == "w_e") return format_real(g.weights.w_e);
    if (key == "w_a") return format_real(g.weights.w_a);
    if (key == "w_s") return format_real(g.weights.w_s);
    if (key == "w_t") return format_real(g.weights.w_t);
    if (key == "m_c") return format_real(g.m_c);
    if (key == "k_r") return format_real(g.k_r);
    if (key == "k_d") return format_real(g.k_d);
    if (key == "max_steps") return std::to_string(g.max_steps);
    if (key == "max_children") return std::to_string(g.max_children);
    if (key == "trigger_window") return std::to_string(g.trigger_window);
    if (key == "time_source") return g.time_source == TimeSource::wall ? "wall" : "ops";
    if (key == "qpt_choice") return g.qpt_choice == QptChoice::argmax ? "argmax" : "weighted";
    throw std::invalid_argument("unknown genome key '" + std::string(key) + "'");
}

}  // namespace qksa
