// Resource estimates (length, energy, approximation, space, time) for a
// tomography strategy, and the evolving expression tree that folds them into
// a single cost. A hypothesis is weighted by 2^-cost.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qksa/rng.hpp"
#include "qksa/tomography.hpp"

namespace qksa {

enum class Metric : std::size_t { L = 0, E, A, S, T };
inline constexpr std::array kMetrics = {Metric::L, Metric::E, Metric::A, Metric::S, Metric::T};

struct LeastEstimate {
    double length = 0.0;
    double energy = 0.0;
    double approximation = 0.0;
    double space = 0.0;
    double time = 0.0;

    double get(Metric m) const {
        switch (m) {
            case Metric::L: return length;
            case Metric::E: return energy;
            case Metric::A: return approximation;
            case Metric::S: return space;
            case Metric::T: return time;
        }
        return 0.0;
    }
    double& get(Metric m) {
        switch (m) {
            case Metric::L: return length;
            case Metric::E: return energy;
            case Metric::A: return approximation;
            case Metric::S: return space;
            case Metric::T: return time;
        }
        return length;
    }

    friend bool operator==(const LeastEstimate&, const LeastEstimate&) = default;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct LeastBounds {
    double l_max = kUnbounded;
    double e_max = kUnbounded;
    double a_max = kUnbounded;
    double s_max = kUnbounded;
    double t_max = kUnbounded;

    double get(Metric m) const {
        switch (m) {
            case Metric::L: return l_max;
            case Metric::E: return e_max;
            case Metric::A: return a_max;
            case Metric::S: return s_max;
            case Metric::T: return t_max;
        }
        return kUnbounded;
    }

    friend bool operator==(const LeastBounds&, const LeastBounds&) = default;
};

struct Weights {
    double w_l = 1.0;
    double w_e = 1.0;
    double w_a = 1.0;
    double w_s = 1.0;
    double w_t = 1.0;

    double get(Metric m) const {
        switch (m) {
            case Metric::L: return w_l;
            case Metric::E: return w_e;
            case Metric::A: return w_a;
            case Metric::S: return w_s;
            case Metric::T: return w_t;
        }
        return 0.0;
    }

    friend bool operator==(const Weights&, const Weights&) = default;
};

/// Where the time estimate comes from. `wall` measures the reconstruction;
/// `ops` derives it from the multiply-accumulate count so runs stay reproducible.
enum class TimeSource { wall, ops };

inline constexpr double kSecondsPerMac = 1e-9;

// Bytes held per history record: action and percept characters plus the step index.
inline std::size_t record_bytes(std::size_t n_qubits) { return 2 * n_qubits + sizeof(std::uint64_t); }

inline LeastEstimate estimate_least(const QPTDescriptor& desc, const ReconstructProbe& probe, std::size_t n_qubits,
                                    TimeSource time_source = TimeSource::wall) {
    LeastEstimate est;
    est.length = desc.length_const > 0.0 ? desc.length_const : static_cast<double>(kLinearInversionDescription.size());
    est.energy = static_cast<double>(probe.macs);
    est.approximation = desc.approx_places ? std::pow(10.0, -*desc.approx_places) : 0.0;
    est.space = static_cast<double>(desc.window * record_bytes(n_qubits));
    est.time = time_source == TimeSource::wall ? probe.seconds : static_cast<double>(probe.macs) * kSecondsPerMac;
    return est;
}

/// Per-field min-max scaling over the pool; constant fields map to 0.
inline LeastEstimate normalize(const LeastEstimate& est, std::span<const LeastEstimate> pool) {
    LeastEstimate out;
    for (Metric m : kMetrics) {
        double lo = est.get(m);
        double hi = est.get(m);
        for (const auto& p : pool) {
            lo = std::min(lo, p.get(m));
            hi = std::max(hi, p.get(m));
        }
        out.get(m) = hi > lo ? (est.get(m) - lo) / (hi - lo) : 0.0;
    }
    return out;
}

inline bool within_bounds(const LeastEstimate& est, const LeastBounds& bounds) {
    return std::all_of(kMetrics.begin(), kMetrics.end(), [&](Metric m) { return est.get(m) <= bounds.get(m); });
}

// ---------------------------------------------------------------------------
// Cost expression trees

enum class CostOp { L, E, A, S, T, constant, add, mul, sub, div, sqrt, log2, min, max };

inline constexpr std::size_t kMaxTreeDepth = 8;
inline constexpr double kMaxConstant = 10.0;
inline constexpr double kMaxCost = 64.0;

inline bool is_terminal(CostOp op) { return op <= CostOp::constant; }

inline std::size_t arity(CostOp op) {
    if (is_terminal(op)) return 0;
    return (op == CostOp::sqrt || op == CostOp::log2) ? 1 : 2;
}

inline std::string_view op_token(CostOp op) {
    switch (op) {
        case CostOp::L: return "L";
        case CostOp::E: return "E";
        case CostOp::A: return "A";
        case CostOp::S: return "S";
        case CostOp::T: return "T";
        case CostOp::constant: return "#";
        case CostOp::add: return "add";
        case CostOp::mul: return "mul";
        case CostOp::sub: return "sub";
        case CostOp::div: return "div";
        case CostOp::sqrt: return "sqrt";
        case CostOp::log2: return "log2";
        case CostOp::min: return "min";
        case CostOp::max: return "max";
    }
    return "?";
}

struct CostNode {
    CostOp op = CostOp::constant;
    double value = 0.0;  // constant leaves only
    std::vector<CostNode> args;

    friend bool operator==(const CostNode&, const CostNode&) = default;
};

class CostTreeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::size_t node_depth(const CostNode& n) {
    std::size_t d = 0;
    for (const auto& a : n.args) d = std::max(d, node_depth(a) + 1);
    return d;
}

inline std::size_t node_count(const CostNode& n) {
    std::size_t c = 1;
    for (const auto& a : n.args) c += node_count(a);
    return c;
}

inline void validate_node(const CostNode& n) {
    if (n.args.size() != arity(n.op)) throw CostTreeError("arity mismatch for '" + std::string(op_token(n.op)) + "'");
    if (n.op == CostOp::constant && !(n.value >= 0.0 && n.value <= kMaxConstant))
        throw CostTreeError("constant outside [0, 10]");
    for (const auto& a : n.args) validate_node(a);
}

}  // namespace detail

/// GP expression over the five resource leaves. Depth counts edges, so a lone leaf has depth 0.
class CostTree {
public:
    CostTree() = default;
    explicit CostTree(CostNode root) : root_(std::move(root)) {
        detail::validate_node(root_);
        if (depth() > kMaxTreeDepth) throw CostTreeError("tree deeper than " + std::to_string(kMaxTreeDepth));
    }

    static CostTree leaf(CostOp op, double value = 0.0) { return CostTree(CostNode{op, value, {}}); }

    const CostNode& root() const { return root_; }
    std::size_t depth() const { return detail::node_depth(root_); }
    std::size_t size() const { return detail::node_count(root_); }

    bool reads(CostOp leaf) const { return reads(root_, leaf); }

    friend bool operator==(const CostTree&, const CostTree&) = default;

private:
    static bool reads(const CostNode& n, CostOp leaf) {
        if (n.op == leaf) return true;
        return std::any_of(n.args.begin(), n.args.end(), [&](const CostNode& a) { return reads(a, leaf); });
    }

    CostNode root_{};
};

namespace detail {

inline double eval_node(const CostNode& n, const LeastEstimate& est, const Weights& w) {
    switch (n.op) {
        case CostOp::L: return w.w_l * est.length;
        case CostOp::E: return w.w_e * est.energy;
        case CostOp::A: return w.w_a * est.approximation;
        case CostOp::S: return w.w_s * est.space;
        case CostOp::T: return w.w_t * est.time;
        case CostOp::constant: return n.value;
        default: break;
    }
    const double x = eval_node(n.args[0], est, w);
    switch (n.op) {
        case CostOp::sqrt: return x < 0.0 ? 0.0 : std::sqrt(x);
        case CostOp::log2: return x <= 0.0 ? 0.0 : std::log2(x);
        default: break;
    }
    const double y = eval_node(n.args[1], est, w);
    switch (n.op) {
        case CostOp::add: return x + y;
        case CostOp::mul: return x * y;
        case CostOp::sub: return x - y;
        case CostOp::div: return std::abs(y) < 1e-9 ? 1.0 : x / y;
        case CostOp::min: return std::min(x, y);
        case CostOp::max: return std::max(x, y);
        default: break;
    }
    throw std::logic_error("unhandled cost operator");
}

}  // namespace detail

/// Total: protected operators keep every intermediate finite, and the result is clamped to [0, 64].
inline double eval_cost(const CostTree& tree, const LeastEstimate& normalized, const Weights& w) {
    const double v = detail::eval_node(tree.root(), normalized, w);
    if (std::isnan(v)) return kMaxCost;
    return std::clamp(v, 0.0, kMaxCost);
}

inline double weight(double cost) { return std::exp2(-cost); }

// ---------------------------------------------------------------------------
// Prefix serialization: `(add L (mul 0.5 T))`

inline std::string format_real(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

namespace detail {

inline void serialize_node(const CostNode& n, std::string& out) {
    if (n.op == CostOp::constant) {
        out += format_real(n.value);
        return;
    }
    if (is_terminal(n.op)) {
        out += op_token(n.op);
        return;
    }
    out += '(';
    out += op_token(n.op);
    for (const auto& a : n.args) {
        out += ' ';
        serialize_node(a, out);
    }
    out += ')';
}

class TreeParser {
public:
    explicit TreeParser(std::string_view s) : s_(s) {}

    CostNode parse_all() {
        CostNode n = parse_node();
        skip_ws();
        if (pos_ != s_.size()) throw CostTreeError("trailing characters in cost tree");
        return n;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    std::string_view token() {
        skip_ws();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '(' && s_[pos_] != ')') ++pos_;
        return s_.substr(b, pos_ - b);
    }

    CostNode parse_node() {
        skip_ws();
        if (pos_ >= s_.size()) throw CostTreeError("unexpected end of cost tree");
        if (s_[pos_] == '(') {
            ++pos_;
            const auto name = token();
            CostNode n;
            n.op = operator_from(name);
            for (;;) {
                skip_ws();
                if (pos_ >= s_.size()) throw CostTreeError("unclosed '(' in cost tree");
                if (s_[pos_] == ')') {
                    ++pos_;
                    break;
                }
                n.args.push_back(parse_node());
            }
            if (n.args.size() != arity(n.op))
                throw CostTreeError("arity error: '" + std::string(name) + "' takes " + std::to_string(arity(n.op)) +
                                    " argument(s), got " + std::to_string(n.args.size()));
            return n;
        }
        if (s_[pos_] == ')') throw CostTreeError("unexpected ')' in cost tree");
        const auto tok = token();
        for (CostOp op : {CostOp::L, CostOp::E, CostOp::A, CostOp::S, CostOp::T})
            if (tok == op_token(op)) return CostNode{op, 0.0, {}};
        double v{};
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw CostTreeError("unknown leaf '" + std::string(tok) + "'");
        return CostNode{CostOp::constant, v, {}};
    }

    static CostOp operator_from(std::string_view name) {
        for (CostOp op : {CostOp::add, CostOp::mul, CostOp::sub, CostOp::div, CostOp::sqrt, CostOp::log2, CostOp::min,
                          CostOp::max})
            if (name == op_token(op)) return op;
        throw CostTreeError("unknown operator '" + std::string(name) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string tree_serialize(const CostTree& tree) {
    std::string out;
    detail::serialize_node(tree.root(), out);
    return out;
}

inline CostTree tree_parse(std::string_view text) { return CostTree(detail::TreeParser(text).parse_all()); }

// ---------------------------------------------------------------------------
// Random generation and mutation

namespace detail {

inline constexpr std::array kFunctionSet = {CostOp::add, CostOp::mul, CostOp::sub, CostOp::div,
                                            CostOp::sqrt, CostOp::log2, CostOp::min, CostOp::max};

inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)); }

// Terminals: the five metrics plus a constant, each equally likely. Constants are on a 0.01 grid.
inline CostNode random_terminal(Rng& rng) {
    const std::size_t k = pick(rng, 6);
    if (k == 5) return CostNode{CostOp::constant, std::round(uniform01(rng) * kMaxConstant * 100.0) / 100.0, {}};
    return CostNode{static_cast<CostOp>(k), 0.0, {}};
}

inline CostNode random_node(Rng& rng, std::size_t depth, bool full) {
    if (depth == 0) return random_terminal(rng);
    // grow: terminals and functions equally likely at inner positions
    if (!full && uniform01(rng) < 0.5) return random_terminal(rng);
    CostNode n;
    n.op = kFunctionSet[pick(rng, kFunctionSet.size())];
    for (std::size_t i = 0; i < arity(n.op); ++i) n.args.push_back(random_node(rng, depth - 1, full));
    return n;
}

inline void collect(CostNode& n, std::size_t depth, std::vector<std::pair<CostNode*, std::size_t>>& out) {
    out.emplace_back(&n, depth);
    for (auto& a : n.args) collect(a, depth + 1, out);
}

}  // namespace detail

/// Ramped half-and-half: depth uniform in [1, max_depth], full or grow with equal odds.
inline CostTree random_tree(Rng& rng, std::size_t max_depth = 4) {
    max_depth = std::min(max_depth, kMaxTreeDepth);
    if (max_depth == 0) return CostTree(detail::random_terminal(rng));
    const std::size_t depth = 1 + detail::pick(rng, max_depth);
    const bool full = uniform01(rng) < 0.5;
    return CostTree(detail::random_node(rng, depth, full));
}

inline constexpr std::size_t kMutationSubtreeDepth = 2;

/// Each node is selected with probability `rate`; one selected node (chosen
/// uniformly) has its subtree replaced by a fresh grow-method subtree that
/// differs from the one it replaces. No selection leaves the tree unchanged.
inline CostTree mutate(const CostTree& tree, double rate, Rng& rng) {
    CostNode root = tree.root();
    std::vector<std::pair<CostNode*, std::size_t>> nodes;
    detail::collect(root, 0, nodes);

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (uniform01(rng) < rate) selected.push_back(i);
    if (selected.empty()) return tree;

    auto [target, depth] = nodes[selected[detail::pick(rng, selected.size())]];
    const std::size_t room = std::min(kMutationSubtreeDepth, kMaxTreeDepth - depth);
    CostNode replacement = detail::random_node(rng, room, false);
    for (int tries = 0; replacement == *target && tries < 64; ++tries) replacement = detail::random_node(rng, room, false);
    *target = std::move(replacement);
    return CostTree(std::move(root));
}

}  // namespace qksa
