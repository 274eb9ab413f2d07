// Episodic quantum environment. A hidden unitary channel is exposed only
// through its Choi state: each interaction prepares a fresh copy, measures
// every qubit along the requested axes and returns one outcome bit string.

#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qksa/metrics.hpp"
#include "qksa/qcore.hpp"
#include "qksa/rng.hpp"

namespace qksa {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class GateKind { h, x, y, z, s, t, rx, ry, rz, cx };

inline std::optional<GateKind> gate_from_name(std::string_view name) {
    static constexpr std::pair<std::string_view, GateKind> table[] = {
        {"h", GateKind::h},   {"x", GateKind::x},   {"y", GateKind::y},   {"z", GateKind::z},
        {"s", GateKind::s},   {"t", GateKind::t},   {"rx", GateKind::rx}, {"ry", GateKind::ry},
        {"rz", GateKind::rz}, {"cx", GateKind::cx},
    };
    for (const auto& [n, k] : table)
        if (n == name) return k;
    return std::nullopt;
}

inline bool is_rotation(GateKind k) { return k == GateKind::rx || k == GateKind::ry || k == GateKind::rz; }

struct GateOp {
    GateKind kind;
    std::vector<std::size_t> targets;
    std::optional<double> param;

    friend bool operator==(const GateOp&, const GateOp&) = default;
};

struct CircuitSpec {
    std::size_t n_qubits = 1;
    std::vector<GateOp> ops;

    friend bool operator==(const CircuitSpec&, const CircuitSpec&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses the line-oriented circuit format:
///
///     qubits <n>
///     <gate> <q...>
///     <rgate>(<radians>) <q>
///
/// `#` starts a comment; blank lines are ignored.
inline CircuitSpec parse_circuit(std::string_view text) {
    CircuitSpec spec;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto words = detail::split_ws(line);

        if (!have_header) {
            if (words.size() != 2 || words[0] != "qubits") throw ParseError(line_no, "expected 'qubits <n>'");
            const auto n = detail::parse_number<std::size_t>(words[1]);
            if (!n || *n == 0) throw ParseError(line_no, "qubit count must be a positive integer");
            spec.n_qubits = *n;
            have_header = true;
            continue;
        }

        std::string_view head = words[0];
        std::optional<double> param;
        if (const auto open = head.find('('); open != std::string_view::npos) {
            if (head.back() != ')') throw ParseError(line_no, "malformed parameter in '" + std::string(head) + "'");
            param = detail::parse_number<double>(head.substr(open + 1, head.size() - open - 2));
            if (!param) throw ParseError(line_no, "malformed parameter in '" + std::string(head) + "'");
            head = head.substr(0, open);
        }
        const auto kind = gate_from_name(head);
        if (!kind) throw ParseError(line_no, "unknown gate '" + std::string(head) + "'");
        if (is_rotation(*kind) != param.has_value())
            throw ParseError(line_no, is_rotation(*kind) ? "rotation gate needs an angle" : "gate takes no parameter");

        GateOp op{*kind, {}, param};
        for (std::size_t w = 1; w < words.size(); ++w) {
            const auto q = detail::parse_number<std::size_t>(words[w]);
            if (!q) throw ParseError(line_no, "malformed qubit index '" + std::string(words[w]) + "'");
            if (*q >= spec.n_qubits) throw ParseError(line_no, "qubit index " + std::to_string(*q) + " out of range");
            op.targets.push_back(*q);
        }
        const std::size_t arity = *kind == GateKind::cx ? 2 : 1;
        if (op.targets.size() != arity)
            throw ParseError(line_no, "gate expects " + std::to_string(arity) + " qubit index(es)");
        if (arity == 2 && op.targets[0] == op.targets[1]) throw ParseError(line_no, "cx needs two distinct qubits");
        spec.ops.push_back(std::move(op));
    }
    if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing 'qubits <n>' header");
    return spec;
}

inline ComplexMatrix single_qubit_gate(GateKind kind, double theta) {
    using namespace std::complex_literals;
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    ComplexMatrix m(2, 2);
    switch (kind) {
        case GateKind::h: return gates::hadamard();
        case GateKind::x: return gates::pauli_x();
        case GateKind::y: return gates::pauli_y();
        case GateKind::z: return gates::pauli_z();
        case GateKind::s: m << 1.0, 0.0, 0.0, 1i; return m;
        case GateKind::t: m << 1.0, 0.0, 0.0, std::polar(1.0, M_PI / 4.0); return m;
        case GateKind::rx: m << c, -1i * s, -1i * s, c; return m;
        case GateKind::ry: m << c, -s, s, c; return m;
        case GateKind::rz: m << std::polar(1.0, -theta / 2.0), 0.0, 0.0, std::polar(1.0, theta / 2.0); return m;
        case GateKind::cx: break;
    }
    throw std::invalid_argument("not a single-qubit gate");
}

inline ComplexMatrix lift_gate(const GateOp& op, std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    if (op.kind == GateKind::cx) {
        const std::size_t cbit = std::size_t{1} << (n - 1 - op.targets[0]);
        const std::size_t tbit = std::size_t{1} << (n - 1 - op.targets[1]);
        ComplexMatrix p = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t b = 0; b < dim; ++b) {
            const std::size_t out = (b & cbit) ? (b ^ tbit) : b;
            p(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(b)) = 1.0;
        }
        return p;
    }
    const std::size_t q = op.targets[0];
    ComplexMatrix g = single_qubit_gate(op.kind, op.param.value_or(0.0));
    return kron(kron(identity(std::size_t{1} << q), g), identity(std::size_t{1} << (n - 1 - q)));
}

inline Unitary unitary_of_circuit(const CircuitSpec& spec) {
    ComplexMatrix u = identity(std::size_t{1} << spec.n_qubits);
    for (const auto& op : spec.ops) u = lift_gate(op, spec.n_qubits) * u;
    return Unitary::from_matrix(std::move(u));
}

struct RandomUnitaryRequest {
    std::size_t n_qubits = 1;
    std::uint64_t seed = 0;
};

using EnvironmentSource = std::variant<CircuitSpec, RandomUnitaryRequest>;

struct HistoryRecord {
    std::uint64_t step = 0;
    BasisString action;
    std::string percept;

    friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

/// Hidden unitary channel with an entanglement-assisted measurement surface.
/// Interactions are serialized per instance; the rng is the only mutable part.
class Environment {
public:
    Environment(Unitary u, std::uint64_t rng_seed, std::optional<std::vector<BasisString>> whitelist = std::nullopt)
        : n_(u.qubits()), u_true_(std::move(u)), choi_true_(choi_of_unitary(u_true_)), rng_(rng_seed) {
        const std::size_t n2 = 2 * n_;
        std::size_t n_actions = 1;
        for (std::size_t k = 0; k < n2; ++k) n_actions *= 3;
        for (std::size_t i = 0; i < n_actions; ++i) full_space_.push_back(BasisString::from_index(i, n2));
        for (std::size_t e = 0; e < (std::size_t{1} << n2); ++e) percept_space_.push_back(outcome_bits(e, n2));

        if (whitelist) {
            for (const auto& b : *whitelist) {
                if (b.size() != n2) throw std::invalid_argument("basis '" + b.to_string() + "' has wrong length");
                if (std::find(action_space_.begin(), action_space_.end(), b) == action_space_.end())
                    action_space_.push_back(b);
            }
            std::sort(action_space_.begin(), action_space_.end(),
                      [](const BasisString& a, const BasisString& b) { return a.index() < b.index(); });
            if (action_space_.empty()) throw std::invalid_argument("empty basis whitelist");
        } else {
            action_space_ = full_space_;
        }
        for (const auto& a : action_space_) {
            const auto p = born_probabilities(choi_true_, a);
            std::vector<double> cdf(p.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
            cdf_.push_back(std::move(cdf));
        }
    }

    std::size_t channel_qubits() const { return n_; }
    std::size_t total_qubits() const { return 2 * n_; }
    const std::vector<BasisString>& action_space() const { return action_space_; }
    const std::vector<std::string>& percept_space() const { return percept_space_; }

    // Diagnostics only; agents never read these.
    const Unitary& hidden_unitary() const { return u_true_; }
    const DensityMatrix& hidden_choi() const { return choi_true_; }

    std::string interact(const BasisString& action) {
        const auto it = std::find(action_space_.begin(), action_space_.end(), action);
        if (it == action_space_.end()) throw std::invalid_argument("action '" + action.to_string() + "' not in action space");
        return percept_space_[sample(static_cast<std::size_t>(it - action_space_.begin()))];
    }

    /// Δ(rho_t, true Choi state). Only meaningful when the channel is known.
    double remaining_utility(const DensityMatrix& rho_t, const DistanceSpec& delta) const {
        if (rho_t.dim() != choi_true_.dim()) throw std::invalid_argument("remaining_utility: dimension mismatch");
        return distance(delta, rho_t, choi_true_);
    }

private:
    std::size_t sample(std::size_t action_index) {
        const auto& cdf = cdf_[action_index];
        const double u = uniform01(rng_) * cdf.back();
        for (std::size_t i = 0; i < cdf.size(); ++i)
            if (u < cdf[i]) return i;
        return cdf.size() - 1;
    }

    std::size_t n_;
    Unitary u_true_;
    DensityMatrix choi_true_;
    std::vector<BasisString> full_space_;
    std::vector<BasisString> action_space_;
    std::vector<std::string> percept_space_;
    std::vector<std::vector<double>> cdf_;
    Rng rng_;
};

inline Unitary resolve_unitary(const EnvironmentSource& source) {
    if (const auto* spec = std::get_if<CircuitSpec>(&source)) return unitary_of_circuit(*spec);
    const auto& req = std::get<RandomUnitaryRequest>(source);
    Rng rng(req.seed);
    return haar_random_unitary(req.n_qubits, rng);
}

inline Environment make_environment(const EnvironmentSource& source, std::uint64_t rng_seed,
                                    std::optional<std::vector<BasisString>> whitelist = std::nullopt) {
    return Environment(resolve_unitary(source), rng_seed, std::move(whitelist));
}

}  // namespace qksa
