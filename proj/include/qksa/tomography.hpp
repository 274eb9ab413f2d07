// Entanglement-assisted process tomography by linear inversion of Pauli
// expectations on the Choi state.
//
// A single-shot record in basis b contributes one parity sample to every
// Pauli string that equals b on its support and is the identity elsewhere.
// Strings with no samples are estimated as 0, so empty history reconstructs
// the maximally mixed state.

#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qksa/environment.hpp"
#include "qksa/qcore.hpp"

namespace qksa {

struct QPTDescriptor {
    std::string id;
    std::optional<int> approx_places = 5;  // nullopt disables rounding
    std::size_t window = 1024;
    double length_const = 0.0;             // 0 selects the canonical description length

    friend bool operator==(const QPTDescriptor&, const QPTDescriptor&) = default;
};

// Canonical description of the linear-inversion strategy; its byte count is the default length estimate.
inline constexpr std::string_view kLinearInversionDescription =
    "eaqpt/linear-inversion: rho = 2^-N sum_P <P> P over compatible single-shot parities; "
    "round entries; clip negative eigenvalues; renormalize";

class HistoryBuffer {
public:
    explicit HistoryBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("history capacity must be positive");
    }

    /// Appends `rec`; returns the evicted record when the buffer was full.
    std::optional<HistoryRecord> push(HistoryRecord rec) {
        if (!records_.empty() && rec.step <= records_.back().step)
            throw std::invalid_argument("history steps must be strictly increasing");
        std::optional<HistoryRecord> evicted;
        if (records_.size() == capacity_) {
            evicted = std::move(records_.front());
            records_.pop_front();
        }
        records_.push_back(std::move(rec));
        return evicted;
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return records_.size(); }
    bool full() const { return records_.size() == capacity_; }
    const std::deque<HistoryRecord>& records() const { return records_; }
    const HistoryRecord& oldest() const { return records_.front(); }

private:
    std::size_t capacity_;
    std::deque<HistoryRecord> records_;
};

struct PauliTally {
    std::int64_t count = 0;
    std::int64_t parity_sum = 0;

    friend bool operator==(const PauliTally&, const PauliTally&) = default;
};

inline std::size_t pauli_string_count(std::size_t n_qubits) { return std::size_t{1} << (2 * n_qubits); }

// Digit k (0 = I, 1 = X, 2 = Y, 3 = Z) of a Pauli string index, qubit 0 most significant.
inline unsigned pauli_digit(std::size_t index, std::size_t k, std::size_t n_qubits) {
    return static_cast<unsigned>((index >> (2 * (n_qubits - 1 - k))) & 3u);
}

inline std::string pauli_label(std::size_t index, std::size_t n_qubits) {
    static constexpr char names[] = {'I', 'X', 'Y', 'Z'};
    std::string s;
    for (std::size_t k = 0; k < n_qubits; ++k) s.push_back(names[pauli_digit(index, k, n_qubits)]);
    return s;
}

inline std::size_t pauli_index(std::string_view label) {
    std::size_t idx = 0;
    for (char c : label) {
        unsigned d = 0;
        switch (c) {
            case 'I': d = 0; break;
            case 'X': d = 1; break;
            case 'Y': d = 2; break;
            case 'Z': d = 3; break;
            default: throw std::invalid_argument("invalid Pauli label");
        }
        idx = (idx << 2) | d;
    }
    return idx;
}

/// Sparse form of every n-qubit Pauli string: string p has one nonzero per
/// row r, at column r ^ flip[p], with value phase[p * 2^n + r].
struct PauliTable {
    std::vector<std::size_t> flip;
    std::vector<complex> phase;
};

inline const PauliTable& pauli_table(std::size_t n_qubits) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<const PauliTable>> cache;
    const std::lock_guard lock(mu);
    auto& slot = cache[n_qubits];
    if (slot) return *slot;
    const std::size_t dim = std::size_t{1} << n_qubits;
    const std::size_t count = pauli_string_count(n_qubits);
    auto t = std::make_unique<PauliTable>();
    t->flip.resize(count);
    t->phase.resize(count * dim);
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t flip = 0;
        for (std::size_t k = 0; k < n_qubits; ++k) {
            const unsigned d = pauli_digit(p, k, n_qubits);
            if (d == 1 || d == 2) flip |= std::size_t{1} << (n_qubits - 1 - k);
        }
        t->flip[p] = flip;
        for (std::size_t r = 0; r < dim; ++r) {
            complex phase{1.0, 0.0};
            for (std::size_t k = 0; k < n_qubits; ++k) {
                const bool bit = r & (std::size_t{1} << (n_qubits - 1 - k));
                switch (pauli_digit(p, k, n_qubits)) {
                    case 2: phase *= bit ? complex{0.0, 1.0} : complex{0.0, -1.0}; break;
                    case 3: if (bit) phase = -phase; break;
                    default: break;
                }
            }
            t->phase[p * dim + r] = phase;
        }
    }
    slot = std::move(t);
    return *slot;
}

/// Applies `sign` (+1 insert, -1 evict) times the record's contributions to `tallies`.
inline void apply_record(std::span<PauliTally> tallies, std::size_t n_qubits, const BasisString& action,
                         std::size_t outcome, int sign) {
    const std::size_t subsets = std::size_t{1} << n_qubits;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < n_qubits; ++k) {
            const bool on = mask & (std::size_t{1} << (n_qubits - 1 - k));
            idx = (idx << 2) | (on ? static_cast<std::size_t>(action[k]) : 0u);
        }
        const int parity = std::popcount(outcome & mask) & 1;
        tallies[idx].count += sign;
        tallies[idx].parity_sum += sign * (parity ? -1 : 1);
    }
}

/// Running Pauli-expectation accumulators over a sliding window of records.
class SufficientStats {
public:
    SufficientStats(std::size_t n_qubits, std::size_t window)
        : n_qubits_(n_qubits), tallies_(pauli_string_count(n_qubits)), records_(window) {}

    std::size_t qubits() const { return n_qubits_; }
    const std::vector<PauliTally>& tallies() const { return tallies_; }
    const HistoryBuffer& records() const { return records_; }

    void insert(const HistoryRecord& rec) {
        if (rec.action.size() != n_qubits_ || rec.percept.size() != n_qubits_)
            throw std::invalid_argument("record does not match the stats qubit count");
        apply_record(tallies_, n_qubits_, rec.action, outcome_index(rec.percept), +1);
        if (auto evicted = records_.push(rec))
            apply_record(tallies_, n_qubits_, evicted->action, outcome_index(evicted->percept), -1);
    }

    // Tallies as they would be after `insert(action, percept)`, without touching this object.
    std::vector<PauliTally> tallies_after(const BasisString& action, std::size_t outcome) const {
        std::vector<PauliTally> t = tallies_;
        apply_record(t, n_qubits_, action, outcome, +1);
        if (records_.full())
            apply_record(t, n_qubits_, records_.oldest().action, outcome_index(records_.oldest().percept), -1);
        return t;
    }

    double expectation(std::size_t pauli) const {
        const auto& t = tallies_[pauli];
        return t.count == 0 ? 0.0 : static_cast<double>(t.parity_sum) / static_cast<double>(t.count);
    }

private:
    std::size_t n_qubits_;
    std::vector<PauliTally> tallies_;
    HistoryBuffer records_;
};

inline SufficientStats& stats_insert(SufficientStats& stats, const HistoryRecord& rec) {
    stats.insert(rec);
    return stats;
}

/// Work counters filled by one reconstruction.
struct ReconstructProbe {
    std::uint64_t macs = 0;
    double seconds = 0.0;
};

/// rho = 2^-N sum_P est<P> P, rounded, then projected to a physical state.
inline DensityMatrix reconstruct_from_tallies(const QPTDescriptor& desc, std::size_t n_qubits,
                                              std::span<const PauliTally> tallies, ReconstructProbe* probe = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t dim = std::size_t{1} << n_qubits;
    const double norm = 1.0 / static_cast<double>(dim);
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    std::uint64_t macs = 0;

    const auto& table = pauli_table(n_qubits);
    for (std::size_t p = 0; p < tallies.size(); ++p) {
        const auto& t = tallies[p];
        if (t.count == 0 || t.parity_sum == 0) continue;
        const double coeff = norm * static_cast<double>(t.parity_sum) / static_cast<double>(t.count);
        const std::size_t flip = table.flip[p];
        const complex* phase = &table.phase[p * dim];
        for (std::size_t r = 0; r < dim; ++r)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r ^ flip)) += coeff * phase[r];
        macs += dim;
    }

    if (desc.approx_places) {
        const double scale = std::pow(10.0, *desc.approx_places);
        const auto round = [scale](double x) { return std::round(x * scale) / scale; };
        m = m.unaryExpr([&round](const complex& z) { return complex(round(z.real()), round(z.imag())); });
    }
    DensityMatrix out = project_to_physical(m, &macs);
    if (probe) {
        probe->macs = macs;
        probe->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return out;
}

inline DensityMatrix reconstruct(const QPTDescriptor& desc, const SufficientStats& stats, ReconstructProbe* probe = nullptr) {
    return reconstruct_from_tallies(desc, stats.qubits(), stats.tallies(), probe);
}

inline std::vector<double> predict_distribution(const QPTDescriptor&, const DensityMatrix& rho_t, const BasisString& action) {
    return born_probabilities(rho_t, action);
}

/// Model after one more record (action, percept); `stats` is left untouched.
inline DensityMatrix hypothetical_update(const QPTDescriptor& desc, const SufficientStats& stats,
                                         const BasisString& action, std::size_t outcome) {
    const auto t = stats.tallies_after(action, outcome);
    return reconstruct_from_tallies(desc, stats.qubits(), t);
}

inline DensityMatrix hypothetical_update(const QPTDescriptor& desc, const SufficientStats& stats,
                                         const BasisString& action, std::string_view percept) {
    return hypothetical_update(desc, stats, action, outcome_index(percept));
}

}  // namespace qksa
