#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "qksa/metrics.hpp"
#include "qksa/tomography.hpp"

using namespace qksa;
using Catch::Matchers::WithinAbs;

namespace {

const QPTDescriptor kFive{"QPT-0", 5, 16384, 0.0};

DensityMatrix bell_phi_plus() {
    ComplexVector v = ComplexVector::Zero(4);
    v(0) = 1.0 / std::sqrt(2.0);
    v(3) = 1.0 / std::sqrt(2.0);
    return DensityMatrix::pure(v);
}

// Pauli string matrix built by explicit Kronecker products.
ComplexMatrix pauli_matrix(const std::string& label) {
    ComplexMatrix m = identity(1);
    for (char c : label) {
        ComplexMatrix p = c == 'I' ? identity(2) : c == 'X' ? gates::pauli_x() : c == 'Y' ? gates::pauli_y() : gates::pauli_z();
        m = kron(m, p);
    }
    return m;
}

HistoryRecord record(std::uint64_t step, const char* action, const char* percept) {
    return HistoryRecord{step, BasisString::parse(action), percept};
}

}  // namespace

TEST_CASE("pauli labels") {
    CHECK(pauli_string_count(2) == 16);
    CHECK(pauli_index("ZZ") == 15);
    CHECK(pauli_index("XI") == 4);
    for (std::size_t p = 0; p < 16; ++p) CHECK(pauli_index(pauli_label(p, 2)) == p);
}

TEST_CASE("compatibility rule tallies") {
    SufficientStats s(2, 16);
    s.insert(record(1, "ZZ", "00"));
    for (const char* p : {"ZZ", "ZI", "IZ"}) {
        CHECK(s.tallies()[pauli_index(p)].count == 1);
        CHECK(s.tallies()[pauli_index(p)].parity_sum == 1);
    }
    CHECK(s.tallies()[pauli_index("XX")].count == 0);
    CHECK(s.tallies()[pauli_index("ZX")].count == 0);

    SufficientStats t(2, 16);
    t.insert(record(1, "ZZ", "01"));
    CHECK(t.tallies()[pauli_index("ZZ")].parity_sum == -1);
    CHECK(t.tallies()[pauli_index("ZI")].parity_sum == 1);
    CHECK(t.tallies()[pauli_index("IZ")].parity_sum == -1);

    std::vector<PauliTally> raw(16);
    apply_record(raw, 2, BasisString::parse("XY"), 2, +1);
    apply_record(raw, 2, BasisString::parse("XY"), 2, -1);
    CHECK(std::all_of(raw.begin(), raw.end(), [](const PauliTally& x) { return x.count == 0 && x.parity_sum == 0; }));
}

TEST_CASE("history window evicts the oldest record") {
    HistoryBuffer buf(2);
    CHECK_FALSE(buf.push(record(1, "ZZ", "00")).has_value());
    CHECK_FALSE(buf.push(record(2, "XX", "11")).has_value());
    auto ev = buf.push(record(3, "YY", "01"));
    REQUIRE(ev.has_value());
    CHECK(ev->step == 1);
    CHECK(buf.oldest().step == 2);
    CHECK_THROWS(buf.push(record(3, "ZZ", "00")));
    CHECK_THROWS(HistoryBuffer(0));

    SufficientStats windowed(2, 1);
    windowed.insert(record(1, "ZZ", "00"));
    windowed.insert(record(2, "XY", "10"));
    SufficientStats only(2, 1);
    only.insert(record(2, "XY", "10"));
    CHECK(windowed.tallies() == only.tallies());
}

TEST_CASE("empty history reconstructs the maximally mixed state") {
    SufficientStats s(2, 16);
    CHECK(max_abs_entry(reconstruct(kFive, s).matrix() - identity(4) / 4.0) < 1e-12);
}

TEST_CASE("noiseless expectations reconstruct the Bell state") {
    const auto phi = bell_phi_plus();
    std::vector<PauliTally> tallies(16);
    for (std::size_t p = 0; p < 16; ++p) {
        const double e = (pauli_matrix(pauli_label(p, 2)) * phi.matrix()).trace().real();
        tallies[p] = PauliTally{1000, static_cast<std::int64_t>(std::llround(1000 * e))};
    }
    const auto rho = reconstruct_from_tallies(kFive, 2, tallies);
    CHECK(max_abs_entry(rho.matrix() - phi.matrix()) < 1e-5);

    QPTDescriptor unrounded = kFive;
    unrounded.approx_places = std::nullopt;
    QPTDescriptor twelve = kFive;
    twelve.approx_places = 12;
    CHECK(max_abs_entry(reconstruct_from_tallies(unrounded, 2, tallies).matrix() -
                        reconstruct_from_tallies(twelve, 2, tallies).matrix()) < 1e-9);
}

TEST_CASE("linear inversion matches an explicit Pauli-sum oracle") {
    Rng rng(12);
    std::uniform_int_distribution<int> count(1, 50);
    QPTDescriptor exact{"x", std::nullopt, 64, 0.0};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PauliTally> tallies(16);
        ComplexMatrix oracle = ComplexMatrix::Zero(4, 4);
        for (std::size_t p = 0; p < 16; ++p) {
            const int c = count(rng);
            std::uniform_int_distribution<int> sum(-c / 4, c / 4);
            tallies[p] = PauliTally{c, p == 0 ? c : sum(rng)};
            oracle += (static_cast<double>(tallies[p].parity_sum) / c) * pauli_matrix(pauli_label(p, 2)) / 4.0;
        }
        const auto rho = reconstruct_from_tallies(exact, 2, tallies);
        CHECK(max_abs_entry(rho.matrix() - project_to_physical(oracle).matrix()) < 1e-12);
    }
}

TEST_CASE("sampled identity-channel records reconstruct the Bell state") {
    auto env = make_environment(parse_circuit("qubits 1"), 31);
    Rng pick(32);
    SufficientStats s(2, 16384);
    for (std::uint64_t t = 1; t <= 16384; ++t) {
        const auto& a = env.action_space()[pick() % 9];
        s.insert(HistoryRecord{t, a, env.interact(a)});
    }
    CHECK(trace_distance(reconstruct(kFive, s), bell_phi_plus()) <= 0.1);
    // Stabilizer signs of Phi+: <ZZ> = <XX> = +1, <YY> = -1, exactly for single shots.
    CHECK(s.expectation(pauli_index("ZZ")) == 1.0);
    CHECK(s.expectation(pauli_index("XX")) == 1.0);
    CHECK(s.expectation(pauli_index("YY")) == -1.0);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(s.tallies()[pauli_index("ZI")].count));
    CHECK(std::abs(s.expectation(pauli_index("ZI"))) <= 3.0 * sigma);
}

TEST_CASE("predicted percept distributions") {
    const auto mixed = DensityMatrix::maximally_mixed(4);
    for (std::size_t a = 0; a < 9; ++a)
        for (double p : predict_distribution(kFive, mixed, BasisString::from_index(a, 2))) CHECK_THAT(p, WithinAbs(0.25, 1e-12));

    const auto zz = predict_distribution(kFive, bell_phi_plus(), BasisString::parse("ZZ"));
    CHECK_THAT(zz[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(zz[1], WithinAbs(0.0, 1e-12));
    CHECK_THAT(zz[2], WithinAbs(0.0, 1e-12));
    CHECK_THAT(zz[3], WithinAbs(0.5, 1e-12));

    for (double p : predict_distribution(kFive, bell_phi_plus(), BasisString::parse("ZX"))) CHECK_THAT(p, WithinAbs(0.25, 1e-12));
}

TEST_CASE("hypothetical update") {
    SufficientStats s(2, 4);
    const auto a = BasisString::parse("XZ");
    const auto hyp = hypothetical_update(kFive, s, a, "01");
    CHECK(trace_distance(hyp, DensityMatrix::maximally_mixed(4)) > 0.0);
    CHECK((hyp.matrix().array() == hypothetical_update(kFive, s, a, "01").matrix().array()).all());

    SufficientStats real = s;
    real.insert(HistoryRecord{1, a, "01"});
    CHECK((hyp.matrix().array() == reconstruct(kFive, real).matrix().array()).all());

    // With a full window the hypothetical update also drops the oldest record.
    for (std::uint64_t t = 2; t <= 4; ++t) real.insert(HistoryRecord{t, BasisString::parse("YY"), "10"});
    const auto full_hyp = hypothetical_update(kFive, real, a, "11");
    SufficientStats after = real;
    after.insert(HistoryRecord{5, a, "11"});
    CHECK((full_hyp.matrix().array() == reconstruct(kFive, after).matrix().array()).all());
    CHECK(real.records().size() == 4);
}

TEST_CASE("reconstruction is invariant under record order and always physical") {
    Rng rng(55);
    std::vector<std::pair<BasisString, std::string>> data;
    for (int i = 0; i < 200; ++i) data.emplace_back(BasisString::from_index(rng() % 9, 2), outcome_bits(rng() % 4, 2));
    SufficientStats forward(2, 200);
    for (std::size_t i = 0; i < data.size(); ++i) forward.insert(HistoryRecord{i + 1, data[i].first, data[i].second});
    auto shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    SufficientStats permuted(2, 200);
    for (std::size_t i = 0; i < shuffled.size(); ++i) permuted.insert(HistoryRecord{i + 1, shuffled[i].first, shuffled[i].second});
    const auto r1 = reconstruct(kFive, forward);
    const auto r2 = reconstruct(kFive, permuted);
    CHECK(max_abs_entry(r1.matrix() - r2.matrix()) == 0.0);
    CHECK_FALSE(density_violation(r1.matrix()).has_value());

    SufficientStats stream(2, 32);
    for (std::uint64_t t = 1; t <= 500; ++t) {
        stream.insert(HistoryRecord{t, BasisString::from_index(rng() % 9, 2), outcome_bits(rng() % 4, 2)});
        REQUIRE_FALSE(density_violation(reconstruct(kFive, stream).matrix()).has_value());
    }
}
