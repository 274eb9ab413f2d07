#include <catch_amalgamated.hpp>

#include <cmath>

#include "qksa/qcore.hpp"

using namespace qksa;
using Catch::Matchers::WithinAbs;

namespace {

const double s2 = 1.0 / std::sqrt(2.0);

ComplexMatrix diag2(double a, double b) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

DensityMatrix ket0() { return DensityMatrix::basis_state(2, 0); }
DensityMatrix ket1() { return DensityMatrix::basis_state(2, 1); }

DensityMatrix plus() {
    ComplexVector v(2);
    v << s2, s2;
    return DensityMatrix::pure(v);
}

DensityMatrix bell_phi_plus() {
    ComplexVector v = ComplexVector::Zero(4);
    v(0) = s2;
    v(3) = s2;
    return DensityMatrix::pure(v);
}

DensityMatrix random_density(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> g;
    ComplexMatrix a(dim, dim);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = complex(g(rng), g(rng));
    ComplexMatrix m = a * a.adjoint();
    return DensityMatrix::from_matrix(m / m.trace().real());
}

void require_valid(const DensityMatrix& rho) { REQUIRE_FALSE(density_violation(rho.matrix()).has_value()); }

}  // namespace

TEST_CASE("density matrix validation rejects non-physical input") {
    CHECK_THROWS(DensityMatrix::from_matrix(diag2(1.2, -0.2)));
    CHECK_THROWS(DensityMatrix::from_matrix(diag2(0.5, 0.4)));
    ComplexMatrix nh = diag2(0.5, 0.5);
    nh(0, 1) = 0.1;
    CHECK_THROWS(DensityMatrix::from_matrix(nh));
    CHECK_NOTHROW(DensityMatrix::from_matrix(diag2(0.25, 0.75)));
}

TEST_CASE("kron examples") {
    CHECK(max_abs_entry(kron(identity(2), identity(2)) - identity(4)) == 0.0);

    ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
    expected(0, 0) = 1.0;
    CHECK(max_abs_entry(kron(diag2(1, 0), diag2(1, 0)) - expected) == 0.0);

    ComplexMatrix xz = ComplexMatrix::Zero(4, 4);
    xz.block(0, 2, 2, 2) = gates::pauli_z();
    xz.block(2, 0, 2, 2) = gates::pauli_z();
    CHECK(max_abs_entry(kron(gates::pauli_x(), gates::pauli_z()) - xz) == 0.0);
}

TEST_CASE("partial trace examples") {
    auto half = partial_trace(bell_phi_plus(), {2, 2}, 2);
    CHECK(max_abs_entry(half.matrix() - identity(2) / 2.0) < kExactTol);

    Rng rng(3);
    auto rho = random_density(2, rng);
    auto sigma = random_density(2, rng);
    auto product = DensityMatrix::from_matrix(kron(rho.matrix(), sigma.matrix()));
    CHECK(max_abs_entry(partial_trace(product, {2, 2}, 1).matrix() - sigma.matrix()) < kExactTol);
    CHECK(max_abs_entry(partial_trace(product, {2, 2}, 2).matrix() - rho.matrix()) < kExactTol);

    auto mixed = partial_trace(DensityMatrix::maximally_mixed(4), {2, 2}, 1);
    CHECK(max_abs_entry(mixed.matrix() - identity(2) / 2.0) < kExactTol);

    CHECK_THROWS(partial_trace(bell_phi_plus(), {2, 3}, 1));
    CHECK_THROWS(partial_trace(bell_phi_plus(), {2, 2}, 3));
}

TEST_CASE("partial trace preserves trace") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        auto rho = random_density(8, rng);
        auto a = partial_trace(rho, {2, 4}, 1);
        auto b = partial_trace(rho, {4, 2}, 2);
        CHECK_THAT(a.matrix().trace().real(), WithinAbs(1.0, kInvariantTol));
        CHECK_THAT(b.matrix().trace().real(), WithinAbs(1.0, kInvariantTol));
        require_valid(a);
        require_valid(b);
    }
}

TEST_CASE("apply_unitary examples") {
    auto x = Unitary::from_matrix(gates::pauli_x());
    CHECK(max_abs_entry(apply_unitary(ket0(), x).matrix() - ket1().matrix()) < kExactTol);

    Rng rng(5);
    auto rho = random_density(2, rng);
    CHECK(max_abs_entry(apply_unitary(rho, Unitary::identity_of(1)).matrix() - rho.matrix()) < kExactTol);

    auto h = apply_unitary(ket0(), Unitary::from_matrix(gates::hadamard()));
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) CHECK_THAT(std::abs(h.matrix()(i, j) - 0.5), WithinAbs(0.0, kExactTol));

    CHECK_THROWS(Unitary::from_matrix(diag2(1.0, 0.5)));
}

TEST_CASE("born probabilities examples") {
    auto z = born_probabilities(ket0(), BasisString::parse("Z"));
    CHECK_THAT(z[0], WithinAbs(1.0, kExactTol));
    CHECK_THAT(z[1], WithinAbs(0.0, kExactTol));

    auto pz = born_probabilities(plus(), BasisString::parse("Z"));
    CHECK_THAT(pz[0], WithinAbs(0.5, kExactTol));
    CHECK_THAT(pz[1], WithinAbs(0.5, kExactTol));

    auto px = born_probabilities(plus(), BasisString::parse("X"));
    CHECK_THAT(px[0], WithinAbs(1.0, kExactTol));
    CHECK_THAT(px[1], WithinAbs(0.0, kExactTol));

    // (|0> + i|1>)/sqrt2 is the +1 eigenvector of Y.
    ComplexVector yp(2);
    yp << s2, complex(0.0, s2);
    auto py = born_probabilities(DensityMatrix::pure(yp), BasisString::parse("Y"));
    CHECK_THAT(py[0], WithinAbs(1.0, kExactTol));

    CHECK_THROWS(born_probabilities(ket0(), BasisString::parse("ZZ")));
}

TEST_CASE("born probabilities are probability vectors") {
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        auto rho = random_density(4, rng);
        auto basis = BasisString::from_index(static_cast<std::size_t>(i % 9), 2);
        auto p = born_probabilities(rho, basis);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK_THAT(sum, WithinAbs(1.0, kInvariantTol));
    }
}

TEST_CASE("basis strings") {
    CHECK(BasisString::from_index(0, 2).to_string() == "XX");
    CHECK(BasisString::from_index(1, 2).to_string() == "XY");
    CHECK(BasisString::from_index(8, 2).to_string() == "ZZ");
    CHECK(BasisString::parse("YZ").index() == 5);
    CHECK_THROWS(BasisString::parse("XQ"));
    CHECK(outcome_bits(1, 2) == "01");
    CHECK(outcome_index("10") == 2);
}

TEST_CASE("choi_of_unitary examples") {
    auto phi = choi_of_unitary(Unitary::identity_of(1));
    CHECK(max_abs_entry(phi.matrix() - bell_phi_plus().matrix()) < kExactTol);

    ComplexVector psi = ComplexVector::Zero(4);
    psi(1) = s2;
    psi(2) = s2;
    auto cx = choi_of_unitary(Unitary::from_matrix(gates::pauli_x()));
    CHECK(max_abs_entry(cx.matrix() - DensityMatrix::pure(psi).matrix()) < kExactTol);
}

TEST_CASE("choi_evolve examples") {
    Rng rng(9);
    auto rho = random_density(2, rng);
    auto id = choi_of_unitary(Unitary::identity_of(1));
    CHECK(max_abs_entry(choi_evolve(id, rho).matrix() - rho.matrix()) < kExactTol);

    auto x = choi_of_unitary(Unitary::from_matrix(gates::pauli_x()));
    CHECK(max_abs_entry(choi_evolve(x, ket0()).matrix() - ket1().matrix()) < kExactTol);

    auto dep = choi_evolve(DensityMatrix::maximally_mixed(4), rho);
    CHECK(max_abs_entry(dep.matrix() - identity(2) / 2.0) < kExactTol);
}

TEST_CASE("choi round trip on random unitaries and states") {
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = i % 4 == 3 ? 2 : 1;
        auto u = haar_random_unitary(n, rng);
        auto rho = random_density(std::size_t{1} << n, rng);
        auto choi = choi_of_unitary(u);
        CHECK_THAT(choi.purity(), WithinAbs(1.0, kInvariantTol));
        require_valid(choi);
        const ComplexMatrix direct = u.matrix() * rho.matrix() * u.matrix().adjoint();
        CHECK(max_abs_entry(choi_evolve(choi, rho).matrix() - direct) <= kInvariantTol);
    }
}

TEST_CASE("project_to_physical examples") {
    Rng rng(21);
    auto rho = random_density(4, rng);
    CHECK(max_abs_entry(project_to_physical(rho.matrix()).matrix() - rho.matrix()) < kExactTol);

    CHECK(max_abs_entry(project_to_physical(diag2(1.2, -0.2)).matrix() - diag2(1.0, 0.0)) < kExactTol);

    ComplexMatrix nh = diag2(1.0, 0.0);
    nh(0, 1) = 0.2;
    ComplexMatrix herm = diag2(1.0, 0.0);
    herm(0, 1) = 0.1;
    herm(1, 0) = 0.1;
    CHECK(max_abs_entry(project_to_physical(nh).matrix() - project_to_physical(herm).matrix()) < kExactTol);

    auto zero = project_to_physical(ComplexMatrix::Zero(2, 2));
    CHECK(max_abs_entry(zero.matrix() - identity(2) / 2.0) < kExactTol);
}

TEST_CASE("projection output is always physical") {
    Rng rng(33);
    std::normal_distribution<double> g;
    for (int i = 0; i < 300; ++i) {
        ComplexMatrix m(4, 4);
        for (Eigen::Index r = 0; r < 4; ++r)
            for (Eigen::Index c = 0; c < 4; ++c) m(r, c) = complex(g(rng), g(rng));
        require_valid(project_to_physical(m));
    }
}

TEST_CASE("haar random unitaries") {
    Rng a(7);
    Rng b(7);
    auto ua = haar_random_unitary(2, a);
    auto ub = haar_random_unitary(2, b);
    CHECK(max_abs_entry(ua.matrix() - ub.matrix()) == 0.0);
    CHECK(max_abs_entry(ua.matrix().adjoint() * ua.matrix() - identity(4)) <= kInvariantTol);

    Rng rng(99);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) sum += std::norm(haar_random_unitary(1, rng).matrix()(0, 0));
    CHECK_THAT(sum / 1000.0, WithinAbs(0.5, 0.05));
}
