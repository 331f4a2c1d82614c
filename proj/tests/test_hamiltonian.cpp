#include <doctest.h>

#include "qde/experiments.hpp"
#include "qde/hamiltonian.hpp"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>

using namespace qde;
using namespace qde::testing;

TEST_CASE("lambda_norm: transverse-field Ising evaluates to 32 e^lambda") {
    Potential phi = ising_potential(1.0, 1.0);
    for (double lam : {0.1, 0.5, 1.0, 2.0}) {
        // max(1·4·1, 2·16·e^λ) with both couplings of norm 1
        double expected = std::max(4.0, 32.0 * std::exp(lam));
        CHECK(lambda_norm(phi, lam).value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("lambda_norm: on-site term is lambda independent") {
    Potential phi = onsite_potential(0.7);
    CHECK(lambda_norm(phi, 0.2).value == doctest::Approx(4 * 0.7).epsilon(1e-12));
    CHECK(lambda_norm(phi, 7.0).value == doctest::Approx(4 * 0.7).epsilon(1e-12));
}

TEST_CASE("lambda_norm: zero potential and domain errors") {
    Potential zero(SiteSpec(2), {{{0}, MatrixXcd::Zero(2, 2)}});
    CHECK(lambda_norm(zero, 1.0).value == 0.0);
    CHECK_THROWS_AS(lambda_norm(zero, 0.0), std::domain_error);
    CHECK_THROWS_AS(lambda_norm(zero, -1.0), std::domain_error);
}

TEST_CASE("lambda_norm: nondecreasing and continuous in lambda, monotone under added terms") {
    Potential phi = ising_potential(1.0, 0.5);
    double prev = 0.0;
    for (double lam = 0.05; lam < 6.0; lam += 0.25) {
        double v = lambda_norm(phi, lam).value;
        CHECK(v >= prev - 1e-12);
        // continuity: a small lambda step moves the value by O(step)
        double nearby = lambda_norm(phi, lam + 1e-7).value;
        CHECK(std::abs(nearby - v) <= 1e-6 * std::max(1.0, v));
        prev = v;
    }
    std::mt19937_64 gen(5);
    Potential more(SiteSpec(2),
                   {{{0}, pauli_x()},
                    {{0, 1}, 0.5 * kron(sz(), sz())},
                    {{0, 1}, random_hermitian(4, gen)}});
    for (double lam : {0.3, 1.0, 3.0})
        CHECK(lambda_norm(more, lam).value >= lambda_norm(phi, lam).value - 1e-12);
}

TEST_CASE("group_velocity: calculus oracle for a single nearest-neighbor term") {
    // ‖Φ‖_λ = c e^λ gives f(λ) = c e^λ/λ, minimized at λ = 1 with value c·e.
    Potential phi(SiteSpec(2), {{{0, 1}, kron(sz(), sz())}});
    double c = 2.0 * 16.0 * 1.0;
    GroupVelocity v = group_velocity(phi);
    CHECK(v.lambda_star == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(v.value == doctest::Approx(c * std::exp(1.0)).epsilon(1e-9));
    CHECK(v.report.grid_certificate);
}

TEST_CASE("group_velocity: Ising h=J=1 is 32e") {
    GroupVelocity v = group_velocity(ising_potential(1.0, 1.0));
    CHECK(v.value == doctest::Approx(32.0 * std::exp(1.0)).epsilon(1e-9));
    CHECK(v.lambda_star == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("group_velocity: on-site-only potential has velocity zero") {
    GroupVelocity v = group_velocity(onsite_potential(1.0));
    CHECK(v.value == 0.0);
    CHECK(std::isinf(v.lambda_star));
    Potential empty(SiteSpec(2), {});
    CHECK_THROWS_AS(group_velocity(empty), std::domain_error);
}

TEST_CASE("local_hamiltonian: two-site Ising assembly") {
    Potential phi = ising_potential(1.0, 1.0);
    LocalOperator h = local_hamiltonian(phi, Window(0, 1), Boundary::open);
    MatrixXcd expected = kron(sx(), MatrixXcd::Identity(2, 2)) +
                         kron(MatrixXcd::Identity(2, 2), sx()) + kron(sz(), sz());
    CHECK((h.matrix() - expected).norm() < 1e-14);
}

TEST_CASE("local_hamiltonian: empty potential gives the zero operator") {
    Potential empty(SiteSpec(2), {});
    LocalOperator h = local_hamiltonian(empty, Window(-1, 1), Boundary::open);
    CHECK(h.matrix().norm() == 0.0);
}

TEST_CASE("local_hamiltonian: on-site spectrum is a Kronecker sum") {
    std::mt19937_64 gen(9);
    MatrixXcd m = random_hermitian(2, gen);
    Potential phi(SiteSpec(2), {{{0}, m}});
    LocalOperator h = local_hamiltonian(phi, Window(0, 2), Boundary::open);
    linalg::Eigh e = linalg::eigh(h.matrix());
    linalg::Eigh single = linalg::eigh(m);
    std::vector<double> sums;
    for (long i = 0; i < 2; ++i)
        for (long j = 0; j < 2; ++j)
            for (long k = 0; k < 2; ++k)
                sums.push_back(single.eigenvalues[i] + single.eigenvalues[j] +
                               single.eigenvalues[k]);
    std::sort(sums.begin(), sums.end());
    for (long i = 0; i < 8; ++i)
        CHECK(e.eigenvalues[i] == doctest::Approx(sums[i]).epsilon(1e-10));
}

TEST_CASE("local_hamiltonian: hermitian, periodic wrap and shift covariance") {
    std::mt19937_64 gen(21);
    Potential phi = random_potential(gen);
    LocalOperator h = local_hamiltonian(phi, Window(-2, 2), Boundary::periodic);
    CHECK((h.matrix() - h.matrix().adjoint()).norm() < 1e-12);

    // cyclic-shift conjugation leaves the periodic Hamiltonian invariant
    const long n = 5, d = 2, dim = 32;
    std::vector<long> perm(dim);
    for (long idx = 0; idx < dim; ++idx) {
        long dig[5], t = idx;
        for (long p = n; p-- > 0;) { dig[p] = t % d; t /= d; }
        long out = 0;
        for (long p = 0; p < n; ++p)
            out += dig[p] * linalg::ipow(d, n - 1 - (p + 1) % n);
        perm[idx] = out;
    }
    MatrixXcd shifted(dim, dim);
    for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c) shifted(perm[r], perm[c]) = h.matrix()(r, c);
    CHECK((shifted - h.matrix()).norm() < 1e-12);

    CHECK_THROWS_AS(local_hamiltonian(phi, Window(0, 0), Boundary::periodic),
                    std::domain_error);
}

TEST_CASE("local_hamiltonian: window smaller than a term just drops it") {
    Potential phi = ising_potential(1.0, 1.0);
    LocalOperator h = local_hamiltonian(phi, Window(0, 0), Boundary::open);
    CHECK((h.matrix() - sx()).norm() < 1e-14); // only the field term fits
}

TEST_CASE("grid certificate: refined minimum is below every grid sample") {
    std::mt19937_64 gen(33);
    for (int rep = 0; rep < 3; ++rep) {
        Potential phi = random_potential(gen);
        GroupVelocity v = group_velocity(phi);
        for (double fv : v.report.grid_values) CHECK(v.value <= fv * (1 + 1e-12));
    }
}

TEST_CASE("potential serialization: bit-exact round trip") {
    std::mt19937_64 gen(41);
    Potential phi = random_potential(gen);
    nlohmann::json j = potential_to_json(phi);
    std::string text = j.dump();
    Potential back = potential_from_json(nlohmann::json::parse(text));
    REQUIRE(back.terms().size() == phi.terms().size());
    for (size_t k = 0; k < phi.terms().size(); ++k) {
        CHECK(back.terms()[k].support == phi.terms()[k].support);
        const MatrixXcd& a = phi.terms()[k].matrix;
        const MatrixXcd& b = back.terms()[k].matrix;
        REQUIRE(a.rows() == b.rows());
        CHECK(std::memcmp(a.data(), b.data(), sizeof(cxd) * a.size()) == 0);
    }
}

TEST_CASE("potential validation: non-Hermitian and bad anchors are rejected") {
    std::mt19937_64 gen(43);
    CHECK_THROWS_AS(Potential(SiteSpec(2), {{{0}, random_matrix(2, gen)}}),
                    validation_error);
    CHECK_THROWS_AS(Potential(SiteSpec(2), {{{1, 2}, random_hermitian(4, gen)}}),
                    validation_error);
}
