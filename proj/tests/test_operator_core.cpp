#include <doctest.h>

#include "qde/dynamics.hpp"
#include "qde/operator_core.hpp"
#include "test_support.hpp"

using namespace qde;
using namespace qde::testing;

namespace {
const SiteSpec kQubit(2);

LocalOperator single(const MatrixXcd& m, long site = 0) {
    return LocalOperator(Window::site(site), kQubit, m);
}
} // namespace

TEST_CASE("embed: identity stays identity") {
    LocalOperator id = LocalOperator::identity(Window::site(0), kQubit);
    LocalOperator big = embed(id, Window(-1, 1));
    CHECK(big.dim() == 8);
    CHECK((big.matrix() - MatrixXcd::Identity(8, 8)).norm() == doctest::Approx(0.0));
}

TEST_CASE("embed: consistency under two-step embedding") {
    std::mt19937_64 gen(11);
    LocalOperator a = single(random_matrix(2, gen));
    LocalOperator two_step = embed(embed(a, Window(0, 1)), Window(0, 2));
    LocalOperator one_step = embed(a, Window(0, 2));
    CHECK((two_step.matrix() - one_step.matrix()).norm() < 1e-14);
}

TEST_CASE("embed: sigma_z on the left qubit of a pair") {
    LocalOperator z = single(sz());
    LocalOperator e = embed(z, Window(0, 1));
    MatrixXcd expected = MatrixXcd::Zero(4, 4);
    expected.diagonal() << 1, 1, -1, -1;
    CHECK((e.matrix() - expected).norm() < 1e-15);
}

TEST_CASE("embed: containment violation throws") {
    LocalOperator a = single(sz(), 5);
    CHECK_THROWS_AS(embed(a, Window(0, 1)), containment_error);
}

TEST_CASE("translate: shifts the window, keeps the matrix, composes") {
    std::mt19937_64 gen(3);
    LocalOperator a = single(random_matrix(2, gen));
    LocalOperator t = translate(a, 3);
    CHECK(t.window() == Window::site(3));
    CHECK((t.matrix() - a.matrix()).norm() == 0.0);
    LocalOperator back = translate(translate(a, 1), -1);
    CHECK(back.window() == a.window());
    CHECK((back.matrix() - a.matrix()).norm() == 0.0);
}

TEST_CASE("translate: disjoint supports commute") {
    std::mt19937_64 gen(5);
    LocalOperator a = single(random_matrix(2, gen));
    LocalOperator b = single(random_matrix(2, gen));
    LocalOperator c = commutator(translate(a, 5), b);
    CHECK(operator_norm(c) < 1e-14);
}

TEST_CASE("commutator: 2x2 Pauli algebra") {
    LocalOperator c = commutator(single(sz()), single(sx()));
    MatrixXcd expected = 2.0 * cxd(0, 1) * sy();
    CHECK((c.matrix() - expected).norm() < 1e-15);
    CHECK(operator_norm(commutator(single(sz()), single(sz()))) == doctest::Approx(0.0));
}

TEST_CASE("adjoint is an involution") {
    std::mt19937_64 gen(7);
    LocalOperator a(Window(0, 1), kQubit, random_matrix(4, gen));
    CHECK((adjoint(adjoint(a)).matrix() - a.matrix()).norm() == 0.0);
}

TEST_CASE("mul: site dimension mismatch is rejected") {
    LocalOperator a = single(sz());
    LocalOperator b(Window::site(0), SiteSpec(3), MatrixXcd::Identity(3, 3));
    CHECK_THROWS_AS(mul(a, b), incompatibility_error);
}

TEST_CASE("operator_norm: identity, tensor of paulis, homogeneity") {
    CHECK(operator_norm(LocalOperator::identity(Window(0, 2), kQubit)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    LocalOperator zz(Window(0, 1), kQubit, kron(sz(), sz()));
    CHECK(operator_norm(zz) == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 gen(13);
    LocalOperator a(Window(0, 1), kQubit, random_matrix(4, gen));
    cxd c(1.7, -0.3);
    CHECK(operator_norm(scale(c, a)) ==
          doctest::Approx(std::abs(c) * operator_norm(a)).epsilon(1e-10));
}

TEST_CASE("conditional_expectation: product case and identity") {
    std::mt19937_64 gen(17);
    MatrixXcd ma = random_matrix(2, gen), mb = random_matrix(2, gen);
    LocalOperator ab(Window(0, 1), kQubit, kron(ma, mb));
    LocalOperator reduced = conditional_expectation(ab, Window::site(0));
    MatrixXcd expected = ma * (mb.trace() / 2.0);
    CHECK((reduced.matrix() - expected).norm() < 1e-14);

    LocalOperator id = LocalOperator::identity(Window(-1, 1), kQubit);
    LocalOperator rid = conditional_expectation(id, Window::site(0));
    CHECK((rid.matrix() - MatrixXcd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("conditional_expectation: projection of norm one, idempotent") {
    std::mt19937_64 gen(19);
    for (int rep = 0; rep < 5; ++rep) {
        LocalOperator a(Window(0, 2), kQubit, random_matrix(8, gen));
        LocalOperator e1 = conditional_expectation(a, Window(0, 1));
        LocalOperator e2 = conditional_expectation(embed(e1, a.window()), Window(0, 1));
        CHECK((e1.matrix() - e2.matrix()).norm() < 1e-12);
        CHECK(operator_norm(e1) <= operator_norm(a) + 1e-10);
    }
}

TEST_CASE("conditional_expectation: local-approximation error within the site sum") {
    // ‖A - E(A)‖ ≤ Σ_{x outside keep} F_x(A), with the upper bounds of the
    // localization profile on the large side.
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 3; ++rep) {
        LocalOperator a(Window(0, 2), kQubit, random_matrix(8, gen));
        Window keep(0, 1);
        double lhs = operator_norm(sub(embed(a, a.window()),
                                       embed(conditional_expectation(a, keep), a.window())));
        ProfileOptions opt;
        opt.want_lower = false;
        LocalizationProfile prof = localization_profile(a, a.window(), opt);
        double rhs = 0.0;
        for (const auto& [site, bounds] : prof.values)
            if (!keep.contains_site(site)) rhs += bounds.upper;
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("C*-identity on random operators up to three sites") {
    std::mt19937_64 gen(29);
    for (long sites = 1; sites <= 3; ++sites) {
        LocalOperator a(Window(0, sites - 1), kQubit,
                        random_matrix(linalg::ipow(2, sites), gen));
        double lhs = operator_norm(mul(adjoint(a), a));
        double rhs = operator_norm(a);
        CHECK(lhs == doctest::Approx(rhs * rhs).epsilon(1e-9));
    }
}

TEST_CASE("embedding is a unital *-homomorphism") {
    std::mt19937_64 gen(31);
    Window big(-1, 2);
    for (int rep = 0; rep < 4; ++rep) {
        LocalOperator a(Window(0, 1), kQubit, random_matrix(4, gen));
        LocalOperator b(Window(0, 1), kQubit, random_matrix(4, gen));
        CHECK((embed(mul(a, b), big).matrix() -
               mul(embed(a, big), embed(b, big)).matrix())
                  .norm() < 1e-12);
        CHECK((embed(adjoint(a), big).matrix() - adjoint(embed(a, big)).matrix()).norm() <
              1e-14);
        CHECK(operator_norm(embed(a, big)) ==
              doctest::Approx(operator_norm(a)).epsilon(1e-10));
    }
}

TEST_CASE("translation covariance of the norm") {
    std::mt19937_64 gen(37);
    LocalOperator a(Window(0, 1), kQubit, random_matrix(4, gen));
    CHECK(operator_norm(translate(a, -4)) ==
          doctest::Approx(operator_norm(a)).epsilon(1e-12));
}

TEST_CASE("dimension cap is enforced") {
    long saved = limits::max_dimension();
    limits::set_max_dimension(8);
    CHECK_THROWS_AS(LocalOperator::identity(Window(0, 3), kQubit), resource_error);
    limits::set_max_dimension(saved);
}
