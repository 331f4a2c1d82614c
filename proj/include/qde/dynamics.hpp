#pragma once

#include "qde/hamiltonian.hpp"
#include "qde/operator_core.hpp"

#include <map>
#include <optional>
#include <vector>

namespace qde {

// Heisenberg evolution α_t(A) = e^{iHt} A e^{-iHt} at finite volume, via the
// stored eigendecomposition of H. Immutable and shareable across threads.
class Evolver {
public:
    explicit Evolver(LocalOperator hamiltonian);

    const Window& window() const { return h_.window(); }
    const SiteSpec& site_spec() const { return h_.site_spec(); }
    const LocalOperator& hamiltonian() const { return h_; }
    const MatrixXcd& eigenbasis() const { return basis_; }
    const VectorXd& eigenvalues() const { return evals_; }

    // e^{iHt}
    MatrixXcd propagator(double t) const;

private:
    LocalOperator h_;
    MatrixXcd basis_;
    VectorXd evals_;
};

LocalOperator evolve(const Evolver& ev, const LocalOperator& a, double t);

// Localization functional estimates. F_x(A) = sup over unit-norm single-site
// perturbations at x of the commutator norm. Reported as a rigorous
// (lower, upper) pair: the upper bound is the matrix-unit basis sum, the
// lower bound the best explicit witness found.
struct SiteBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct LocalizationProfile {
    Window ambient;
    std::map<long, SiteBounds> values;
};

struct ProfileOptions {
    int random_probes = 64;
    int ascent_steps = 20;
    unsigned long seed = 20240531;
    bool want_lower = true; // upper bounds only when false (much cheaper)
};

LocalizationProfile localization_profile(const LocalOperator& a, const Window& ambient,
                                         const ProfileOptions& opt = {});

// ‖α_t^{[-R,R]}(a) - α_t^{[-R_max,R_max]}(a)‖ per radius; the largest radius
// acts as the infinite-volume surrogate.
struct ConvergenceRow {
    long radius = 0;
    double error = 0.0;
};
std::vector<ConvergenceRow> convergence_in_volume(const Potential& phi,
                                                  const LocalOperator& a, double t,
                                                  const std::vector<long>& radii);

// Smallest integer R strictly exceeding
//   L + (2‖Φ‖_λ/λ)|t|
//     + (1/λ){ log(2e^{-λ}/(1-e^{-λ})) + 4(2L+1)log(N+1) + log(2L+1) - log ε₂ }.
long lemma2_radius(long L, double t, double eps2, double lambda, const Potential& phi);

// Per-radius comparison of the actual truncation error against the tightest
// ε₂ the locality lemma certifies at that radius (the radius formula inverted
// for ε₂). Rows with certified ε₂ > 1 are vacuous.
struct Lemma2Row {
    long radius = 0;
    double actual_error = 0.0;
    double certified_eps2 = 0.0;
    bool vacuous = true;
    bool satisfied = true; // actual ≤ certified·‖a‖ whenever non-vacuous
};

struct Lemma2Report {
    std::vector<Lemma2Row> rows;
    double lambda = 0.0;
    double t = 0.0;
    long L = 0;
    double a_norm = 0.0;
    double requested_eps2 = 0.0;
    long radius_for_requested = 0;
    bool all_satisfied = true;
};

Lemma2Report lemma2_check(const Potential& phi, const LocalOperator& a, double t,
                          double eps2, double lambda, long R_max);

// Light-cone map: exact commutator norms ‖[α_t(a), τ_x(b)]‖ on a (t, x) grid,
// with the companion analytic bound min_λ 2‖a‖‖b‖ e^{-|x-c|λ + 2|t|‖Φ‖_λ}.
// Cells where the bound exceeds 2‖a‖‖b‖ are vacuous.
struct ConeMap {
    std::vector<double> times;
    std::vector<long> xs;
    Eigen::MatrixXd values;  // row per time
    Eigen::MatrixXd bounds;
    double vacuous_level = 0.0; // 2‖a‖‖b‖
    bool all_bounded = true;    // value ≤ bound on every non-vacuous cell
};

ConeMap cone_map(const Potential& phi, const LocalOperator& a,
                 const LocalOperator& b_site, const std::vector<double>& t_grid,
                 const std::vector<long>& x_grid, const Window& window);

} // namespace qde
