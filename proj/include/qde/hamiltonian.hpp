#pragma once

#include "qde/operator_core.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace qde {

// One anchored interaction term. `support` is the subset X of sites the term
// acts on, normalized so support.front() == 0 and sorted ascending; `matrix`
// acts on those sites in that order (dimension local_dim^|X|) and must be
// Hermitian. Translates of the term are generated structurally.
struct PotentialTerm {
    std::vector<long> support;
    MatrixXcd matrix;

    long diameter() const { return support.back(); } // D(X): 0 ∈ X, max X = back
};

// Translation-invariant finite-range potential.
class Potential {
public:
    Potential(SiteSpec s, std::vector<PotentialTerm> terms);

    const SiteSpec& site_spec() const { return site_; }
    const std::vector<PotentialTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    long range() const; // max diameter over terms, 0 if empty

    // Anchored term as a LocalOperator on [0, diameter].
    LocalOperator term_operator(size_t k) const;

private:
    SiteSpec site_;
    std::vector<PotentialTerm> terms_;
};

struct LambdaNorm {
    double lambda = 0.0;
    double value = 0.0;
};

// ‖Φ‖_λ = max over anchored terms of |X| (N+1)^{2|X|} e^{λ D(X)} ‖Φ(X)‖.
// Translation invariance collapses the supremum over all finite subsets to
// this finite maximum.
LambdaNorm lambda_norm(const Potential& phi, double lambda);

struct GroupVelocity {
    double value = 0.0;
    double lambda_star = 0.0; // +inf sentinel when all terms are on-site

    struct MethodReport {
        std::vector<double> grid_lambdas;
        std::vector<double> grid_values;   // f(λ) = ‖Φ‖_λ / λ
        double refined_lo = 0.0;
        double refined_hi = 0.0;
        bool grid_certificate = false;     // f(λ*) <= f(λ) at every grid point
    } report;
};

struct LambdaBracket {
    double min = 1e-3;
    double max = 50.0;
    int grid_points = 121;
};

// V(Φ) = inf_λ ‖Φ‖_λ/λ over the bracket: coarse log-spaced grid, then
// golden-section refinement around the grid minimum (|λ*| tolerance 1e-8).
GroupVelocity group_velocity(const Potential& phi, const LambdaBracket& bracket = {});

enum class Boundary { open, periodic };

// H_Λ = Σ over translates of anchored terms inside the window; periodic
// boundary additionally wraps supports modulo window.size.
LocalOperator local_hamiltonian(const Potential& phi, const Window& window,
                                Boundary boundary);

// Structured-text (JSON) serialization; bit-exact round trip.
nlohmann::json potential_to_json(const Potential& phi);
Potential potential_from_json(const nlohmann::json& j);
void save_potential(const Potential& phi, const std::string& path);
Potential load_potential(const std::string& path);

} // namespace qde
