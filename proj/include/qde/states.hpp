#pragma once

#include "qde/dynamics.hpp"
#include "qde/hamiltonian.hpp"

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

namespace qde {

enum class StateKind { tracial, product, gibbs };

// Density matrix on a window. Hermitian, PSD, unit trace (validated at
// construction). Immutable.
class ChainState {
public:
    ChainState(Window w, SiteSpec s, MatrixXcd rho, StateKind kind);

    const Window& window() const { return window_; }
    const SiteSpec& site_spec() const { return site_; }
    const MatrixXcd& rho() const { return rho_; }
    StateKind kind() const { return kind_; }
    long dim() const { return rho_.rows(); }

private:
    Window window_;
    SiteSpec site_;
    MatrixXcd rho_;
    StateKind kind_;
};

// -Σ p log p over eigenvalues (natural log); p ≤ 1e-14 contributes zero.
// Throws validation_error if |trace - 1| > 1e-8.
double von_neumann_entropy(const MatrixXcd& rho);
double von_neumann_entropy(const ChainState& state);

ChainState make_tracial(SiteSpec s, const Window& w);
ChainState make_product(const MatrixXcd& single_site, SiteSpec s, const Window& w);
ChainState make_gibbs(const Potential& phi, const Window& w, double beta,
                      Boundary boundary);

// ω(A): expectation of a local operator, auto-embedded into the state window.
cxd expectation(const ChainState& state, const LocalOperator& a);

// Restriction of the state to a subwindow (partial trace, no normalization
// needed: trace is preserved).
ChainState restrict(const ChainState& state, const Window& keep);

// S(ω|Λ)/|Λ| across window sizes.
struct EntropyReport {
    std::vector<long> sizes;
    std::vector<double> entropy;
    std::vector<double> per_site;
    double mean_entropy_estimate = 0.0; // S/|Λ| at the largest size
    bool product_exact = true;          // per-site value size-independent (product/tracial)
};

struct StateFamilySpec {
    StateKind kind = StateKind::tracial;
    std::optional<MatrixXcd> single_site; // product
    double beta = 1.0;                    // gibbs
    Boundary boundary = Boundary::periodic;
};

EntropyReport mean_entropy(const StateFamilySpec& family, const Potential& phi,
                           SiteSpec s, const std::vector<long>& sizes);

// Trace-norm deviations from stationarity and translation invariance.
struct InvarianceReport {
    double time_deviation = 0.0;
    double shift_deviation = 0.0;
};

InvarianceReport invariance_check(const ChainState& state, const Evolver& ev,
                                  long shift, double t = 1.0);

nlohmann::json state_to_json(const ChainState& state);
ChainState state_from_json(const nlohmann::json& j);

} // namespace qde
