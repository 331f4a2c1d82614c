#pragma once

#include "qde/dynamics.hpp"
#include "qde/states.hpp"

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

namespace qde {

// Operational partition of unity: Z operators {x_i} on a common window with
// Σ x_i* x_i = 1. Immutable after construction.
class Partition {
public:
    Partition(Window w, SiteSpec s, std::vector<MatrixXcd> elements);

    const Window& window() const { return window_; }
    const SiteSpec& site_spec() const { return site_; }
    const std::vector<MatrixXcd>& elements() const { return elems_; }
    long size() const { return static_cast<long>(elems_.size()); }
    double completeness_residual() const { return residual_; }

private:
    Window window_;
    SiteSpec site_;
    std::vector<MatrixXcd> elems_;
    double residual_ = 0.0;
};

// Eigenprojectors of a Hermitian local observable (eigenvalues clustered at
// relative gap 1e-10).
Partition projective_partition(const LocalOperator& observable);

// {√p_i U_i} with probabilities p summing to 1 and unitaries U_i on the window.
Partition weighted_unitary_partition(const std::vector<double>& probs,
                                     const std::vector<MatrixXcd>& unitaries,
                                     const Window& w, SiteSpec s);

// Haar-like random isometry columns reshaped into Z Kraus operators;
// completeness is exact by construction.
Partition random_partition(long z, const Window& w, SiteSpec s, unsigned long seed);

nlohmann::json partition_to_json(const Partition& p);
Partition partition_from_json(const nlohmann::json& j);
void save_partition(const Partition& p, const std::string& path);
Partition load_partition(const std::string& path);

// The Z^M x Z^M multi-time measurement-record state and its entropy.
// Multi-index convention: i_0 is the slowest (most significant) digit.
struct MultiTimeState {
    int M = 1;
    MatrixXcd matrix;
    double entropy = 0.0;
    struct Residuals {
        double hermiticity = 0.0;
        double trace_deviation = 0.0;
        double min_eigenvalue = 0.0;
    } residuals;
};

struct MultiTimeOptions {
    long zm_cap = 4096;                   // cap on Z^M
    double t_step = 1.0;                  // α = evolve(·, t_step)
    long max_workspace_bytes = 3000000000L;
    // When the caller already knows whether one evolution step maps the
    // partition window's algebra into itself, the generator check is skipped.
    std::optional<bool> known_support_invariant;
};

MultiTimeState build_multitime_state(const Partition& p, const Evolver& ev,
                                     const ChainState& state, int M,
                                     const MultiTimeOptions& opt = {});

// All of ρ_1..ρ_{M_max} from one pass (each level of the shared product tree
// is the Gram of the next record length).
std::vector<MultiTimeState> build_multitime_family(const Partition& p, const Evolver& ev,
                                                   const ChainState& state, int M_max,
                                                   const MultiTimeOptions& opt = {});

// Exact test: does α_{t_step} map A(window) into itself? Checked on the
// single-site matrix-unit generators of the window algebra. When true, every
// ρ_M has entropy bounded by the fixed window cap, so the rate is provably 0.
bool dynamics_preserves_window(const Evolver& ev, const Window& w, double t_step,
                               double tol = 1e-12);

struct EntropyRateEstimate {
    std::vector<double> entropies; // S(ρ_1)..S(ρ_{M_max})
    double rate = 0.0;             // S(ρ_{M_max})/M_max
    double diff_rate = 0.0;        // S(ρ_{M_max}) - S(ρ_{M_max-1})
    bool support_invariant = false;
    // Estimate used on the theorem's left-hand side: exactly 0 when the
    // dynamics provably never enlarges the partition's support, otherwise the
    // clamped increment estimator.
    double bound_estimate = 0.0;
    std::string partition_description;
};

EntropyRateEstimate entropy_rate(const Partition& p, const Evolver& ev,
                                 const ChainState& state, int M_max,
                                 const MultiTimeOptions& opt = {});

// Candidate-family specification for the supremum search.
struct PartitionFamilySpec {
    enum class Kind { projective, weighted_unitary, random, file };
    Kind kind = Kind::projective;
    SiteSpec site{2};
    Window window{0, 0};
    std::optional<LocalOperator> observable;  // projective
    std::vector<double> probs;                // weighted-unitary
    std::vector<MatrixXcd> unitaries;
    long z = 2;                               // random
    unsigned long seed = 1;
    std::string path;                         // file
    double perturbation = 0.2;
    std::string label() const;
};

Partition make_partition(const PartitionFamilySpec& spec);

struct SupSearchResult {
    EntropyRateEstimate best;
    Partition best_partition;
    std::vector<double> evaluated; // objective per candidate, in evaluation order
};

// Seeded random search plus coordinate perturbation over the family's
// parameters; deterministic given the seed. budget = number of candidates.
SupSearchResult sup_search(const Evolver& ev, const ChainState& state,
                           const PartitionFamilySpec& family, int M_max, int budget,
                           unsigned long seed, const MultiTimeOptions& opt = {});

} // namespace qde
