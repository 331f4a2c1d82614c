#pragma once

#include "qde/dynamical_entropy.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace qde {

// Built-in single-parameter-family spin-chain models.
Potential ising_potential(double h, double j, SiteSpec s = SiteSpec(2));
Potential xy_potential(double jx, double jy, SiteSpec s = SiteSpec(2));
Potential heisenberg_potential(double j, SiteSpec s = SiteSpec(2));
Potential onsite_potential(double c, SiteSpec s = SiteSpec(2));

// Single-qubit Pauli matrices (frequent observables in configs and tests).
MatrixXcd pauli_x();
MatrixXcd pauli_y();
MatrixXcd pauli_z();

struct ModelSpec {
    std::string name = "ising"; // ising | xy | heisenberg | onsite | file
    double h = 1.0, j = 1.0;    // ising
    double jx = 1.0, jy = 1.0;  // xy
    double c = 1.0;             // onsite
    std::string path;           // file
};

Potential make_model(const ModelSpec& spec);

struct ExperimentConfig {
    ModelSpec model;
    long radius = 3;
    Boundary boundary = Boundary::open;

    std::string state_kind = "tracial"; // tracial | product | gibbs
    double beta = 1.0;
    std::vector<double> product_diag;   // diagonal single-site state, optional

    std::string partition_family = "projective"; // projective | weighted_unitary | random | file
    std::string observable = "sz";               // projective: sx | sy | sz
    long partition_site = 0;
    long partition_z = 2;
    std::string partition_path;

    int m_max = 4;
    double t_step = 1.0;
    unsigned long seed = 12345;
    int budget = 1;
    long zm_cap = 4096;
    long max_workspace_bytes = 3000000000L;
    LambdaBracket lambda_bracket;

    std::vector<double> times{0.25, 0.5, 1.0}; // cone map time grid
    long x_min = -3, x_max = 3;                // cone map site grid

    std::vector<long> radii{1, 2, 3};          // volume-convergence radii

    struct Lemma2Config {
        long L = 0;
        std::vector<double> times{0.25, 0.5};
        std::vector<double> lambdas{0.5, 1.0};
        double eps2 = 0.5;
        long r_max = 3;
    } lemma2;

    std::vector<long> entropy_sizes{2, 3, 4, 5, 6};

    std::string out_dir = "out";
    std::vector<std::string> suites{"velocity", "converge", "lemma2",
                                    "cone",     "entropy",  "rate", "bound"};
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Both sides of the entropy-production bound, itemized.
struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double group_velocity_value = 0.0;
    double lambda_star = 0.0;
    double sigma = 0.0;
    double log_d = 0.0;
    bool hypotheses_met = true;
    bool support_invariant = false;
    InvarianceReport invariance;
    EntropyRateEstimate best_rate;
    std::string family;
};

BoundReport verify_bound(const ExperimentConfig& cfg);
// Same computation with the heavy shared pieces prebuilt by the caller.
BoundReport verify_bound(const ExperimentConfig& cfg, const Potential& phi,
                         const Evolver& ev, const ChainState& state);

struct SuiteItemResult {
    std::string name;
    bool ok = true;
    std::string message;
};

struct SuiteResult {
    std::vector<SuiteItemResult> items;
    std::vector<std::string> outputs;
    bool all_ok = true;
};

// Executes the configured items, writes CSVs, a JSON manifest and a plain
// text summary under cfg.out_dir. Deterministic given the config and seed.
SuiteResult run_suite(const ExperimentConfig& cfg);

// Shared helpers for drivers and tests.
PartitionFamilySpec partition_spec_from_config(const ExperimentConfig& cfg);
ChainState state_from_config(const ExperimentConfig& cfg, const Potential& phi,
                             const Window& w);
double localized_entropy_cap(const ChainState& state);
std::string format_csv_value(double v); // 12 significant digits

} // namespace qde
