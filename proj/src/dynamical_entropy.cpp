#include "qde/dynamical_entropy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace qde {

Partition::Partition(Window w, SiteSpec s, std::vector<MatrixXcd> elements)
    : window_(w), site_(s), elems_(std::move(elements)) {
    if (elems_.empty())
        throw validation_error("Partition: needs at least one element");
    const long dim = linalg::ipow(site_.local_dim, window_.size());
    MatrixXcd sum = MatrixXcd::Zero(dim, dim);
    for (const auto& x : elems_) {
        if (x.rows() != dim || x.cols() != dim)
            throw validation_error("Partition: element dimension mismatch");
        sum += x.adjoint() * x;
    }
    residual_ = linalg::spectral_norm(sum - MatrixXcd::Identity(dim, dim));
    if (residual_ > 1e-10)
        throw validation_error("Partition: completeness residual " +
                               std::to_string(residual_));
}

Partition projective_partition(const LocalOperator& observable) {
    const MatrixXcd& m = observable.matrix();
    if ((m - m.adjoint()).norm() > 1e-10 * std::max(1.0, m.norm()))
        throw validation_error("projective_partition: observable not Hermitian");
    linalg::Eigh e = linalg::eigh(m);
    const long dim = m.rows();
    double span = std::max(1.0, e.eigenvalues[dim - 1] - e.eigenvalues[0]);
    std::vector<MatrixXcd> projs;
    long start = 0;
    for (long i = 1; i <= dim; ++i) {
        if (i == dim || e.eigenvalues[i] - e.eigenvalues[i - 1] > 1e-10 * span) {
            MatrixXcd block = e.eigenvectors.middleCols(start, i - start);
            projs.push_back(block * block.adjoint());
            start = i;
        }
    }
    return Partition(observable.window(), observable.site_spec(), std::move(projs));
}

Partition weighted_unitary_partition(const std::vector<double>& probs,
                                     const std::vector<MatrixXcd>& unitaries,
                                     const Window& w, SiteSpec s) {
    if (probs.size() != unitaries.size() || probs.empty())
        throw validation_error("weighted_unitary_partition: size mismatch");
    double total = 0.0;
    for (double p : probs) {
        if (p < -1e-15) throw validation_error("weighted_unitary_partition: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw validation_error("weighted_unitary_partition: probabilities sum to " +
                               std::to_string(total));
    const long dim = linalg::ipow(s.local_dim, w.size());
    std::vector<MatrixXcd> elems;
    for (size_t i = 0; i < probs.size(); ++i) {
        const MatrixXcd& u = unitaries[i];
        if (u.rows() != dim || u.cols() != dim)
            throw validation_error("weighted_unitary_partition: unitary dimension mismatch");
        if ((u.adjoint() * u - MatrixXcd::Identity(dim, dim)).norm() > 1e-10 * dim)
            throw validation_error("weighted_unitary_partition: element not unitary");
        elems.push_back(std::sqrt(std::max(probs[i], 0.0)) * u);
    }
    return Partition(w, s, std::move(elems));
}

Partition random_partition(long z, const Window& w, SiteSpec s, unsigned long seed) {
    if (z < 1) throw validation_error("random_partition: Z must be >= 1");
    const long dim = linalg::ipow(s.local_dim, w.size());
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    MatrixXcd g(z * dim, dim);
    for (long i = 0; i < g.rows(); ++i)
        for (long j = 0; j < g.cols(); ++j) g(i, j) = cxd(nd(gen), nd(gen));
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(z * dim, dim);
    std::vector<MatrixXcd> elems;
    for (long i = 0; i < z; ++i) elems.push_back(q.middleRows(i * dim, dim));
    return Partition(w, s, std::move(elems));
}

// ---------------------------------------------------------------------------
// multi-time state
// ---------------------------------------------------------------------------

namespace {

MatrixXcd state_sqrt(const ChainState& state) {
    if (state.kind() == StateKind::tracial) {
        const long dim = state.dim();
        return MatrixXcd::Identity(dim, dim) / std::sqrt(static_cast<double>(dim));
    }
    linalg::Eigh e = linalg::eigh(state.rho());
    VectorXd root(e.eigenvalues.size());
    for (long i = 0; i < root.size(); ++i)
        root[i] = std::sqrt(std::max(e.eigenvalues[i], 0.0));
    return e.eigenvectors * root.asDiagonal() * e.eigenvectors.adjoint();
}

struct LevelValidation {
    MultiTimeState::Residuals residuals;
    double entropy = 0.0;
};

LevelValidation validate_gram(const MatrixXcd& g) {
    LevelValidation out;
    out.residuals.hermiticity = (g - g.adjoint()).norm();
    out.residuals.trace_deviation = std::abs(g.trace() - cxd(1.0, 0.0));
    linalg::Eigh e = linalg::eigh(g);
    out.residuals.min_eigenvalue = e.eigenvalues[0];
    if (out.residuals.hermiticity > 1e-10 ||
        out.residuals.min_eigenvalue < -1e-10 ||
        out.residuals.trace_deviation > 1e-9) {
        std::ostringstream msg;
        msg << "multi-time state invariants violated: hermiticity "
            << out.residuals.hermiticity << ", trace deviation "
            << out.residuals.trace_deviation << ", min eigenvalue "
            << out.residuals.min_eigenvalue;
        throw numerical_error(msg.str());
    }
    double s = 0.0;
    for (long i = 0; i < e.eigenvalues.size(); ++i) {
        double p = e.eigenvalues[i];
        if (p > 1e-14) s -= p * std::log(p);
    }
    out.entropy = std::max(s, 0.0);
    return out;
}

} // namespace

std::vector<MultiTimeState> build_multitime_family(const Partition& p, const Evolver& ev,
                                                   const ChainState& state, int M_max,
                                                   const MultiTimeOptions& opt) {
    if (M_max < 1)
        throw validation_error("build_multitime_family: M must be positive");
    if (!ev.window().contains(p.window()))
        throw containment_error("build_multitime_family: partition outside evolver window");
    if (!(state.window() == ev.window()))
        throw incompatibility_error("build_multitime_family: state must live on the evolver window");
    if (!(p.site_spec() == ev.site_spec()))
        throw incompatibility_error("build_multitime_family: site dimension mismatch");

    const long z = p.size();
    double zm = 1;
    for (int k = 0; k < M_max; ++k) {
        zm *= static_cast<double>(z);
        if (zm > static_cast<double>(opt.zm_cap))
            throw resource_error("build_multitime_family: Z^M exceeds cap " +
                                 std::to_string(opt.zm_cap));
    }

    const long d = p.site_spec().local_dim;
    const long n = ev.window().size();
    const long dim = linalg::ipow(d, n);
    const long pos = p.window().lo - ev.window().lo;
    const long psites = p.window().size();
    const long left = linalg::ipow(d, pos);
    const long right = linalg::ipow(d, n - pos - psites);

    // Peak workspace: two adjacent level arenas plus the dense temporary,
    // the propagator and the state square root.
    {
        double worst = 0;
        double cols = 1;
        for (int k = 0; k < M_max; ++k) {
            double next = cols * z;
            worst = std::max(worst, (k + 1 < M_max ? cols + next : cols) + 3.0);
            cols = next;
        }
        double bytes = worst * 16.0 * static_cast<double>(dim) * static_cast<double>(dim);
        if (bytes > static_cast<double>(opt.max_workspace_bytes))
            throw resource_error("build_multitime_family: workspace " +
                                 std::to_string(static_cast<long long>(bytes)) +
                                 " bytes exceeds cap");
    }

    // Each record vector is the suffix product
    //   x_{i_{M-1}} W^{-1} x_{i_{M-2}} ... W^{-1} x_{i_0} ρ^{1/2},
    // i.e. the Heisenberg chain with the common leading unitary W^{M-1}
    // dropped (it cancels in every inner product). ρ_M is the Gram matrix of
    // these vectors; its trace telescopes to 1 by completeness.
    const MatrixXcd w_inv = ev.propagator(-opt.t_step);
    const MatrixXcd rho_sqrt = state_sqrt(state);

    std::vector<MultiTimeState> family;
    MatrixXcd arena(dim * dim, z); // level 0: x_a ρ^{1/2}
    for (long a = 0; a < z; ++a) {
        Eigen::Map<MatrixXcd> node(arena.col(a).data(), dim, dim);
        linalg::apply_local_left(p.elements()[a], left, right, rho_sqrt, node);
    }

    for (int level = 0;; ++level) {
        MatrixXcd gram = arena.adjoint() * arena;
        LevelValidation val = validate_gram(gram);
        MultiTimeState st;
        st.M = level + 1;
        st.matrix = std::move(gram);
        st.entropy = val.entropy;
        st.residuals = val.residuals;
        family.push_back(std::move(st));
        if (level + 1 >= M_max) break;

        const long cur_cols = arena.cols();
        MatrixXcd next(dim * dim, cur_cols * z);
        MatrixXcd tmp(dim, dim);
        for (long j = 0; j < cur_cols; ++j) {
            Eigen::Map<const MatrixXcd> node(arena.col(j).data(), dim, dim);
            tmp.noalias() = w_inv * node;
            for (long b = 0; b < z; ++b) {
                // child index appends the new digit as the fastest one,
                // keeping i_0 the slowest
                Eigen::Map<MatrixXcd> child(next.col(j * z + b).data(), dim, dim);
                linalg::apply_local_left(p.elements()[b], left, right, tmp, child);
            }
        }
        arena = std::move(next);
    }
    return family;
}

MultiTimeState build_multitime_state(const Partition& p, const Evolver& ev,
                                     const ChainState& state, int M,
                                     const MultiTimeOptions& opt) {
    auto family = build_multitime_family(p, ev, state, M, opt);
    return std::move(family.back());
}

bool dynamics_preserves_window(const Evolver& ev, const Window& w, double t_step,
                               double tol) {
    // Single-site matrix units generate the window algebra; an automorphism
    // maps the algebra into itself iff it maps every generator into it.
    for (long x = w.lo; x <= w.hi; ++x) {
        for (long i = 0; i < ev.site_spec().local_dim; ++i)
            for (long j = 0; j < ev.site_spec().local_dim; ++j) {
                LocalOperator e = LocalOperator::matrix_unit(x, ev.site_spec(), i, j);
                LocalOperator evolved = evolve(ev, e, t_step);
                LocalOperator projected = embed(conditional_expectation(evolved, w),
                                                ev.window());
                if (linalg::spectral_norm(evolved.matrix() - projected.matrix()) > tol)
                    return false;
            }
    }
    return true;
}

EntropyRateEstimate entropy_rate(const Partition& p, const Evolver& ev,
                                 const ChainState& state, int M_max,
                                 const MultiTimeOptions& opt) {
    auto family = build_multitime_family(p, ev, state, M_max, opt);
    EntropyRateEstimate est;
    for (const auto& st : family) est.entropies.push_back(st.entropy);
    est.rate = est.entropies.back() / static_cast<double>(M_max);
    est.diff_rate = M_max >= 2
                        ? est.entropies[M_max - 1] - est.entropies[M_max - 2]
                        : est.entropies[0];
    est.support_invariant =
        opt.known_support_invariant.has_value()
            ? *opt.known_support_invariant
            : dynamics_preserves_window(ev, p.window(), opt.t_step);
    // With an invariant support window, S(ρ_M) is bounded uniformly in M by
    // the fixed window entropy cap, so the rate is exactly 0 in the limit.
    est.bound_estimate = est.support_invariant ? 0.0 : std::max(0.0, est.diff_rate);
    std::ostringstream desc;
    desc << "Z=" << p.size() << " on [" << p.window().lo << "," << p.window().hi << "]";
    est.partition_description = desc.str();
    return est;
}

// ---------------------------------------------------------------------------
// family construction and the supremum search
// ---------------------------------------------------------------------------

std::string PartitionFamilySpec::label() const {
    switch (kind) {
        case Kind::projective: return "projective";
        case Kind::weighted_unitary: return "weighted-unitary";
        case Kind::random: return "random";
        case Kind::file: return "file";
    }
    return "?";
}

Partition make_partition(const PartitionFamilySpec& spec) {
    switch (spec.kind) {
        case PartitionFamilySpec::Kind::projective:
            if (!spec.observable)
                throw validation_error("make_partition: projective family needs an observable");
            return projective_partition(*spec.observable);
        case PartitionFamilySpec::Kind::weighted_unitary:
            return weighted_unitary_partition(spec.probs, spec.unitaries, spec.window,
                                              spec.site);
        case PartitionFamilySpec::Kind::random:
            return random_partition(spec.z, spec.window, spec.site, spec.seed);
        case PartitionFamilySpec::Kind::file:
            return load_partition(spec.path);
    }
    throw validation_error("make_partition: unknown family");
}

namespace {

MatrixXcd random_hermitian(long dim, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    MatrixXcd g(dim, dim);
    for (long i = 0; i < dim; ++i)
        for (long j = 0; j < dim; ++j) g(i, j) = cxd(nd(gen), nd(gen));
    return 0.5 * (g + g.adjoint().eval());
}

MatrixXcd unitary_exp(const MatrixXcd& hermitian, double scale) {
    linalg::Eigh e = linalg::eigh(hermitian);
    VectorXcd phase(e.eigenvalues.size());
    for (long i = 0; i < phase.size(); ++i)
        phase[i] = std::exp(cxd(0.0, scale * e.eigenvalues[i]));
    return e.eigenvectors * phase.asDiagonal() * e.eigenvectors.adjoint();
}

PartitionFamilySpec perturb(const PartitionFamilySpec& spec, std::mt19937_64& gen) {
    PartitionFamilySpec out = spec;
    std::normal_distribution<double> nd;
    switch (spec.kind) {
        case PartitionFamilySpec::Kind::projective: {
            const MatrixXcd& m = spec.observable->matrix();
            MatrixXcd perturbed =
                m + spec.perturbation * std::max(1.0, m.norm()) *
                        random_hermitian(m.rows(), gen) / static_cast<double>(m.rows());
            out.observable = LocalOperator(spec.observable->window(),
                                           spec.observable->site_spec(), perturbed);
            break;
        }
        case PartitionFamilySpec::Kind::weighted_unitary: {
            double total = 0.0;
            for (auto& pr : out.probs) {
                pr = std::max(0.0, pr + spec.perturbation * 0.2 * nd(gen));
                total += pr;
            }
            if (total <= 0.0) { out.probs = spec.probs; total = 1.0; }
            for (auto& pr : out.probs) pr /= total;
            for (auto& u : out.unitaries)
                u = (u * unitary_exp(random_hermitian(u.rows(), gen), spec.perturbation))
                        .eval();
            break;
        }
        case PartitionFamilySpec::Kind::random:
            out.seed = gen();
            break;
        case PartitionFamilySpec::Kind::file:
            break; // a file is a single candidate
    }
    return out;
}

} // namespace

SupSearchResult sup_search(const Evolver& ev, const ChainState& state,
                           const PartitionFamilySpec& family, int M_max, int budget,
                           unsigned long seed, const MultiTimeOptions& opt) {
    if (budget < 1)
        throw validation_error("sup_search: budget must be >= 1");
    std::mt19937_64 gen(seed);

    MultiTimeOptions local = opt;
    if (!local.known_support_invariant)
        local.known_support_invariant =
            dynamics_preserves_window(ev, family.window, opt.t_step);

    std::optional<SupSearchResult> result;
    PartitionFamilySpec candidate = family;
    for (int b = 0; b < budget; ++b) {
        Partition p = make_partition(candidate);
        EntropyRateEstimate est = entropy_rate(p, ev, state, M_max, local);
        double objective = est.bound_estimate;
        if (!result) {
            result = SupSearchResult{est, p, {objective}};
        } else {
            result->evaluated.push_back(objective);
            if (objective > result->best.bound_estimate) {
                result->best = est;
                result->best_partition = p;
            }
        }
        if (b + 1 < budget) candidate = perturb(family, gen);
    }
    return *result;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const MatrixXcd& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (long i = 0; i < m.rows(); ++i) {
        nlohmann::json rrow = nlohmann::json::array(), irow = nlohmann::json::array();
        for (long j = 0; j < m.cols(); ++j) {
            rrow.push_back(m(i, j).real());
            irow.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rrow));
        im.push_back(std::move(irow));
    }
    return nlohmann::json{{"re", std::move(re)}, {"im", std::move(im)}};
}

MatrixXcd matrix_from_json(const nlohmann::json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const long rows = static_cast<long>(re.size());
    const long cols = rows ? static_cast<long>(re[0].size()) : 0;
    MatrixXcd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long jj = 0; jj < cols; ++jj)
            m(i, jj) = cxd(re[i][jj].get<double>(), im[i][jj].get<double>());
    return m;
}

} // namespace

nlohmann::json partition_to_json(const Partition& p) {
    nlohmann::json elems = nlohmann::json::array();
    for (const auto& x : p.elements()) elems.push_back(matrix_to_json(x));
    return nlohmann::json{{"site_dim", p.site_spec().local_dim},
                          {"window", {{"lo", p.window().lo}, {"hi", p.window().hi}}},
                          {"elements", std::move(elems)}};
}

Partition partition_from_json(const nlohmann::json& j) {
    SiteSpec s(j.at("site_dim").get<long>());
    Window w(j.at("window").at("lo").get<long>(), j.at("window").at("hi").get<long>());
    std::vector<MatrixXcd> elems;
    for (const auto& ej : j.at("elements")) elems.push_back(matrix_from_json(ej));
    return Partition(w, s, std::move(elems));
}

void save_partition(const Partition& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_partition: cannot open " + path);
    out << partition_to_json(p).dump(2) << '\n';
}

Partition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_partition: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return partition_from_json(j);
}

} // namespace qde
