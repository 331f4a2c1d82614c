#include "qde/states.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace qde {

ChainState::ChainState(Window w, SiteSpec s, MatrixXcd rho, StateKind kind)
    : window_(w), site_(s), rho_(std::move(rho)), kind_(kind) {
    const long dim = linalg::ipow(site_.local_dim, window_.size());
    if (rho_.rows() != dim || rho_.cols() != dim)
        throw validation_error("ChainState: dimension mismatch");
    double tr_dev = std::abs(rho_.trace() - cxd(1.0, 0.0));
    if (tr_dev > 1e-12)
        throw validation_error("ChainState: trace deviates by " + std::to_string(tr_dev));
    if ((rho_ - rho_.adjoint()).norm() > 1e-12 * std::max(1.0, rho_.norm()))
        throw validation_error("ChainState: not Hermitian");
    linalg::Eigh e = linalg::eigh(rho_);
    if (e.eigenvalues[0] < -1e-12)
        throw validation_error("ChainState: negative eigenvalue " +
                               std::to_string(e.eigenvalues[0]));
}

double von_neumann_entropy(const MatrixXcd& rho) {
    double tr_dev = std::abs(rho.trace() - cxd(1.0, 0.0));
    if (tr_dev > 1e-8)
        throw validation_error("von_neumann_entropy: trace deviates by " +
                               std::to_string(tr_dev));
    linalg::Eigh e = linalg::eigh(rho);
    double s = 0.0;
    for (long i = 0; i < e.eigenvalues.size(); ++i) {
        double p = e.eigenvalues[i];
        if (p > 1e-14) s -= p * std::log(p);
    }
    return std::max(s, 0.0);
}

double von_neumann_entropy(const ChainState& state) {
    return von_neumann_entropy(state.rho());
}

ChainState make_tracial(SiteSpec s, const Window& w) {
    const long dim = linalg::ipow(s.local_dim, w.size());
    MatrixXcd rho = MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
    return ChainState(w, s, std::move(rho), StateKind::tracial);
}

ChainState make_product(const MatrixXcd& single_site, SiteSpec s, const Window& w) {
    if (single_site.rows() != s.local_dim || single_site.cols() != s.local_dim)
        throw validation_error("make_product: single-site matrix has wrong dimension");
    if ((single_site - single_site.adjoint()).norm() > 1e-12)
        throw validation_error("make_product: single-site matrix not Hermitian");
    linalg::Eigh e = linalg::eigh(single_site);
    if (e.eigenvalues[0] < -1e-12)
        throw validation_error("make_product: single-site matrix not PSD");
    double tr = single_site.trace().real();
    if (std::abs(tr - 1.0) > 1e-12)
        throw validation_error("make_product: single-site trace != 1");

    MatrixXcd rho = MatrixXcd::Identity(1, 1);
    for (long i = 0; i < w.size(); ++i) {
        MatrixXcd next(rho.rows() * s.local_dim, rho.cols() * s.local_dim);
        for (long r = 0; r < rho.rows(); ++r)
            for (long c = 0; c < rho.cols(); ++c)
                next.block(r * s.local_dim, c * s.local_dim, s.local_dim, s.local_dim) =
                    rho(r, c) * single_site;
        rho = std::move(next);
    }
    return ChainState(w, s, std::move(rho), StateKind::product);
}

ChainState make_gibbs(const Potential& phi, const Window& w, double beta,
                      Boundary boundary) {
    LocalOperator h = local_hamiltonian(phi, w, boundary);
    linalg::Eigh e = linalg::eigh(h.matrix());
    // e^{-βH}/Z computed with the spectrum shifted by its minimum
    VectorXd shifted = e.eigenvalues.array() - e.eigenvalues.minCoeff();
    VectorXd weights(shifted.size());
    double z = 0.0;
    for (long i = 0; i < shifted.size(); ++i) {
        weights[i] = std::exp(-beta * shifted[i]);
        z += weights[i];
    }
    weights /= z;
    MatrixXcd rho = e.eigenvectors * weights.asDiagonal() * e.eigenvectors.adjoint();
    rho = 0.5 * (rho + rho.adjoint().eval());
    return ChainState(w, phi.site_spec(), std::move(rho), StateKind::gibbs);
}

cxd expectation(const ChainState& state, const LocalOperator& a) {
    if (!state.window().contains(a.window()))
        throw containment_error("expectation: operator outside state window");
    LocalOperator ea = embed(a, state.window());
    return (state.rho() * ea.matrix()).trace();
}

ChainState restrict(const ChainState& state, const Window& keep) {
    if (!state.window().contains(keep))
        throw containment_error("restrict: keep window not contained");
    std::vector<long> traced;
    for (long x = state.window().lo; x <= state.window().hi; ++x)
        if (!keep.contains_site(x)) traced.push_back(x - state.window().lo);
    MatrixXcd reduced = traced.empty()
                            ? state.rho()
                            : linalg::partial_trace(state.rho(), traced,
                                                    state.window().size(),
                                                    state.site_spec().local_dim);
    return ChainState(keep, state.site_spec(), std::move(reduced), state.kind());
}

EntropyReport mean_entropy(const StateFamilySpec& family, const Potential& phi,
                           SiteSpec s, const std::vector<long>& sizes) {
    if (sizes.size() < 2)
        throw validation_error("mean_entropy: need at least two window sizes");
    EntropyReport rep;
    for (long n : sizes) {
        Window w(0, n - 1);
        ChainState state = [&] {
            switch (family.kind) {
                case StateKind::tracial: return make_tracial(s, w);
                case StateKind::product:
                    if (!family.single_site)
                        throw validation_error("mean_entropy: product family needs a single-site matrix");
                    return make_product(*family.single_site, s, w);
                case StateKind::gibbs:
                    return make_gibbs(phi, w, family.beta, family.boundary);
            }
            throw validation_error("mean_entropy: unknown kind");
        }();
        double S = von_neumann_entropy(state);
        rep.sizes.push_back(n);
        rep.entropy.push_back(S);
        rep.per_site.push_back(S / static_cast<double>(n));
    }
    rep.mean_entropy_estimate = rep.per_site.back();
    if (family.kind != StateKind::gibbs) {
        for (double v : rep.per_site)
            if (std::abs(v - rep.per_site.front()) > 1e-12) rep.product_exact = false;
    }
    return rep;
}

InvarianceReport invariance_check(const ChainState& state, const Evolver& ev,
                                  long shift, double t) {
    if (!(state.window() == ev.window()))
        throw incompatibility_error("invariance_check: state and evolver windows differ");
    const long d = state.site_spec().local_dim;
    const long n = state.window().size();
    InvarianceReport rep;

    auto hermitian_trace_norm = [&](const MatrixXcd& diff) {
        // √dim·‖·‖_F bounds the trace norm; when that bound is already below
        // the 1e-10 diagnostic resolution, skip the eigendecomposition.
        double cheap = std::sqrt(static_cast<double>(diff.rows())) * diff.norm();
        if (cheap < 1e-10) return cheap;
        return linalg::trace_norm_hermitian(diff);
    };

    MatrixXcd u = ev.propagator(t);
    MatrixXcd evolved = u * state.rho() * u.adjoint();
    rep.time_deviation = hermitian_trace_norm(evolved - state.rho());

    // cyclic shift by `shift` sites
    long sh = ((shift % n) + n) % n;
    std::vector<long> positions(n);
    for (long p = 0; p < n; ++p) positions[p] = (p + sh) % n;
    // permutation on basis indices
    const long dim = state.dim();
    std::vector<long> perm(dim);
    for (long idx = 0; idx < dim; ++idx) {
        long digits_in = idx, out = 0;
        std::vector<long> dig(n);
        for (long p = n; p-- > 0;) {
            dig[p] = digits_in % d;
            digits_in /= d;
        }
        for (long p = 0; p < n; ++p)
            out += dig[p] * linalg::ipow(d, n - 1 - positions[p]);
        perm[idx] = out;
    }
    MatrixXcd shifted(dim, dim);
    for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c) shifted(perm[r], perm[c]) = state.rho()(r, c);
    rep.shift_deviation = hermitian_trace_norm(shifted - state.rho());
    return rep;
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

std::string kind_name(StateKind k) {
    switch (k) {
        case StateKind::tracial: return "tracial";
        case StateKind::product: return "product";
        case StateKind::gibbs: return "gibbs";
    }
    return "?";
}

StateKind kind_from_name(const std::string& s) {
    if (s == "tracial") return StateKind::tracial;
    if (s == "product") return StateKind::product;
    if (s == "gibbs") return StateKind::gibbs;
    throw validation_error("unknown state kind: " + s);
}

} // namespace

nlohmann::json state_to_json(const ChainState& state) {
    return nlohmann::json{{"site_dim", state.site_spec().local_dim},
                          {"window", {{"lo", state.window().lo}, {"hi", state.window().hi}}},
                          {"kind", kind_name(state.kind())},
                          {"rho", matrix_to_json(state.rho())}};
}

ChainState state_from_json(const nlohmann::json& j) {
    SiteSpec s(j.at("site_dim").get<long>());
    Window w(j.at("window").at("lo").get<long>(), j.at("window").at("hi").get<long>());
    return ChainState(w, s, matrix_from_json(j.at("rho")),
                      kind_from_name(j.at("kind").get<std::string>()));
}

} // namespace qde
