#include "qde/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qde {

Evolver::Evolver(LocalOperator hamiltonian) : h_(std::move(hamiltonian)) {
    const double hnorm = h_.matrix().norm();
    if ((h_.matrix() - h_.matrix().adjoint()).norm() > 1e-10 * std::max(1.0, hnorm))
        throw validation_error("Evolver: Hamiltonian is not Hermitian");
    linalg::Eigh e = linalg::eigh(h_.matrix());
    basis_ = std::move(e.eigenvectors);
    evals_ = std::move(e.eigenvalues);
    MatrixXcd recon = basis_ * evals_.asDiagonal() * basis_.adjoint();
    double resid = (recon - h_.matrix()).norm();
    if (resid > 1e-10 * std::max(1.0, hnorm))
        throw numerical_error("Evolver: eigendecomposition residual " + std::to_string(resid));
}

MatrixXcd Evolver::propagator(double t) const {
    VectorXcd phase(evals_.size());
    for (long i = 0; i < evals_.size(); ++i)
        phase[i] = std::exp(cxd(0.0, evals_[i] * t));
    return basis_ * phase.asDiagonal() * basis_.adjoint();
}

LocalOperator evolve(const Evolver& ev, const LocalOperator& a, double t) {
    if (!ev.window().contains(a.window()))
        throw containment_error("evolve: operator window exceeds evolver window");
    LocalOperator ea = embed(a, ev.window());
    if (t == 0.0) return ea; // the identity map, exactly
    // rotate into the eigenbasis, phase, rotate back
    MatrixXcd in_basis = ev.eigenbasis().adjoint() * ea.matrix() * ev.eigenbasis();
    VectorXcd phase(ev.eigenvalues().size());
    for (long i = 0; i < phase.size(); ++i)
        phase[i] = std::exp(cxd(0.0, ev.eigenvalues()[i] * t));
    for (long c = 0; c < in_basis.cols(); ++c)
        for (long r = 0; r < in_basis.rows(); ++r)
            in_basis(r, c) *= phase[r] * std::conj(phase[c]);
    return LocalOperator(ev.window(), ea.site_spec(),
                         ev.eigenbasis() * in_basis * ev.eigenbasis().adjoint());
}

// ---------------------------------------------------------------------------
// localization functional
// ---------------------------------------------------------------------------

namespace {

// Unnormalized partial trace of g down to the single window position `pos`;
// this is the adjoint of the embedding b ↦ I ⊗ b ⊗ I under ⟨X,Y⟩ = tr(X†Y).
MatrixXcd reduce_to_site(const MatrixXcd& g, long pos, long n, long d) {
    std::vector<long> traced;
    for (long p = 0; p < n; ++p)
        if (p != pos) traced.push_back(p);
    return linalg::partial_trace(g, traced, n, d);
}

// Largest singular value with the top singular pair.
void top_singular(const MatrixXcd& c, double& sigma, VectorXcd& u, VectorXcd& v) {
    Eigen::JacobiSVD<MatrixXcd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues()[0];
    u = svd.matrixU().col(0);
    v = svd.matrixV().col(0);
}

} // namespace

LocalizationProfile localization_profile(const LocalOperator& a, const Window& ambient,
                                         const ProfileOptions& opt) {
    if (!ambient.contains(a.window()))
        throw containment_error("localization_profile: operator not embeddable in ambient");
    const long d = a.site_spec().local_dim;
    const long n = ambient.size();
    LocalOperator big = embed(a, ambient);
    const MatrixXcd& A = big.matrix();

    LocalizationProfile out;
    out.ambient = ambient;
    std::mt19937_64 gen(opt.seed);
    std::normal_distribution<double> nd;

    for (long x = ambient.lo; x <= ambient.hi; ++x) {
        const long pos = x - ambient.lo;
        const long left = linalg::ipow(d, pos);
        const long right = linalg::ipow(d, n - pos - 1);
        auto comm_norm = [&](const MatrixXcd& b) {
            MatrixXcd bx(A.rows(), A.cols()), xb(A.rows(), A.cols());
            linalg::apply_local_left(b, left, right, A, bx);   // B A
            linalg::apply_local_right(b, left, right, A, xb);  // A B
            return linalg::spectral_norm(xb - bx);
        };

        SiteBounds sb;
        // Matrix-unit basis: each e(i,j) has operator norm 1; the sum bounds
        // the supremum since any unit-norm b has |b_ij| ≤ 1.
        MatrixXcd best_b;
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j) {
                MatrixXcd e = MatrixXcd::Zero(d, d);
                e(i, j) = 1.0;
                double val = comm_norm(e);
                sb.upper += val;
                if (val > sb.lower) {
                    sb.lower = val;
                    best_b = e;
                }
            }

        if (opt.want_lower && sb.upper > 0) {
            for (int p = 0; p < opt.random_probes; ++p) {
                MatrixXcd b(d, d);
                for (long i = 0; i < d; ++i)
                    for (long j = 0; j < d; ++j) b(i, j) = cxd(nd(gen), nd(gen));
                double bnorm = linalg::spectral_norm(b);
                if (bnorm == 0.0) continue;
                double val = comm_norm(b) / bnorm;
                if (val > sb.lower) {
                    sb.lower = val;
                    best_b = b / bnorm;
                }
            }
            // Ascent on the Frobenius sphere from the best witness; each
            // iterate rescaled by its operator norm stays a valid witness.
            if (best_b.size() > 0) {
                MatrixXcd b = best_b / best_b.norm();
                for (int step = 0; step < opt.ascent_steps; ++step) {
                    MatrixXcd bemb = linalg::embed_on_sites(b, {pos}, n, d);
                    MatrixXcd c = A * bemb - bemb * A;
                    if (c.norm() == 0.0) break;
                    double sigma;
                    VectorXcd u, v;
                    top_singular(c, sigma, u, v);
                    MatrixXcd g_full =
                        A.adjoint() * u * v.adjoint() - u * v.adjoint() * A.adjoint();
                    MatrixXcd g = reduce_to_site(g_full, pos, n, d);
                    double gn = g.norm();
                    if (gn < 1e-15) break;
                    b += (0.5 / gn) * g;
                    b /= b.norm();
                    double bnorm = linalg::spectral_norm(b);
                    if (bnorm == 0.0) break;
                    double val = comm_norm(b) / bnorm;
                    sb.lower = std::max(sb.lower, val);
                }
            }
        }
        out.values[x] = sb;
    }
    return out;
}

// ---------------------------------------------------------------------------
// volume convergence and the locality lemma
// ---------------------------------------------------------------------------

std::vector<ConvergenceRow> convergence_in_volume(const Potential& phi,
                                                  const LocalOperator& a, double t,
                                                  const std::vector<long>& radii) {
    if (radii.empty())
        return {};
    if (!std::is_sorted(radii.begin(), radii.end()))
        throw validation_error("convergence_in_volume: radii must be increasing");
    const long rmax = radii.back();
    Evolver ref_ev(local_hamiltonian(phi, Window::radius(rmax), Boundary::open));
    LocalOperator ref = evolve(ref_ev, a, t);

    std::vector<ConvergenceRow> rows;
    for (long r : radii) {
        if (r == rmax) {
            rows.push_back({r, 0.0});
            continue;
        }
        Evolver ev(local_hamiltonian(phi, Window::radius(r), Boundary::open));
        LocalOperator evolved = evolve(ev, a, t);
        rows.push_back({r, operator_norm(sub(ref, embed(evolved, ref_ev.window())))});
    }
    return rows;
}

namespace {

double lemma2_rhs(long L, double t, double eps2, double lambda, double phi_lambda_norm,
                  long local_dim) {
    const double logd = std::log(static_cast<double>(local_dim));
    return static_cast<double>(L) + 2.0 * phi_lambda_norm / lambda * std::abs(t) +
           (std::log(2.0 * std::exp(-lambda) / (1.0 - std::exp(-lambda))) +
            4.0 * (2.0 * L + 1.0) * logd + std::log(2.0 * L + 1.0) - std::log(eps2)) /
               lambda;
}

} // namespace

long lemma2_radius(long L, double t, double eps2, double lambda, const Potential& phi) {
    if (!(eps2 > 0.0 && eps2 <= 1.0))
        throw std::domain_error("lemma2_radius: eps2 must be in (0,1]");
    if (!(lambda > 0.0))
        throw std::domain_error("lemma2_radius: lambda must be positive");
    double rhs = lemma2_rhs(L, t, eps2, lambda, lambda_norm(phi, lambda).value,
                            phi.site_spec().local_dim);
    double fl = std::floor(rhs);
    return static_cast<long>(fl) + 1; // smallest integer strictly above rhs
}

Lemma2Report lemma2_check(const Potential& phi, const LocalOperator& a, double t,
                          double eps2, double lambda, long R_max) {
    Lemma2Report rep;
    rep.lambda = lambda;
    rep.t = t;
    rep.L = std::max(std::abs(a.window().lo), std::abs(a.window().hi));
    rep.a_norm = operator_norm(a);
    rep.requested_eps2 = eps2;
    rep.radius_for_requested = lemma2_radius(rep.L, t, eps2, lambda, phi);

    const double phin = lambda_norm(phi, lambda).value;
    const double logd = std::log(static_cast<double>(phi.site_spec().local_dim));
    const long L = rep.L;

    Evolver ref_ev(local_hamiltonian(phi, Window::radius(R_max), Boundary::open));
    LocalOperator ref = evolve(ref_ev, a, t);

    for (long r = std::max<long>(L, 1); r <= R_max; ++r) {
        Lemma2Row row;
        row.radius = r;
        if (r == R_max) {
            row.actual_error = 0.0; // surrogate reference
        } else {
            Evolver ev(local_hamiltonian(phi, Window::radius(r), Boundary::open));
            LocalOperator evolved = evolve(ev, a, t);
            row.actual_error = operator_norm(sub(ref, embed(evolved, ref_ev.window())));
        }
        // Radius condition inverted for ε₂.
        double log_eps = lambda * static_cast<double>(L - r) +
                         2.0 * phin * std::abs(t) +
                         std::log(2.0 * std::exp(-lambda) / (1.0 - std::exp(-lambda))) +
                         4.0 * (2.0 * L + 1.0) * logd + std::log(2.0 * L + 1.0);
        row.certified_eps2 = std::exp(log_eps);
        row.vacuous = !(row.certified_eps2 <= 1.0);
        row.satisfied =
            row.vacuous || row.actual_error <= row.certified_eps2 * rep.a_norm + 1e-12;
        if (!row.satisfied) rep.all_satisfied = false;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// cone map
// ---------------------------------------------------------------------------

ConeMap cone_map(const Potential& phi, const LocalOperator& a,
                 const LocalOperator& b_site, const std::vector<double>& t_grid,
                 const std::vector<long>& x_grid, const Window& window) {
    for (long x : x_grid) {
        long span = b_site.window().hi - b_site.window().lo;
        if (!window.contains_site(x) || !window.contains_site(x + span))
            throw std::domain_error("cone_map: grid site outside window");
    }
    if (!window.contains(a.window()))
        throw std::domain_error("cone_map: center operator outside window");

    ConeMap out;
    out.times = t_grid;
    out.xs = x_grid;
    out.values.resize(static_cast<long>(t_grid.size()), static_cast<long>(x_grid.size()));
    out.bounds.resize(out.values.rows(), out.values.cols());

    const double na = operator_norm(a);
    const double nb = operator_norm(b_site);
    out.vacuous_level = 2.0 * na * nb;
    const double center =
        0.5 * (static_cast<double>(a.window().lo) + static_cast<double>(a.window().hi));

    Evolver ev(local_hamiltonian(phi, window, Boundary::open));
    const long d = a.site_spec().local_dim;
    const long n = window.size();

    // Analytic bound minimized over a λ grid (valid at every λ).
    const int lam_n = 97;
    std::vector<double> lam(lam_n), phin(lam_n);
    for (int i = 0; i < lam_n; ++i) {
        lam[i] = 1e-3 * std::pow(50.0 / 1e-3, double(i) / (lam_n - 1));
        phin[i] = phi.empty() ? 0.0 : lambda_norm(phi, lam[i]).value;
    }

    for (size_t ti = 0; ti < t_grid.size(); ++ti) {
        LocalOperator at = evolve(ev, a, t_grid[ti]);
        const MatrixXcd& A = at.matrix();
        for (size_t xi = 0; xi < x_grid.size(); ++xi) {
            LocalOperator b = translate(b_site, x_grid[xi] - b_site.window().lo);
            const long pos = b.window().lo - window.lo;
            const long bsites = b.window().size();
            const long left = linalg::ipow(d, pos);
            const long right = linalg::ipow(d, n - pos - bsites);
            MatrixXcd ab(A.rows(), A.cols()), ba(A.rows(), A.cols());
            linalg::apply_local_right(b.matrix(), left, right, A, ab);
            linalg::apply_local_left(b.matrix(), left, right, A, ba);
            out.values(ti, xi) = linalg::spectral_norm(ab - ba);

            double dist = std::abs(static_cast<double>(x_grid[xi]) - center);
            double bound = out.vacuous_level;
            for (int i = 0; i < lam_n; ++i) {
                double e = -dist * lam[i] + 2.0 * std::abs(t_grid[ti]) * phin[i];
                bound = std::min(bound, 2.0 * na * nb * std::exp(e));
            }
            out.bounds(ti, xi) = bound;
            if (bound <= out.vacuous_level * (1.0 - 1e-12) &&
                out.values(ti, xi) > bound + 1e-12)
                out.all_bounded = false;
        }
    }
    return out;
}

} // namespace qde
