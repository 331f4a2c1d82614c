#include "qde/linalg.hpp"
#include "qde/errors.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <vector>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace qde {
namespace linalg {

void ensure_deterministic_backend() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (openblas_set_num_threads) openblas_set_num_threads(1);
    });
}

long ipow(long d, long k) {
    long out = 1;
    for (long i = 0; i < k; ++i) {
        if (out > std::numeric_limits<long>::max() / d)
            throw resource_error("ipow: dimension overflow");
        out *= d;
    }
    return out;
}

Eigh eigh(const MatrixXcd& a) {
    ensure_deterministic_backend();
    if (a.rows() != a.cols()) throw validation_error("eigh: matrix not square");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Eigh out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    if (n == 0) return out;
    // zheevr (MRRR): the divide-and-conquer driver miscomputes eigenvectors
    // for n >= ~512 with this LAPACK build, so it is deliberately avoided.
    MatrixXcd work = a;
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(n));
    lapack_int found = 0;
    lapack_int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, 'V', 'A', 'L', n,
        reinterpret_cast<lapack_complex_double*>(work.data()), n, 0.0, 0.0, 0, 0,
        0.0, &found,
        out.eigenvalues.data(),
        reinterpret_cast<lapack_complex_double*>(out.eigenvectors.data()), n,
        isuppz.data());
    if (info != 0 || found != n)
        throw numerical_error("eigh: zheevr failed, info=" + std::to_string(info));
    return out;
}

namespace {

// Lanczos with full reorthogonalization for the top eigenvalue of the PSD
// operator x -> a^H (a x). Deterministic start vector; stops when the Ritz
// residual certifies the value to ~1e-12 relative.
double top_eig_gram_lanczos(const MatrixXcd& a) {
    const long n = a.rows();
    const int max_iter = 380;
    std::mt19937_64 gen(0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> nd;
    VectorXcd v(n);
    for (long i = 0; i < n; ++i) v[i] = cxd(nd(gen), nd(gen));
    v.normalize();

    std::vector<VectorXcd> basis;
    basis.reserve(max_iter);
    std::vector<double> alpha, beta; // tridiagonal coefficients
    VectorXcd w(n), tmp(a.cols());

    double theta = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        basis.push_back(v);
        tmp.noalias() = a * v;
        w.noalias() = a.adjoint() * tmp;
        double al = std::real(v.dot(w));
        alpha.push_back(al);
        w -= al * v;
        if (it > 0) w -= beta.back() * basis[it - 1];
        for (const auto& q : basis) w -= q.dot(w) * q; // full reorthogonalization
        double be = w.norm();

        const int k = it + 1;
        if (k >= 2 || be < 1e-300) {
            std::vector<double> diag(alpha), off(beta);
            off.resize(k == 1 ? 0 : k - 1);
            std::vector<double> z(static_cast<size_t>(k) * k);
            lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', k, diag.data(),
                                            off.data(), z.data(), k);
            if (info != 0)
                throw numerical_error("lanczos: dstev failed, info=" + std::to_string(info));
            theta = diag[k - 1];
            double resid = be * std::abs(z[static_cast<size_t>(k) * k - 1]);
            double scale = std::max(theta, 1e-300);
            if (resid <= 1e-12 * scale || be < 1e-14 * std::sqrt(scale))
                return std::max(theta, 0.0);
        }
        beta.push_back(be);
        if (be < 1e-300) return std::max(theta, 0.0); // invariant subspace hit
        v = w / be;
    }
    // No certificate after max_iter: fall back to the dense path.
    Eigh full = eigh((a.adjoint() * a).eval());
    return std::max(full.eigenvalues[full.eigenvalues.size() - 1], 0.0);
}

} // namespace

double spectral_norm(const MatrixXcd& a) {
    ensure_deterministic_backend();
    if (a.size() == 0) return 0.0;
    double fro = a.norm();
    if (fro == 0.0) return 0.0;
    if (a.rows() <= 512 && a.cols() <= 512) {
        MatrixXcd g = a.adjoint() * a;
        Eigh e = eigh(g);
        return std::sqrt(std::max(e.eigenvalues[e.eigenvalues.size() - 1], 0.0));
    }
    return std::sqrt(top_eig_gram_lanczos(a));
}

double trace_norm_hermitian(const MatrixXcd& a) {
    if (a.size() == 0) return 0.0;
    Eigh e = eigh(a);
    return e.eigenvalues.cwiseAbs().sum();
}

void apply_local_left(const MatrixXcd& m, long left_dim, long right_dim,
                      const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y) {
    const long md = m.rows();
    const long rows = left_dim * md * right_dim;
    if (x.rows() != rows || y.rows() != x.rows() || y.cols() != x.cols())
        throw validation_error("apply_local_left: dimension mismatch");
    const long cols = x.cols();
    for (long c = 0; c < cols; ++c) {
        const cxd* xc = x.col(c).data();
        cxd* yc = y.col(c).data();
        for (long l = 0; l < left_dim; ++l) {
            const long base = l * md * right_dim;
            for (long r = 0; r < right_dim; ++r) {
                for (long i = 0; i < md; ++i) {
                    cxd acc(0, 0);
                    for (long j = 0; j < md; ++j)
                        acc += m(i, j) * xc[base + j * right_dim + r];
                    yc[base + i * right_dim + r] = acc;
                }
            }
        }
    }
}

void apply_local_right(const MatrixXcd& m, long left_dim, long right_dim,
                       const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y) {
    const long md = m.rows();
    const long cols = left_dim * md * right_dim;
    if (x.cols() != cols || y.rows() != x.rows() || y.cols() != x.cols())
        throw validation_error("apply_local_right: dimension mismatch");
    const long rows = x.rows();
    // column j of y = sum_j' x.col(j') m(j', j) over the local digit
    for (long l = 0; l < left_dim; ++l) {
        const long base = l * md * right_dim;
        for (long r = 0; r < right_dim; ++r) {
            for (long j = 0; j < md; ++j) {
                cxd* yc = y.col(base + j * right_dim + r).data();
                for (long i = 0; i < rows; ++i) yc[i] = cxd(0, 0);
                for (long jp = 0; jp < md; ++jp) {
                    const cxd coef = m(jp, j);
                    if (coef == cxd(0, 0)) continue;
                    const cxd* xc = x.col(base + jp * right_dim + r).data();
                    for (long i = 0; i < rows; ++i) yc[i] += coef * xc[i];
                }
            }
        }
    }
}

MatrixXcd embed_on_sites(const MatrixXcd& m, const std::vector<long>& positions,
                         long n_sites, long d) {
    const long k = static_cast<long>(positions.size());
    if (m.rows() != ipow(d, k))
        throw validation_error("embed_on_sites: matrix dimension does not match positions");
    for (long p : positions)
        if (p < 0 || p >= n_sites)
            throw containment_error("embed_on_sites: position outside window");

    const long dim = ipow(d, n_sites);
    const long local_dim = m.rows();
    // strides of each factor's digit in the global index
    std::vector<long> stride(positions.size());
    for (size_t f = 0; f < positions.size(); ++f)
        stride[f] = ipow(d, n_sites - 1 - positions[f]);

    // enumerate the complement positions
    std::vector<long> comp;
    {
        std::vector<bool> used(n_sites, false);
        for (long p : positions) {
            if (used[p]) throw validation_error("embed_on_sites: duplicate position");
            used[p] = true;
        }
        for (long p = 0; p < n_sites; ++p)
            if (!used[p]) comp.push_back(p);
    }
    std::vector<long> comp_stride(comp.size());
    for (size_t f = 0; f < comp.size(); ++f)
        comp_stride[f] = ipow(d, n_sites - 1 - comp[f]);
    const long comp_dim = ipow(d, static_cast<long>(comp.size()));

    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long e = 0; e < comp_dim; ++e) {
        long offset = 0;
        long t = e;
        for (size_t f = comp.size(); f-- > 0;) {
            offset += (t % d) * comp_stride[f];
            t /= d;
        }
        for (long lr = 0; lr < local_dim; ++lr) {
            long grow = offset;
            long tr = lr;
            for (size_t f = positions.size(); f-- > 0;) {
                grow += (tr % d) * stride[f];
                tr /= d;
            }
            for (long lc = 0; lc < local_dim; ++lc) {
                const cxd v = m(lr, lc);
                if (v == cxd(0, 0)) continue;
                long gcol = offset;
                long tc = lc;
                for (size_t f = positions.size(); f-- > 0;) {
                    gcol += (tc % d) * stride[f];
                    tc /= d;
                }
                out(grow, gcol) = v;
            }
        }
    }
    return out;
}

MatrixXcd partial_trace(const MatrixXcd& a, const std::vector<long>& traced,
                        long n_sites, long d) {
    const long dim = ipow(d, n_sites);
    if (a.rows() != dim || a.cols() != dim)
        throw validation_error("partial_trace: dimension mismatch");
    std::vector<bool> is_traced(n_sites, false);
    for (long p : traced) {
        if (p < 0 || p >= n_sites || is_traced[p])
            throw validation_error("partial_trace: bad traced position");
        is_traced[p] = true;
    }
    std::vector<long> kept;
    for (long p = 0; p < n_sites; ++p)
        if (!is_traced[p]) kept.push_back(p);

    std::vector<long> kept_stride(kept.size()), tr_stride(traced.size());
    for (size_t f = 0; f < kept.size(); ++f)
        kept_stride[f] = ipow(d, n_sites - 1 - kept[f]);
    std::vector<long> traced_sorted(traced);
    for (size_t f = 0; f < traced_sorted.size(); ++f)
        tr_stride[f] = ipow(d, n_sites - 1 - traced_sorted[f]);

    const long kdim = ipow(d, static_cast<long>(kept.size()));
    const long tdim = ipow(d, static_cast<long>(traced.size()));
    MatrixXcd out = MatrixXcd::Zero(kdim, kdim);
    for (long kr = 0; kr < kdim; ++kr) {
        long rbase = 0;
        long t = kr;
        for (size_t f = kept.size(); f-- > 0;) {
            rbase += (t % d) * kept_stride[f];
            t /= d;
        }
        for (long kc = 0; kc < kdim; ++kc) {
            long cbase = 0;
            long u = kc;
            for (size_t f = kept.size(); f-- > 0;) {
                cbase += (u % d) * kept_stride[f];
                u /= d;
            }
            cxd acc(0, 0);
            for (long e = 0; e < tdim; ++e) {
                long off = 0;
                long w = e;
                for (size_t f = tr_stride.size(); f-- > 0;) {
                    off += (w % d) * tr_stride[f];
                    w /= d;
                }
                acc += a(rbase + off, cbase + off);
            }
            out(kr, kc) = acc;
        }
    }
    return out;
}

} // namespace linalg
} // namespace qde
