#pragma once

#include <Eigen/Dense>
#include <complex>

namespace qde {

using cxd = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;
using VectorXd = Eigen::VectorXd;

namespace linalg {

// Pins the BLAS backend to one thread so every result is independent of the
// machine's thread configuration. Invoked lazily by the routines below.
void ensure_deterministic_backend();

struct Eigh {
    VectorXd eigenvalues;   // ascending
    MatrixXcd eigenvectors; // columns
};

// Hermitian eigendecomposition (input symmetrized up to round-off is the
// caller's business; only the lower/upper triangle consistency of LAPACK
// applies). Throws numerical_error if LAPACK fails.
Eigh eigh(const MatrixXcd& a);

// Largest singular value. Dense LAPACK path for small matrices, Lanczos with
// residual-certified convergence on a^H a for large ones. Relative accuracy
// 1e-10 or better.
double spectral_norm(const MatrixXcd& a);

// Sum of singular values of a Hermitian matrix (i.e. sum |eigenvalue|).
double trace_norm_hermitian(const MatrixXcd& a);

// y = (I_left ⊗ m ⊗ I_right) * x, all matrices column-major dense.
// x is (left*md*right) x ncols with site-major row indexing: the most
// significant digit of a row index belongs to the leftmost site. y must be
// pre-sized to x's shape (Ref allows writing through Map views).
void apply_local_left(const MatrixXcd& m, long left_dim, long right_dim,
                      const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y);

// y = x * (I_left ⊗ m ⊗ I_right).
void apply_local_right(const MatrixXcd& m, long left_dim, long right_dim,
                       const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y);

// Dense embedding of `m` acting on the given tensor-factor positions of a
// window of `n_sites` sites with local dimension d. positions[f] is the
// window position (0-based, 0 = most significant digit) of factor f of m;
// positions need not be sorted (wrap-around placement uses that freedom).
MatrixXcd embed_on_sites(const MatrixXcd& m, const std::vector<long>& positions,
                         long n_sites, long d);

// Partial trace over the window positions listed in `traced` (0-based,
// unsorted ok). Input acts on d^n_sites; the result acts on the remaining
// positions in increasing order. Unnormalized.
MatrixXcd partial_trace(const MatrixXcd& a, const std::vector<long>& traced,
                        long n_sites, long d);

// d^k for long arithmetic with overflow guard.
long ipow(long d, long k);

} // namespace linalg
} // namespace qde
