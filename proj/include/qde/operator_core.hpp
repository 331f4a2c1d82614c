#pragma once

#include "qde/errors.hpp"
#include "qde/linalg.hpp"

#include <vector>

namespace qde {

// Local dimension of one lattice site.
struct SiteSpec {
    long local_dim = 2;

    SiteSpec() = default;
    explicit SiteSpec(long d) : local_dim(d) {
        if (d < 2) throw validation_error("SiteSpec: local_dim must be >= 2");
    }
    friend bool operator==(const SiteSpec& a, const SiteSpec& b) {
        return a.local_dim == b.local_dim;
    }
};

// Contiguous lattice interval [lo, hi].
struct Window {
    long lo = 0;
    long hi = 0;

    Window() = default;
    Window(long l, long h) : lo(l), hi(h) {
        if (l > h) throw validation_error("Window: lo > hi");
    }
    static Window site(long x) { return Window(x, x); }
    static Window radius(long r) { return Window(-r, r); }

    long size() const { return hi - lo + 1; }
    bool contains(const Window& w) const { return lo <= w.lo && w.hi <= hi; }
    bool contains_site(long x) const { return lo <= x && x <= hi; }
    static Window hull(const Window& a, const Window& b) {
        return Window(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
    }
    friend bool operator==(const Window& a, const Window& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

// Configurable cap on dense dimensions (default: 12 qubit sites' worth).
namespace limits {
long max_dimension();
void set_max_dimension(long dim);
}

// Dense operator supported on a window. Tensor factors are ordered by
// increasing lattice coordinate; basis indices are site-major lexicographic
// (the leftmost site is the most significant digit). Immutable after
// construction.
class LocalOperator {
public:
    LocalOperator(Window w, SiteSpec s, MatrixXcd m);

    static LocalOperator identity(Window w, SiteSpec s);
    static LocalOperator zero(Window w, SiteSpec s);
    // Matrix unit e(i,j) on a single site.
    static LocalOperator matrix_unit(long site, SiteSpec s, long i, long j);

    const Window& window() const { return window_; }
    const SiteSpec& site_spec() const { return site_; }
    const MatrixXcd& matrix() const { return mat_; }
    long dim() const { return mat_.rows(); }

private:
    Window window_;
    SiteSpec site_;
    MatrixXcd mat_;
};

// op ⊗ identity on target \ op.window, sites ordered by lattice coordinate.
LocalOperator embed(const LocalOperator& op, const Window& target);

// Lattice translation by x: window shifts, matrix unchanged.
LocalOperator translate(const LocalOperator& op, long x);

// Exact matrix algebra on the hull window; operands auto-embedded.
LocalOperator mul(const LocalOperator& a, const LocalOperator& b);
LocalOperator add(const LocalOperator& a, const LocalOperator& b);
LocalOperator sub(const LocalOperator& a, const LocalOperator& b);
LocalOperator scale(const cxd& c, const LocalOperator& a);
LocalOperator adjoint(const LocalOperator& a);
LocalOperator commutator(const LocalOperator& a, const LocalOperator& b);

inline LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) { return mul(a, b); }
inline LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) { return add(a, b); }
inline LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) { return sub(a, b); }
inline LocalOperator operator*(const cxd& c, const LocalOperator& a) { return scale(c, a); }

// C*-norm (largest singular value), relative accuracy 1e-10.
double operator_norm(const LocalOperator& op);

// id_keep ⊗ (normalized trace on the complement): partial trace over
// op.window \ keep divided by local_dim^(traced sites). If op.window does
// not contain keep, op is first embedded into the hull.
LocalOperator conditional_expectation(const LocalOperator& op, const Window& keep);

} // namespace qde
