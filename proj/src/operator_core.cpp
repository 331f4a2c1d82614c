#include "qde/operator_core.hpp"

#include <atomic>

namespace qde {

namespace limits {
namespace {
std::atomic<long> g_max_dimension{4096};
}
long max_dimension() { return g_max_dimension.load(); }
void set_max_dimension(long dim) {
    if (dim < 2) throw validation_error("limits: max_dimension must be >= 2");
    g_max_dimension.store(dim);
}
} // namespace limits

LocalOperator::LocalOperator(Window w, SiteSpec s, MatrixXcd m)
    : window_(w), site_(s), mat_(std::move(m)) {
    const long dim = linalg::ipow(site_.local_dim, window_.size());
    if (dim > limits::max_dimension())
        throw resource_error("LocalOperator: dimension " + std::to_string(dim) +
                             " exceeds cap " + std::to_string(limits::max_dimension()));
    if (mat_.rows() != dim || mat_.cols() != dim)
        throw validation_error("LocalOperator: matrix is " + std::to_string(mat_.rows()) +
                               "x" + std::to_string(mat_.cols()) + ", window needs " +
                               std::to_string(dim));
}

LocalOperator LocalOperator::identity(Window w, SiteSpec s) {
    const long dim = linalg::ipow(s.local_dim, w.size());
    return LocalOperator(w, s, MatrixXcd::Identity(dim, dim));
}

LocalOperator LocalOperator::zero(Window w, SiteSpec s) {
    const long dim = linalg::ipow(s.local_dim, w.size());
    return LocalOperator(w, s, MatrixXcd::Zero(dim, dim));
}

LocalOperator LocalOperator::matrix_unit(long site, SiteSpec s, long i, long j) {
    if (i < 0 || i >= s.local_dim || j < 0 || j >= s.local_dim)
        throw validation_error("matrix_unit: index out of range");
    MatrixXcd m = MatrixXcd::Zero(s.local_dim, s.local_dim);
    m(i, j) = 1.0;
    return LocalOperator(Window::site(site), s, std::move(m));
}

LocalOperator embed(const LocalOperator& op, const Window& target) {
    if (!target.contains(op.window()))
        throw containment_error("embed: target window does not contain operand window");
    if (target == op.window()) return op;
    const long d = op.site_spec().local_dim;
    const long left = linalg::ipow(d, op.window().lo - target.lo);
    const long right = linalg::ipow(d, target.hi - op.window().hi);
    const long dim = left * op.dim() * right;
    if (dim > limits::max_dimension())
        throw resource_error("embed: dimension exceeds cap");
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    // out = I_left ⊗ m ⊗ I_right
    const MatrixXcd& m = op.matrix();
    const long md = m.rows();
    for (long l = 0; l < left; ++l) {
        const long base = l * md * right;
        for (long i = 0; i < md; ++i)
            for (long j = 0; j < md; ++j) {
                const cxd v = m(i, j);
                if (v == cxd(0, 0)) continue;
                for (long r = 0; r < right; ++r)
                    out(base + i * right + r, base + j * right + r) = v;
            }
    }
    return LocalOperator(target, op.site_spec(), std::move(out));
}

LocalOperator translate(const LocalOperator& op, long x) {
    return LocalOperator(Window(op.window().lo + x, op.window().hi + x),
                         op.site_spec(), op.matrix());
}

namespace {
void check_compatible(const LocalOperator& a, const LocalOperator& b) {
    if (!(a.site_spec() == b.site_spec()))
        throw incompatibility_error("operands have different site dimensions");
}
} // namespace

LocalOperator mul(const LocalOperator& a, const LocalOperator& b) {
    check_compatible(a, b);
    const Window w = Window::hull(a.window(), b.window());
    LocalOperator ea = embed(a, w), eb = embed(b, w);
    return LocalOperator(w, a.site_spec(), ea.matrix() * eb.matrix());
}

LocalOperator add(const LocalOperator& a, const LocalOperator& b) {
    check_compatible(a, b);
    const Window w = Window::hull(a.window(), b.window());
    LocalOperator ea = embed(a, w), eb = embed(b, w);
    return LocalOperator(w, a.site_spec(), ea.matrix() + eb.matrix());
}

LocalOperator sub(const LocalOperator& a, const LocalOperator& b) {
    check_compatible(a, b);
    const Window w = Window::hull(a.window(), b.window());
    LocalOperator ea = embed(a, w), eb = embed(b, w);
    return LocalOperator(w, a.site_spec(), ea.matrix() - eb.matrix());
}

LocalOperator scale(const cxd& c, const LocalOperator& a) {
    return LocalOperator(a.window(), a.site_spec(), c * a.matrix());
}

LocalOperator adjoint(const LocalOperator& a) {
    return LocalOperator(a.window(), a.site_spec(), a.matrix().adjoint());
}

LocalOperator commutator(const LocalOperator& a, const LocalOperator& b) {
    check_compatible(a, b);
    const Window w = Window::hull(a.window(), b.window());
    LocalOperator ea = embed(a, w), eb = embed(b, w);
    return LocalOperator(w, a.site_spec(),
                         ea.matrix() * eb.matrix() - eb.matrix() * ea.matrix());
}

double operator_norm(const LocalOperator& op) {
    return linalg::spectral_norm(op.matrix());
}

LocalOperator conditional_expectation(const LocalOperator& op, const Window& keep) {
    LocalOperator src = op.window().contains(keep)
                            ? op
                            : embed(op, Window::hull(op.window(), keep));
    const Window& w = src.window();
    const long d = src.site_spec().local_dim;
    std::vector<long> traced;
    for (long x = w.lo; x <= w.hi; ++x)
        if (!keep.contains_site(x)) traced.push_back(x - w.lo);
    if (traced.empty()) return src;
    MatrixXcd reduced = linalg::partial_trace(src.matrix(), traced, w.size(), d);
    reduced /= static_cast<double>(linalg::ipow(d, static_cast<long>(traced.size())));
    return LocalOperator(keep, src.site_spec(), std::move(reduced));
}

} // namespace qde
