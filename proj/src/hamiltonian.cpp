#include "qde/hamiltonian.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace qde {

Potential::Potential(SiteSpec s, std::vector<PotentialTerm> terms)
    : site_(s), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (t.support.empty())
            throw validation_error("Potential: empty term support");
        if (!std::is_sorted(t.support.begin(), t.support.end()) ||
            std::adjacent_find(t.support.begin(), t.support.end()) != t.support.end())
            throw validation_error("Potential: term support must be sorted and distinct");
        if (t.support.front() != 0)
            throw validation_error("Potential: term support must be anchored at 0");
        const long dim = linalg::ipow(site_.local_dim, static_cast<long>(t.support.size()));
        if (t.matrix.rows() != dim || t.matrix.cols() != dim)
            throw validation_error("Potential: term matrix dimension mismatch");
        double herm = (t.matrix - t.matrix.adjoint()).norm();
        if (herm > 1e-12 * std::max(1.0, t.matrix.norm()))
            throw validation_error("Potential: term is not Hermitian (residual " +
                                   std::to_string(herm) + ")");
    }
}

long Potential::range() const {
    long r = 0;
    for (const auto& t : terms_) r = std::max(r, t.diameter());
    return r;
}

LocalOperator Potential::term_operator(size_t k) const {
    const auto& t = terms_.at(k);
    const long n = t.diameter() + 1;
    MatrixXcd m = linalg::embed_on_sites(t.matrix, t.support, n, site_.local_dim);
    return LocalOperator(Window(0, t.diameter()), site_, std::move(m));
}

LambdaNorm lambda_norm(const Potential& phi, double lambda) {
    if (!(lambda > 0.0))
        throw std::domain_error("lambda_norm: lambda must be positive");
    double best = 0.0;
    for (const auto& t : phi.terms()) {
        const double card = static_cast<double>(t.support.size());
        const double weight =
            card *
            std::pow(static_cast<double>(phi.site_spec().local_dim), 2.0 * card) *
            std::exp(lambda * static_cast<double>(t.diameter()));
        best = std::max(best, weight * linalg::spectral_norm(t.matrix));
    }
    return LambdaNorm{lambda, best};
}

namespace {

// f(λ) = ‖Φ‖_λ / λ. A max of finitely many c_k e^{λ d_k}/λ; each piece is
// unimodal but the max need not be, hence grid-then-refine.
double f_of_lambda(const Potential& phi, double lambda) {
    return lambda_norm(phi, lambda).value / lambda;
}

double golden_section(const Potential& phi, double a, double b, double tol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f_of_lambda(phi, c), fd = f_of_lambda(phi, d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f_of_lambda(phi, c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f_of_lambda(phi, d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

GroupVelocity group_velocity(const Potential& phi, const LambdaBracket& bracket) {
    if (phi.empty())
        throw std::domain_error("group_velocity: empty potential");
    if (!(bracket.min > 0.0) || !(bracket.max > bracket.min) || bracket.grid_points < 3)
        throw std::domain_error("group_velocity: bad lambda bracket");

    GroupVelocity out;
    bool has_extended = false;
    for (const auto& t : phi.terms())
        if (t.diameter() >= 1) has_extended = true;
    if (!has_extended) {
        // f(λ) = c/λ: infimum 0 approached as λ → ∞.
        out.value = 0.0;
        out.lambda_star = std::numeric_limits<double>::infinity();
        out.report.grid_certificate = true;
        return out;
    }

    const double lam_min = bracket.min, lam_max = bracket.max;
    const int grid_n = bracket.grid_points;
    auto& rep = out.report;
    rep.grid_lambdas.resize(grid_n);
    rep.grid_values.resize(grid_n);
    int best = 0;
    for (int i = 0; i < grid_n; ++i) {
        double lam = lam_min * std::pow(lam_max / lam_min, double(i) / (grid_n - 1));
        rep.grid_lambdas[i] = lam;
        rep.grid_values[i] = f_of_lambda(phi, lam);
        if (rep.grid_values[i] < rep.grid_values[best]) best = i;
    }
    rep.refined_lo = rep.grid_lambdas[std::max(0, best - 1)];
    rep.refined_hi = rep.grid_lambdas[std::min(grid_n - 1, best + 1)];
    out.lambda_star = golden_section(phi, rep.refined_lo, rep.refined_hi, 1e-8);
    out.value = f_of_lambda(phi, out.lambda_star);

    rep.grid_certificate = true;
    for (double fv : rep.grid_values)
        if (out.value > fv * (1.0 + 1e-12)) rep.grid_certificate = false;
    return out;
}

LocalOperator local_hamiltonian(const Potential& phi, const Window& window,
                                Boundary boundary) {
    const long n = window.size();
    const long d = phi.site_spec().local_dim;
    const long dim = linalg::ipow(d, n);
    if (dim > limits::max_dimension())
        throw resource_error("local_hamiltonian: dimension exceeds cap");
    if (boundary == Boundary::periodic && n <= phi.range())
        throw std::domain_error("local_hamiltonian: periodic window not larger than range");

    MatrixXcd h = MatrixXcd::Zero(dim, dim);
    for (const auto& t : phi.terms()) {
        if (boundary == Boundary::open) {
            for (long a = 0; a + t.diameter() <= n - 1; ++a) {
                std::vector<long> pos(t.support);
                for (auto& p : pos) p += a;
                h += linalg::embed_on_sites(t.matrix, pos, n, d);
            }
        } else {
            for (long a = 0; a < n; ++a) {
                std::vector<long> pos(t.support);
                for (auto& p : pos) p = (p + a) % n;
                h += linalg::embed_on_sites(t.matrix, pos, n, d);
            }
        }
    }
    return LocalOperator(window, phi.site_spec(), std::move(h));
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
    if (rows == 0) return MatrixXcd(0, 0);
    const long cols = static_cast<long>(re[0].size());
    MatrixXcd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long jj = 0; jj < cols; ++jj)
            m(i, jj) = cxd(re[i][jj].get<double>(), im[i][jj].get<double>());
    return m;
}

} // namespace

nlohmann::json potential_to_json(const Potential& phi) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : phi.terms())
        terms.push_back({{"support", t.support}, {"matrix", matrix_to_json(t.matrix)}});
    return nlohmann::json{{"site_dim", phi.site_spec().local_dim},
                          {"terms", std::move(terms)}};
}

Potential potential_from_json(const nlohmann::json& j) {
    SiteSpec s(j.at("site_dim").get<long>());
    std::vector<PotentialTerm> terms;
    for (const auto& tj : j.at("terms")) {
        PotentialTerm t;
        t.support = tj.at("support").get<std::vector<long>>();
        t.matrix = matrix_from_json(tj.at("matrix"));
        terms.push_back(std::move(t));
    }
    return Potential(s, std::move(terms));
}

void save_potential(const Potential& phi, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_potential: cannot open " + path);
    out << potential_to_json(phi).dump(2) << '\n';
}

Potential load_potential(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_potential: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return potential_from_json(j);
}

} // namespace qde
