#include "crh/cascade.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <sstream>

#include "crh/errors.hpp"
#include "crh/geometry.hpp"

namespace crh {

namespace {

constexpr double kPi = 3.14159265358979323846;

double spectral_norm(const Eigen::MatrixXcd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

double smallest_singular_value(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// PerturbationSpec

BigradedPoly PerturbationSpec::phi() const {
    BigradedPoly sum;
    for (const auto& [n, comp] : phi_components) sum += comp;
    return sum;
}

PerturbationSpec PerturbationSpec::from_phi(const EllipsoidSpec& base,
                                            const BigradedPoly& full_phi, double r1,
                                            double r, double r2, double delta) {
    PerturbationSpec spec;
    spec.base = base;
    spec.phi_components = full_phi.grade_by_antiholo();
    spec.r1 = r1;
    spec.r = r;
    spec.r2 = r2;
    spec.delta = delta;
    spec.validate();
    return spec;
}

void PerturbationSpec::validate() const {
    base.validate();
    for (const auto& [n, comp] : phi_components) {
        for (const auto& [m, c] : comp.terms()) {
            if (m.antiholo_degree() != n)
                throw InadmissibleSpec("perturbation component has mixed grading");
        }
    }
    if (!phi().is_hermitian(1e-12))
        throw InadmissibleSpec("perturbation series is not real-valued");
    BigradedPoly diff = phi().antiholo_component(2) - base.quadratic_antiholo_part();
    if (diff.coeff_max_norm() > 1e-12)
        throw InadmissibleSpec(
            "degree-2 antiholomorphic part must equal the base ellipsoid quadratic");
    if (!(r1 > 0.0) || !(std::sqrt(2.0) * r1 < 1.0))
        throw InadmissibleSpec("polydisc radius must satisfy sqrt(2) r1 < 1");
    if (!(r > 0.0) || !(r < r1 / std::sqrt(2.0)))
        throw InadmissibleSpec("containment radius must satisfy 0 < r < r1/sqrt(2)");
    if (!(r2 > 0.0)) throw InadmissibleSpec("low-order sup bound r2 must be positive");
    if (!(delta > 0.0 && delta < 0.5)) throw InadmissibleSpec("delta must lie in (0, 1/2)");
}

BigradedPoly PerturbationSpec::phi_0() const {
    auto it = phi_components.find(0);
    return it == phi_components.end() ? BigradedPoly() : it->second;
}

BigradedPoly PerturbationSpec::phi_10() const {
    BigradedPoly out;
    auto it = phi_components.find(1);
    if (it == phi_components.end()) return out;
    for (const auto& [m, c] : it->second.terms())
        if (m.b == 1 && m.d == 0) out.add_term({m.a, 0, m.c, 0}, c);
    return out;
}

BigradedPoly PerturbationSpec::phi_11() const {
    BigradedPoly out;
    auto it = phi_components.find(1);
    if (it == phi_components.end()) return out;
    for (const auto& [m, c] : it->second.terms())
        if (m.b == 0 && m.d == 1) out.add_term({m.a, 0, m.c, 0}, c);
    return out;
}

// ---------------------------------------------------------------------------
// PolyMatrix

double PolyMatrix::sup_norm(double radius, unsigned phases) const {
    if (rows == 0 || cols == 0) return 0.0;
    double best = 0.0;
    Eigen::MatrixXcd m(rows, cols);
    for (unsigned p = 0; p < phases; ++p) {
        cplx z = radius * std::exp(cplx(0.0, 2.0 * kPi * p / phases));
        for (unsigned q = 0; q < phases; ++q) {
            cplx w = radius * std::exp(cplx(0.0, 2.0 * kPi * q / phases));
            for (unsigned i = 0; i < rows; ++i)
                for (unsigned j = 0; j < cols; ++j) m(i, j) = at(i, j).evaluate(z, w);
            best = std::max(best, spectral_norm(m));
        }
    }
    return best;
}

unsigned PolyMatrix::diagonal_count() const {
    std::vector<bool> seen(rows + cols, false);
    unsigned count = 0;
    for (unsigned i = 0; i < rows; ++i)
        for (unsigned j = 0; j < cols; ++j)
            if (!at(i, j).empty()) {
                std::size_t off = std::size_t(j) + rows - 1 - i;
                if (!seen[off]) {
                    seen[off] = true;
                    ++count;
                }
            }
    return count;
}

PolyMatrix build_B(unsigned k, unsigned n, const PerturbationSpec& pert) {
    if (n < 3) throw InvalidInput("coupling matrices exist for degree >= 3 components");
    PolyMatrix B(k + 1, n + k - 1);
    auto it = pert.phi_components.find(n);
    if (it == pert.phi_components.end() || it->second.empty()) return B;
    for (unsigned j = 0; j <= k; ++j) {
        BigradedPoly mu = BigradedPoly::monomial({0, k - j, 0, j});
        BigradedPoly prod = it->second.multiply(mu);
        for (const auto& [m, c] : prod.terms()) {
            if (m.b >= 1 && m.d >= 1) B.at(j, m.d - 1).add_term({m.a, 0, m.c, 0}, -c);
        }
    }
    return B;
}

// ---------------------------------------------------------------------------
// Certification

const CertificationCheck* CertificationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string CertificationReport::first_failure() const {
    for (const auto& c : checks)
        if (!c.pass) return c.name;
    return {};
}

namespace {

CertificationCheck upper_check(std::string name, double measured, double threshold) {
    CertificationCheck c;
    c.name = std::move(name);
    c.measured = measured;
    c.threshold = threshold;
    c.margin = threshold - measured;
    c.pass = measured < threshold;
    return c;
}

CertificationCheck lower_check(std::string name, double measured, double threshold) {
    CertificationCheck c;
    c.name = std::move(name);
    c.measured = measured;
    c.threshold = threshold;
    c.margin = measured - threshold;
    c.pass = measured > threshold;
    return c;
}

double poly_sup_on_torus(const BigradedPoly& p, double radius, unsigned phases = 24) {
    double best = 0.0;
    for (unsigned i = 0; i < phases; ++i) {
        cplx z = radius * std::exp(cplx(0.0, 2.0 * kPi * i / phases));
        for (unsigned j = 0; j < phases; ++j) {
            cplx w = radius * std::exp(cplx(0.0, 2.0 * kPi * j / phases));
            best = std::max(best, std::abs(p.evaluate(z, w)));
        }
    }
    return best;
}

}  // namespace

CertificationReport certify_perturbation(const PerturbationSpec& pert, unsigned n_max) {
    pert.validate();
    CertificationReport report;
    double eps = pert.base.epsilon;

    double sigma_worst = std::numeric_limits<double>::infinity();
    for (unsigned dim = 1; dim + 1 <= std::max(n_max, 2u); ++dim)
        sigma_worst = std::min(sigma_worst, BandMatrixA::build(dim, pert.base).sigma_min());
    report.checks.push_back(
        lower_check("sigma_min lower bound", sigma_worst, (1.0 - pert.delta) * eps));

    for (const auto& [n, comp] : pert.phi_components) {
        if (n < 3 || comp.empty()) continue;
        unsigned k_cap = n_max >= 2 ? n_max - 2 : 0;
        for (unsigned k = 0; k <= k_cap; ++k) {
            PolyMatrix B = build_B(k, n, pert);
            std::ostringstream name;
            name << "coupling norm l=" << (k + 1) << " m=" << (n + k - 1);
            report.checks.push_back(upper_check(name.str(), B.sup_norm(pert.r1),
                                                std::pow(eps, 4.0 * (n - 2))));
        }
    }

    report.checks.push_back(
        upper_check("sup |phi_0|", poly_sup_on_torus(pert.phi_0(), pert.r1), pert.r2));
    report.checks.push_back(
        upper_check("sup |phi_10|", poly_sup_on_torus(pert.phi_10(), pert.r1), pert.r2));
    report.checks.push_back(
        upper_check("sup |phi_11|", poly_sup_on_torus(pert.phi_11(), pert.r1), pert.r2));

    double boundary_radius = std::numeric_limits<double>::quiet_NaN();
    try {
        BoundaryGrid grid = boundary_grid(DomainSpec::perturbed(pert), 64, 16);
        double worst = 0.0;
        for (const auto& node : grid.nodes())
            worst = std::max(worst, std::sqrt(std::norm(node.z) + std::norm(node.w)));
        boundary_radius = worst;
    } catch (const std::exception&) {
        // unreachable boundary counts as a failed containment check below
    }
    CertificationCheck contain = upper_check("boundary containment", boundary_radius, pert.r);
    if (std::isnan(boundary_radius)) {
        contain.pass = false;
        contain.margin = -std::numeric_limits<double>::infinity();
    }
    report.checks.push_back(contain);

    report.checks.push_back(upper_check(
        "round contraction factor", (4.0 * eps * eps + std::pow(eps, 4.0)) * pert.r, 1.0));

    report.all_pass = true;
    for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
    return report;
}

// ---------------------------------------------------------------------------
// Exact per-degree relations

std::vector<BigradedPoly> cascade_relations(const PerturbationSpec& pert, unsigned degree) {
    if (degree < 2) throw InvalidInput("mixed antiholomorphic monomials start at degree 2");
    unsigned dim = degree - 1;
    BandMatrixA A = BandMatrixA::build(dim, pert.base);
    BigradedPoly phi = pert.phi();

    // phi times each degree-(degree-2) antiholomorphic monomial, with the
    // constant-coefficient mixed part of the working degree peeled off into
    // the band matrix and everything else negated onto the right side.
    Eigen::MatrixXcd a_check = Eigen::MatrixXcd::Zero(dim, dim);
    std::vector<BigradedPoly> rhs(dim);
    for (unsigned i = 0; i < dim; ++i) {
        BigradedPoly mu = BigradedPoly::monomial({0, degree - 2 - i, 0, i});
        BigradedPoly prod = phi.multiply(mu);
        for (const auto& [m, c] : prod.terms()) {
            if (m.b >= 1 && m.d >= 1 && m.b + m.d == degree) {
                if (m.a != 0 || m.c != 0)
                    throw std::logic_error(
                        "working-degree mixed term with nonconstant coefficient");
                a_check(i, m.d - 1) += c;
            } else {
                rhs[i].add_term(m, -c);
            }
        }
    }
    if ((a_check - A.dense()).cwiseAbs().maxCoeff() > 1e-13 * (1.0 + std::abs(A.diag)))
        throw std::logic_error("band matrix does not match the expanded products");

    std::map<Monomial4, unsigned> columns;
    for (const auto& row : rhs)
        for (const auto& [m, c] : row.terms())
            columns.emplace(m, 0);
    unsigned idx = 0;
    for (auto& [m, col] : columns) col = idx++;

    Eigen::MatrixXcd rhs_mat = Eigen::MatrixXcd::Zero(dim, std::max<unsigned>(idx, 1));
    for (unsigned i = 0; i < dim; ++i)
        for (const auto& [m, c] : rhs[i].terms()) rhs_mat(i, columns.at(m)) = c;
    Eigen::MatrixXcd sol = A.solve(rhs_mat);

    std::vector<BigradedPoly> relations(dim);
    for (const auto& [m, col] : columns)
        for (unsigned i = 0; i < dim; ++i) relations[i].add_term(m, sol(i, col));
    for (auto& rel : relations) rel.prune();
    return relations;
}

// ---------------------------------------------------------------------------
// Substitution bookkeeping (numeric, on the declared polydisc)

namespace {

// Runs the degree-by-degree elimination at one sample point and enforces the
// certified norm inequalities on the running matrices.  T[d][d2] maps the
// degree-d2 mixed vector to the degree-d one after all couplings below d2
// have been eliminated.
struct EliminationTracker {
    double eps;
    double tol = 1e-9;
    double max_inverse_norm = 0.0;
    double max_coupling_ratio = 0.0;

    void run(const PerturbationSpec& pert, unsigned n_cap,
             const std::map<unsigned, std::map<unsigned, PolyMatrix>>& raw, cplx z, cplx w) {
        cplx f0 = pert.phi_0().evaluate(z, w);
        cplx f10 = pert.phi_10().evaluate(z, w);
        cplx f11 = pert.phi_11().evaluate(z, w);

        std::map<unsigned, std::map<unsigned, Eigen::MatrixXcd>> T;
        for (unsigned d = 2; d <= n_cap; ++d) {
            unsigned dim = d - 1;
            Eigen::MatrixXcd a_til = BandMatrixA::build(dim, pert.base).dense();
            std::map<unsigned, Eigen::MatrixXcd> low;
            std::map<unsigned, Eigen::MatrixXcd> up;

            if (d >= 4) {
                Eigen::MatrixXcd c0 = Eigen::MatrixXcd::Zero(dim, d - 3);
                for (unsigned i = 1; i + 2 <= d - 1; ++i) c0(i, i - 1) = f0;
                low[d - 2] = std::move(c0);
            }
            if (d >= 3) {
                Eigen::MatrixXcd c1 = Eigen::MatrixXcd::Zero(dim, d - 2);
                for (unsigned i = 1; i < dim; ++i) c1(i, i - 1) = f10;
                for (unsigned i = 0; i + 2 <= d - 1; ++i) c1(i, i) += f11;
                low[d - 1] = std::move(c1);
            }
            for (const auto& [n, per_k] : raw) {
                unsigned d2 = d + n - 2;
                if (d2 > n_cap) continue;
                const PolyMatrix& B = per_k.at(d - 2);
                Eigen::MatrixXcd bm(B.rows, B.cols);
                for (unsigned i = 0; i < B.rows; ++i)
                    for (unsigned j = 0; j < B.cols; ++j) bm(i, j) = B.at(i, j).evaluate(z, w);
                up[d2] = std::move(bm);
            }

            while (!low.empty()) {
                auto node = low.extract(low.begin());
                unsigned j = node.key();
                Eigen::MatrixXcd M = std::move(node.mapped());
                auto tj = T.find(j);
                if (tj == T.end()) continue;
                for (const auto& [d2, Tj] : tj->second) {
                    Eigen::MatrixXcd prod = M * Tj;
                    if (d2 < d) {
                        auto [it, fresh] = low.emplace(d2, prod);
                        if (!fresh) it->second += prod;
                    } else if (d2 == d) {
                        a_til += prod;
                    } else {
                        auto [it, fresh] = up.emplace(d2, -prod);
                        if (!fresh) it->second -= prod;
                    }
                }
            }

            double inv_norm = 1.0 / smallest_singular_value(a_til);
            max_inverse_norm = std::max(max_inverse_norm, inv_norm);
            if (inv_norm > (2.0 / eps) * (1.0 + tol)) {
                std::ostringstream msg;
                msg << "inverse norm bound failed at degree " << d << ": " << inv_norm
                    << " > " << 2.0 / eps;
                throw CascadeDiverged(msg.str());
            }
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a_til);
            for (const auto& [d2, Bm] : up) {
                double cap = 2.0 * std::pow(eps, 4.0 * (d2 - d));
                double norm = spectral_norm(Bm);
                max_coupling_ratio = std::max(max_coupling_ratio, norm / cap);
                if (norm > cap * (1.0 + tol)) {
                    std::ostringstream msg;
                    msg << "coupling norm bound failed from degree " << d << " to " << d2
                        << ": " << norm << " > " << cap;
                    throw CascadeDiverged(msg.str());
                }
                T[d][d2] = lu.solve(Bm);
            }
        }
    }
};

double round_constant(double eps, unsigned l_eff) {
    if (l_eff == 1) return 4.0 * eps * eps * eps;
    double lead = (16.0 * eps * eps + 4.0 * eps * eps * eps) * std::pow(eps, 4.0);
    return lead * std::pow(4.0 * eps * eps + std::pow(eps, 4.0), double(l_eff) - 2.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Truncated decomposition

PerturbedDecomposition decompose_perturbed(const BigradedPoly& P, const PerturbationSpec& pert,
                                           unsigned l_max, const CascadeOptions& opt) {
    pert.validate();
    if (l_max < 1) throw InvalidInput("at least one substitution round is required");

    unsigned series_degree = 2;
    for (const auto& [n, comp] : pert.phi_components)
        if (!comp.empty()) series_degree = std::max(series_degree, n);
    unsigned n_cap =
        std::min<unsigned>(opt.degree_guard,
                           P.max_antiholo_degree() + l_max + series_degree + 2);

    CertificationReport cert = certify_perturbation(pert, std::max(8u, n_cap));
    if (!cert.all_pass)
        throw CascadeDiverged("perturbation certification failed: " + cert.first_failure());

    double eps = pert.base.epsilon;
    double r = pert.r;
    double geo = 1.0 - std::pow(eps, 4.0) * r;

    PerturbedDecomposition out;

    // Track the running substitution matrices over the polydisc and enforce
    // the two certified inequalities at every degree.
    {
        std::map<unsigned, std::map<unsigned, PolyMatrix>> raw;
        for (const auto& [n, comp] : pert.phi_components) {
            if (n < 3 || comp.empty()) continue;
            for (unsigned k = 0; k + 2 <= n_cap; ++k) raw[n].emplace(k, build_B(k, n, pert));
        }
        EliminationTracker tracker{eps};
        const unsigned phases = 20;
        for (unsigned p = 0; p < phases; ++p) {
            cplx z = pert.r1 * std::exp(cplx(0.0, 2.0 * kPi * p / phases));
            for (unsigned q = 0; q < phases; ++q) {
                cplx w = pert.r1 * std::exp(cplx(0.0, 2.0 * kPi * q / phases));
                tracker.run(pert, n_cap, raw, z, w);
            }
        }
        out.max_inverse_norm = tracker.max_inverse_norm;
        out.max_coupling_ratio = tracker.max_coupling_ratio;
    }

    std::unique_ptr<BoundaryGrid> owned_grid;
    const BoundaryGrid* grid = opt.grid;
    if (!grid) {
        owned_grid = std::make_unique<BoundaryGrid>(
            boundary_grid(DomainSpec::perturbed(pert), opt.grid_n_base, opt.grid_n_angle));
        grid = owned_grid.get();
    }

    std::map<unsigned, std::vector<BigradedPoly>> relations;
    auto relation = [&](unsigned degree) -> const std::vector<BigradedPoly>& {
        auto it = relations.find(degree);
        if (it == relations.end())
            it = relations.emplace(degree, cascade_relations(pert, degree)).first;
        return it->second;
    };

    BigradedPoly Q, R, W;
    auto deposit = [&](Monomial4 m, cplx c) {
        if (belongs_to_R(m))
            R.add_term(m, c);
        else
            Q.add_term(m, c);
    };

    unsigned s_min = 0;
    double input_mass = 0.0;
    for (const auto& [m, c] : P.terms()) {
        input_mass += std::abs(c) * std::pow(r, double(m.total_degree()));
        if (m.is_mixed()) {
            W.add_term(m, c);
            unsigned deg = m.antiholo_degree();
            s_min = s_min == 0 ? deg : std::min(s_min, deg);
        } else {
            deposit(m, c);
        }
    }

    double settle_floor = 1e-16 * std::max(input_mass, 1e-300);

    for (unsigned l = 1; l <= l_max; ++l) {
        unsigned frontier = s_min + l;
        unsigned sweeps = 0;
        while (!W.empty() && s_min > 0) {
            double below = 0.0;
            for (const auto& [m, c] : W.terms())
                if (m.antiholo_degree() < frontier)
                    below += std::abs(c) * std::pow(r, double(m.total_degree()));
            if (below <= settle_floor) break;
            if (++sweeps > 200)
                throw CascadeDiverged("substitution rounds failed to settle");

            BigradedPoly next;
            for (const auto& [m, c] : W.terms()) {
                unsigned deg = m.antiholo_degree();
                if (deg >= frontier) {
                    next.add_term(m, c);
                    continue;
                }
                if (deg + series_degree > opt.degree_guard + 2)
                    throw CascadeDiverged("antiholomorphic degree guard exceeded");
                const auto& rel = relation(deg);
                for (const auto& [gm, gc] : rel[m.d - 1].terms()) {
                    Monomial4 shifted{gm.a + m.a, gm.b, gm.c + m.c, gm.d};
                    cplx coeff = gc * c;
                    if (shifted.is_mixed())
                        next.add_term(shifted, coeff);
                    else
                        deposit(shifted, coeff);
                }
            }
            next.prune();
            W = std::move(next);
        }

        double tail = 0.0;
        for (const auto& [m, c] : P.terms()) {
            if (!m.is_mixed()) continue;
            unsigned s_t = m.antiholo_degree();
            double scale = std::abs(c) * std::pow(r, double(m.a + m.c));
            unsigned l_eff = l > s_t - s_min ? l - (s_t - s_min) : 0;
            if (l_eff == 0)
                tail += scale * std::pow(r, double(s_t));
            else
                tail += scale * round_constant(eps, l_eff) *
                        std::pow(r, double(s_t + l_eff)) / geo;
        }
        double residual = residual_sup_on_grid(P, Q, R, *grid);
        out.rounds.push_back({tail, residual});
    }

    Q.prune();
    R.prune();
    out.result.Q = std::move(Q);
    out.result.R = std::move(R);
    out.result.residual_sup = out.rounds.back().residual_sup;
    out.tail_bound = out.rounds.back().tail_bound;
    for (const auto& [d, rel] : relations)
        out.result.per_degree_sigma_min[d] = BandMatrixA::build(d - 1, pert.base).sigma_min();
    return out;
}

}  // namespace crh
