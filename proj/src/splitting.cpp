#include "crh/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crh/errors.hpp"
#include "crh/geometry.hpp"

namespace crh {

void EllipsoidSpec::validate() const {
    std::ostringstream why;
    if (!(epsilon > 0.0 && epsilon < 0.5))
        why << "epsilon=" << epsilon << " outside (0, 1/2); ";
    if (!(margin() > 0.0))
        why << "epsilon - |a| - |b| = " << margin() << " not positive; ";
    if (!(std::abs(a) < 0.5)) why << "|a| >= 1/2; ";
    if (!(std::abs(b) < 0.5)) why << "|b| >= 1/2; ";
    std::string msg = why.str();
    if (!msg.empty()) throw InadmissibleSpec("ellipsoid spec: " + msg);
}

BigradedPoly EllipsoidSpec::defining_poly() const {
    BigradedPoly rho;
    rho.add_term({1, 1, 0, 0}, 1.0);   // |z|^2
    rho.add_term({0, 0, 1, 1}, 1.0);   // |w|^2
    rho.add_term({0, 0, 0, 0}, -1.0);
    rho.add_term({1, 0, 1, 0}, epsilon);
    rho.add_term({0, 1, 0, 1}, epsilon);
    rho.add_term({2, 0, 0, 0}, a);
    rho.add_term({0, 2, 0, 0}, std::conj(a));
    rho.add_term({0, 0, 2, 0}, b);
    rho.add_term({0, 0, 0, 2}, std::conj(b));
    return rho;
}

BigradedPoly EllipsoidSpec::quadratic_antiholo_part() const {
    BigradedPoly q;
    q.add_term({0, 1, 0, 1}, epsilon);
    q.add_term({0, 2, 0, 0}, std::conj(a));
    q.add_term({0, 0, 0, 2}, std::conj(b));
    return q;
}

BandMatrixA BandMatrixA::build(unsigned n, const EllipsoidSpec& spec) {
    BandMatrixA m;
    m.n = n;
    m.diag = spec.epsilon;
    m.sub = std::conj(spec.a);
    m.super = std::conj(spec.b);
    return m;
}

Eigen::MatrixXcd BandMatrixA::dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (unsigned i = 0; i < n; ++i) {
        m(i, i) = diag;
        if (i + 1 < n) {
            m(i + 1, i) = sub;
            m(i, i + 1) = super;
        }
    }
    return m;
}

Eigen::MatrixXcd BandMatrixA::solve(const Eigen::MatrixXcd& rhs) const {
    // Tridiagonal LU with partial pivoting (row swaps create one extra
    // superdiagonal of fill-in).
    const unsigned N = n;
    if (rhs.rows() != static_cast<long>(N))
        throw InvalidInput("band solve: rhs row count mismatch");
    std::vector<cplx> dl(N, sub), dd(N, diag), du(N, super), du2(N, 0.0);
    dl[0] = 0.0;
    du[N - 1] = 0.0;
    Eigen::MatrixXcd x = rhs;
    for (unsigned i = 0; i + 1 < N; ++i) {
        if (std::abs(dl[i + 1]) > std::abs(dd[i])) {
            std::swap(dd[i], dl[i + 1]);
            std::swap(du[i], dd[i + 1]);
            if (i + 2 < N) {
                du2[i] = du[i + 1];
                du[i + 1] = 0.0;
            }
            x.row(i).swap(x.row(i + 1));
        }
        if (dd[i] == 0.0) throw NumericalFailure("band solve: zero pivot");
        cplx f = dl[i + 1] / dd[i];
        dd[i + 1] -= f * du[i];
        if (i + 2 < N) du[i + 1] -= f * du2[i];
        x.row(i + 1) -= f * x.row(i);
    }
    if (dd[N - 1] == 0.0) throw NumericalFailure("band solve: zero pivot");
    for (long i = N - 1; i >= 0; --i) {
        if (i + 1 < static_cast<long>(N)) x.row(i) -= du[i] * x.row(i + 1);
        if (i + 2 < static_cast<long>(N)) x.row(i) -= du2[i] * x.row(i + 2);
        x.row(i) /= dd[i];
    }
    return x;
}

double BandMatrixA::sigma_min() const {
    if (n == 1) return std::abs(diag);

    // Pentadiagonal M = A^H A.  Band values away from the ends:
    const double ad = std::norm(diag), as = std::norm(sub), ap = std::norm(super);
    const cplx m1 = std::conj(diag) * super + std::conj(sub) * diag;
    const cplx m2 = std::conj(sub) * super;
    auto mdiag = [&](unsigned i) {
        double v = ad;
        if (i + 1 < n) v += as;
        if (i > 0) v += ap;
        return v;
    };

    const double scale = ad + as + ap;
    const double pivmin = 1e-30 * std::max(scale, 1e-30);

    // Eigenvalue count of M - t I below zero via banded LDL^H inertia.
    auto count_below = [&](double t) {
        std::vector<double> d(n);
        std::vector<cplx> l1(n, 0.0), l2(n, 0.0);
        int cnt = 0;
        for (unsigned i = 0; i < n; ++i) {
            cplx li2 = 0.0, li1 = 0.0;
            if (i >= 2) li2 = std::conj(m2) / d[i - 2];
            if (i >= 1) {
                cplx mi1 = std::conj(m1);
                cplx corr = (i >= 2) ? li2 * d[i - 2] * std::conj(l1[i - 1]) : cplx(0.0);
                li1 = (mi1 - corr) / d[i - 1];
            }
            double di = mdiag(i) - t;
            if (i >= 1) di -= std::norm(li1) * d[i - 1];
            if (i >= 2) di -= std::norm(li2) * d[i - 2];
            if (std::abs(di) < pivmin) di = -pivmin;
            d[i] = di;
            l1[i] = li1;
            l2[i] = li2;
            if (di < 0.0) ++cnt;
        }
        return cnt;
    };

    double lo = 0.0;
    double hi = (std::abs(diag) + std::abs(sub) + std::abs(super));
    hi = hi * hi * (1.0 + 1e-12) + pivmin;
    if (count_below(lo) > 0) return 0.0;  // singular within guard
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return std::sqrt(0.5 * (lo + hi));
}

InverseBoundReport certify_inverse_bound(const BandMatrixA& m, double delta) {
    InverseBoundReport rep;
    rep.sigma_min = m.sigma_min();
    rep.analytic_lower = m.analytic_lower_bound();
    rep.gap = rep.sigma_min - rep.analytic_lower;
    double eps = m.diag.real();
    rep.threshold = (1.0 + delta) / eps;
    rep.certified = rep.sigma_min > 0.0 && (1.0 / rep.sigma_min) < rep.threshold;
    return rep;
}

bool belongs_to_R(Monomial4 m) { return m.b >= 1 && m.d == 0; }

namespace {

// Accumulates a polynomial into the (Q, R) pair using the destination rule,
// resolving mixed monomials through previously built table entries.
void resolve_into(
    const BigradedPoly& p,
    const std::vector<std::vector<std::pair<BigradedPoly, BigradedPoly>>>& table,
    BigradedPoly& q_out, BigradedPoly& r_out) {
    for (const auto& [m, coeff] : p.terms()) {
        if (!m.is_mixed()) {
            if (belongs_to_R(m))
                r_out.add_term(m, coeff);
            else
                q_out.add_term(m, coeff);
            continue;
        }
        unsigned deg = m.antiholo_degree();
        if (deg >= table.size() || table[deg].empty())
            throw DegreeCapExceeded("splitting table does not cover degree " +
                                    std::to_string(deg));
        long idx = MixedMonomialVector::index_of({0, m.b, 0, m.d});
        const auto& [tq, tr] = table[deg][static_cast<std::size_t>(idx)];
        BigradedPoly holo = BigradedPoly::monomial({m.a, 0, m.c, 0}, coeff);
        q_out += holo * tq;
        r_out += holo * tr;
    }
}

}  // namespace

EllipsoidSplitTable::EllipsoidSplitTable(const EllipsoidSpec& spec,
                                         unsigned max_degree)
    : spec_(spec), max_degree_(max_degree) {
    spec.validate();
    BigradedPoly rho = spec.defining_poly();
    table_.resize(max_degree + 1);

    for (unsigned deg = 2; deg <= max_degree; ++deg) {
        MixedMonomialVector unknowns(deg);
        const unsigned rows = deg - 1;
        BandMatrixA A = BandMatrixA::build(rows, spec_);
        sigma_min_[deg] = A.sigma_min();

        // Multiply rho = 0 by every antiholomorphic monomial of degree
        // deg - 2, in decreasing zbar order to match the unknown ordering.
        std::vector<BigradedPoly> q_rhs(rows), r_rhs(rows);
        Eigen::MatrixXcd check = Eigen::MatrixXcd::Zero(rows, rows);
        for (unsigned i = 0; i < rows; ++i) {
            Monomial4 mult{0, deg - 2 - i, 0, i};
            BigradedPoly prod = rho * BigradedPoly::monomial(mult);
            // Degree-deg mixed terms form the matrix row; the rest moves to
            // the right-hand side with flipped sign and is resolved through
            // lower-degree entries.
            BigradedPoly rest;
            for (const auto& [m, c] : prod.terms()) {
                if (m.is_mixed() && m.a == 0 && m.c == 0 &&
                    m.antiholo_degree() == deg) {
                    long col = MixedMonomialVector::index_of(m);
                    check(i, static_cast<long>(col)) += c;
                } else {
                    rest.add_term(m, -c);
                }
            }
            resolve_into(rest, table_, q_rhs[i], r_rhs[i]);
        }
        // The assembled system must be exactly the band matrix of the spec.
        Eigen::MatrixXcd expected = A.dense();
        if ((check - expected).cwiseAbs().maxCoeff() > 1e-14)
            throw NumericalFailure("per-degree system does not match band matrix");

        // Collect distinct monomials of the polynomial right-hand sides and
        // solve both halves through the same factorization.
        auto solve_polys = [&](const std::vector<BigradedPoly>& rhs) {
            std::map<Monomial4, unsigned> cols;
            for (const auto& p : rhs)
                for (const auto& [m, c] : p.terms())
                    cols.try_emplace(m, 0);
            unsigned j = 0;
            for (auto& [m, idx] : cols) idx = j++;
            Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(rows, cols.size());
            for (unsigned i = 0; i < rows; ++i)
                for (const auto& [m, c] : rhs[i].terms()) B(i, cols[m]) = c;
            Eigen::MatrixXcd X = A.solve(B);
            std::vector<BigradedPoly> out(rows);
            for (const auto& [m, idx] : cols)
                for (unsigned i = 0; i < rows; ++i)
                    out[i].add_term(m, X(i, idx));
            return out;
        };
        auto qs = solve_polys(q_rhs);
        auto rs = solve_polys(r_rhs);

        table_[deg].resize(rows);
        for (unsigned i = 0; i < rows; ++i) {
            qs[i].prune(0.0);
            rs[i].prune(0.0);
            table_[deg][i] = {std::move(qs[i]), std::move(rs[i])};
        }
    }
}

const std::pair<BigradedPoly, BigradedPoly>& EllipsoidSplitTable::entry(
    unsigned k, unsigned l) const {
    if (k < 1 || l < 1) throw InvalidInput("table entry wants a mixed monomial");
    unsigned deg = k + l;
    if (deg > max_degree_)
        throw DegreeCapExceeded("mixed degree " + std::to_string(deg) +
                                " beyond table cap " + std::to_string(max_degree_));
    long idx = MixedMonomialVector::index_of({0, k, 0, l});
    return table_[deg][static_cast<std::size_t>(idx)];
}

std::pair<BigradedPoly, BigradedPoly> EllipsoidSplitTable::split(
    const BigradedPoly& P) const {
    for (const auto& [m, c] : P.terms())
        if (m.is_mixed() && m.antiholo_degree() > max_degree_)
            throw DegreeCapExceeded("input mixed degree exceeds table cap");
    BigradedPoly q, r;
    resolve_into(P, table_, q, r);
    return {q, r};
}

double residual_sup_on_grid(const BigradedPoly& P, const BigradedPoly& Q,
                            const BigradedPoly& R, const BoundaryGrid& grid) {
    BigradedPoly diff = P;
    diff -= Q;
    diff -= R;
    double sup = 0.0;
    unsigned max_e = diff.max_exponent();
    for (const auto& node : grid.nodes()) {
        PowerTable pt(node.z, node.w, max_e);
        sup = std::max(sup, std::abs(pt.evaluate(diff)));
    }
    return sup;
}

DecompositionResult decompose_on_ellipsoid(const BigradedPoly& P,
                                           const EllipsoidSpec& spec,
                                           const SplitOptions& opt) {
    spec.validate();
    unsigned need = 0;
    for (const auto& [m, c] : P.terms())
        if (m.is_mixed()) need = std::max(need, m.antiholo_degree());
    if (need > opt.degree_cap)
        throw DegreeCapExceeded("input needs mixed degree " +
                                std::to_string(need) + " > cap " +
                                std::to_string(opt.degree_cap));

    EllipsoidSplitTable table(spec, need);
    auto [q, r] = table.split(P);

    DecompositionResult res;
    res.Q = std::move(q);
    res.R = std::move(r);
    res.per_degree_sigma_min = table.sigma_min_per_degree();
    if (opt.grid != nullptr) {
        res.residual_sup = residual_sup_on_grid(P, res.Q, res.R, *opt.grid);
    } else {
        DomainSpec dom = DomainSpec::ellipsoid(spec);
        BoundaryGrid grid = boundary_grid(dom, 64, 64);
        res.residual_sup = residual_sup_on_grid(P, res.Q, res.R, grid);
    }
    return res;
}

}  // namespace crh
