#include "crh/projections.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "crh/errors.hpp"
#include "json.hpp"

namespace crh {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

std::vector<Monomial4> family_monomials(SubspaceFamily family, unsigned degree) {
    const bool with_zbar = family == SubspaceFamily::v1;
    const bool with_wbar = family == SubspaceFamily::v2;
    std::vector<Monomial4> out;
    for (unsigned t = 0; t <= degree; ++t)
        for (unsigned a = 0; a <= t; ++a)
            for (unsigned b = 0; a + b <= t; ++b) {
                if (b > 0 && !with_zbar) continue;
                for (unsigned c = 0; a + b + c <= t; ++c) {
                    const unsigned d = t - a - b - c;
                    if (d > 0 && !with_wbar) continue;
                    out.push_back(Monomial4{a, b, c, d});
                }
            }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MatrixXcd sample_monomials(const BoundaryGrid& grid,
                           const std::vector<Monomial4>& monos, unsigned degree) {
    MatrixXcd M(grid.size(), monos.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const BoundaryNode& node = grid.nodes()[i];
        const PowerTable pt(node.z, node.w, degree);
        for (std::size_t k = 0; k < monos.size(); ++k) {
            const Monomial4& m = monos[k];
            M(i, k) = pt.z[m.a] * pt.zb[m.b] * pt.w[m.c] * pt.wb[m.d];
        }
    }
    return M;
}

VectorXd node_weights(const BoundaryGrid& grid) {
    VectorXd w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) w(i) = grid.nodes()[i].weight;
    return w;
}

void require_same_grid(const BoundaryGrid& a, const BoundaryGrid& b) {
    if (&a == &b) return;
    if (a.signature() != b.signature())
        throw GridMismatch("operators and data live on different grids");
}

double median_ratio(const std::vector<double>& d) {
    std::vector<double> ratios;
    const std::size_t n = d.size();
    const std::size_t lookback = std::min<std::size_t>(5, n > 0 ? n - 1 : 0);
    for (std::size_t k = n - lookback; k < n; ++k)
        if (d[k - 1] > 1e-300) ratios.push_back(d[k] / d[k - 1]);
    if (ratios.empty()) return 0.0;
    std::sort(ratios.begin(), ratios.end());
    return ratios[ratios.size() / 2];
}

}  // namespace

std::vector<cplx> ProjectionOperator::frame_coefficients(unsigned k) const {
    if (k >= rank_) throw InvalidInput("frame index out of range");
    const std::size_t m = monomials_.size();
    return std::vector<cplx>(coeffs_.begin() + k * m, coeffs_.begin() + (k + 1) * m);
}

std::vector<cplx> ProjectionOperator::frame_function(unsigned k) const {
    if (k >= rank_) throw InvalidInput("frame index out of range");
    const std::size_t n = grid_->size();
    return std::vector<cplx>(samples_.begin() + k * n, samples_.begin() + (k + 1) * n);
}

std::vector<cplx> ProjectionOperator::apply(const std::vector<cplx>& values) const {
    const std::size_t n = grid_->size();
    if (values.size() != n)
        throw GridMismatch("value vector does not match the operator grid");
    Eigen::Map<const MatrixXcd> S(samples_.data(), n, rank_);
    Eigen::Map<const VectorXcd> f(values.data(), n);
    const VectorXd w = node_weights(*grid_);
    // Pairings use the weighted inner product, so weight f before the adjoint.
    VectorXcd fw(n);
    for (std::size_t i = 0; i < n; ++i) fw(i) = w(i) * f(i);
    const VectorXcd coeffs = S.adjoint() * fw;
    const VectorXcd out = S * coeffs;
    return std::vector<cplx>(out.data(), out.data() + n);
}

ProjectionOperator build_subspace_projection(const DomainSpec&,
                                             const BoundaryGrid& grid,
                                             SubspaceFamily family, unsigned degree,
                                             double rank_tol) {
    if (family == SubspaceFamily::intersection)
        throw InvalidInput("intersection frames come from intersection_frame");
    if (rank_tol <= 0.0) throw InvalidInput("rank tolerance must be positive");
    if (grid.angular_count() < 2 * degree + 1 || grid.fiber_samples() < 2 * degree + 1 ||
        grid.radial_count() < degree + 2)
        throw GridUnderResolved(
            "grid cannot resolve products of two family members at this degree");

    ProjectionOperator op;
    op.grid_ = &grid;
    op.family_ = family;
    op.degree_ = degree;
    op.rank_tolerance_ = rank_tol;
    op.monomials_ = family_monomials(family, degree);

    const MatrixXcd M = sample_monomials(grid, op.monomials_, degree);
    const VectorXd w = node_weights(grid);
    const VectorXd sqrtw = w.cwiseSqrt();
    MatrixXcd Mw = M;
    for (Eigen::Index k = 0; k < Mw.cols(); ++k)
        Mw.col(k) = Mw.col(k).cwiseProduct(sqrtw.cast<cplx>());
    const MatrixXcd G = Mw.adjoint() * Mw;

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(G);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("Gram eigendecomposition failed");
    const VectorXd lambda = es.eigenvalues();
    const double top = lambda(lambda.size() - 1);
    if (top <= 0.0) throw NumericalFailure("Gram matrix is not positive");

    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = lambda.size() - 1; k >= 0; --k)
        if (lambda(k) > rank_tol * top) kept.push_back(k);

    const std::size_t m = op.monomials_.size();
    const std::size_t n = grid.size();
    op.rank_ = static_cast<unsigned>(kept.size());
    MatrixXcd C(m, kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j)
        C.col(j) = es.eigenvectors().col(kept[j]) / std::sqrt(lambda(kept[j]));
    const MatrixXcd S = M * C;

    op.coeffs_.assign(C.data(), C.data() + m * kept.size());
    op.samples_.assign(S.data(), S.data() + n * kept.size());
    return op;
}

BoundaryFunction szego_reference(const BoundaryFunction& f, unsigned degree) {
    if (!f.grid || f.values.size() != f.grid->size())
        throw GridMismatch("boundary function values do not match the grid");
    const ProjectionOperator holo = build_subspace_projection(
        f.grid->domain(), *f.grid, SubspaceFamily::holomorphic, degree);
    return BoundaryFunction::from_samples(holo.apply(f.values), *f.grid);
}

void IterationReport::export_json(std::ostream& os) const {
    nlohmann::json j;
    j["steps"] = steps;
    j["converged"] = converged;
    j["ratio_estimate"] = ratio_estimate;
    j["distances"] = distances;
    os << j.dump(2) << '\n';
}

std::pair<BoundaryFunction, IterationReport> alternate(const BoundaryFunction& f,
                                                       const ProjectionOperator& p1,
                                                       const ProjectionOperator& p2,
                                                       unsigned k_max, double tol) {
    if (!f.grid) throw GridMismatch("boundary function has no grid");
    require_same_grid(*f.grid, p1.grid());
    require_same_grid(*f.grid, p2.grid());
    if (k_max == 0) throw InvalidInput("alternation needs at least one step");
    if (tol <= 0.0) throw InvalidInput("alternation tolerance must be positive");

    const BoundaryGrid& g = *f.grid;
    IterationReport report;
    std::vector<cplx> cur = f.values;
    for (unsigned k = 0; k < k_max; ++k) {
        std::vector<cplx> next = p1.apply(p2.apply(cur));
        std::vector<cplx> diff(next.size());
        for (std::size_t i = 0; i < next.size(); ++i) diff[i] = next[i] - cur[i];
        const double d = grid_norm(diff, g);
        report.distances.push_back(d);
        cur = std::move(next);
        ++report.steps;
        if (d < tol) {
            report.converged = true;
            break;
        }
    }
    report.ratio_estimate = median_ratio(report.distances);
    return {BoundaryFunction::from_samples(std::move(cur), g), report};
}

ComposedOperator::ComposedOperator(std::vector<const ProjectionOperator*> factors)
    : factors_(std::move(factors)) {
    if (factors_.size() < 2)
        throw InvalidInput("composition needs at least two factors");
    for (const auto* p : factors_) {
        if (p == nullptr) throw InvalidInput("composition factor is null");
        require_same_grid(factors_.front()->grid(), p->grid());
    }
}

std::vector<cplx> ComposedOperator::apply(const std::vector<cplx>& values) const {
    std::vector<cplx> cur = values;
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it)
        cur = (*it)->apply(cur);
    return cur;
}

const BoundaryGrid& ComposedOperator::grid() const { return factors_.front()->grid(); }

ComposedOperator composed_operator(std::vector<const ProjectionOperator*> factors) {
    return ComposedOperator(std::move(factors));
}

namespace {

// Weighted cross-Gram of two orthonormal frames; its singular values are the
// cosines of the principal angles.
MatrixXcd cross_gram(const ProjectionOperator& p1, const ProjectionOperator& p2) {
    require_same_grid(p1.grid(), p2.grid());
    const BoundaryGrid& g = p1.grid();
    const std::size_t n = g.size();
    const VectorXd sqrtw = node_weights(g).cwiseSqrt();
    MatrixXcd A(n, p1.rank());
    MatrixXcd B(n, p2.rank());
    for (unsigned k = 0; k < p1.rank(); ++k) {
        const auto col = p1.frame_function(k);
        for (std::size_t i = 0; i < n; ++i) A(i, k) = sqrtw(i) * col[i];
    }
    for (unsigned k = 0; k < p2.rank(); ++k) {
        const auto col = p2.frame_function(k);
        for (std::size_t i = 0; i < n; ++i) B(i, k) = sqrtw(i) * col[i];
    }
    return A.adjoint() * B;
}

}  // namespace

IntersectionReport intersection_dimension(const ProjectionOperator& p1,
                                          const ProjectionOperator& p2,
                                          double angle_tol) {
    if (angle_tol <= 0.0) throw InvalidInput("angle tolerance must be positive");
    const MatrixXcd C = cross_gram(p1, p2);
    Eigen::JacobiSVD<MatrixXcd> svd(C);
    IntersectionReport report;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
        const double sigma = std::clamp(svd.singularValues()(k), 0.0, 1.0);
        report.angles.push_back(std::acos(sigma));
    }
    std::sort(report.angles.begin(), report.angles.end());
    report.dimension = static_cast<unsigned>(
        std::count_if(report.angles.begin(), report.angles.end(),
                      [&](double a) { return a < angle_tol; }));
    return report;
}

ProjectionOperator intersection_frame(const ProjectionOperator& p1,
                                      const ProjectionOperator& p2,
                                      double angle_tol) {
    if (angle_tol <= 0.0) throw InvalidInput("angle tolerance must be positive");
    const MatrixXcd C = cross_gram(p1, p2);
    Eigen::JacobiSVD<MatrixXcd> svd(C, Eigen::ComputeFullU);

    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
        const double sigma = std::clamp(svd.singularValues()(k), 0.0, 1.0);
        if (std::acos(sigma) < angle_tol) kept.push_back(k);
    }

    const BoundaryGrid& g = p1.grid();
    const std::size_t n = g.size();
    const std::size_t m = p1.monomials().size();

    MatrixXcd C1(m, p1.rank());
    MatrixXcd S1(n, p1.rank());
    for (unsigned k = 0; k < p1.rank(); ++k) {
        const auto coeff = p1.frame_coefficients(k);
        const auto col = p1.frame_function(k);
        for (std::size_t i = 0; i < m; ++i) C1(i, k) = coeff[i];
        for (std::size_t i = 0; i < n; ++i) S1(i, k) = col[i];
    }
    MatrixXcd X(p1.rank(), kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) X.col(j) = svd.matrixU().col(kept[j]);

    ProjectionOperator op;
    op.grid_ = &g;
    op.family_ = SubspaceFamily::intersection;
    op.degree_ = p1.degree();
    op.rank_ = static_cast<unsigned>(kept.size());
    op.rank_tolerance_ = angle_tol;
    op.monomials_ = p1.monomials();
    const MatrixXcd coeffs = C1 * X;
    const MatrixXcd samples = S1 * X;
    op.coeffs_.assign(coeffs.data(), coeffs.data() + m * kept.size());
    op.samples_.assign(samples.data(), samples.data() + n * kept.size());
    return op;
}

void export_angles_csv(std::ostream& os, const IntersectionReport& report) {
    os << "index,angle\n";
    for (std::size_t k = 0; k < report.angles.size(); ++k)
        os << k << ',' << report.angles[k] << '\n';
}

}  // namespace crh
