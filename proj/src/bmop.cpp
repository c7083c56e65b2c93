#include "crh/bmop.hpp"

#include <cmath>
#include <numbers>

#include "crh/errors.hpp"
#include "crh/slices.hpp"

namespace crh {

namespace {

constexpr double kPi = std::numbers::pi;

double boundary_clearance(const BoundaryGrid& grid, std::pair<cplx, cplx> p) {
    double best = std::numeric_limits<double>::infinity();
    for (const BoundaryNode& node : grid.nodes()) {
        const double d2 =
            std::norm(node.z - p.first) + std::norm(node.w - p.second);
        if (d2 < best) best = d2;
    }
    return std::sqrt(best);
}

// Mean linear cell size of the 3-dimensional boundary quadrature.
double cell_diameter(const BoundaryGrid& grid) {
    return std::cbrt(grid.total_weight() / static_cast<double>(grid.size()));
}

void require_clear(const BoundaryGrid& grid, std::pair<cplx, cplx> p) {
    const double clearance = boundary_clearance(grid, p);
    const double cell = cell_diameter(grid);
    if (!(clearance > cell))
        throw PointTooCloseToBoundary(
            "point within one grid cell of the boundary: clearance " +
            std::to_string(clearance) + " vs cell " + std::to_string(cell));
}

}  // namespace

double BMEvaluation::discrepancy() const {
    return std::abs(value_kernel - value_averaged);
}

cplx bm_kernel_eval(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                    const BoundaryGrid& grid) {
    if (f.grid == nullptr || f.grid->signature() != grid.signature())
        throw GridMismatch("boundary function sampled on a different grid");
    require_clear(grid, point);

    // Degree-(1,1) kernel against the boundary 3-forms; the 1/(4 pi^2)
    // normalization is pinned by constant reproduction on the ball.
    cplx acc = 0.0;
    const auto& nodes = grid.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const BoundaryNode& node = nodes[i];
        const cplx dz = node.z - point.first;
        const cplx dw = node.w - point.second;
        const double r2 = std::norm(dz) + std::norm(dw);
        const cplx bracket =
            std::conj(dw) * grid.form_density(node, Form3::dzbar_dz_dw) -
            std::conj(dz) * grid.form_density(node, Form3::dwbar_dz_dw);
        acc += f.values[i] * bracket / (r2 * r2);
    }
    return acc * (-1.0 / (4.0 * kPi * kPi));
}

cplx bm_averaged_eval(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                      unsigned n_directions) {
    if (n_directions < 16)
        throw InvalidInput("n_directions must be at least 16");
    if (f.grid == nullptr) throw GridMismatch("boundary function without a grid");
    require_clear(*f.grid, point);

    const unsigned n_s = std::max<unsigned>(
        2, static_cast<unsigned>(std::lround(std::sqrt(n_directions / 2.0))));
    const unsigned n_v = std::max<unsigned>(4, n_directions / n_s);
    const unsigned m = std::max<unsigned>(64, f.grid->fiber_samples());

    // Midpoint grid in s = |beta|^2 and v = arg beta; for each direction the
    // Cauchy value at the point is the analytic part of the line slice
    // evaluated at its own center t = 0.
    cplx acc = 0.0;
    std::vector<cplx> samples(m);
    for (unsigned is = 0; is < n_s; ++is) {
        const double s = (is + 0.5) / n_s;
        const double alpha = std::sqrt(1.0 - s);
        for (unsigned iv = 0; iv < n_v; ++iv) {
            const double v = 2.0 * kPi * (iv + 0.5) / n_v;
            const cplx beta = std::sqrt(s) * cplx(std::cos(v), std::sin(v));
            const SliceCurve curve =
                line_slice(f.grid->domain(), point.first, point.second, alpha, beta);
            for (unsigned k = 0; k < m; ++k) {
                const auto [zz, ww] = curve.embed(2.0 * kPi * k / m);
                samples[k] = f.at(zz, ww);
            }
            acc += analytic_part_at(samples, curve.shape, 0.0);
        }
    }
    return acc / static_cast<double>(n_s * n_v);
}

BMEvaluation bm_evaluate(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                         unsigned n_directions) {
    if (f.grid == nullptr) throw GridMismatch("boundary function without a grid");
    BMEvaluation out;
    out.point = point;
    out.value_kernel = bm_kernel_eval(f, point, *f.grid);
    out.value_averaged = bm_averaged_eval(f, point, n_directions);
    out.n_directions = n_directions;
    return out;
}

CROracleReport cr_oracle(const BoundaryFunction& f, const DomainSpec& domain,
                         const std::vector<std::pair<cplx, cplx>>& test_points) {
    if (f.grid == nullptr) throw GridMismatch("boundary function without a grid");
    const BigradedPoly rho = domain.defining_poly();
    for (const auto& p : test_points)
        if (!(rho.evaluate(p.first, p.second).real() < 0.0))
            throw PointNotInterior("cr_oracle test point outside the domain");

    CROracleReport report;
    report.points = test_points;
    const SliceExtension extension =
        extend_slicewise(f, SliceDirection::horizontal);
    for (const auto& p : test_points) {
        const cplx kernel_value = bm_kernel_eval(f, p, *f.grid);
        const cplx slice_value = extension(p.first, p.second);
        const double gap = std::abs(kernel_value - slice_value);
        report.discrepancies.push_back(gap);
        if (gap > report.max_discrepancy) report.max_discrepancy = gap;
    }
    return report;
}

}  // namespace crh
