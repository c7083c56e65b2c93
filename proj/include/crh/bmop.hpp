#pragma once

#include <utility>
#include <vector>

#include "crh/boundary.hpp"
#include "crh/geometry.hpp"

namespace crh {

// Interior evaluation of a boundary function by two independent routes: the
// kernel quadrature and the direction-averaged Cauchy transform.  For data
// with a holomorphic extension both reproduce it, so the discrepancy measures
// distance from CR-ness plus quadrature noise.
struct BMEvaluation {
    std::pair<cplx, cplx> point;
    cplx value_kernel = 0.0;
    cplx value_averaged = 0.0;
    unsigned n_directions = 0;

    double discrepancy() const;
};

// Quadrature of f against the two-variable Bochner-Martinelli kernel over
// the boundary grid.  The kernel decays like distance^-3, so the point must
// keep more than one mean cell diameter from the nearest node; closer points
// raise PointTooCloseToBoundary.
cplx bm_kernel_eval(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                    const BoundaryGrid& grid);

// Average over complex line directions through the point of the Cauchy value
// of f along the line's boundary slice.  The direction space carries the
// unitarily invariant probability measure; the uniform midpoint grid in
// (|beta|^2, arg beta) realizes it exactly.  n_directions is the requested
// size of that grid (at least 16).
cplx bm_averaged_eval(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                      unsigned n_directions);

// Both routes at once.
BMEvaluation bm_evaluate(const BoundaryFunction& f, std::pair<cplx, cplx> point,
                         unsigned n_directions);

struct CROracleReport {
    std::vector<std::pair<cplx, cplx>> points;
    std::vector<double> discrepancies;
    double max_discrepancy = 0.0;
};

// Max gap over the test points between the kernel route and the horizontal
// slicewise extension.  CR data drives the gap to quadrature level; data
// that extends slicewise without being CR leaves a stable nonzero gap.
CROracleReport cr_oracle(const BoundaryFunction& f, const DomainSpec& domain,
                         const std::vector<std::pair<cplx, cplx>>& test_points);

}  // namespace crh
