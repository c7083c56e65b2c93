#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "crh/geometry.hpp"
#include "crh/poly.hpp"

namespace crh {

// Complex-valued boundary data: samples aligned with a quadrature grid, plus
// an optional exact evaluator used for off-node resampling.  Non-owning: the
// grid must outlive the function.
struct BoundaryFunction {
    const BoundaryGrid* grid = nullptr;
    std::vector<cplx> values;
    std::function<cplx(cplx, cplx)> evaluator;

    static BoundaryFunction from_poly(const BigradedPoly& p, const BoundaryGrid& g);
    static BoundaryFunction from_samples(std::vector<cplx> samples, const BoundaryGrid& g);

    // Exact evaluator when present, grid interpolation otherwise.
    cplx at(cplx z, cplx w) const;

    double norm() const;
};

}  // namespace crh
