#include "crh/boundary.hpp"

#include "crh/errors.hpp"

namespace crh {

BoundaryFunction BoundaryFunction::from_poly(const BigradedPoly& p, const BoundaryGrid& g) {
    BoundaryFunction f;
    f.grid = &g;
    f.values.reserve(g.size());
    unsigned cap = p.max_exponent();
    for (const auto& node : g.nodes()) {
        PowerTable pt(node.z, node.w, cap);
        f.values.push_back(pt.evaluate(p));
    }
    f.evaluator = [p](cplx z, cplx w) { return p.evaluate(z, w); };
    return f;
}

BoundaryFunction BoundaryFunction::from_samples(std::vector<cplx> samples,
                                                const BoundaryGrid& g) {
    if (samples.size() != g.size())
        throw GridMismatch("boundary samples do not match the grid size");
    BoundaryFunction f;
    f.grid = &g;
    f.values = std::move(samples);
    return f;
}

cplx BoundaryFunction::at(cplx z, cplx w) const {
    if (evaluator) return evaluator(z, w);
    if (!grid) throw GridMismatch("boundary function has no grid");
    return grid->interpolate(values, z, w);
}

double BoundaryFunction::norm() const {
    if (!grid || values.size() != grid->size())
        throw GridMismatch("boundary function values do not match the grid");
    return grid_norm(values, *grid);
}

}  // namespace crh
