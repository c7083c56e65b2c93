#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "crh/boundary.hpp"
#include "crh/geometry.hpp"

namespace crh {

// Polynomial subspaces of L^2(boundary surface measure): v1 omits wbar
// (extendible on fixed-z slices), v2 omits zbar (fixed-w slices),
// holomorphic omits both.  intersection tags frames produced from principal
// vectors of a pair of operators.
enum class SubspaceFamily { v1, v2, holomorphic, intersection };

// Orthogonal projection onto the span of a monomial family, stored as an
// orthonormal frame over the grid.  Rank deficiencies of the raw Gram matrix
// (boundary-induced relations between monomials) are truncated at
// rank_tolerance relative to the top eigenvalue.
class ProjectionOperator {
  public:
    const BoundaryGrid& grid() const { return *grid_; }
    SubspaceFamily family() const { return family_; }
    unsigned degree() const { return degree_; }
    unsigned rank() const { return rank_; }
    double rank_tolerance() const { return rank_tolerance_; }
    const std::vector<Monomial4>& monomials() const { return monomials_; }

    // Frame element k as coefficients in monomials() and as grid samples.
    std::vector<cplx> frame_coefficients(unsigned k) const;
    std::vector<cplx> frame_function(unsigned k) const;

    std::vector<cplx> apply(const std::vector<cplx>& values) const;

  private:
    friend ProjectionOperator build_subspace_projection(const DomainSpec&,
                                                        const BoundaryGrid&,
                                                        SubspaceFamily, unsigned,
                                                        double);
    friend ProjectionOperator intersection_frame(const ProjectionOperator&,
                                                 const ProjectionOperator&, double);

    const BoundaryGrid* grid_ = nullptr;
    SubspaceFamily family_ = SubspaceFamily::holomorphic;
    unsigned degree_ = 0;
    unsigned rank_ = 0;
    double rank_tolerance_ = 0.0;
    std::vector<Monomial4> monomials_;
    std::vector<cplx> coeffs_;   // monomials x rank, column-major
    std::vector<cplx> samples_;  // nodes x rank, column-major
};

// Orthonormalizes the degree-capped family on the grid.  The grid must
// resolve products of two family members (uniform directions need more than
// twice the degree in sample count), otherwise GridUnderResolved.
ProjectionOperator build_subspace_projection(const DomainSpec& domain,
                                             const BoundaryGrid& grid,
                                             SubspaceFamily family, unsigned degree,
                                             double rank_tol = 1e-10);

// Projection of f onto the holomorphic family up to the given degree, the
// Gram-based reference the alternating scheme is compared against.
BoundaryFunction szego_reference(const BoundaryFunction& f, unsigned degree);

struct IterationReport {
    std::vector<double> distances;  // successive-iterate distances in grid norm
    double ratio_estimate = 0.0;
    unsigned steps = 0;
    bool converged = false;

    void export_json(std::ostream& os) const;
};

// von Neumann alternation g <- p1(p2(g)) until the successive distance drops
// below tol or k_max steps are spent.  Returns the final iterate.
std::pair<BoundaryFunction, IterationReport> alternate(const BoundaryFunction& f,
                                                       const ProjectionOperator& p1,
                                                       const ProjectionOperator& p2,
                                                       unsigned k_max, double tol);

// Composition of projections applied right to left, as written.
class ComposedOperator {
  public:
    explicit ComposedOperator(std::vector<const ProjectionOperator*> factors);

    std::vector<cplx> apply(const std::vector<cplx>& values) const;
    std::size_t size() const { return factors_.size(); }
    const BoundaryGrid& grid() const;

  private:
    std::vector<const ProjectionOperator*> factors_;
};

ComposedOperator composed_operator(std::vector<const ProjectionOperator*> factors);

// Principal angles between the ranges of two projections, ascending.
// dimension counts angles below the tolerance (the common subspace); the
// first angle past it certifies the alternation contraction rate cos^2.
struct IntersectionReport {
    unsigned dimension = 0;
    std::vector<double> angles;
};

IntersectionReport intersection_dimension(const ProjectionOperator& p1,
                                          const ProjectionOperator& p2,
                                          double angle_tol = 1e-3);

// Orthonormal frame of the common subspace, from the principal vectors of p1.
ProjectionOperator intersection_frame(const ProjectionOperator& p1,
                                      const ProjectionOperator& p2,
                                      double angle_tol = 1e-3);

void export_angles_csv(std::ostream& os, const IntersectionReport& report);

}  // namespace crh
