#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "crh/poly.hpp"

namespace crh {

class BoundaryGrid;  // geometry.hpp

// Parameters of the ellipsoid
//   rho(z,w) = |z|^2 + |w|^2 - 1 + eps(zw + conj(zw))
//              + a z^2 + conj(a z^2) + b w^2 + conj(b w^2).
struct EllipsoidSpec {
    double epsilon = 0.0;
    cplx a = 0.0;
    cplx b = 0.0;

    double margin() const { return epsilon - std::abs(a) - std::abs(b); }
    bool admissible() const {
        return epsilon > 0.0 && epsilon < 0.5 && margin() > 0.0 &&
               std::abs(a) < 0.5 && std::abs(b) < 0.5;
    }
    // Throws InadmissibleSpec with a reason when not admissible.
    void validate() const;

    BigradedPoly defining_poly() const;

    // Antiholomorphic-degree-2 part of rho:
    // eps zbar wbar + conj(a) zbar^2 + conj(b) wbar^2.
    BigradedPoly quadratic_antiholo_part() const;
};

// Constant-band tridiagonal matrix arising from the per-degree elimination:
// diagonal eps, subdiagonal conj(a), superdiagonal conj(b).
struct BandMatrixA {
    unsigned n = 1;
    cplx diag = 0.0;
    cplx sub = 0.0;
    cplx super = 0.0;

    static BandMatrixA build(unsigned n, const EllipsoidSpec& spec);

    Eigen::MatrixXcd dense() const;

    // Solve A X = rhs by tridiagonal LU with partial pivoting.
    Eigen::MatrixXcd solve(const Eigen::MatrixXcd& rhs) const;

    // Smallest singular value, via bisection on the inertia of the
    // pentadiagonal A^H A using a banded LDL^H factorization.
    double sigma_min() const;

    // eps - |sub| - |super|; a valid lower bound for sigma_min when positive.
    double analytic_lower_bound() const {
        return diag.real() - std::abs(sub) - std::abs(super);
    }
};

struct InverseBoundReport {
    bool certified = false;
    double sigma_min = 0.0;
    double analytic_lower = 0.0;
    double gap = 0.0;  // sigma_min - analytic_lower
    double threshold = 0.0;  // (1+delta)/eps compared against 1/sigma_min
};

// True iff 1/sigma_min < (1+delta)/eps for the given matrix.
InverseBoundReport certify_inverse_bound(const BandMatrixA& m, double delta);

struct DecompositionResult {
    BigradedPoly Q;  // no zbar (b = 0 in every term)
    BigradedPoly R;  // no wbar (d = 0 in every term)
    double residual_sup = 0.0;
    std::map<unsigned, double> per_degree_sigma_min;
};

// Destination rule for terms that are not mixed: terms containing zbar only
// go to R, everything else (wbar-only terms, holomorphic terms, constants)
// goes to Q.
bool belongs_to_R(Monomial4 m);

// Table of exact splittings of the mixed antiholomorphic monomials on the
// ellipsoid boundary, built degree by degree.  Entry (k,l) holds Q and R
// with zbar^k wbar^l = Q + R on rho = 0.
class EllipsoidSplitTable {
  public:
    EllipsoidSplitTable(const EllipsoidSpec& spec, unsigned max_degree);

    unsigned max_degree() const { return max_degree_; }
    const EllipsoidSpec& spec() const { return spec_; }
    const std::map<unsigned, double>& sigma_min_per_degree() const {
        return sigma_min_;
    }

    // Splitting of the single monomial zbar^k wbar^l (k, l >= 1).
    const std::pair<BigradedPoly, BigradedPoly>& entry(unsigned k,
                                                       unsigned l) const;

    // Split an arbitrary polynomial; exact linear application of the table.
    std::pair<BigradedPoly, BigradedPoly> split(const BigradedPoly& P) const;

  private:
    EllipsoidSpec spec_;
    unsigned max_degree_;
    // degree d -> entries indexed like MixedMonomialVector(d)
    std::vector<std::vector<std::pair<BigradedPoly, BigradedPoly>>> table_;
    std::map<unsigned, double> sigma_min_;
};

struct SplitOptions {
    unsigned degree_cap = 12;
    // Grid for the residual sup; when null a standard grid of the spec's
    // ellipsoid is built internally.
    const BoundaryGrid* grid = nullptr;
};

DecompositionResult decompose_on_ellipsoid(const BigradedPoly& P,
                                           const EllipsoidSpec& spec,
                                           const SplitOptions& opt = {});

// Sup of |P - Q - R| over the quadrature nodes of the grid.
double residual_sup_on_grid(const BigradedPoly& P, const BigradedPoly& Q,
                            const BigradedPoly& R, const BoundaryGrid& grid);

}  // namespace crh
