#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "crh/boundary.hpp"
#include "crh/geometry.hpp"

namespace crh {

// Fourier data of a boundary function restricted to one slice curve, taken in
// the curve's conformal parameter (the angle theta of SliceCurve::point).
// coefficients satisfies the discrete Parseval identity: the sum of |c_k|^2
// equals the mean of |f|^2 over the samples.
//
// negative_energy measures the obstruction to holomorphic extension into the
// slice interior.  On a circular slice it is the energy of the negative
// modes.  On an elliptical slice the degree-n polynomial basis element has
// boundary trace e^{i n theta} + q^(2n) e^{-i n theta} with q^2 the axis
// ratio of the Joukowski reflection, so the obstruction in mode -n is
// c_{-n} - q^(2n) c_{+n} and negative_energy sums those defects.
struct SliceSpectrum {
    unsigned slice_id = 0;
    std::map<int, cplx> coefficients;
    double negative_energy = 0.0;
    double total_energy = 0.0;
};

// Spectrum of f sampled at n_samples uniform parameter values on the curve.
// n_samples == 0 uses the fiber resolution of f's grid.  Throws
// TooFewSamples below 16 samples.
SliceSpectrum slice_spectrum(const BoundaryFunction& f, const SliceCurve& curve,
                             unsigned n_samples = 0);

// Value at parameter t of the holomorphic part of uniformly sampled slice
// data, via the three-term recurrence for the ellipse polynomial basis
// E_{n+1} = what*E_n - q^2 E_{n-1} (E_2 = what*E_1 - 2 q^2, what the
// axis-normalized coordinate).  Circles reduce to a plain power series in
// (t - center)/radius.
cplx analytic_part_at(const std::vector<cplx>& samples, const EllipseShape& shape, cplx t);

struct CRHReport {
    double max_negative_energy_horizontal = 0.0;
    double max_negative_energy_vertical = 0.0;
    bool is_crh = false;
    double cr_residual = 0.0;
    bool is_cr = false;
    // Normalization and thresholds used for the booleans.
    double norm = 0.0;
    double extend_tolerance = 0.0;
    double cr_tolerance = 0.0;
};

// Slice-by-slice extendability plus the weak tangential CR residual.  The
// booleans are scale-invariant: energies are compared against tol relative
// to the squared norm of f, the CR residual is already normalized.
CRHReport classify_crh(const BoundaryFunction& f, const DomainSpec& domain,
                       double tol_extend = 1e-8, double tol_cr = 1e-6);

// Maximum over test monomials P (total degree <= n_test, at least one
// antiholomorphic factor) of the weak pairing of the tangential CR operator
// against P, realized without differentiating f:
//   | sum f * dP/dwbar * (dz^dw^dwbar) - sum f * dP/dzbar * (dw^dz^dzbar) |
// normalized by ||f|| * ||P|| in the grid norm.
double cr_residual(const BoundaryFunction& f, const DomainSpec& domain,
                   unsigned n_test = 4);

// Moment obstructions to slicewise extension.  horizontal_max pairs f with
// p(z, zbar, w) against dw^dz^dzbar (detects failure on fixed-z slices),
// vertical_max pairs f with q(z, w, wbar) against dz^dw^dwbar (fixed-w
// slices).  Values are raw maximal moduli over the family.
struct MomentReport {
    double horizontal_max = 0.0;
    double vertical_max = 0.0;
    unsigned max_degree = 0;
};

MomentReport moment_test(const BoundaryFunction& f, const DomainSpec& domain,
                         unsigned max_deg);

// Interior evaluator built from per-slice holomorphic parts.  Sampling
// happens lazily per call; slices whose relative negative energy exceeds the
// tolerance raise NotSliceExtendible, exterior points raise PointNotInterior.
// On the boundary the evaluator reproduces extendible data.
class SliceExtension {
  public:
    SliceExtension(BoundaryFunction f, SliceDirection direction, double tol);

    cplx operator()(cplx z, cplx w) const;

    SliceDirection direction() const { return direction_; }

  private:
    BoundaryFunction f_;
    DomainSpec domain_;
    BigradedPoly rho_;
    SliceDirection direction_;
    double tol_;
};

SliceExtension extend_slicewise(const BoundaryFunction& f, SliceDirection direction,
                                double tol = 1e-6);

// Spectra of every grid slice: first the horizontal family (slice_id = slice
// index), then the vertical family (slice_id offset by the horizontal count).
std::vector<SliceSpectrum> all_slice_spectra(const BoundaryFunction& f);

// Grid norm of F - G on the boundary, where F and G are the horizontal and
// vertical slicewise extensions of f evaluated back at the nodes.  The two
// extensions of a two-sided extendible function agree on the boundary even
// when they differ inside, so this is a consistency diagnostic, not an
// assumption.  Throws NotSliceExtendible when f fails either direction.
double extension_gap(const BoundaryFunction& f, double tol = 1e-6);

// One row per retained mode: slice id, mode, re, im.
void export_spectra_csv(std::ostream& out, const std::vector<SliceSpectrum>& spectra);

}  // namespace crh
