#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crh/perturbation.hpp"
#include "crh/poly.hpp"
#include "crh/splitting.hpp"

namespace crh {

enum class DomainKind { ball, ellipsoid, perturbed };

struct DomainSpec {
    DomainKind kind = DomainKind::ball;
    EllipsoidSpec ell;      // ellipsoid kind; also the base of the perturbed kind
    PerturbationSpec pert;  // perturbed kind only

    static DomainSpec ball();
    static DomainSpec ellipsoid(const EllipsoidSpec& spec);
    static DomainSpec perturbed(const PerturbationSpec& spec);

    BigradedPoly defining_poly() const;
    std::string kind_name() const;
};

enum class SliceDirection { horizontal, vertical, oblique };

// Ellipse in one complex plane, parametrized counterclockwise as
//   point(theta) = center + e^{i rotation} (A e^{i theta} + B e^{-i theta}),
// A = (major+minor)/2, B = (major-minor)/2.  theta is the boundary value of
// the conformal parameter of the ellipse exterior, which is what the slice
// Hardy analysis needs.
struct EllipseShape {
    cplx center = 0.0;
    double major = 0.0;
    double minor = 0.0;
    double rotation = 0.0;

    double radius_sum() const { return 0.5 * (major + minor); }
    double radius_diff() const { return 0.5 * (major - minor); }
    // Squared modulus ratio of the Joukowski reflection: B/A.
    double joukowski_q2() const;

    cplx point(double theta) const;
    cplx tangent(double theta) const;  // d point / d theta
};

// One-complex-dimensional boundary slice.  The curve lives in the plane of
// the moving coordinate t; the embedding into C^2 is
//   (z, w) = (origin_z + t span_z, origin_w + t span_w).
struct SliceCurve {
    SliceDirection direction = SliceDirection::horizontal;
    cplx base = 0.0;  // the frozen coordinate (or 0 for oblique slices)
    EllipseShape shape;
    cplx origin_z = 0.0, origin_w = 0.0;
    cplx span_z = 0.0, span_w = 0.0;

    cplx point(double theta) const { return shape.point(theta); }
    cplx tangent(double theta) const { return shape.tangent(theta); }
    std::pair<cplx, cplx> embed(double theta) const {
        cplx t = shape.point(theta);
        return {origin_z + t * span_z, origin_w + t * span_w};
    }
};

// Quadrature node on the boundary with the tangent frame of the underlying
// (psi, phi, s) parametrization.  weight is the Euclidean surface measure
// weight; cell is the bare parameter-space cell volume, kept separately so
// complex 3-form pullbacks can be assembled per node.
struct BoundaryNode {
    cplx z = 0.0, w = 0.0;
    double weight = 0.0;
    cplx tz[3] = {0.0, 0.0, 0.0};
    cplx tw[3] = {0.0, 0.0, 0.0};
    double cell = 0.0;
    unsigned hslice = 0, hangle = 0;
    unsigned vslice = 0, vangle = 0;
};

// Oriented degree-3 real forms used by the weak CR pairings.
enum class Form3 { dw_dz_dzbar, dz_dw_dwbar, dzbar_dz_dw, dwbar_dz_dw };

class BoundaryGrid {
public:
    const DomainSpec& domain() const { return domain_; }
    const std::vector<BoundaryNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double total_weight() const { return total_weight_; }

    unsigned fiber_samples() const { return n_s_; }
    unsigned radial_count() const { return n_r_; }
    unsigned angular_count() const { return n_phi_; }

    unsigned horizontal_slice_count() const {
        return static_cast<unsigned>(hslices_.size());
    }
    unsigned vertical_slice_count() const {
        return static_cast<unsigned>(vslices_.size());
    }
    const SliceCurve& horizontal_slice(unsigned j) const;
    const SliceCurve& vertical_slice(unsigned m) const;

    // Node (j, k) sits at curve parameter theta = 2 pi k / n_s + phase(j)
    // on horizontal_slice(j).
    double horizontal_phase(unsigned j) const;

    // Pullback density of the given 3-form at a node (complex; includes the
    // parameter cell volume, so integrals are plain sums of f * density).
    cplx form_density(const BoundaryNode& node, Form3 which) const;

    // Values of a node-sampled function on vertical_slice(m)'s parameter
    // grid (uniform theta, fiber_samples() points), by fiber-wise
    // trigonometric interpolation combined with base-plane interpolation.
    std::vector<cplx> vertical_slice_values(const std::vector<cplx>& node_values,
                                            unsigned m) const;

    // Evaluate a node-sampled function anywhere on the boundary.
    cplx interpolate(const std::vector<cplx>& node_values, cplx z, cplx w) const;

    std::uint64_t signature() const { return signature_; }

    void export_json(std::ostream& os) const;
    void export_csv(std::ostream& os) const;

private:
    friend BoundaryGrid boundary_grid(const DomainSpec&, unsigned, unsigned);

    DomainSpec domain_;
    std::vector<BoundaryNode> nodes_;
    double total_weight_ = 0.0;
    unsigned n_r_ = 0, n_phi_ = 0, n_s_ = 0;
    std::vector<SliceCurve> hslices_;
    std::vector<double> hphases_;
    std::vector<SliceCurve> vslices_;
    std::vector<double> psi_nodes_, psi_weights_;
    std::uint64_t signature_ = 0;
};

// Tensor-product boundary quadrature: polar base grid (Gauss-Legendre in a
// sine-substituted radial variable, uniform in angle) times a uniform fiber
// parameter.  n_base is the base-plane node budget (split ceil(sqrt(.)) by
// ceil(sqrt(.))), n_angle the fiber sample count.
BoundaryGrid boundary_grid(const DomainSpec& domain, unsigned n_base,
                           unsigned n_angle);

// Coordinate slice; empty optional when the fiber is empty (or a point).
std::optional<SliceCurve> slice(const DomainSpec& domain, SliceDirection dir,
                                cplx base);

// Boundary curve of the complex line {point + t dir} in the t-plane.
SliceCurve line_slice(const DomainSpec& domain, cplx point_z, cplx point_w,
                      cplx dir_z, cplx dir_w);

// Discrete L^2(surface measure) pairing sum w_i f_i conj(g_i).
cplx inner_product(const std::vector<cplx>& f, const std::vector<cplx>& g,
                   const BoundaryGrid& grid);
double grid_norm(const std::vector<cplx>& f, const BoundaryGrid& grid);

// Smallest eigenvalue of the real Hessian of rho restricted to the tangent
// space of the boundary at (z, w).
double tangential_hessian_min_eig(const DomainSpec& domain, cplx z, cplx w);

// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(unsigned n, std::vector<double>& x, std::vector<double>& w);

}  // namespace crh
