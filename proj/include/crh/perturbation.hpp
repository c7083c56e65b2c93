#pragma once

#include <map>

#include "crh/poly.hpp"
#include "crh/splitting.hpp"

namespace crh {

// Perturbed defining function phi = sum_n phi_n, graded by antiholomorphic
// degree, together with the declared control radii of the cascade:
//   r1 : polydisc radius on which the coefficient data is controlled
//        (requires sqrt(2) r1 < 1),
//   r  : declared bound on sqrt(|z|^2+|w|^2) over {phi <= 0}, r < r1/sqrt(2),
//   r2 : sup bound for |phi_0|, |phi_10|, |phi_11| on the polydisc,
//   delta : slack in the degree-2 lower bound sigma_min(A_n) >= (1-delta) eps.
//
// The antiholomorphic-degree-2 part must equal the base ellipsoid's exactly,
// so the per-degree band matrices stay constant along the cascade.
struct PerturbationSpec {
    EllipsoidSpec base;
    std::map<unsigned, BigradedPoly> phi_components;
    double r1 = 0.0;
    double r = 0.0;
    double r2 = 0.0;
    double delta = 0.0;

    // Sum of all graded components.
    BigradedPoly phi() const;

    // Grades an arbitrary hermitian polynomial into components.
    static PerturbationSpec from_phi(const EllipsoidSpec& base,
                                     const BigradedPoly& full_phi, double r1,
                                     double r, double r2, double delta);

    // Structural checks; throws InadmissibleSpec with a reason on failure:
    // base admissible, components correctly graded, phi hermitian, the
    // degree-2 component equal to the base quadratic, radii ordered as
    // declared, delta in (0, 1/2).
    void validate() const;

    // Coefficient functions of the low antiholomorphic orders:
    // phi = phi_0(z,w) + phi_10(z,w) zbar + phi_11(z,w) wbar + (degree >= 2).
    BigradedPoly phi_0() const;
    BigradedPoly phi_10() const;
    BigradedPoly phi_11() const;
};

}  // namespace crh
