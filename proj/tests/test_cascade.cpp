#include <cmath>
#include <complex>
#include <vector>

#include "crh/cascade.hpp"
#include "crh/errors.hpp"
#include "crh/geometry.hpp"
#include "doctest.h"

using namespace crh;

namespace {

// Ellipsoid of size R0 = 0.3 with eps = 0.3, a = b = 0.05, plus an optional
// cubic perturbation c (z^2 w + zbar^2 wbar).  The radii fit the scale:
// boundary norms stay below r = 0.39 and the low-order coefficient
// functions stay below r2 = 0.7 on the bidisc of radius r1 = 0.56.
PerturbationSpec small_domain(double cubic) {
    const double r0sq = 0.09;
    BigradedPoly phi(-r0sq);
    phi.add_term({1, 1, 0, 0}, 1.0);
    phi.add_term({0, 0, 1, 1}, 1.0);
    phi.add_term({1, 0, 1, 0}, 0.3);
    phi.add_term({0, 1, 0, 1}, 0.3);
    phi.add_term({2, 0, 0, 0}, 0.05);
    phi.add_term({0, 2, 0, 0}, 0.05);
    phi.add_term({0, 0, 2, 0}, 0.05);
    phi.add_term({0, 0, 0, 2}, 0.05);
    if (cubic != 0.0) {
        phi.add_term({2, 0, 1, 0}, cubic);
        phi.add_term({0, 2, 0, 1}, cubic);
    }
    EllipsoidSpec base{0.3, 0.05, 0.05};
    return PerturbationSpec::from_phi(base, phi, 0.56, 0.39, 0.7, 0.4);
}

BigradedPoly mixed_part(const BigradedPoly& p) {
    BigradedPoly out;
    for (const auto& [m, c] : p.terms())
        if (m.is_mixed()) out.add_term(m, c);
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("cascade");

TEST_CASE("perturbation spec grading and accessors") {
    PerturbationSpec pert = small_domain(0.005);
    CHECK_NOTHROW(pert.validate());
    REQUIRE(pert.phi_components.count(3) == 1);
    CHECK(pert.phi_components.at(3) == BigradedPoly::monomial({0, 2, 0, 1}, 0.005));
    CHECK(pert.phi_components.at(2) == pert.base.quadratic_antiholo_part());

    CHECK(std::abs(pert.phi_0().coefficient(0, 0, 0, 0) - cplx(-0.09)) < 1e-15);
    CHECK(std::abs(pert.phi_0().coefficient(2, 0, 1, 0) - cplx(0.005)) < 1e-15);
    CHECK(pert.phi_10() == BigradedPoly::monomial({1, 0, 0, 0}));
    CHECK(pert.phi_11() == BigradedPoly::monomial({0, 0, 1, 0}));
    CHECK(pert.phi() == small_domain(0.005).phi());

    // Degree-2 component must match the base quadratic exactly.
    BigradedPoly off = pert.phi();
    off.add_term({0, 1, 0, 1}, 0.01);
    CHECK_THROWS_AS(
        PerturbationSpec::from_phi(pert.base, off, 0.56, 0.39, 0.7, 0.4),
        InadmissibleSpec);
    // Non-hermitian input is rejected.
    BigradedPoly skew = pert.phi();
    skew.add_term({2, 0, 1, 0}, cplx(0.0, 0.001));
    CHECK_THROWS_AS(
        PerturbationSpec::from_phi(pert.base, skew, 0.56, 0.39, 0.7, 0.4),
        InadmissibleSpec);
    // Radii must be ordered as declared.
    CHECK_THROWS_AS(
        PerturbationSpec::from_phi(pert.base, pert.phi(), 0.8, 0.39, 0.7, 0.4),
        InadmissibleSpec);
    CHECK_THROWS_AS(
        PerturbationSpec::from_phi(pert.base, pert.phi(), 0.56, 0.5, 0.7, 0.4),
        InadmissibleSpec);
}

TEST_CASE("coupling matrix of the cubic component") {
    PerturbationSpec pert = small_domain(0.005);
    PolyMatrix B = build_B(0, 3, pert);
    REQUIRE(B.rows == 1);
    REQUIRE(B.cols == 2);
    CHECK(B.at(0, 0) == BigradedPoly(cplx(-0.005)));
    CHECK(B.at(0, 1).empty());
    CHECK(B.sup_norm(0.56) == doctest::Approx(0.005));
    CHECK(B.diagonal_count() == 1);

    CHECK_THROWS_AS(build_B(0, 2, pert), InvalidInput);
}

TEST_CASE("coupling matrices of absent components vanish") {
    PerturbationSpec pert = small_domain(0.005);
    PolyMatrix B = build_B(1, 4, pert);
    REQUIRE(B.rows == 2);
    REQUIRE(B.cols == 4);
    for (const auto& e : B.entries) CHECK(e.empty());
    CHECK(B.sup_norm(0.56) == 0.0);
    CHECK(B.diagonal_count() == 0);
}

TEST_CASE("coupling matrices stay banded") {
    PerturbationSpec pert = small_domain(0.005);
    for (unsigned k = 0; k <= 4; ++k) {
        PolyMatrix B = build_B(k, 3, pert);
        CHECK(B.rows == k + 1);
        CHECK(B.cols == k + 2);
        CHECK(B.diagonal_count() <= 4);
        for (const auto& e : B.entries)
            for (const auto& [m, c] : e.terms()) {
                CHECK(m.b == 0);
                CHECK(m.d == 0);
            }
    }
}

TEST_CASE("certification of the cubic domain") {
    PerturbationSpec pert = small_domain(0.005);
    CertificationReport rep = certify_perturbation(pert, 8);
    CHECK(rep.all_pass);
    CHECK(rep.first_failure().empty());

    const CertificationCheck* sig = rep.find("sigma_min lower bound");
    REQUIRE(sig != nullptr);
    CHECK(sig->pass);
    CHECK(sig->threshold == doctest::Approx(0.18));
    CHECK(sig->measured >= 0.2 - 1e-12);

    const CertificationCheck* coup = rep.find("coupling norm l=1 m=2");
    REQUIRE(coup != nullptr);
    CHECK(coup->pass);
    CHECK(coup->measured == doctest::Approx(0.005));
    CHECK(coup->threshold == doctest::Approx(std::pow(0.3, 4)));

    const CertificationCheck* p10 = rep.find("sup |phi_10|");
    REQUIRE(p10 != nullptr);
    CHECK(p10->measured == doctest::Approx(0.56).epsilon(1e-6));
    CHECK(p10->threshold == doctest::Approx(0.7));

    const CertificationCheck* contain = rep.find("boundary containment");
    REQUIRE(contain != nullptr);
    CHECK(contain->pass);
    CHECK(contain->measured < 0.39);
    CHECK(contain->measured > 0.35);

    const CertificationCheck* rc = rep.find("round contraction factor");
    REQUIRE(rc != nullptr);
    CHECK(rc->measured == doctest::Approx((4.0 * 0.09 + std::pow(0.3, 4)) * 0.39));
    CHECK(rc->pass);
}

TEST_CASE("certification flags an oversized coupling") {
    PerturbationSpec pert = small_domain(0.1);
    CertificationReport rep = certify_perturbation(pert, 6);
    CHECK_FALSE(rep.all_pass);
    const CertificationCheck* coup = rep.find("coupling norm l=1 m=2");
    REQUIRE(coup != nullptr);
    CHECK_FALSE(coup->pass);
    CHECK(coup->measured == doctest::Approx(0.1));
    CHECK_FALSE(rep.first_failure().empty());
}

TEST_CASE("certification flags oversized coefficient functions") {
    // Linear terms are structurally allowed; the sup bound rejects them when
    // they are too large for the declared polydisc.
    BigradedPoly phi = small_domain(0.0).phi();
    phi.add_term({1, 0, 0, 0}, 2.0);
    phi.add_term({0, 1, 0, 0}, 2.0);
    EllipsoidSpec base{0.3, 0.05, 0.05};
    PerturbationSpec pert = PerturbationSpec::from_phi(base, phi, 0.56, 0.39, 1.0, 0.4);
    CertificationReport rep = certify_perturbation(pert, 6);
    CHECK_FALSE(rep.all_pass);
    const CertificationCheck* p10 = rep.find("sup |phi_10|");
    REQUIRE(p10 != nullptr);
    CHECK_FALSE(p10->pass);
    // The base contributes z, so the coefficient is z + 2 with sup 2.56.
    CHECK(p10->measured == doctest::Approx(2.56).epsilon(1e-6));
}

TEST_CASE("first rewrite rule of the cubic domain") {
    PerturbationSpec pert = small_domain(0.005);
    std::vector<BigradedPoly> rel = cascade_relations(pert, 2);
    REQUIRE(rel.size() == 1);

    BigradedPoly mixed = mixed_part(rel[0]);
    CHECK(mixed.size() == 1);
    CHECK(std::abs(mixed.coefficient(0, 2, 0, 1) - cplx(-0.005 / 0.3)) < 1e-12);

    CHECK(std::abs(rel[0].coefficient(0, 0, 0, 0) - cplx(0.3)) < 1e-12);
    CHECK(std::abs(rel[0].coefficient(1, 1, 0, 0) - cplx(-1.0 / 0.3)) < 1e-12);
    CHECK(std::abs(rel[0].coefficient(1, 0, 1, 0) - cplx(-1.0)) < 1e-12);
    CHECK(std::abs(rel[0].coefficient(2, 0, 1, 0) - cplx(-0.005 / 0.3)) < 1e-12);

    CHECK_THROWS_AS(cascade_relations(pert, 1), InvalidInput);
}

TEST_CASE("rewrite rules of the unperturbed domain scale from the unit table") {
    PerturbationSpec pert = small_domain(0.0);
    std::vector<BigradedPoly> rel = cascade_relations(pert, 2);
    REQUIRE(rel.size() == 1);

    // The domain is the unit ellipsoid shrunk by R0 = 0.3, so the unit-table
    // relation transfers with each coefficient scaled by R0^(2 - degree).
    EllipsoidSplitTable table(pert.base, 2);
    const auto& [qu, ru] = table.entry(1, 1);
    BigradedPoly expected;
    const double r0 = 0.3;
    for (const BigradedPoly* part : {&qu, &ru})
        for (const auto& [m, c] : part->terms())
            expected.add_term(m, c * std::pow(r0, 2.0 - double(m.total_degree())));
    CHECK((rel[0] - expected).coeff_max_norm() < 1e-10);
}

TEST_CASE("relations eliminate their degree on the boundary") {
    PerturbationSpec pert = small_domain(0.005);
    BoundaryGrid grid = boundary_grid(DomainSpec::perturbed(pert), 64, 16);
    for (unsigned deg : {2u, 3u}) {
        std::vector<BigradedPoly> rel = cascade_relations(pert, deg);
        MixedMonomialVector v(deg);
        REQUIRE(rel.size() == v.size());
        for (std::size_t i = 0; i < rel.size(); ++i) {
            BigradedPoly diff = BigradedPoly::monomial(v.monomial(i)) - rel[i];
            double sup = 0.0;
            for (const auto& node : grid.nodes())
                sup = std::max(sup, std::abs(diff.evaluate(node.z, node.w)));
            CHECK(sup < 1e-11);
            // Only strictly different mixed degrees remain on the right.
            BigradedPoly mixed = mixed_part(rel[i]);
            for (const auto& [m, c] : mixed.terms())
                CHECK(m.antiholo_degree() != deg);
        }
    }
}

TEST_CASE("truncated decomposition of zbar wbar on the cubic domain") {
    PerturbationSpec pert = small_domain(0.005);
    BigradedPoly P = BigradedPoly::monomial({0, 1, 0, 1});
    CascadeOptions opt;
    opt.grid_n_base = 64;
    opt.grid_n_angle = 32;
    PerturbedDecomposition dec = decompose_perturbed(P, pert, 3, opt);

    REQUIRE(dec.rounds.size() == 3);
    for (std::size_t l = 0; l < dec.rounds.size(); ++l) {
        CHECK(dec.rounds[l].tail_bound > 0.0);
        CHECK(dec.rounds[l].residual_sup <= dec.rounds[l].tail_bound + 1e-8);
        if (l > 0) CHECK(dec.rounds[l].tail_bound < dec.rounds[l - 1].tail_bound);
    }
    CHECK(dec.tail_bound == doctest::Approx(dec.rounds.back().tail_bound));
    CHECK(dec.result.residual_sup == doctest::Approx(dec.rounds.back().residual_sup));

    for (const auto& [m, c] : dec.result.Q.terms()) CHECK(m.b == 0);
    for (const auto& [m, c] : dec.result.R.terms()) CHECK(m.d == 0);

    CHECK(dec.max_inverse_norm <= 2.0 / 0.3 + 1e-9);
    CHECK(dec.max_coupling_ratio < 1.0);
    REQUIRE_FALSE(dec.result.per_degree_sigma_min.empty());
    for (const auto& [deg, sig] : dec.result.per_degree_sigma_min)
        CHECK(sig >= (1.0 - 0.4) * 0.3);
}

TEST_CASE("decomposition guards") {
    PerturbationSpec pert = small_domain(0.005);
    BigradedPoly P = BigradedPoly::monomial({0, 1, 0, 1});
    CHECK_THROWS_AS(decompose_perturbed(P, pert, 0), InvalidInput);
    CHECK_THROWS_AS(decompose_perturbed(P, small_domain(0.1), 2), CascadeDiverged);
}

TEST_SUITE_END();
