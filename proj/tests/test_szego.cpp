#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "crh/boundary.hpp"
#include "crh/errors.hpp"
#include "crh/projections.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace crh;

namespace {

constexpr double kPi = std::numbers::pi;

BigradedPoly mono(unsigned a, unsigned b, unsigned c, unsigned d, cplx coeff = 1.0) {
    BigradedPoly p;
    p.add_term({a, b, c, d}, coeff);
    return p;
}

const BoundaryGrid& ball_grid() {
    static BoundaryGrid g = boundary_grid(DomainSpec::ball(), 1024, 32);
    return g;
}

const BoundaryGrid& ellipsoid_grid() {
    static BoundaryGrid g =
        boundary_grid(DomainSpec::ellipsoid({0.3, 0.05, 0.05}), 1024, 32);
    return g;
}

const BoundaryGrid& small_ball_grid() {
    static BoundaryGrid g = boundary_grid(DomainSpec::ball(), 256, 16);
    return g;
}

const BoundaryGrid& small_ellipsoid_grid() {
    static BoundaryGrid g =
        boundary_grid(DomainSpec::ellipsoid({0.3, 0.05, 0.05}), 256, 16);
    return g;
}

std::vector<cplx> random_values(const BoundaryGrid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<cplx> v(g.size());
    for (auto& x : v) x = cplx(coef(rng), coef(rng));
    return v;
}

double diff_norm(const std::vector<cplx>& a, const std::vector<cplx>& b,
                 const BoundaryGrid& g) {
    std::vector<cplx> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return grid_norm(d, g);
}

unsigned holo_count(unsigned degree) {
    return (degree + 1) * (degree + 2) / 2;
}

}  // namespace

TEST_SUITE("szego") {

TEST_CASE("families have the expected ranks on the ball") {
    const DomainSpec dom = DomainSpec::ball();
    ProjectionOperator h =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::holomorphic, 2);
    ProjectionOperator v1 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v1, 2);
    ProjectionOperator v2 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v2, 2);
    CHECK(h.rank() == 6);
    CHECK(v1.rank() == 10);
    CHECK(v2.rank() == 10);
    CHECK(h.monomials().size() == 6);
    CHECK(v1.monomials().size() == 10);

    for (unsigned i = 0; i < v1.rank(); ++i) {
        const auto ui = v1.frame_function(i);
        for (unsigned j = i; j < v1.rank(); ++j) {
            const cplx ip = inner_product(ui, v1.frame_function(j), ball_grid());
            const double target = (i == j) ? 1.0 : 0.0;
            CHECK(std::abs(ip - target) < 1e-10);
        }
    }

    std::mt19937_64 rng(401);
    const auto f = random_values(ball_grid(), rng);
    const auto once = v1.apply(f);
    const auto twice = v1.apply(once);
    CHECK(diff_norm(once, twice, ball_grid()) <
          1e-10 * std::max(1.0, grid_norm(once, ball_grid())));
}

TEST_CASE("projection reproduces members and annihilates the orthogonal") {
    const DomainSpec dom = DomainSpec::ball();
    ProjectionOperator h =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::holomorphic, 3);

    BoundaryFunction zzw = BoundaryFunction::from_poly(mono(2, 0, 1, 0), ball_grid());
    const auto pz = h.apply(zzw.values);
    double sup = 0.0;
    for (std::size_t i = 0; i < pz.size(); ++i)
        sup = std::max(sup, std::abs(pz[i] - zzw.values[i]));
    CHECK(sup < 1e-9);

    BoundaryFunction zb = BoundaryFunction::from_poly(mono(0, 1, 0, 0), ball_grid());
    CHECK(grid_norm(h.apply(zb.values), ball_grid()) < 1e-8);

    BoundaryFunction zsq = BoundaryFunction::from_poly(mono(1, 1, 0, 0), ball_grid());
    const auto ps = h.apply(zsq.values);
    double sup_half = 0.0;
    for (const cplx& v : ps) sup_half = std::max(sup_half, std::abs(v - cplx(0.5)));
    CHECK(sup_half < 1e-6);
}

TEST_CASE("underresolved grids are rejected") {
    BoundaryGrid coarse = boundary_grid(DomainSpec::ball(), 64, 8);
    const DomainSpec dom = DomainSpec::ball();
    CHECK_THROWS_AS(
        build_subspace_projection(dom, coarse, SubspaceFamily::holomorphic, 4),
        GridUnderResolved);
    CHECK_NOTHROW(
        build_subspace_projection(dom, coarse, SubspaceFamily::holomorphic, 3));
}

TEST_CASE("szego reference examples") {
    BoundaryFunction hol = BoundaryFunction::from_poly(mono(3, 0, 2, 0), ball_grid());
    BoundaryFunction ref = szego_reference(hol, 5);
    double sup = 0.0;
    for (std::size_t i = 0; i < ref.values.size(); ++i)
        sup = std::max(sup, std::abs(ref.values[i] - hol.values[i]));
    CHECK(sup < 1e-9);

    BoundaryFunction zb = BoundaryFunction::from_poly(mono(0, 1, 0, 0), ball_grid());
    CHECK(szego_reference(zb, 4).norm() < 1e-8);

    BoundaryFunction zsq = BoundaryFunction::from_poly(mono(1, 1, 0, 0), ball_grid());
    BoundaryFunction half = szego_reference(zsq, 4);
    double sup_half = 0.0;
    for (const cplx& v : half.values)
        sup_half = std::max(sup_half, std::abs(v - cplx(0.5)));
    CHECK(sup_half < 1e-6);
}

TEST_CASE("alternation fixes common elements in one step") {
    const DomainSpec dom = DomainSpec::ball();
    ProjectionOperator v1 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v1, 4);
    ProjectionOperator v2 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v2, 4);

    BoundaryFunction zsq = BoundaryFunction::from_poly(mono(1, 1, 0, 0), ball_grid());
    auto [limit, report] = alternate(zsq, v1, v2, 50, 1e-8);
    CHECK(report.converged);
    CHECK(report.steps <= 2);
    CHECK(diff_norm(limit.values, zsq.values, ball_grid()) < 1e-8);

    // The alternation limit is not the Szego projection on the ball.
    BoundaryFunction ref = szego_reference(zsq, 4);
    const double gap = diff_norm(limit.values, ref.values, ball_grid());
    CHECK(gap > 0.1);
    CHECK(gap == doctest::Approx(std::sqrt(kPi * kPi / 6.0)).epsilon(1e-3));
}

TEST_CASE("alternation reaches the szego projection on the ellipsoid") {
    // The slowest active direction for this data sits at angle ~0.05 rad
    // between the two subspaces, so the per-step factor is ~0.9974 and a few
    // thousand composite steps are needed before the gap drops under 1e-5.
    const DomainSpec dom = DomainSpec::ellipsoid({0.3, 0.05, 0.05});
    const BoundaryGrid& g = small_ellipsoid_grid();
    ProjectionOperator v1 = build_subspace_projection(dom, g, SubspaceFamily::v1, 4);
    ProjectionOperator v2 = build_subspace_projection(dom, g, SubspaceFamily::v2, 4);

    BoundaryFunction f = BoundaryFunction::from_poly(mono(0, 1, 0, 1), g);
    auto [limit, report] = alternate(f, v1, v2, 5000, 2e-9);
    CHECK(report.converged);
    for (std::size_t k = 1; k < report.distances.size(); ++k)
        CHECK(report.distances[k] <= report.distances[k - 1] + 1e-12);
    CHECK(report.ratio_estimate < 1.0);
    CHECK(report.ratio_estimate > 0.9);

    BoundaryFunction ref = szego_reference(f, 4);
    CHECK(diff_norm(limit.values, ref.values, g) < 1e-5);
}

TEST_CASE("deep truncation leaves near-common directions") {
    // At degree cap 8 the two families contain non-holomorphic elements whose
    // mutual angle is ~1e-5 rad: the degree-8 head of an exact splitting whose
    // tail is pushed beyond the cap.  Alternating projections contract such a
    // direction by 1 - 2 theta^2 per step, so 500 steps leave its component
    // essentially untouched and the gap to the reference stalls.
    const DomainSpec dom = DomainSpec::ellipsoid({0.3, 0.05, 0.05});
    BoundaryGrid g = boundary_grid(dom, 324, 18);
    ProjectionOperator v1 = build_subspace_projection(dom, g, SubspaceFamily::v1, 8);
    ProjectionOperator v2 = build_subspace_projection(dom, g, SubspaceFamily::v2, 8);
    ProjectionOperator h =
        build_subspace_projection(dom, g, SubspaceFamily::holomorphic, 8);

    IntersectionReport ir = intersection_dimension(v1, v2);
    CHECK(ir.dimension > h.rank());
    CHECK(ir.angles[h.rank()] < 1e-4);

    BoundaryFunction f = BoundaryFunction::from_poly(mono(0, 1, 0, 1), g);
    auto [limit, report] = alternate(f, v1, v2, 500, 1e-10);
    CHECK_FALSE(report.converged);
    for (std::size_t k = 1; k < report.distances.size(); ++k)
        CHECK(report.distances[k] <= report.distances[k - 1] + 1e-12);
    const double gap = diff_norm(limit.values, szego_reference(f, 8).values, g);
    CHECK(gap > 5e-4);
    CHECK(gap < 5e-3);

    // One degree step down the spectrum still separates cleanly: at cap 6 the
    // smallest non-common angle is ~4.5e-4, two decades above the quadrature
    // floor, so a 1e-4 tolerance recovers exactly the holomorphic count.
    const BoundaryGrid& g6 = small_ellipsoid_grid();
    ProjectionOperator u1 = build_subspace_projection(dom, g6, SubspaceFamily::v1, 6);
    ProjectionOperator u2 = build_subspace_projection(dom, g6, SubspaceFamily::v2, 6);
    IntersectionReport ir6 = intersection_dimension(u1, u2, 1e-4);
    CHECK(ir6.dimension == holo_count(6));
    CHECK(ir6.angles[ir6.dimension - 1] < 1e-5);
    CHECK(ir6.angles[ir6.dimension] > 3e-4);
}

TEST_CASE("composed palindromes are self-adjoint") {
    const DomainSpec dom = DomainSpec::ball();
    ProjectionOperator v1 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v1, 3);
    ProjectionOperator v2 =
        build_subspace_projection(dom, ball_grid(), SubspaceFamily::v2, 3);
    ComposedOperator t = composed_operator({&v2, &v1, &v2});

    std::mt19937_64 rng(20260823);
    for (int rep = 0; rep < 20; ++rep) {
        const auto f = random_values(ball_grid(), rng);
        const auto g = random_values(ball_grid(), rng);
        const cplx lhs = inner_product(t.apply(f), g, ball_grid());
        const cplx rhs = inner_product(f, t.apply(g), ball_grid());
        const double scale =
            grid_norm(f, ball_grid()) * grid_norm(g, ball_grid());
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, scale));
    }

    // A duplicated projection collapses to itself.
    ComposedOperator dup = composed_operator({&v1, &v1});
    const auto f = random_values(ball_grid(), rng);
    CHECK(diff_norm(dup.apply(f), v1.apply(f), ball_grid()) < 1e-10);

    CHECK_THROWS_AS(composed_operator({&v1}), InvalidInput);
    ProjectionOperator other =
        build_subspace_projection(dom, small_ball_grid(), SubspaceFamily::v1, 3);
    CHECK_THROWS_AS(composed_operator({&v1, &other}), GridMismatch);
}

TEST_CASE("both alternation schemes share the limit") {
    const DomainSpec dom = DomainSpec::ball();
    const BoundaryGrid& g = small_ball_grid();
    ProjectionOperator v1 = build_subspace_projection(dom, g, SubspaceFamily::v1, 3);
    ProjectionOperator v2 = build_subspace_projection(dom, g, SubspaceFamily::v2, 3);
    ComposedOperator t = composed_operator({&v2, &v1, &v2});
    ProjectionOperator common = intersection_frame(v1, v2);

    std::mt19937_64 rng(77);
    const auto f = random_values(g, rng);
    const auto target = common.apply(f);

    auto [limit, report] = alternate(BoundaryFunction::from_samples(f, g), v1, v2,
                                     3000, 1e-11);
    CHECK(report.converged);
    CHECK(diff_norm(limit.values, target, g) < 1e-8 * std::max(1.0, grid_norm(f, g)));

    std::vector<cplx> cur = f;
    for (int k = 0; k < 3000; ++k) {
        std::vector<cplx> next = t.apply(cur);
        const double d = diff_norm(next, cur, g);
        cur = std::move(next);
        if (d < 1e-11) break;
    }
    CHECK(diff_norm(cur, target, g) < 1e-8 * std::max(1.0, grid_norm(f, g)));
}

TEST_CASE("principal angles certify the ball ellipsoid contrast") {
    const DomainSpec ball = DomainSpec::ball();
    const DomainSpec ell = DomainSpec::ellipsoid({0.3, 0.05, 0.05});

    ProjectionOperator bv1 =
        build_subspace_projection(ball, ball_grid(), SubspaceFamily::v1, 4);
    ProjectionOperator bv2 =
        build_subspace_projection(ball, ball_grid(), SubspaceFamily::v2, 4);
    IntersectionReport br = intersection_dimension(bv1, bv2);
    // On the sphere (z zbar - 1)^k h and (-w wbar)^k h coincide, so the
    // common span is sum_k {h holomorphic : deg h <= 4 - 2k}.  Everything
    // else is mutually orthogonal: the remaining angles are right angles.
    CHECK(br.dimension == holo_count(4) + holo_count(2) + holo_count(0));
    CHECK(br.angles[br.dimension - 1] < 1e-3);
    CHECK(br.angles[br.dimension] > 1.5);

    ProjectionOperator ev1 =
        build_subspace_projection(ell, ellipsoid_grid(), SubspaceFamily::v1, 4);
    ProjectionOperator ev2 =
        build_subspace_projection(ell, ellipsoid_grid(), SubspaceFamily::v2, 4);
    IntersectionReport er = intersection_dimension(ev1, ev2);
    CHECK(er.dimension == holo_count(4));
    CHECK(er.angles[er.dimension] > 0.01);

    IntersectionReport self = intersection_dimension(ev1, ev1);
    CHECK(self.dimension == ev1.rank());
    for (double a : self.angles) CHECK(a < 1e-6);
}

TEST_CASE("smallest nonzero angle bounds the contraction rate") {
    // The ball gives no data here: beyond the common span the two families
    // are orthogonal, so alternation fixes everything in one composite step.
    // The ellipsoid couples them at angle theta1 and decays geometrically.
    const DomainSpec dom = DomainSpec::ellipsoid({0.3, 0.05, 0.05});
    const BoundaryGrid& g = small_ellipsoid_grid();
    ProjectionOperator v1 = build_subspace_projection(dom, g, SubspaceFamily::v1, 4);
    ProjectionOperator v2 = build_subspace_projection(dom, g, SubspaceFamily::v2, 4);
    IntersectionReport rep = intersection_dimension(v1, v2);
    REQUIRE(rep.dimension < rep.angles.size());
    const double theta1 = rep.angles[rep.dimension];
    CHECK(theta1 > 0.02);
    const double bound = std::cos(theta1) * std::cos(theta1) + 1e-3;

    std::mt19937_64 rng(123);
    const auto f = random_values(g, rng);
    auto [limit, report] =
        alternate(BoundaryFunction::from_samples(f, g), v1, v2, 800, 1e-10);
    REQUIRE(report.steps >= 5);
    for (std::size_t k = report.distances.size() - 3; k < report.distances.size(); ++k)
        CHECK(report.distances[k] / report.distances[k - 1] <= bound);
    CHECK(report.ratio_estimate <= bound);
}

TEST_CASE("alternation limit equals the principal-vector projection") {
    std::mt19937_64 rng(20260823);
    const DomainSpec specs[] = {DomainSpec::ball(),
                                DomainSpec::ellipsoid({0.3, 0.05, 0.05})};
    const BoundaryGrid* grids[] = {&small_ball_grid(), &small_ellipsoid_grid()};
    for (int which = 0; which < 2; ++which) {
        const BoundaryGrid& g = *grids[which];
        ProjectionOperator v1 =
            build_subspace_projection(specs[which], g, SubspaceFamily::v1, 3);
        ProjectionOperator v2 =
            build_subspace_projection(specs[which], g, SubspaceFamily::v2, 3);
        ProjectionOperator common = intersection_frame(v1, v2);
        for (int rep = 0; rep < 5; ++rep) {
            const auto f = random_values(g, rng);
            const auto p2f = v2.apply(f);
            const auto tf = v1.apply(p2f);
            CHECK(grid_norm(tf, g) <= grid_norm(p2f, g) + 1e-12);
            CHECK(grid_norm(p2f, g) <= grid_norm(f, g) + 1e-12);

            auto [limit, report] =
                alternate(BoundaryFunction::from_samples(f, g), v1, v2, 3000, 1e-11);
            CHECK(report.converged);
            CHECK(diff_norm(limit.values, common.apply(f), g) <
                  1e-8 * std::max(1.0, grid_norm(f, g)));
        }
    }
}

TEST_CASE("iteration report serializes") {
    const DomainSpec dom = DomainSpec::ball();
    const BoundaryGrid& g = small_ball_grid();
    ProjectionOperator v1 = build_subspace_projection(dom, g, SubspaceFamily::v1, 2);
    ProjectionOperator v2 = build_subspace_projection(dom, g, SubspaceFamily::v2, 2);
    std::mt19937_64 rng(5);
    auto [limit, report] = alternate(
        BoundaryFunction::from_samples(random_values(g, rng), g), v1, v2, 200, 1e-9);

    std::ostringstream out;
    report.export_json(out);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j.at("steps").get<unsigned>() == report.steps);
    CHECK(j.at("converged").get<bool>() == report.converged);
    CHECK(j.at("distances").size() == report.distances.size());
    CHECK(j.contains("ratio_estimate"));

    IntersectionReport ir = intersection_dimension(v1, v2);
    std::ostringstream csv;
    export_angles_csv(csv, ir);
    std::istringstream in(csv.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "index,angle");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == ir.angles.size());
}

}  // TEST_SUITE
