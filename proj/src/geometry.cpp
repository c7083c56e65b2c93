#include "crh/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "crh/errors.hpp"
#include "json.hpp"

namespace crh {

namespace {

constexpr double kPi = std::numbers::pi;

// First-order jet in the two real base-plane coordinates.  Carrying the
// derivatives through the closed-form fiber-ellipse formulas yields exact
// tangent vectors for the quadrature weights; no finite differencing.
struct RJet {
    double v = 0.0, dx = 0.0, dy = 0.0;
};

RJet operator+(RJet a, RJet b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
RJet operator-(RJet a, RJet b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
RJet operator-(RJet a) { return {-a.v, -a.dx, -a.dy}; }
RJet operator*(RJet a, RJet b) {
    return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
}
RJet operator*(double s, RJet a) { return {s * a.v, s * a.dx, s * a.dy}; }
RJet operator+(RJet a, double s) { return {a.v + s, a.dx, a.dy}; }
RJet operator/(RJet a, RJet b) {
    double q = a.v / b.v;
    return {q, (a.dx - q * b.dx) / b.v, (a.dy - q * b.dy) / b.v};
}
RJet jet_sqrt(RJet a) {
    double s = std::sqrt(a.v);
    return {s, a.dx / (2.0 * s), a.dy / (2.0 * s)};
}

struct CJet {
    cplx v = 0.0, dx = 0.0, dy = 0.0;
};

CJet operator+(CJet a, CJet b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
CJet operator*(CJet a, RJet b) {
    return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
}
CJet operator*(CJet a, double s) { return {a.v * s, a.dx * s, a.dy * s}; }

RJet real_part(const CJet& a) {
    return {a.v.real(), a.dx.real(), a.dy.real()};
}
RJet imag_part(const CJet& a) {
    return {a.v.imag(), a.dx.imag(), a.dy.imag()};
}
CJet make_cjet(RJet re, RJet im) {
    return {cplx(re.v, im.v), cplx(re.dx, im.dx), cplx(re.dy, im.dy)};
}

// Polynomial in the base variable with its two real-coordinate derivatives.
struct ScalarField {
    BigradedPoly f, fx, fy;

    static ScalarField make(const BigradedPoly& p) {
        BigradedPoly pz = p.d_z();
        BigradedPoly pzb = p.d_zbar();
        return {p, pz + pzb, cplx(0.0, 1.0) * (pz - pzb)};
    }
    CJet eval(cplx z) const {
        return {f.evaluate(z, 0.0), fx.evaluate(z, 0.0), fy.evaluate(z, 0.0)};
    }
};

// Coefficient functions of the fiber conic
//   gamma |t|^2 + beta t^2 + conj(beta) tbar^2 + alpha t + conj(alpha) tbar + c0,
// each a polynomial in the base variable.
struct FieldSet {
    ScalarField gamma, beta, alpha, c0;
};

FieldSet make_field_set(const BigradedPoly& rho) {
    BigradedPoly g[3][3];
    for (const auto& [m, c] : rho.terms()) {
        if (m.c + m.d > 2)
            throw UnsupportedDomain(
                "fiber equation has degree above 2; slice is not a conic");
        g[m.c][m.d].add_term({m.a, m.b, 0, 0}, c);
    }
    const double tol = 1e-12;
    BigradedPoly db = g[0][2] - g[2][0].conjugate();
    BigradedPoly da = g[0][1] - g[1][0].conjugate();
    if (db.coeff_max_norm() > tol || da.coeff_max_norm() > tol)
        throw InadmissibleSpec("defining polynomial is not real-valued");
    return {ScalarField::make(g[1][1]), ScalarField::make(g[2][0]),
            ScalarField::make(g[1][0]), ScalarField::make(g[0][0])};
}

struct ConicJets {
    RJet gamma, c0;
    CJet beta, alpha;
};

ConicJets eval_fields(const FieldSet& fs, cplx z0) {
    return {real_part(fs.gamma.eval(z0)), real_part(fs.c0.eval(z0)),
            fs.beta.eval(z0), fs.alpha.eval(z0)};
}

// Size function of the fiber: value at the ellipse center, negated.  Positive
// inside the projection region, zero where the fiber degenerates to a point.
RJet conic_kappa(const ConicJets& cj) {
    RJet m11 = cj.gamma + 2.0 * real_part(cj.beta);
    RJet m12 = -2.0 * imag_part(cj.beta);
    RJet m22 = cj.gamma - 2.0 * real_part(cj.beta);
    RJet det = m11 * m22 - m12 * m12;
    if (m11.v <= 0.0 || det.v <= 0.0)
        throw UnsupportedDomain("fiber quadratic form is not positive definite");
    RJet lx = 2.0 * real_part(cj.alpha);
    RJet ly = -2.0 * imag_part(cj.alpha);
    RJet qx = (m22 * lx - m12 * ly) / det;
    RJet qy = (m11 * ly - m12 * lx) / det;
    return 0.25 * (lx * qx + ly * qy) - cj.c0;
}

// Full fiber frame: center, size, and the inverse square root of the fiber
// quadratic form, so that the fiber is  center + sqrt(kappa) S (cos s, sin s).
struct Frame {
    CJet center;
    RJet kappa;
    RJet s11, s12, s22;
};

Frame conic_frame(const ConicJets& cj) {
    RJet m11 = cj.gamma + 2.0 * real_part(cj.beta);
    RJet m12 = -2.0 * imag_part(cj.beta);
    RJet m22 = cj.gamma - 2.0 * real_part(cj.beta);
    RJet det = m11 * m22 - m12 * m12;
    if (m11.v <= 0.0 || det.v <= 0.0)
        throw UnsupportedDomain("fiber quadratic form is not positive definite");
    RJet lx = 2.0 * real_part(cj.alpha);
    RJet ly = -2.0 * imag_part(cj.alpha);
    RJet qx = (m22 * lx - m12 * ly) / det;
    RJet qy = (m11 * ly - m12 * lx) / det;
    Frame fr;
    fr.center = make_cjet(-0.5 * qx, -0.5 * qy);
    fr.kappa = 0.25 * (lx * qx + ly * qy) - cj.c0;
    // M^{-1/2} = (M^{-1} + d^{-1/2} I) / sqrt(tr M^{-1} + 2 d^{-1/2})
    RJet sd = jet_sqrt(det);
    RJet e = jet_sqrt(m11 + m22 + 2.0 * sd);
    RJet denom = sd * e;
    fr.s11 = (m22 + sd) / denom;
    fr.s12 = -m12 / denom;
    fr.s22 = (m11 + sd) / denom;
    return fr;
}

// Ellipse in Joukowski normal form from a frame (values only).  Also yields
// the phase offset between the frame parameter s and the conformal parameter
// theta: theta = s - rotation.
EllipseShape shape_from_frame(const Frame& fr, double* phase) {
    double sq = std::sqrt(fr.kappa.v);
    double p = 0.5 * sq * (fr.s11.v + fr.s22.v);
    cplx q = 0.5 * sq * cplx(fr.s11.v - fr.s22.v, 2.0 * fr.s12.v);
    EllipseShape sh;
    sh.center = fr.center.v;
    double qb = std::abs(q);
    double rot = qb < 1e-14 * p ? 0.0 : 0.5 * std::arg(q);
    sh.rotation = rot;
    sh.major = p + qb;
    sh.minor = p - qb;
    if (phase) *phase = -rot;
    return sh;
}

// Radial root finding along base-plane rays: first positive root of kappa,
// by bracket march, bisection, and Newton polish.  Also returns dR/dphi via
// implicit differentiation.
void rim_radius(const FieldSet& fs, double phi, double* R, double* Rp) {
    cplx dir = std::polar(1.0, phi);
    auto kap = [&](double r) { return conic_kappa(eval_fields(fs, r * dir)); };
    RJet k0 = kap(0.0);
    if (k0.v <= 0.0)
        throw UnsupportedDomain("base point 0 lies outside the projection region");
    double lo = 0.0, hi = 0.5;
    RJet khi = kap(hi);
    while (khi.v > 0.0) {
        lo = hi;
        hi *= 1.5;
        if (hi > 64.0)
            throw UnsupportedDomain("projection region appears unbounded");
        khi = kap(hi);
    }
    for (int it = 0; it < 90; ++it) {
        double mid = 0.5 * (lo + hi);
        if (kap(mid).v > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double r = 0.5 * (lo + hi);
    double c = std::cos(phi), s = std::sin(phi);
    for (int it = 0; it < 3; ++it) {
        RJet k = kap(r);
        double kr = k.dx * c + k.dy * s;
        if (std::abs(kr) < 1e-14) break;
        r -= k.v / kr;
    }
    RJet k = kap(r);
    double kr = k.dx * c + k.dy * s;
    if (std::abs(kr) < 1e-12)
        throw UnsupportedDomain("projection rim is not transversal to rays");
    *R = r;
    *Rp = -r * (-k.dx * s + k.dy * c) / kr;
}

SliceCurve curve_from_frame(const Frame& fr, SliceDirection dir, cplx base,
                            double* phase) {
    SliceCurve sc;
    sc.direction = dir;
    sc.base = base;
    sc.shape = shape_from_frame(fr, phase);
    switch (dir) {
        case SliceDirection::horizontal:
            sc.origin_z = base;
            sc.span_w = 1.0;
            break;
        case SliceDirection::vertical:
            sc.origin_w = base;
            sc.span_z = 1.0;
            break;
        case SliceDirection::oblique:
            break;
    }
    return sc;
}

std::uint64_t fnv_mix(std::uint64_t h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

// Barycentric interpolation in one periodic coordinate with uniform nodes
// x_k = 2 pi k / n.
cplx trig_interp(const std::vector<cplx>& vals, double x) {
    std::size_t n = vals.size();
    bool even = (n % 2 == 0);
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double d = 0.5 * (x - 2.0 * kPi * static_cast<double>(k) / n);
        double sd = std::sin(d);
        if (std::abs(sd) < 1e-13) return vals[k];
        double wk = (k % 2 == 0 ? 1.0 : -1.0);
        double c = even ? wk / std::tan(d) : wk / sd;
        num += c * vals[k];
        den += c;
    }
    return num / den;
}

}  // namespace

DomainSpec DomainSpec::ball() { return DomainSpec{}; }

DomainSpec DomainSpec::ellipsoid(const EllipsoidSpec& spec) {
    DomainSpec d;
    d.kind = DomainKind::ellipsoid;
    d.ell = spec;
    return d;
}

DomainSpec DomainSpec::perturbed(const PerturbationSpec& spec) {
    DomainSpec d;
    d.kind = DomainKind::perturbed;
    d.ell = spec.base;
    d.pert = spec;
    return d;
}

BigradedPoly DomainSpec::defining_poly() const {
    switch (kind) {
        case DomainKind::ball: {
            BigradedPoly p;
            p.add_term({1, 1, 0, 0}, 1.0);
            p.add_term({0, 0, 1, 1}, 1.0);
            p.add_term({0, 0, 0, 0}, -1.0);
            return p;
        }
        case DomainKind::ellipsoid:
            return ell.defining_poly();
        case DomainKind::perturbed:
            return pert.phi();
    }
    throw InvalidInput("unknown domain kind");
}

std::string DomainSpec::kind_name() const {
    switch (kind) {
        case DomainKind::ball: return "ball";
        case DomainKind::ellipsoid: return "ellipsoid";
        case DomainKind::perturbed: return "perturbed";
    }
    return "unknown";
}

double EllipseShape::joukowski_q2() const {
    double a = radius_sum();
    return a > 0.0 ? radius_diff() / a : 0.0;
}

cplx EllipseShape::point(double theta) const {
    cplx e = std::polar(1.0, theta);
    return center + std::polar(1.0, rotation) *
                        (radius_sum() * e + radius_diff() / e);
}

cplx EllipseShape::tangent(double theta) const {
    cplx e = std::polar(1.0, theta);
    return std::polar(1.0, rotation) * cplx(0.0, 1.0) *
           (radius_sum() * e - radius_diff() / e);
}

void gauss_legendre(unsigned n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (unsigned i = 0; i < (n + 1) / 2; ++i) {
        double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = xi;
            for (unsigned j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * xi * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            double dx = p1 / dp;
            xi -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        x[i] = -xi;
        x[n - 1 - i] = xi;
        double wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
}

std::optional<SliceCurve> slice(const DomainSpec& domain, SliceDirection dir,
                                cplx base) {
    if (dir == SliceDirection::oblique)
        throw InvalidInput("coordinate slice direction must be horizontal or vertical");
    BigradedPoly rho = domain.defining_poly();
    if (dir == SliceDirection::vertical) rho = rho.swap_variables();
    FieldSet fs = make_field_set(rho);
    ConicJets cj = eval_fields(fs, base);
    RJet kappa = conic_kappa(cj);
    if (kappa.v <= 1e-14) return std::nullopt;
    Frame fr = conic_frame(cj);
    return curve_from_frame(fr, dir, base, nullptr);
}

SliceCurve line_slice(const DomainSpec& domain, cplx point_z, cplx point_w,
                      cplx dir_z, cplx dir_w) {
    if (std::abs(dir_z) + std::abs(dir_w) == 0.0)
        throw InvalidInput("line direction must be nonzero");
    BigradedPoly rho = domain.defining_poly();
    double at_point = rho.evaluate(point_z, point_w).real();
    if (at_point >= 0.0)
        throw PointNotInterior("line base point is not inside the domain");
    BigradedPoly line = rho.restrict_to_line(point_z, point_w, dir_z, dir_w);
    FieldSet fs = make_field_set(line.swap_variables());
    ConicJets cj = eval_fields(fs, 0.0);
    RJet kappa = conic_kappa(cj);
    if (kappa.v <= 0.0)
        throw PointNotInterior("line through the point does not meet the domain");
    Frame fr = conic_frame(cj);
    SliceCurve sc = curve_from_frame(fr, SliceDirection::oblique, 0.0, nullptr);
    sc.origin_z = point_z;
    sc.origin_w = point_w;
    sc.span_z = dir_z;
    sc.span_w = dir_w;
    return sc;
}

const SliceCurve& BoundaryGrid::horizontal_slice(unsigned j) const {
    if (j >= hslices_.size()) throw InvalidInput("horizontal slice id out of range");
    return hslices_[j];
}

const SliceCurve& BoundaryGrid::vertical_slice(unsigned m) const {
    if (m >= vslices_.size()) throw InvalidInput("vertical slice id out of range");
    return vslices_[m];
}

double BoundaryGrid::horizontal_phase(unsigned j) const {
    if (j >= hphases_.size()) throw InvalidInput("horizontal slice id out of range");
    return hphases_[j];
}

cplx BoundaryGrid::form_density(const BoundaryNode& node, Form3 which) const {
    auto pick = [&](int row, int col) -> cplx {
        // rows encode the cotangent letters of the requested form
        static const int letters[4][3] = {
            {2, 0, 1},  // dw dz dzbar
            {0, 2, 3},  // dz dw dwbar
            {1, 0, 2},  // dzbar dz dw
            {3, 0, 2},  // dwbar dz dw
        };
        int letter = letters[static_cast<int>(which)][row];
        switch (letter) {
            case 0: return node.tz[col];
            case 1: return std::conj(node.tz[col]);
            case 2: return node.tw[col];
            default: return std::conj(node.tw[col]);
        }
    };
    cplx a0 = pick(0, 0), a1 = pick(0, 1), a2 = pick(0, 2);
    cplx b0 = pick(1, 0), b1 = pick(1, 1), b2 = pick(1, 2);
    cplx c0 = pick(2, 0), c1 = pick(2, 1), c2 = pick(2, 2);
    cplx det = a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) +
               a2 * (b0 * c1 - b1 * c0);
    return det * node.cell;
}

BoundaryGrid boundary_grid(const DomainSpec& domain, unsigned n_base,
                           unsigned n_angle) {
    if (n_base < 8) throw InvalidInput("n_base must be at least 8");
    if (n_angle < 8) throw InvalidInput("n_angle must be at least 8");
    switch (domain.kind) {
        case DomainKind::ball: break;
        case DomainKind::ellipsoid: domain.ell.validate(); break;
        case DomainKind::perturbed: domain.pert.validate(); break;
    }
    BigradedPoly rho = domain.defining_poly();
    FieldSet hf = make_field_set(rho);
    FieldSet vf = make_field_set(rho.swap_variables());

    BoundaryGrid grid;
    grid.domain_ = domain;
    unsigned root = static_cast<unsigned>(
        std::ceil(std::sqrt(static_cast<double>(n_base))));
    grid.n_r_ = std::max(4u, root);
    grid.n_phi_ = std::max(8u, root);
    grid.n_s_ = std::max(8u, n_angle);
    const unsigned n_r = grid.n_r_, n_phi = grid.n_phi_, n_s = grid.n_s_;

    // Area of the surface patch swept by one parameter set; used both for the
    // actual weights and for the coarse/fine self-consistency estimate.
    auto sweep_area = [&](unsigned nr, unsigned nph, unsigned ns,
                          BoundaryGrid* out) -> double {
        std::vector<double> gx, gw;
        gauss_legendre(nr, gx, gw);
        std::vector<double> psi(nr), pw(nr);
        for (unsigned i = 0; i < nr; ++i) {
            psi[i] = 0.25 * kPi * (gx[i] + 1.0);
            pw[i] = 0.25 * kPi * gw[i];
        }
        if (out) {
            out->psi_nodes_ = psi;
            out->psi_weights_ = pw;
        }
        double dphi = 2.0 * kPi / nph;
        double ds = 2.0 * kPi / ns;
        double area = 0.0;
        for (unsigned l = 0; l < nph; ++l) {
            double phi = dphi * static_cast<double>(l);
            double R = 0.0, Rp = 0.0;
            rim_radius(hf, phi, &R, &Rp);
            cplx ephi = std::polar(1.0, phi);
            for (unsigned i = 0; i < nr; ++i) {
                double sp = std::sin(psi[i]), cp = std::cos(psi[i]);
                cplx z0 = R * sp * ephi;
                ConicJets cj = eval_fields(hf, z0);
                Frame fr = conic_frame(cj);
                if (fr.kappa.v <= 0.0)
                    throw UnsupportedDomain(
                        "projection region is not starlike about 0");
                RJet sq = jet_sqrt(fr.kappa);
                CJet sig1 = make_cjet(fr.s11, fr.s12);
                CJet sig2 = make_cjet(fr.s12, fr.s22);
                double phase = 0.0;
                SliceCurve curve;
                unsigned hid = 0;
                if (out) {
                    curve = curve_from_frame(fr, SliceDirection::horizontal, z0,
                                             &phase);
                    hid = static_cast<unsigned>(out->hslices_.size());
                    out->hslices_.push_back(curve);
                    out->hphases_.push_back(phase);
                }
                cplx t_psi_z = R * cp * ephi;
                cplx t_phi_z = (Rp + cplx(0.0, 1.0) * R) * sp * ephi;
                for (unsigned k = 0; k < ns; ++k) {
                    double s = ds * static_cast<double>(k);
                    double cs = std::cos(s), sn = std::sin(s);
                    CJet wjet = fr.center + (sig1 * cs + sig2 * sn) * sq;
                    cplx t_s_w =
                        sq.v * (sig2.v * cs - sig1.v * sn);
                    cplx t_psi_w = wjet.dx * t_psi_z.real() + wjet.dy * t_psi_z.imag();
                    cplx t_phi_w = wjet.dx * t_phi_z.real() + wjet.dy * t_phi_z.imag();
                    cplx tzv[3] = {t_psi_z, t_phi_z, 0.0};
                    cplx twv[3] = {t_psi_w, t_phi_w, t_s_w};
                    double g[3][3];
                    for (int r = 0; r < 3; ++r)
                        for (int q = 0; q <= r; ++q) {
                            double dot = (tzv[r] * std::conj(tzv[q])).real() +
                                         (twv[r] * std::conj(twv[q])).real();
                            g[r][q] = g[q][r] = dot;
                        }
                    double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[1][2]) -
                                 g[0][1] * (g[0][1] * g[2][2] - g[1][2] * g[0][2]) +
                                 g[0][2] * (g[0][1] * g[1][2] - g[1][1] * g[0][2]);
                    double cell = pw[i] * dphi * ds;
                    double wt = std::sqrt(std::max(det, 0.0)) * cell;
                    area += wt;
                    if (out) {
                        BoundaryNode node;
                        node.z = z0;
                        node.w = wjet.v;
                        node.weight = wt;
                        node.tz[0] = tzv[0];
                        node.tz[1] = tzv[1];
                        node.tz[2] = tzv[2];
                        node.tw[0] = twv[0];
                        node.tw[1] = twv[1];
                        node.tw[2] = twv[2];
                        node.cell = cell;
                        node.hslice = hid;
                        node.hangle = k;
                        out->nodes_.push_back(node);
                    }
                }
            }
        }
        return area;
    };

    grid.nodes_.reserve(static_cast<std::size_t>(n_r) * n_phi * n_s);
    double area = sweep_area(n_r, n_phi, n_s, &grid);
    grid.total_weight_ = area;

    double refined = sweep_area(n_r + 3, n_phi + 5, n_s + 8, nullptr);
    if (std::abs(area - refined) > 1e-3 * std::abs(refined))
        throw GridTooCoarse("surface area self-check failed: " +
                            std::to_string(area) + " vs refined " +
                            std::to_string(refined));

    // Vertical slice family over the mirrored projection region.
    double dphi = 2.0 * kPi / n_phi;
    for (unsigned l = 0; l < n_phi; ++l) {
        double phi = dphi * static_cast<double>(l);
        double Rv = 0.0, Rvp = 0.0;
        rim_radius(vf, phi, &Rv, &Rvp);
        cplx ephi = std::polar(1.0, phi);
        for (unsigned i = 0; i < n_r; ++i) {
            cplx w0 = Rv * std::sin(grid.psi_nodes_[i]) * ephi;
            ConicJets cj = eval_fields(vf, w0);
            Frame fr = conic_frame(cj);
            if (fr.kappa.v <= 0.0)
                throw UnsupportedDomain(
                    "vertical projection region is not starlike about 0");
            grid.vslices_.push_back(
                curve_from_frame(fr, SliceDirection::vertical, w0, nullptr));
        }
    }

    // Nearest-slice metadata for the vertical direction.
    std::vector<std::vector<cplx>> vpoints(grid.vslices_.size());
    for (std::size_t m = 0; m < grid.vslices_.size(); ++m) {
        vpoints[m].resize(n_s);
        for (unsigned t = 0; t < n_s; ++t)
            vpoints[m][t] =
                grid.vslices_[m].point(2.0 * kPi * static_cast<double>(t) / n_s);
    }
    for (auto& node : grid.nodes_) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::max();
        for (std::size_t m = 0; m < grid.vslices_.size(); ++m) {
            double d = std::abs(node.w - grid.vslices_[m].base);
            if (d < bd) {
                bd = d;
                best = m;
            }
        }
        node.vslice = static_cast<unsigned>(best);
        std::size_t bt = 0;
        double btd = std::numeric_limits<double>::max();
        for (unsigned t = 0; t < n_s; ++t) {
            double d = std::abs(node.z - vpoints[best][t]);
            if (d < btd) {
                btd = d;
                bt = t;
            }
        }
        node.vangle = static_cast<unsigned>(bt);
    }

    std::uint64_t h = 1469598103934665603ULL;
    unsigned kind = static_cast<unsigned>(domain.kind);
    h = fnv_mix(h, &kind, sizeof kind);
    std::size_t count = grid.nodes_.size();
    h = fnv_mix(h, &count, sizeof count);
    if (count > 0) {
        h = fnv_mix(h, &grid.nodes_.front().z, sizeof(cplx));
        h = fnv_mix(h, &grid.nodes_.back().w, sizeof(cplx));
        h = fnv_mix(h, &grid.total_weight_, sizeof(double));
    }
    grid.signature_ = h;
    return grid;
}

cplx BoundaryGrid::interpolate(const std::vector<cplx>& node_values, cplx z,
                               cplx w) const {
    if (node_values.size() != nodes_.size())
        throw GridMismatch("sample vector does not match the grid");
    BigradedPoly rho = domain_.defining_poly();
    FieldSet hf = make_field_set(rho);
    double phi = std::arg(z);
    if (phi < 0.0) phi += 2.0 * kPi;
    double R = 0.0, Rp = 0.0;
    rim_radius(hf, phi, &R, &Rp);
    double ratio = std::min(1.0, std::abs(z) / R);
    double psi = std::asin(ratio);
    // Fiber parameter of w on the fiber through z.
    ConicJets cj = eval_fields(hf, z);
    Frame fr = conic_frame(cj);
    if (fr.kappa.v <= 0.0)
        throw PointNotInterior("point is outside the fibered region");
    double sq = std::sqrt(fr.kappa.v);
    cplx u = (w - fr.center.v) / sq;
    // invert S: S^{-1} = adj(S)/det(S)
    double dets = fr.s11.v * fr.s22.v - fr.s12.v * fr.s12.v;
    double ux = (fr.s22.v * u.real() - fr.s12.v * u.imag()) / dets;
    double uy = (fr.s11.v * u.imag() - fr.s12.v * u.real()) / dets;
    double s = std::atan2(uy, ux);
    if (s < 0.0) s += 2.0 * kPi;

    // Tensor barycentric evaluation: trig in s, trig in phi, poly in psi.
    std::vector<cplx> fiber(n_s_), ring(n_phi_), radial(n_r_);
    for (unsigned i = 0; i < n_r_; ++i) {
        for (unsigned l = 0; l < n_phi_; ++l) {
            std::size_t off = (static_cast<std::size_t>(l) * n_r_ + i) * n_s_;
            for (unsigned k = 0; k < n_s_; ++k) fiber[k] = node_values[off + k];
            ring[l] = trig_interp(fiber, s);
        }
        radial[i] = trig_interp(ring, phi);
    }
    cplx num = 0.0;
    double den = 0.0;
    for (unsigned i = 0; i < n_r_; ++i) {
        double diff = psi - psi_nodes_[i];
        if (std::abs(diff) < 1e-13) return radial[i];
        double lam = 1.0;
        for (unsigned j = 0; j < n_r_; ++j)
            if (j != i) lam *= psi_nodes_[i] - psi_nodes_[j];
        double c = 1.0 / (lam * diff);
        num += c * radial[i];
        den += c;
    }
    return num / den;
}

std::vector<cplx> BoundaryGrid::vertical_slice_values(
    const std::vector<cplx>& node_values, unsigned m) const {
    const SliceCurve& curve = vertical_slice(m);
    std::vector<cplx> out(n_s_);
    for (unsigned t = 0; t < n_s_; ++t) {
        auto [z, w] = curve.embed(2.0 * kPi * static_cast<double>(t) / n_s_);
        out[t] = interpolate(node_values, z, w);
    }
    return out;
}

cplx inner_product(const std::vector<cplx>& f, const std::vector<cplx>& g,
                   const BoundaryGrid& grid) {
    if (f.size() != grid.size() || g.size() != grid.size())
        throw GridMismatch("sample vectors do not match the grid");
    cplx acc = 0.0;
    const auto& nodes = grid.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        acc += nodes[i].weight * f[i] * std::conj(g[i]);
    return acc;
}

double grid_norm(const std::vector<cplx>& f, const BoundaryGrid& grid) {
    return std::sqrt(std::max(0.0, inner_product(f, f, grid).real()));
}

double tangential_hessian_min_eig(const DomainSpec& domain, cplx z, cplx w) {
    BigradedPoly rho = domain.defining_poly();
    // Real-coordinate first derivatives via Wirtinger combinations.
    auto dreal = [&](const BigradedPoly& p, int coord) -> BigradedPoly {
        switch (coord) {
            case 0: return p.d_z() + p.d_zbar();
            case 1: return cplx(0.0, 1.0) * (p.d_z() - p.d_zbar());
            case 2: return p.d_w() + p.d_wbar();
            default: return cplx(0.0, 1.0) * (p.d_w() - p.d_wbar());
        }
    };
    Eigen::Vector4d grad;
    Eigen::Matrix4d hess;
    std::vector<BigradedPoly> first(4);
    for (int i = 0; i < 4; ++i) {
        first[i] = dreal(rho, i);
        grad(i) = first[i].evaluate(z, w).real();
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            hess(i, j) = dreal(first[i], j).evaluate(z, w).real();
    double gn = grad.norm();
    if (gn < 1e-12)
        throw NumericalFailure("degenerate gradient on the boundary");
    // Orthonormal basis of the tangent space via Householder on grad.
    Eigen::Matrix4d q = Eigen::Matrix4d::Identity();
    Eigen::Vector4d v = grad / gn;
    Eigen::Vector4d e0 = Eigen::Vector4d::Unit(0);
    Eigen::Vector4d u = v - (v(0) >= 0 ? -1.0 : 1.0) * e0;
    if (u.norm() > 1e-14) {
        u.normalize();
        q = Eigen::Matrix4d::Identity() - 2.0 * u * u.transpose();
    }
    Eigen::Matrix<double, 4, 3> tang = q.rightCols<3>();
    Eigen::Matrix3d th = tang.transpose() * hess * tang;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(th);
    return es.eigenvalues().minCoeff();
}

void BoundaryGrid::export_json(std::ostream& os) const {
    nlohmann::json j;
    j["kind"] = domain_.kind_name();
    j["n_r"] = n_r_;
    j["n_phi"] = n_phi_;
    j["n_s"] = n_s_;
    j["total_weight"] = total_weight_;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& node : nodes_) {
        arr.push_back({{"z_re", node.z.real()},
                       {"z_im", node.z.imag()},
                       {"w_re", node.w.real()},
                       {"w_im", node.w.imag()},
                       {"weight", node.weight},
                       {"hslice", node.hslice},
                       {"hangle", node.hangle},
                       {"vslice", node.vslice},
                       {"vangle", node.vangle}});
    }
    j["nodes"] = std::move(arr);
    os << j.dump(2) << "\n";
}

void BoundaryGrid::export_csv(std::ostream& os) const {
    os << "z_re,z_im,w_re,w_im,weight,hslice,hangle,vslice,vangle\n";
    os.precision(17);
    for (const auto& node : nodes_) {
        os << node.z.real() << ',' << node.z.imag() << ',' << node.w.real()
           << ',' << node.w.imag() << ',' << node.weight << ',' << node.hslice
           << ',' << node.hangle << ',' << node.vslice << ',' << node.vangle
           << '\n';
    }
}

}  // namespace crh
