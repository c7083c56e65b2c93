#include "crh/slices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "crh/errors.hpp"

namespace crh {

namespace {

constexpr double kPi = std::numbers::pi;

void require_aligned(const BoundaryFunction& f) {
    if (!f.grid || f.values.size() != f.grid->size())
        throw GridMismatch("boundary function values do not match the grid");
}

// Discrete Fourier modes of samples taken at theta_k = 2 pi k / n + phase.
// Bins above n/2 are reported as negative modes.
std::map<int, cplx> fourier_modes(const std::vector<cplx>& samples, double phase) {
    const int n = static_cast<int>(samples.size());
    std::map<int, cplx> modes;
    for (int j = 0; j < n; ++j) {
        const int m = (j <= n / 2) ? j : j - n;
        cplx acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double theta = 2.0 * kPi * k / n + phase;
            acc += samples[static_cast<std::size_t>(k)] * std::polar(1.0, -m * theta);
        }
        modes[m] = acc / static_cast<double>(n);
    }
    return modes;
}

// Total energy and the extension-defect energy of a mode map.
std::pair<double, double> mode_energies(const std::map<int, cplx>& modes, double q2) {
    double total = 0.0;
    double negative = 0.0;
    for (const auto& [m, c] : modes) {
        total += std::norm(c);
        if (m < 0) {
            cplx partner = 0.0;
            auto it = modes.find(-m);
            if (it != modes.end()) partner = it->second;
            negative += std::norm(c - std::pow(q2, -m) * partner);
        }
    }
    return {total, negative};
}

SliceSpectrum spectrum_from_samples(const std::vector<cplx>& samples, double phase,
                                    double q2, unsigned id) {
    if (samples.size() < 16)
        throw TooFewSamples("slice spectra need at least 16 samples");
    SliceSpectrum s;
    s.slice_id = id;
    s.coefficients = fourier_modes(samples, phase);
    const auto [total, negative] = mode_energies(s.coefficients, q2);
    s.total_energy = total;
    s.negative_energy = negative;
    return s;
}

std::vector<cplx> sample_curve(const BoundaryFunction& f, const SliceCurve& curve,
                               unsigned n) {
    std::vector<cplx> samples(n);
    for (unsigned k = 0; k < n; ++k) {
        auto [z, w] = curve.embed(2.0 * kPi * k / n);
        samples[k] = f.at(z, w);
    }
    return samples;
}

// Holomorphic-part value at the slice coordinate t from precomputed modes.
cplx eval_analytic(const std::map<int, cplx>& modes, const EllipseShape& shape,
                   cplx t, int n_max) {
    const double q2 = shape.joukowski_q2();
    const cplx what = (t - shape.center) * std::polar(1.0, -shape.rotation) /
                      shape.radius_sum();
    cplx value = 0.0;
    if (auto it = modes.find(0); it != modes.end()) value = it->second;
    cplx e_prev = 1.0;
    cplx e_cur = what;
    for (int m = 1; m <= n_max; ++m) {
        if (auto it = modes.find(m); it != modes.end()) value += it->second * e_cur;
        // E_2 subtracts twice the reflection because E_0 stands for the
        // constant, not the symmetrized pair.
        const double correction = (m == 1) ? 2.0 * q2 : q2;
        const cplx e_next = what * e_cur - correction * e_prev;
        e_prev = e_cur;
        e_cur = e_next;
    }
    return value;
}

// Monomials z^a zbar^b w^c wbar^d of total degree <= deg, in grading order.
std::vector<Monomial4> monomials_up_to(unsigned deg) {
    std::vector<Monomial4> out;
    for (unsigned t = 0; t <= deg; ++t)
        for (unsigned a = 0; a <= t; ++a)
            for (unsigned b = 0; a + b <= t; ++b)
                for (unsigned c = 0; a + b + c <= t; ++c)
                    out.push_back(Monomial4{a, b, c, t - a - b - c});
    return out;
}

cplx monomial_value(const PowerTable& pt, const Monomial4& m) {
    return pt.z[m.a] * pt.zb[m.b] * pt.w[m.c] * pt.wb[m.d];
}

struct MomentTables {
    std::vector<Monomial4> monos;
    std::map<Monomial4, std::size_t> index;
    // sum f * mono * density, for the two pairing forms
    std::vector<cplx> against_wzzb;
    std::vector<cplx> against_zwwb;
    // squared grid norm of each monomial
    std::vector<double> norm_sq;
};

MomentTables moment_tables(const BoundaryFunction& f, unsigned deg) {
    require_aligned(f);
    const BoundaryGrid& g = *f.grid;
    MomentTables t;
    t.monos = monomials_up_to(deg);
    for (std::size_t i = 0; i < t.monos.size(); ++i) t.index[t.monos[i]] = i;
    t.against_wzzb.assign(t.monos.size(), 0.0);
    t.against_zwwb.assign(t.monos.size(), 0.0);
    t.norm_sq.assign(t.monos.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const BoundaryNode& node = g.nodes()[i];
        const PowerTable pt(node.z, node.w, deg);
        const cplx fv = f.values[i];
        const cplx dwzzb = g.form_density(node, Form3::dw_dz_dzbar);
        const cplx dzwwb = g.form_density(node, Form3::dz_dw_dwbar);
        for (std::size_t k = 0; k < t.monos.size(); ++k) {
            const cplx mv = monomial_value(pt, t.monos[k]);
            t.against_wzzb[k] += fv * mv * dwzzb;
            t.against_zwwb[k] += fv * mv * dzwwb;
            t.norm_sq[k] += node.weight * std::norm(mv);
        }
    }
    return t;
}

}  // namespace

SliceSpectrum slice_spectrum(const BoundaryFunction& f, const SliceCurve& curve,
                             unsigned n_samples) {
    unsigned n = n_samples;
    if (n == 0 && f.grid) n = f.grid->fiber_samples();
    if (n < 16) throw TooFewSamples("slice spectra need at least 16 samples");
    return spectrum_from_samples(sample_curve(f, curve, n), 0.0,
                                 curve.shape.joukowski_q2(), 0);
}

cplx analytic_part_at(const std::vector<cplx>& samples, const EllipseShape& shape,
                      cplx t) {
    if (samples.size() < 16)
        throw TooFewSamples("slice evaluation needs at least 16 samples");
    return eval_analytic(fourier_modes(samples, 0.0), shape, t,
                         static_cast<int>(samples.size()) / 2);
}

std::vector<SliceSpectrum> all_slice_spectra(const BoundaryFunction& f) {
    require_aligned(f);
    const BoundaryGrid& g = *f.grid;
    const unsigned n_s = g.fiber_samples();
    const unsigned n_h = g.horizontal_slice_count();
    const unsigned n_v = g.vertical_slice_count();

    std::vector<std::vector<cplx>> hvals(n_h, std::vector<cplx>(n_s, 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const BoundaryNode& node = g.nodes()[i];
        hvals[node.hslice][node.hangle] = f.values[i];
    }

    std::vector<SliceSpectrum> spectra;
    spectra.reserve(n_h + n_v);
    for (unsigned j = 0; j < n_h; ++j) {
        const double q2 = g.horizontal_slice(j).shape.joukowski_q2();
        spectra.push_back(
            spectrum_from_samples(hvals[j], g.horizontal_phase(j), q2, j));
    }
    for (unsigned m = 0; m < n_v; ++m) {
        const SliceCurve& curve = g.vertical_slice(m);
        std::vector<cplx> samples = f.evaluator
                                        ? sample_curve(f, curve, n_s)
                                        : g.vertical_slice_values(f.values, m);
        spectra.push_back(spectrum_from_samples(samples, 0.0,
                                                curve.shape.joukowski_q2(),
                                                n_h + m));
    }
    return spectra;
}

CRHReport classify_crh(const BoundaryFunction& f, const DomainSpec& domain,
                       double tol_extend, double tol_cr) {
    require_aligned(f);
    if (tol_extend <= 0.0 || tol_cr <= 0.0)
        throw InvalidInput("classification tolerances must be positive");

    CRHReport report;
    report.extend_tolerance = tol_extend;
    report.cr_tolerance = tol_cr;
    report.norm = f.norm();

    const auto spectra = all_slice_spectra(f);
    const unsigned n_h = f.grid->horizontal_slice_count();
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        double& slot = (i < n_h) ? report.max_negative_energy_horizontal
                                 : report.max_negative_energy_vertical;
        slot = std::max(slot, spectra[i].negative_energy);
    }

    const double scale = std::max(report.norm * report.norm, 1e-300);
    report.is_crh = std::max(report.max_negative_energy_horizontal,
                             report.max_negative_energy_vertical) /
                        scale <
                    tol_extend;
    report.cr_residual = cr_residual(f, domain);
    report.is_cr = report.cr_residual < tol_cr;
    return report;
}

double cr_residual(const BoundaryFunction& f, const DomainSpec&, unsigned n_test) {
    if (n_test < 1) throw InvalidInput("cr_residual needs test degree >= 1");
    const MomentTables t = moment_tables(f, n_test);
    const double fnorm = std::max(f.norm(), 1e-300);
    double worst = 0.0;
    for (std::size_t k = 0; k < t.monos.size(); ++k) {
        const Monomial4& p = t.monos[k];
        if (p.b + p.d == 0) continue;  // holomorphic tests pair to zero
        cplx pairing = 0.0;
        if (p.d > 0) {
            Monomial4 dw{p.a, p.b, p.c, p.d - 1};
            pairing += static_cast<double>(p.d) * t.against_zwwb[t.index.at(dw)];
        }
        if (p.b > 0) {
            Monomial4 dz{p.a, p.b - 1, p.c, p.d};
            pairing -= static_cast<double>(p.b) * t.against_wzzb[t.index.at(dz)];
        }
        const double pnorm = std::sqrt(t.norm_sq[k]);
        worst = std::max(worst, std::abs(pairing) / (fnorm * std::max(pnorm, 1e-300)));
    }
    return worst;
}

MomentReport moment_test(const BoundaryFunction& f, const DomainSpec&,
                         unsigned max_deg) {
    const MomentTables t = moment_tables(f, max_deg);
    MomentReport report;
    report.max_degree = max_deg;
    for (std::size_t k = 0; k < t.monos.size(); ++k) {
        const Monomial4& m = t.monos[k];
        if (m.d == 0)
            report.horizontal_max =
                std::max(report.horizontal_max, std::abs(t.against_wzzb[k]));
        if (m.b == 0)
            report.vertical_max =
                std::max(report.vertical_max, std::abs(t.against_zwwb[k]));
    }
    return report;
}

SliceExtension::SliceExtension(BoundaryFunction f, SliceDirection direction,
                               double tol)
    : f_(std::move(f)),
      direction_(direction),
      tol_(tol) {
    require_aligned(f_);
    if (direction_ == SliceDirection::oblique)
        throw InvalidInput("slicewise extension needs a coordinate direction");
    if (tol_ <= 0.0) throw InvalidInput("extension tolerance must be positive");
    domain_ = f_.grid->domain();
    rho_ = domain_.defining_poly();
}

cplx SliceExtension::operator()(cplx z, cplx w) const {
    const double rho = rho_.evaluate(z, w).real();
    if (rho > 1e-9) throw PointNotInterior("point lies outside the closed domain");

    const cplx base = (direction_ == SliceDirection::horizontal) ? z : w;
    const auto curve = slice(domain_, direction_, base);
    if (!curve) throw PointNotInterior("slice through the point is empty");

    const unsigned n = f_.grid->fiber_samples();
    const std::vector<cplx> samples = sample_curve(f_, *curve, n);
    const SliceSpectrum spec =
        spectrum_from_samples(samples, 0.0, curve->shape.joukowski_q2(), 0);
    if (spec.total_energy > 0.0 &&
        spec.negative_energy / spec.total_energy > tol_)
        throw NotSliceExtendible("slice data has essential negative modes");

    const cplx t = (direction_ == SliceDirection::horizontal)
                       ? (w - curve->origin_w) / curve->span_w
                       : (z - curve->origin_z) / curve->span_z;
    return analytic_part_at(samples, curve->shape, t);
}

SliceExtension extend_slicewise(const BoundaryFunction& f, SliceDirection direction,
                                double tol) {
    return SliceExtension(f, direction, tol);
}

double extension_gap(const BoundaryFunction& f, double tol) {
    require_aligned(f);
    if (tol <= 0.0) throw InvalidInput("extension tolerance must be positive");
    const BoundaryGrid& g = *f.grid;
    const unsigned n_s = g.fiber_samples();
    const int n_max = static_cast<int>(n_s) / 2;

    std::vector<cplx> horizontal(g.size(), 0.0);
    std::vector<cplx> vertical(g.size(), 0.0);

    const unsigned n_h = g.horizontal_slice_count();
    std::vector<std::vector<cplx>> hvals(n_h, std::vector<cplx>(n_s, 0.0));
    std::vector<std::vector<std::size_t>> hidx(n_h, std::vector<std::size_t>(n_s, 0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const BoundaryNode& node = g.nodes()[i];
        hvals[node.hslice][node.hangle] = f.values[i];
        hidx[node.hslice][node.hangle] = i;
    }
    for (unsigned j = 0; j < n_h; ++j) {
        const SliceCurve& curve = g.horizontal_slice(j);
        const auto modes = fourier_modes(hvals[j], g.horizontal_phase(j));
        const auto [total, negative] =
            mode_energies(modes, curve.shape.joukowski_q2());
        if (total > 0.0 && negative / total > tol)
            throw NotSliceExtendible("horizontal slice has essential negative modes");
        for (unsigned k = 0; k < n_s; ++k) {
            const std::size_t i = hidx[j][k];
            const cplx t = (g.nodes()[i].w - curve.origin_w) / curve.span_w;
            horizontal[i] = eval_analytic(modes, curve.shape, t, n_max);
        }
    }

    // Grid nodes sit exactly on their horizontal slice but only near their
    // binned vertical slice, so the vertical extension is evaluated on the
    // exact slice through each node's w.
    const DomainSpec dom = g.domain();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const BoundaryNode& node = g.nodes()[i];
        const auto curve = slice(dom, SliceDirection::vertical, node.w);
        if (!curve)
            throw NotSliceExtendible("vertical slice through a node is empty");
        const std::vector<cplx> samples = sample_curve(f, *curve, n_s);
        const auto modes = fourier_modes(samples, 0.0);
        const auto [total, negative] =
            mode_energies(modes, curve->shape.joukowski_q2());
        if (total > 0.0 && negative / total > tol)
            throw NotSliceExtendible("vertical slice has essential negative modes");
        const cplx t = (node.z - curve->origin_z) / curve->span_z;
        vertical[i] = eval_analytic(modes, curve->shape, t, n_max);
    }

    std::vector<cplx> diff(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) diff[i] = horizontal[i] - vertical[i];
    return grid_norm(diff, g);
}

void export_spectra_csv(std::ostream& out, const std::vector<SliceSpectrum>& spectra) {
    out << "slice,mode,re,im\n";
    for (const auto& s : spectra)
        for (const auto& [m, c] : s.coefficients)
            out << s.slice_id << ',' << m << ',' << c.real() << ',' << c.imag()
                << '\n';
}

}  // namespace crh
