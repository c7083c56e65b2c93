#include "crh/run_commands.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "crh/bmop.hpp"
#include "crh/boundary.hpp"
#include "crh/cascade.hpp"
#include "crh/errors.hpp"
#include "crh/expr.hpp"
#include "crh/geometry.hpp"
#include "crh/projections.hpp"
#include "crh/slices.hpp"
#include "crh/splitting.hpp"

namespace crh {

namespace {

using nlohmann::json;

// ---- config readers ------------------------------------------------------

std::string required_string(const json& cfg, const std::string& key) {
    if (!cfg.contains(key) || !cfg.at(key).is_string())
        throw InvalidInput("config requires string key '" + key + "'");
    return cfg.at(key).get<std::string>();
}

double number_value(const json& cfg, const std::string& key, double fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg.at(key).is_number())
        throw InvalidInput("config key '" + key + "' must be a number");
    return cfg.at(key).get<double>();
}

double positive_value(const json& cfg, const std::string& key, double fallback) {
    const double v = number_value(cfg, key, fallback);
    if (!(v > 0.0)) throw InvalidInput("config key '" + key + "' must be positive");
    return v;
}

unsigned uint_value(const json& cfg, const std::string& key, unsigned fallback) {
    if (!cfg.contains(key)) return fallback;
    const json& v = cfg.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw InvalidInput("config key '" + key + "' must be a nonnegative integer");
    return static_cast<unsigned>(v.get<long long>());
}

cplx cplx_value(const json& v, const std::string& key) {
    if (v.is_number()) return cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    throw InvalidInput("config key '" + key + "' must be a number or [re, im]");
}

EllipsoidSpec ellipsoid_from(const json& d) {
    EllipsoidSpec spec;
    if (!d.contains("epsilon") || !d.at("epsilon").is_number())
        throw InvalidInput("ellipsoid domain requires numeric key 'epsilon'");
    spec.epsilon = d.at("epsilon").get<double>();
    if (d.contains("a")) spec.a = cplx_value(d.at("a"), "a");
    if (d.contains("b")) spec.b = cplx_value(d.at("b"), "b");
    return spec;
}

// Scaled cubic family: the base ellipsoid carried to radius R0 with an
// optional coupling c (z^2 w + conj), under the standard control radii.
// The declared radii only close the cascade inequalities at small R0,
// which is why the radius default is 0.3 rather than 1.
PerturbationSpec perturbation_from(const json& d) {
    EllipsoidSpec base = ellipsoid_from(d);
    const double radius = positive_value(d, "radius", 0.3);
    const cplx cubic =
        d.contains("cubic") ? cplx_value(d.at("cubic"), "cubic") : cplx(0.0);
    BigradedPoly phi(cplx(-radius * radius));
    phi.add_term({1, 1, 0, 0}, 1.0);
    phi.add_term({0, 0, 1, 1}, 1.0);
    phi.add_term({1, 0, 1, 0}, base.epsilon);
    phi.add_term({0, 1, 0, 1}, base.epsilon);
    phi.add_term({2, 0, 0, 0}, base.a);
    phi.add_term({0, 2, 0, 0}, std::conj(base.a));
    phi.add_term({0, 0, 2, 0}, base.b);
    phi.add_term({0, 0, 0, 2}, std::conj(base.b));
    if (cubic != 0.0) {
        phi.add_term({2, 0, 1, 0}, cubic);
        phi.add_term({0, 2, 0, 1}, std::conj(cubic));
    }
    const double r1 = positive_value(d, "r1", 0.56);
    const double r = positive_value(d, "r", 0.39);
    const double r2 = positive_value(d, "r2", 0.7);
    const double delta = positive_value(d, "delta", 0.4);
    return PerturbationSpec::from_phi(base, phi, r1, r, r2, delta);
}

const json& domain_config(const json& cfg) {
    if (!cfg.contains("domain") || !cfg.at("domain").is_object())
        throw InvalidInput("config requires object key 'domain'");
    return cfg.at("domain");
}

DomainSpec domain_from_config(const json& cfg) {
    const json& d = domain_config(cfg);
    const std::string kind = required_string(d, "kind");
    if (kind == "ball") return DomainSpec::ball();
    if (kind == "ellipsoid") {
        EllipsoidSpec spec = ellipsoid_from(d);
        spec.validate();
        return DomainSpec::ellipsoid(spec);
    }
    if (kind == "perturbed") {
        PerturbationSpec pert = perturbation_from(d);
        pert.validate();
        return DomainSpec::perturbed(pert);
    }
    throw InvalidInput("unknown domain kind '" + kind + "'");
}

void read_grid(const json& cfg, unsigned& n_base, unsigned& n_angle) {
    if (!cfg.contains("grid")) return;
    const json& g = cfg.at("grid");
    if (!g.is_object()) throw InvalidInput("config key 'grid' must be an object");
    n_base = uint_value(g, "n_base", n_base);
    n_angle = uint_value(g, "n_angle", n_angle);
}

std::uint64_t resolve_seed(const json& cfg, const RunOptions& opt) {
    if (opt.seed) return *opt.seed;
    if (!cfg.contains("seed")) return 0;
    const json& s = cfg.at("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0)
        throw InvalidInput("config key 'seed' must be a nonnegative integer");
    return s.get<std::uint64_t>();
}

std::string resolve_out(const json& cfg, const RunOptions& opt) {
    if (!opt.out_path.empty()) return opt.out_path;
    if (cfg.contains("out")) return required_string(cfg, "out");
    return "report.json";
}

// ---- output helpers ------------------------------------------------------

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open output path '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw InvalidInput("write failed for '" + path + "'");
}

std::string sibling_csv(const std::string& out_path, const std::string& tag) {
    std::filesystem::path p(out_path);
    std::filesystem::path q = p.parent_path() / p.stem();
    q += "_" + tag + ".csv";
    return q.string();
}

json cplx_json(cplx v) { return json::array({v.real(), v.imag()}); }

json point_json(const std::pair<cplx, cplx>& p) {
    return json::array({p.first.real(), p.first.imag(), p.second.real(),
                        p.second.imag()});
}

json base_report(const std::string& command, const json& cfg,
                 const RunOptions& opt, std::uint64_t seed) {
    json rep;
    rep["command"] = command;
    rep["config"] = cfg;
    rep["seed"] = seed;
    rep["threads"] = opt.threads;
    return rep;
}

// ---- corpora -------------------------------------------------------------

BigradedPoly random_holomorphic(std::mt19937_64& rng, unsigned max_deg) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BigradedPoly p;
    for (unsigned a = 0; a <= max_deg; ++a)
        for (unsigned c = 0; a + c <= max_deg; ++c)
            p.add_term({a, 0, c, 0}, cplx(u(rng), u(rng)));
    return p;
}

std::pair<cplx, cplx> random_interior(std::mt19937_64& rng, double min_radius,
                                      double max_radius) {
    std::normal_distribution<double> gauss;
    double v[4];
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double scale =
        std::uniform_real_distribution<double>(min_radius, max_radius)(rng) /
        std::sqrt(norm2);
    return {cplx(v[0], v[1]) * scale, cplx(v[2], v[3]) * scale};
}

// Interior test points obtained by pulling boundary nodes toward the origin.
// Quadratic domains are starshaped about 0, so any factor below 1 lands
// strictly inside; the kernel quadrature additionally needs the factor to
// leave a few mean cell diameters of clearance.
std::vector<std::pair<cplx, cplx>> band_points(const BoundaryGrid& grid,
                                               double factor, unsigned count) {
    if (!(factor > 0.0 && factor < 1.0))
        throw InvalidInput("band_factor must lie in (0, 1)");
    if (count == 0) throw InvalidInput("band_count must be positive");
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / count);
    std::vector<std::pair<cplx, cplx>> pts;
    for (std::size_t i = 0; i < grid.size() && pts.size() < count; i += stride) {
        const BoundaryNode& node = grid.nodes()[i];
        pts.emplace_back(factor * node.z, factor * node.w);
    }
    return pts;
}

std::vector<std::pair<cplx, cplx>> points_from_config(const json& cfg,
                                                      const BoundaryGrid& grid) {
    if (cfg.contains("points")) {
        const json& arr = cfg.at("points");
        if (!arr.is_array() || arr.empty())
            throw InvalidInput("config key 'points' must be a nonempty array");
        std::vector<std::pair<cplx, cplx>> pts;
        for (const json& e : arr) {
            if (!e.is_array() || e.size() != 4)
                throw InvalidInput("each point must be [z_re, z_im, w_re, w_im]");
            pts.emplace_back(cplx(e[0].get<double>(), e[1].get<double>()),
                             cplx(e[2].get<double>(), e[3].get<double>()));
        }
        return pts;
    }
    const double factor = positive_value(cfg, "band_factor", 0.8);
    const unsigned count = uint_value(cfg, "band_count", 8);
    return band_points(grid, factor, count);
}

// ---- commands ------------------------------------------------------------

int cmd_decompose(const json& cfg, const RunOptions& opt, const std::string& out,
                  std::ostream&) {
    DomainSpec domain = domain_from_config(cfg);
    BigradedPoly target = parse_poly_expr(required_string(cfg, "target"));
    json rep = base_report("decompose", cfg, opt, resolve_seed(cfg, opt));
    rep["domain_kind"] = domain.kind_name();
    rep["target"] = cfg.at("target");

    if (domain.kind == DomainKind::ellipsoid) {
        SplitOptions sopt;
        sopt.degree_cap = uint_value(cfg, "degree_cap", 12);
        DecompositionResult res = decompose_on_ellipsoid(target, domain.ell, sopt);
        rep["residual_sup"] = res.residual_sup;
        json sig = json::array();
        for (const auto& [deg, s] : res.per_degree_sigma_min)
            sig.push_back(json{{"degree", deg}, {"sigma_min", s}});
        rep["per_degree_sigma_min"] = sig;
        rep["Q"] = json::parse(res.Q.to_json());
        rep["R"] = json::parse(res.R.to_json());
    } else if (domain.kind == DomainKind::perturbed) {
        CascadeOptions copt;
        read_grid(cfg, copt.grid_n_base, copt.grid_n_angle);
        const unsigned l_max = uint_value(cfg, "l_max", 4);
        PerturbedDecomposition dec =
            decompose_perturbed(target, domain.pert, l_max, copt);
        rep["residual_sup"] = dec.result.residual_sup;
        rep["tail_bound"] = dec.tail_bound;
        rep["max_inverse_norm"] = dec.max_inverse_norm;
        rep["max_coupling_ratio"] = dec.max_coupling_ratio;
        json rounds = json::array();
        for (const CascadeRound& r : dec.rounds)
            rounds.push_back(json{{"residual_sup", r.residual_sup},
                                  {"tail_bound", r.tail_bound}});
        rep["rounds"] = rounds;
        json sig = json::array();
        for (const auto& [deg, s] : dec.result.per_degree_sigma_min)
            sig.push_back(json{{"degree", deg}, {"sigma_min", s}});
        rep["per_degree_sigma_min"] = sig;
        rep["Q"] = json::parse(dec.result.Q.to_json());
        rep["R"] = json::parse(dec.result.R.to_json());
    } else {
        throw UnsupportedDomain(
            "decompose requires an ellipsoid or perturbed domain");
    }
    write_text(out, rep.dump(2) + "\n");
    return 0;
}

int cmd_crh_test(const json& cfg, const RunOptions& opt, const std::string& out,
                 std::ostream&) {
    DomainSpec domain = domain_from_config(cfg);
    unsigned n_base = 1024, n_angle = 32;
    read_grid(cfg, n_base, n_angle);
    const double tol_extend = positive_value(cfg, "tol_extend", 1e-8);
    const double tol_cr = positive_value(cfg, "tol_cr", 1e-6);
    BigradedPoly fp = parse_poly_expr(required_string(cfg, "f"));

    BoundaryGrid grid = boundary_grid(domain, n_base, n_angle);
    BoundaryFunction f = BoundaryFunction::from_poly(fp, grid);
    CRHReport crh = classify_crh(f, domain, tol_extend, tol_cr);

    json rep = base_report("crh-test", cfg, opt, resolve_seed(cfg, opt));
    rep["domain_kind"] = domain.kind_name();
    rep["grid"] = json{{"n_angle", n_angle}, {"n_base", n_base}};
    rep["is_crh"] = crh.is_crh;
    rep["is_cr"] = crh.is_cr;
    rep["max_negative_energy_horizontal"] = crh.max_negative_energy_horizontal;
    rep["max_negative_energy_vertical"] = crh.max_negative_energy_vertical;
    rep["cr_residual"] = crh.cr_residual;
    rep["norm"] = crh.norm;
    rep["extend_tolerance"] = crh.extend_tolerance;
    rep["cr_tolerance"] = crh.cr_tolerance;

    std::vector<SliceSpectrum> spectra = all_slice_spectra(f);
    std::ostringstream csv;
    export_spectra_csv(csv, spectra);
    const std::string csv_path = sibling_csv(out, "spectra");
    write_text(csv_path, csv.str());
    rep["spectra_csv"] = csv_path;
    rep["slice_count"] = spectra.size();

    write_text(out, rep.dump(2) + "\n");
    return 0;
}

int cmd_szego_iterate(const json& cfg, const RunOptions& opt,
                      const std::string& out, std::ostream&) {
    DomainSpec domain = domain_from_config(cfg);
    unsigned n_base = 576, n_angle = 24;
    read_grid(cfg, n_base, n_angle);
    const unsigned degree = uint_value(cfg, "degree", 4);
    const unsigned k_max = uint_value(cfg, "k_max", 500);
    const double tol = positive_value(cfg, "tol", 1e-8);
    const double angle_tol = positive_value(cfg, "angle_tol", 1e-4);
    BigradedPoly fp = parse_poly_expr(required_string(cfg, "f"));

    BoundaryGrid grid = boundary_grid(domain, n_base, n_angle);
    BoundaryFunction f = BoundaryFunction::from_poly(fp, grid);
    ProjectionOperator v1 =
        build_subspace_projection(domain, grid, SubspaceFamily::v1, degree);
    ProjectionOperator v2 =
        build_subspace_projection(domain, grid, SubspaceFamily::v2, degree);
    ProjectionOperator holo = build_subspace_projection(
        domain, grid, SubspaceFamily::holomorphic, degree);

    auto [limit, iteration] = alternate(f, v1, v2, k_max, tol);
    BoundaryFunction ref = szego_reference(f, degree);
    std::vector<cplx> diff = limit.values;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= ref.values[i];
    const double gap = grid_norm(diff, grid);
    IntersectionReport inter = intersection_dimension(v1, v2, angle_tol);

    json rep = base_report("szego-iterate", cfg, opt, resolve_seed(cfg, opt));
    rep["domain_kind"] = domain.kind_name();
    rep["grid"] = json{{"n_angle", n_angle}, {"n_base", n_base}};
    rep["degree"] = degree;
    std::ostringstream it_json;
    iteration.export_json(it_json);
    rep["iteration"] = json::parse(it_json.str());
    rep["gap_to_reference"] = gap;
    rep["ranks"] = json{{"holomorphic", holo.rank()},
                       {"v1", v1.rank()},
                       {"v2", v2.rank()}};
    rep["intersection_dimension"] = inter.dimension;
    rep["angle_tolerance"] = angle_tol;
    rep["dimension_matches_holomorphic_rank"] = inter.dimension == holo.rank();

    std::ostringstream angles;
    export_angles_csv(angles, inter);
    const std::string csv_path = sibling_csv(out, "angles");
    write_text(csv_path, angles.str());
    rep["angles_csv"] = csv_path;

    write_text(out, rep.dump(2) + "\n");
    return 0;
}

int cmd_bm_check(const json& cfg, const RunOptions& opt, const std::string& out,
                 std::ostream&) {
    DomainSpec domain = domain_from_config(cfg);
    unsigned n_base = 1024, n_angle = 32;
    read_grid(cfg, n_base, n_angle);
    const unsigned n_directions = uint_value(cfg, "n_directions", 512);
    const std::uint64_t seed = resolve_seed(cfg, opt);

    BoundaryGrid grid = boundary_grid(domain, n_base, n_angle);
    json rep = base_report("bm-check", cfg, opt, seed);
    rep["domain_kind"] = domain.kind_name();
    rep["grid"] = json{{"n_angle", n_angle}, {"n_base", n_base}};
    rep["n_directions"] = n_directions;

    json points_j = json::array();
    json kernel_j = json::array();
    json averaged_j = json::array();
    json disc_j = json::array();
    double max_disc = 0.0;

    auto record = [&](const BMEvaluation& e) {
        points_j.push_back(point_json(e.point));
        kernel_j.push_back(cplx_json(e.value_kernel));
        averaged_j.push_back(cplx_json(e.value_averaged));
        const double d = e.discrepancy();
        disc_j.push_back(d);
        max_disc = std::max(max_disc, d);
    };

    if (cfg.contains("f")) {
        BigradedPoly fp = parse_poly_expr(required_string(cfg, "f"));
        BoundaryFunction f = BoundaryFunction::from_poly(fp, grid);
        std::vector<std::pair<cplx, cplx>> pts = points_from_config(cfg, grid);
        for (const auto& p : pts) record(bm_evaluate(f, p, n_directions));
        if (cfg.contains("cr_oracle") && cfg.at("cr_oracle").get<bool>()) {
            CROracleReport oracle = cr_oracle(f, domain, pts);
            json gaps = json::array();
            for (double d : oracle.discrepancies) gaps.push_back(d);
            rep["cr_oracle"] = json{{"discrepancies", gaps},
                                    {"max_discrepancy", oracle.max_discrepancy}};
        }
    } else if (cfg.contains("corpus")) {
        const json& c = cfg.at("corpus");
        if (!c.is_object())
            throw InvalidInput("config key 'corpus' must be an object");
        const unsigned count = uint_value(c, "count", 20);
        const unsigned max_degree = uint_value(c, "max_degree", 6);
        const unsigned per_poly = uint_value(c, "points", 10);
        std::mt19937_64 rng(seed);
        for (unsigned j = 0; j < count; ++j) {
            BoundaryFunction f =
                BoundaryFunction::from_poly(random_holomorphic(rng, max_degree), grid);
            for (unsigned k = 0; k < per_poly; ++k)
                record(bm_evaluate(f, random_interior(rng, 0.3, 0.6), n_directions));
        }
        rep["corpus"] = json{{"count", count},
                             {"max_degree", max_degree},
                             {"points", per_poly}};
    } else {
        throw InvalidInput("bm-check requires key 'f' or 'corpus'");
    }

    rep["point"] = points_j;
    rep["value_kernel"] = kernel_j;
    rep["value_averaged"] = averaged_j;
    rep["discrepancy"] = disc_j;
    rep["max_discrepancy"] = max_disc;

    write_text(out, rep.dump(2) + "\n");
    return 0;
}

int cmd_admissibility(const json& cfg, const RunOptions& opt,
                      const std::string& out, std::ostream&) {
    const json& d = domain_config(cfg);
    const std::string kind = required_string(d, "kind");
    if (kind != "ellipsoid")
        throw InvalidInput("admissibility requires an ellipsoid domain");
    EllipsoidSpec spec = ellipsoid_from(d);
    const unsigned n_max = uint_value(cfg, "n_max", 50);
    if (n_max == 0) throw InvalidInput("config key 'n_max' must be positive");

    json rep = base_report("admissibility", cfg, opt, resolve_seed(cfg, opt));
    rep["epsilon"] = spec.epsilon;
    rep["a"] = cplx_json(spec.a);
    rep["b"] = cplx_json(spec.b);
    rep["admissible"] = spec.admissible();
    rep["margin"] = spec.margin();

    if (!spec.admissible()) {
        // An inadmissible spec is a legitimate query here; the report carries
        // the same diagnostic that validation would throw.
        try {
            spec.validate();
            rep["reason"] = "outside the admissible parameter range";
        } catch (const InadmissibleSpec& e) {
            rep["reason"] = e.what();
        }
        write_text(out, rep.dump(2) + "\n");
        return 0;
    }

    rep["reason"] = "";
    // Certify 1/sigma_min < (1+delta)/epsilon at the analytic threshold
    // delta = epsilon/margin - 1 unless the config narrows it.  The tiny
    // headroom keeps the a = b = 0 equality case certified.
    const double delta =
        positive_value(cfg, "delta", spec.epsilon / spec.margin() - 1.0 + 1e-9);
    rep["delta"] = delta;
    const double inverse_cap = 1.0 / spec.margin() + 1e-9;
    bool all_certified = true;
    bool margin_bound_holds = true;
    double min_sigma = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (unsigned n = 1; n <= n_max; ++n) {
        BandMatrixA m = BandMatrixA::build(n, spec);
        InverseBoundReport r = certify_inverse_bound(m, delta);
        all_certified = all_certified && r.certified;
        margin_bound_holds = margin_bound_holds && 1.0 / r.sigma_min <= inverse_cap;
        min_sigma = std::min(min_sigma, r.sigma_min);
        rows.push_back(json{{"analytic_lower", r.analytic_lower},
                            {"certified", r.certified},
                            {"inverse_norm", 1.0 / r.sigma_min},
                            {"n", n},
                            {"sigma_min", r.sigma_min}});
    }
    rep["per_n"] = rows;
    rep["n_max"] = n_max;
    rep["all_certified"] = all_certified;
    rep["margin_bound_holds"] = margin_bound_holds;
    rep["min_sigma_min"] = min_sigma;

    write_text(out, rep.dump(2) + "\n");
    return 0;
}

}  // namespace

int run_command(const std::string& command, const nlohmann::json& config,
                const RunOptions& options, std::ostream& err) {
    try {
        if (!config.is_object()) throw InvalidInput("config must be a JSON object");
        if (options.threads == 0) throw InvalidInput("threads must be positive");
        const std::string out = resolve_out(config, options);
        if (command == "decompose") return cmd_decompose(config, options, out, err);
        if (command == "crh-test") return cmd_crh_test(config, options, out, err);
        if (command == "szego-iterate")
            return cmd_szego_iterate(config, options, out, err);
        if (command == "bm-check") return cmd_bm_check(config, options, out, err);
        if (command == "admissibility")
            return cmd_admissibility(config, options, out, err);
        throw InvalidInput("unknown command '" + command + "'");
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalFailure& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace crh
