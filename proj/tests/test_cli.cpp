#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "crh/errors.hpp"
#include "crh/expr.hpp"
#include "crh/run_commands.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace crh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path out_dir() {
    fs::path d = fs::temp_directory_path() / "crh_cli_tests";
    fs::create_directories(d);
    return d;
}

int run(const std::string& command, const json& cfg, const fs::path& out,
        std::string* err_text = nullptr,
        std::optional<std::uint64_t> seed = std::nullopt) {
    RunOptions opt;
    opt.out_path = out.string();
    opt.seed = seed;
    std::ostringstream err;
    const int rc = run_command(command, cfg, opt, err);
    if (err_text) *err_text = err.str();
    return rc;
}

json read_report(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const json kSmallGrid = {{"n_angle", 16}, {"n_base", 256}};
const json kBall = {{"kind", "ball"}};
const json kEllipsoid = {
    {"a", 0.05}, {"b", 0.05}, {"epsilon", 0.3}, {"kind", "ellipsoid"}};

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("expression parser builds the documented language") {
    const cplx z(0.3, 0.1), w(-0.2, 0.4);

    auto value = [&](const std::string& text) {
        return parse_poly_expr(text).evaluate(z, w);
    };

    CHECK(std::abs(value("z^2*w") - z * z * w) < 1e-15);
    CHECK(std::abs(value("abs2(z)") - z * std::conj(z)) < 1e-15);
    CHECK(std::abs(value("conj(z) + 2i*w") - (std::conj(z) + cplx(0, 2) * w)) <
          1e-15);
    CHECK(std::abs(value("zbar*wbar") - std::conj(z) * std::conj(w)) < 1e-15);
    CHECK(std::abs(value("1.5") - cplx(1.5)) < 1e-15);
    CHECK(std::abs(value("2i") - cplx(0, 2)) < 1e-15);
    CHECK(std::abs(value("i") - cplx(0, 1)) < 1e-15);
    CHECK(std::abs(value("1 + 2i") - cplx(1, 2)) < 1e-15);
    CHECK(std::abs(value("-z") + z) < 1e-15);
    CHECK(std::abs(value("z - -w") - (z + w)) < 1e-15);
    CHECK(std::abs(value("(z + w)^2") - (z + w) * (z + w)) < 1e-14);
    CHECK(std::abs(value("2*z^3 - 0.5i*w") - (2.0 * z * z * z - cplx(0, 0.5) * w)) <
          1e-15);
    CHECK(std::abs(value(" z ^ 2 * w ") - z * z * w) < 1e-15);
    CHECK(std::abs(value("z^0") - cplx(1.0)) < 1e-15);

    // abs2 is evaluation-level conjugation: the result carries zbar exponents.
    BigradedPoly p = parse_poly_expr("abs2(z + w)");
    CHECK(p.coefficient(1, 1, 0, 0) == cplx(1.0));
    CHECK(p.coefficient(1, 0, 0, 1) == cplx(1.0));
    CHECK(p.coefficient(0, 1, 1, 0) == cplx(1.0));
    CHECK(p.coefficient(0, 0, 1, 1) == cplx(1.0));
    CHECK(p.is_hermitian(0.0));
}

TEST_CASE("expression parser rejects malformed input") {
    for (const char* text : {"z+", "q", "abs2(", "z+*w", "", "z^", "z^-2", "(z",
                             "z)", "conj z", "z^70", "3..5"}) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse_poly_expr(text), InvalidInput);
    }
    // The diagnostic names the offending position.
    try {
        parse_poly_expr("z+*w");
        FAIL("expected a parse error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }
}

TEST_CASE("decompose command writes the split report") {
    const fs::path out = out_dir() / "dec_ell.json";
    json cfg = {{"domain", kEllipsoid}, {"target", "zbar*wbar"}};
    std::string err;
    REQUIRE(run("decompose", cfg, out, &err) == 0);
    CHECK(err.empty());

    json rep = read_report(out);
    CHECK(rep["command"] == "decompose");
    CHECK(rep["residual_sup"].get<double>() < 1e-8);
    REQUIRE_FALSE(rep["per_degree_sigma_min"].empty());
    CHECK(rep["per_degree_sigma_min"][0]["degree"] == 2);
    CHECK(rep["per_degree_sigma_min"][0]["sigma_min"].get<double>() ==
          doctest::Approx(0.3));
    CHECK_FALSE(rep["Q"].empty());
    CHECK_FALSE(rep["R"].empty());
}

TEST_CASE("decompose rejects an inadmissible ellipsoid") {
    const fs::path out = out_dir() / "dec_bad.json";
    fs::remove(out);
    json domain = {{"a", 0.06}, {"b", 0.06}, {"epsilon", 0.1}, {"kind", "ellipsoid"}};
    json cfg = {{"domain", domain}, {"target", "zbar*wbar"}};
    std::string err;
    CHECK(run("decompose", cfg, out, &err) == 2);
    // The diagnostic names the violated inequality.
    CHECK(err.find("epsilon - |a| - |b|") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("decompose runs the cascade on the cubic domain") {
    const fs::path out = out_dir() / "dec_cubic.json";
    json domain = {{"a", 0.05},   {"b", 0.05},          {"cubic", 0.005},
                   {"epsilon", 0.3}, {"kind", "perturbed"}};
    json cfg = {{"domain", domain},
                {"grid", json{{"n_angle", 32}, {"n_base", 64}}},
                {"l_max", 3},
                {"target", "zbar*wbar"}};
    REQUIRE(run("decompose", cfg, out) == 0);

    json rep = read_report(out);
    REQUIRE(rep["rounds"].size() == 3);
    double prev = std::numeric_limits<double>::infinity();
    for (const json& round : rep["rounds"]) {
        const double tail = round["tail_bound"].get<double>();
        CHECK(tail > 0.0);
        CHECK(tail < prev);
        CHECK(round["residual_sup"].get<double>() <= tail + 1e-8);
        prev = tail;
    }
    CHECK(rep["tail_bound"].get<double>() ==
          doctest::Approx(rep["rounds"].back()["tail_bound"].get<double>()));
    CHECK(rep["max_coupling_ratio"].get<double>() < 1.0);
}

TEST_CASE("crh test command classifies the examples") {
    json base = {{"grid", kSmallGrid}};

    const fs::path out1 = out_dir() / "crh_abs2.json";
    json cfg = base;
    cfg["domain"] = kBall;
    cfg["f"] = "abs2(z)";
    REQUIRE(run("crh-test", cfg, out1) == 0);
    json rep = read_report(out1);
    CHECK(rep["is_crh"] == true);
    CHECK(rep["is_cr"] == false);
    CHECK(rep["cr_residual"].get<double>() > rep["cr_tolerance"].get<double>());
    const std::string csv = slurp(out1.parent_path() / "crh_abs2_spectra.csv");
    CHECK(csv.rfind("slice,mode,re,im", 0) == 0);
    CHECK(rep["slice_count"].get<unsigned>() > 0);

    const fs::path out2 = out_dir() / "crh_conj.json";
    cfg["f"] = "conj(z)";
    REQUIRE(run("crh-test", cfg, out2) == 0);
    CHECK(read_report(out2)["is_crh"] == false);

    // The weak CR pairing tests against degree-4 monomials; elliptical
    // fibers need 24 angular samples before those products stop aliasing.
    const fs::path out3 = out_dir() / "crh_holo.json";
    cfg["domain"] = kEllipsoid;
    cfg["f"] = "z^2*w";
    cfg["grid"] = json{{"n_angle", 24}, {"n_base", 576}};
    REQUIRE(run("crh-test", cfg, out3) == 0);
    rep = read_report(out3);
    CHECK(rep["is_crh"] == true);
    CHECK(rep["is_cr"] == true);

    const fs::path out4 = out_dir() / "crh_parse.json";
    cfg["f"] = "z+*w";
    std::string err;
    CHECK(run("crh-test", cfg, out4, &err) == 2);
    CHECK(err.find("parse error") != std::string::npos);
}

TEST_CASE("szego iterate command reports the ball contrast") {
    json cfg = {{"degree", 4}, {"domain", kBall}, {"f", "abs2(z)"},
                {"grid", kSmallGrid}};
    const fs::path out = out_dir() / "sz_ball.json";
    REQUIRE(run("szego-iterate", cfg, out) == 0);

    json rep = read_report(out);
    CHECK(rep["iteration"]["converged"] == true);
    CHECK(rep["iteration"]["steps"].get<unsigned>() <= 2);
    // The limit is the two-sided extendible part, not the Szego projection;
    // for |z|^2 the gap is the distance from |z|^2 to the constant 1/2.
    CHECK(rep["gap_to_reference"].get<double>() > 0.1);
    CHECK(rep["ranks"]["holomorphic"] == 15);
    CHECK(rep["intersection_dimension"].get<unsigned>() > 15);
    CHECK(rep["dimension_matches_holomorphic_rank"] == false);
    const std::string csv = slurp(out_dir() / "sz_ball_angles.csv");
    CHECK(csv.rfind("index,angle", 0) == 0);

    json holo = {{"degree", 3}, {"domain", kBall}, {"f", "z*w"},
                 {"grid", kSmallGrid}};
    const fs::path out2 = out_dir() / "sz_holo.json";
    REQUIRE(run("szego-iterate", holo, out2) == 0);
    rep = read_report(out2);
    CHECK(rep["iteration"]["converged"] == true);
    CHECK(rep["iteration"]["steps"].get<unsigned>() == 1);
    CHECK(rep["gap_to_reference"].get<double>() < 1e-9);
}

TEST_CASE("szego iterate maps grid resolution failures to exit 3") {
    // Degree 8 products alias on a 16-point fiber.
    json cfg = {{"degree", 8}, {"domain", kBall}, {"f", "abs2(z)"},
                {"grid", kSmallGrid}};
    std::string err;
    CHECK(run("szego-iterate", cfg, out_dir() / "sz_under.json", &err) == 3);
    CHECK_FALSE(err.empty());
}

TEST_CASE("bm check command compares the two routes") {
    json cfg = {{"corpus", json{{"count", 3}, {"max_degree", 4}, {"points", 2}}},
                {"domain", kBall},
                {"grid", kSmallGrid},
                {"n_directions", 64}};
    const fs::path out = out_dir() / "bm_corpus.json";
    REQUIRE(run("bm-check", cfg, out, nullptr, 5) == 0);

    json rep = read_report(out);
    REQUIRE(rep["point"].size() == 6);
    CHECK(rep["value_kernel"].size() == 6);
    CHECK(rep["value_averaged"].size() == 6);
    CHECK(rep["discrepancy"].size() == 6);
    CHECK(rep["max_discrepancy"].get<double>() < 1e-4);

    // Explicit deep points; the kernel quadrature needs a few cells of
    // boundary clearance before 1e-6 is realistic on this grid.
    json pts = json::array();
    pts.push_back(json::array({0.0, 0.0, 0.0, 0.0}));
    pts.push_back(json::array({0.2, 0.1, -0.1, 0.3}));
    json constant = {{"domain", kBall}, {"f", "1"}, {"grid", kSmallGrid},
                     {"n_directions", 64}, {"points", pts}};
    const fs::path out2 = out_dir() / "bm_const.json";
    REQUIRE(run("bm-check", constant, out2) == 0);
    rep = read_report(out2);
    REQUIRE(rep["point"].size() == 2);
    for (const json& v : rep["value_kernel"])
        CHECK(std::abs(cplx(v[0], v[1]) - cplx(1.0)) < 1e-6);
    for (const json& v : rep["value_averaged"])
        CHECK(std::abs(cplx(v[0], v[1]) - cplx(1.0)) < 1e-6);
}

TEST_CASE("bm check records the oracle gap of non CR data") {
    json cfg = {{"band_count", 4}, {"cr_oracle", true}, {"domain", kBall},
                {"f", "abs2(z)"}, {"grid", kSmallGrid}, {"n_directions", 64}};
    const fs::path out = out_dir() / "bm_abs2.json";
    REQUIRE(run("bm-check", cfg, out) == 0);
    json rep = read_report(out);
    // Slicewise extendible but not CR: the kernel route and the slice
    // extension stay visibly apart.
    CHECK(rep["cr_oracle"]["max_discrepancy"].get<double>() > 0.01);
    CHECK(rep["cr_oracle"]["discrepancies"].size() == 4);
}

TEST_CASE("identical config and seed give identical reports") {
    json cfg = {{"corpus", json{{"count", 2}, {"max_degree", 3}, {"points", 2}}},
                {"domain", kBall},
                {"grid", kSmallGrid},
                {"n_directions", 64}};
    const fs::path out1 = out_dir() / "det_a.json";
    const fs::path out2 = out_dir() / "det_b.json";
    REQUIRE(run("bm-check", cfg, out1, nullptr, 42) == 0);
    REQUIRE(run("bm-check", cfg, out2, nullptr, 42) == 0);
    CHECK(slurp(out1) == slurp(out2));

    // The report embeds the name of its CSV sibling, so byte comparison
    // requires recomputing into the same path.
    json sz = {{"degree", 3}, {"domain", kBall}, {"f", "abs2(z)+z*w"},
               {"grid", kSmallGrid}};
    const fs::path out3 = out_dir() / "det_c.json";
    const fs::path csv3 = out_dir() / "det_c_angles.csv";
    REQUIRE(run("szego-iterate", sz, out3) == 0);
    const std::string first = slurp(out3);
    const std::string first_csv = slurp(csv3);
    fs::remove(out3);
    fs::remove(csv3);
    REQUIRE(run("szego-iterate", sz, out3) == 0);
    CHECK(slurp(out3) == first);
    CHECK(slurp(csv3) == first_csv);
}

TEST_CASE("dispatch validates commands and config shapes") {
    std::string err;
    CHECK(run("frobnicate", json::object(), out_dir() / "x.json", &err) == 2);
    CHECK(err.find("unknown command") != std::string::npos);

    json no_f = {{"domain", kBall}};
    CHECK(run("crh-test", no_f, out_dir() / "x.json", &err) == 2);

    json bad_tol = {{"domain", kBall}, {"f", "z"}, {"tol", -1.0}};
    CHECK(run("szego-iterate", bad_tol, out_dir() / "x.json", &err) == 2);

    CHECK(run("crh-test", json::array(), out_dir() / "x.json", &err) == 2);

    json bad_kind = {{"domain", json{{"kind", "torus"}}}, {"f", "z"}};
    CHECK(run("crh-test", bad_kind, out_dir() / "x.json", &err) == 2);
    CHECK(err.find("torus") != std::string::npos);

    RunOptions opt;
    opt.out_path = (out_dir() / "x.json").string();
    opt.threads = 0;
    std::ostringstream err2;
    CHECK(run_command("crh-test", json{{"domain", kBall}, {"f", "z"}}, opt,
                      err2) == 2);
}

TEST_CASE("admissibility reports bounds without failing on bad specs") {
    json cfg = {{"domain", kEllipsoid}, {"n_max", 12}};
    const fs::path out = out_dir() / "adm_good.json";
    REQUIRE(run("admissibility", cfg, out) == 0);
    json rep = read_report(out);
    CHECK(rep["admissible"] == true);
    CHECK(rep["margin"].get<double>() == doctest::Approx(0.2));
    REQUIRE(rep["per_n"].size() == 12);
    CHECK(rep["margin_bound_holds"] == true);
    CHECK(rep["all_certified"] == true);
    for (const json& row : rep["per_n"]) {
        const double inv = row["inverse_norm"].get<double>();
        CHECK(inv <= 1.0 / 0.2 + 1e-9);
        CHECK(row["sigma_min"].get<double>() >= row["analytic_lower"].get<double>() - 1e-12);
    }

    // Inadmissible parameters are a valid query, answered in the report.
    json bad = {{"domain", json{{"a", 0.06}, {"b", 0.06}, {"epsilon", 0.1},
                                {"kind", "ellipsoid"}}}};
    const fs::path out2 = out_dir() / "adm_bad.json";
    REQUIRE(run("admissibility", bad, out2) == 0);
    rep = read_report(out2);
    CHECK(rep["admissible"] == false);
    CHECK(rep["reason"].get<std::string>().find("epsilon - |a| - |b|") !=
          std::string::npos);
    CHECK_FALSE(rep.contains("per_n"));
}

TEST_SUITE_END();
