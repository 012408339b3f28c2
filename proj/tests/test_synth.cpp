#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hemtkit/constants.hpp"
#include "hemtkit/errors.hpp"
#include "hemtkit/sweep.hpp"
#include "hemtkit/synth.hpp"

using namespace hemtkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hemtkit-synth-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

synth::CompactModelParams base_params() {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900.0;
    p.cg = 2e-7;
    p.width_um = 50.0;
    p.length_um = 1.0;
    p.ss_factor = 1.2;
    p.vdsat = 0.5;
    p.knee_order = 8;
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("deep-subthreshold log-slope matches eta*Vt*ln10") {
    const auto p = base_params();
    const double vt = constants::thermal_voltage(300.0);
    const double eta_vt = p.ss_factor * vt;
    const double v0 = p.vth - 10.0 * eta_vt;
    const double h = 1e-5;
    const double i_plus = synth::model_current(p, v0 + h, 1.0);
    const double i_minus = synth::model_current(p, v0 - h, 1.0);
    const double slope = (std::log10(i_plus) - std::log10(i_minus)) / (2.0 * h);
    const double ss = 1.0 / slope;  // V per decade
    CHECK(ss == doctest::Approx(eta_vt * std::log(10.0)).epsilon(1e-3));
    CHECK(p.ss_mV_per_decade() ==
          doctest::Approx(eta_vt * std::log(10.0) * 1000.0).epsilon(1e-12));
}

TEST_CASE("strong accumulation approaches the textbook linear-region law") {
    const auto p = base_params();
    const double vgs = p.vth + 2.0;  // ~64 eta*Vt overdrive
    const double vds = 0.002;        // far below vdsat
    const double i = synth::model_current(p, vgs, vds);
    const double expected =
        (p.width_um / p.length_um) * p.mu0 * p.cg * (vgs - p.vth) * vds;
    CHECK(i == doctest::Approx(expected).epsilon(5e-3));
}

TEST_CASE("model evaluation is deterministic") {
    const auto p = base_params();
    const double a = synth::model_current(p, -1.1, 0.37);
    const double b = synth::model_current(p, -1.1, 0.37);
    CHECK(a == b);
}

TEST_CASE("model_current is monotone non-decreasing in vgs and vds") {
    auto p = base_params();
    p.dibl_coeff = 0.005;
    p.r_series = 0.3;
    p.i_floor = 1e-9;
    for (int i = 0; i < 60; ++i) {
        const double vgs = p.vth - 0.4 + 0.05 * i;
        for (int j = 0; j + 1 < 40; ++j) {
            const double v1 = 0.08 * j, v2 = 0.08 * (j + 1);
            CHECK(synth::model_current(p, vgs, v2) >=
                  synth::model_current(p, vgs, v1));
        }
    }
    for (int j = 0; j < 40; ++j) {
        const double vds = 0.08 * j + 0.01;
        for (int i = 0; i + 1 < 60; ++i) {
            const double g1 = p.vth - 0.4 + 0.05 * i, g2 = g1 + 0.05;
            CHECK(synth::model_current(p, g2, vds) >=
                  synth::model_current(p, g1, vds));
        }
    }
}

TEST_CASE("model_capacitance midpoint and asymptotes") {
    const auto p = base_params();
    CHECK(synth::model_capacitance(p, p.vth) == doctest::Approx(p.cg / 2.0).epsilon(1e-14));
    CHECK(synth::model_capacitance(p, p.vth + 3.0) == doctest::Approx(p.cg).epsilon(1e-9));
    CHECK(synth::model_capacitance(p, p.vth - 3.0) < 1e-6 * p.cg);
}

TEST_CASE("model_capacitance is the derivative of the model's channel charge") {
    // q*ns at vds = 0: recompute from the current expression pieces.
    const auto p = base_params();
    const double vt = constants::thermal_voltage(300.0);
    const double eta_vt = p.ss_factor * vt;
    auto q_ns = [&](double vgs) {
        return eta_vt * p.cg * std::log1p(std::exp((vgs - p.vth) / eta_vt));
    };
    const double h = 1e-6;
    for (double vgs : {p.vth - 0.2, p.vth - 0.05, p.vth, p.vth + 0.1, p.vth + 0.8}) {
        const double fd = (q_ns(vgs + h) - q_ns(vgs - h)) / (2.0 * h);
        const double c = synth::model_capacitance(p, vgs);
        CHECK(std::abs(fd - c) <= 1e-6 * p.cg);
    }
}

TEST_CASE("fixture files for the measurement bias plan hold 10 + 11 + 1 curves") {
    TempDir dir;
    auto p = base_params();
    synth::SweepPlan plan;
    plan.transfer_vgs = {-2.2, -0.8, 71};
    for (int i = 1; i <= 10; ++i) plan.transfer_vds.push_back(0.01 * i);
    plan.output_vds = {0.0, 2.0, 101};
    for (int i = 0; i <= 10; ++i) plan.output_vgs.push_back(-2.0 + 0.2 * i);
    plan.cv_vgs = {-2.5, -0.5, 201};
    plan.cv_frequency_Hz = 1e6;

    const synth::FixtureFiles files = synth::generate_fixture(p, plan, dir.file("fx"));

    const SweepMetadata mt = load_metadata(files.meta_transfer);
    CHECK(mt.kind == SweepKind::Transfer);
    CHECK(ingest_sweep_file(files.transfer_csv, mt).curves.size() == 10);

    const SweepMetadata mo = load_metadata(files.meta_output);
    CHECK(ingest_sweep_file(files.output_csv, mo).curves.size() == 11);

    const SweepMetadata mc = load_metadata(files.meta_cv);
    CHECK(ingest_sweep_file(files.cv_csv, mc).curves.size() == 1);
    REQUIRE(mc.frequency_Hz.has_value());
    CHECK(*mc.frequency_Hz == 1e6);

    const synth::CompactModelParams truth = synth::read_params(files.truth_json);
    CHECK(truth.mu0 == p.mu0);
    CHECK(truth.vth == p.vth);
}

TEST_CASE("noiseless files equal direct model evaluation") {
    TempDir dir;
    auto p = base_params();
    synth::SweepPlan plan;
    plan.transfer_vgs = {-2.0, -1.0, 11};
    plan.transfer_vds = {0.05};
    plan.output_vds = {0.0, 1.0, 11};
    plan.output_vgs = {-1.0};
    plan.cv_vgs = {-2.0, -1.0, 11};
    const synth::FixtureFiles files = synth::generate_fixture(p, plan, dir.file("fx"));

    const SweepMetadata mt = load_metadata(files.meta_transfer);
    const SweepFamily fam = ingest_sweep_file(files.transfer_csv, mt);
    for (std::size_t i = 0; i < fam.curves[0].x.size(); ++i)
        CHECK(fam.curves[0].y[i] ==
              synth::model_current(p, fam.curves[0].x[i], 0.05));
}

TEST_CASE("the same seed reproduces noisy files byte for byte") {
    TempDir dir;
    auto p = base_params();
    p.noise_amplitude = 0.01;
    p.seed = 12345;
    synth::SweepPlan plan;
    plan.transfer_vgs = {-2.0, -1.0, 31};
    plan.transfer_vds = {0.05, 0.1};
    plan.output_vds = {0.0, 1.0, 21};
    plan.output_vgs = {-1.0};
    plan.cv_vgs = {-2.0, -1.0, 31};

    const auto a = synth::generate_fixture(p, plan, dir.file("a"));
    const auto b = synth::generate_fixture(p, plan, dir.file("b"));
    CHECK(slurp(a.transfer_csv) == slurp(b.transfer_csv));
    CHECK(slurp(a.output_csv) == slurp(b.output_csv));
    CHECK(slurp(a.cv_csv) == slurp(b.cv_csv));

    // Different seed changes the bytes.
    p.seed = 54321;
    const auto c = synth::generate_fixture(p, plan, dir.file("c"));
    CHECK(slurp(a.transfer_csv) != slurp(c.transfer_csv));
}

TEST_CASE("params JSON round-trips") {
    TempDir dir;
    auto p = base_params();
    p.dibl_coeff = 0.0025;
    p.r_series = 1.5;
    p.i_floor = 2e-8;
    p.seed = 99;
    const std::string path = dir.file("p.json");
    synth::write_params(p, path);
    const auto back = synth::read_params(path);
    CHECK(back.vth == p.vth);
    CHECK(back.mu0 == p.mu0);
    CHECK(back.cg == p.cg);
    CHECK(back.ss_factor == p.ss_factor);
    CHECK(back.vdsat == p.vdsat);
    CHECK(back.knee_order == p.knee_order);
    CHECK(back.r_series == p.r_series);
    CHECK(back.i_floor == p.i_floor);
    CHECK(back.dibl_coeff == p.dibl_coeff);
    CHECK(back.seed == p.seed);
}

TEST_CASE("invalid params are rejected") {
    auto p = base_params();
    p.ss_factor = 0.9;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = base_params();
    p.knee_order = 1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = base_params();
    p.dibl_coeff = -0.1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("paper fixture calibration is deterministic and hits its anchors") {
    const synth::PaperFixture a = synth::paper_fixture();
    const synth::PaperFixture b = synth::paper_fixture();
    CHECK(a.params.cg == b.params.cg);
    CHECK(a.params.vdsat == b.params.vdsat);
    CHECK(a.params.width_um == b.params.width_um);
    CHECK(a.params.mu0 == b.params.mu0);

    // Endpoint anchors are analytic: the top saturation curve must hit the
    // reported ON/OFF currents exactly.
    const double i_on = synth::model_current(a.params, a.plan_saturation.transfer_vgs.hi, 1.0);
    const double i_off = synth::model_current(a.params, a.plan_saturation.transfer_vgs.lo, 1.0);
    CHECK(i_on == doctest::Approx(1.9e-3).epsilon(1e-12));
    CHECK(i_off == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(a.params.ss_mV_per_decade() == doctest::Approx(80.0).epsilon(1e-12));
}
