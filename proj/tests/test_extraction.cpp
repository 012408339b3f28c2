#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hemtkit/constants.hpp"
#include "hemtkit/errors.hpp"
#include "hemtkit/extraction.hpp"
#include "hemtkit/synth.hpp"

using namespace hemtkit;

namespace {

const num::SmoothingSpec kSpec;  // default (7, 2)

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    v.back() = hi;
    return v;
}

SweepCurve transfer_curve(const std::vector<double>& x, const std::vector<double>& y,
                          double vds) {
    SweepCurve c;
    c.kind = SweepKind::Transfer;
    c.fixed_bias = vds;
    c.x = x;
    c.y = y;
    return c;
}

}  // namespace

TEST_CASE("gm of an affine transfer curve is flat at the conductance") {
    auto x = linspace(0.0, 1.0, 51);
    std::vector<double> y;
    for (double v : x) y.push_back(1e-3 * v);  // G = 1 mS
    const GmResult r = extract_gm(transfer_curve(x, y, 0.05), kSpec);
    for (double g : r.gm) CHECK(g == doctest::Approx(1e-3).epsilon(1e-10));
    CHECK(r.gm_peak == doctest::Approx(1e-3).epsilon(1e-10));
}

TEST_CASE("SS of a pure exponential is exact") {
    auto x = linspace(-2.0, -0.5, 151);
    std::vector<double> y;
    for (double v : x) y.push_back(1e-6 * std::pow(10.0, v / 0.1));
    const SsResult r = extract_ss(transfer_curve(x, y, 1.0), kSpec);
    CHECK(r.ss_mV_per_decade == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("SS of an ideal thermionic device reaches the 300 K limit") {
    const double vt = constants::thermal_voltage(300.0);
    auto x = linspace(-1.0, 0.0, 201);
    std::vector<double> y;
    for (double v : x) y.push_back(1e-12 * std::exp(v / vt));
    const SsResult r = extract_ss(transfer_curve(x, y, 1.0), kSpec);
    CHECK(r.ss_mV_per_decade ==
          doctest::Approx(vt * std::log(10.0) * 1000.0).epsilon(1e-4));
}

TEST_CASE("SS detection fails on a flat curve") {
    auto x = linspace(-1.0, 0.0, 31);
    std::vector<double> y(31, 1e-6);
    CHECK_THROWS_AS(extract_ss(transfer_curve(x, y, 1.0), kSpec), NumericError);
}

TEST_CASE("on/off currents are the sweep endpoints") {
    auto x = linspace(-2.0, 0.0, 21);
    std::vector<double> flat(21, 2e-3);
    const OnOffResult r = extract_on_off(transfer_curve(x, flat, 1.0));
    REQUIRE(r.ratio.has_value());
    CHECK(*r.ratio == doctest::Approx(1.0));

    // Derived case: synth endpoints equal direct model evaluation.
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.5;
    p.i_floor = 1e-6;
    synth::SweepPlan plan;
    plan.transfer_vgs = {-2.5, 0.0, 101};
    plan.transfer_vds = {0.5};
    const SweepFamily fam = synth::make_transfer_family(p, plan);
    const OnOffResult s = extract_on_off(fam.curves.front());
    CHECK(s.i_on == synth::model_current(p, 0.0, 0.5));
    CHECK(s.i_off == synth::model_current(p, -2.5, 0.5));

    // Non-positive off current: endpoints returned, ratio absent.
    std::vector<double> neg = flat;
    neg.front() = -1e-9;
    const OnOffResult n = extract_on_off(transfer_curve(x, neg, 1.0));
    CHECK_FALSE(n.ratio.has_value());
    CHECK(n.i_off == -1e-9);
}

TEST_CASE("C-V threshold: step response is located within one grid step") {
    auto x = linspace(-3.0, 0.0, 61);  // 50 mV steps
    std::vector<double> y;
    for (double v : x) y.push_back(v < -1.5 ? 1e-13 : 1e-12);
    SweepCurve c;
    c.kind = SweepKind::CV;
    c.x = x;
    c.y = y;
    const double vth = extract_vth_cv(c, kSpec);
    CHECK(std::abs(vth - (-1.5)) <= 0.051);
}

TEST_CASE("C-V threshold: logistic transition peaks exactly at its center") {
    auto x = linspace(-3.0, 0.0, 301);  // includes -1.5 exactly
    std::vector<double> y;
    for (double v : x) y.push_back(1e-13 + 1e-12 / (1.0 + std::exp(-(v + 1.5) / 0.05)));
    SweepCurve c;
    c.kind = SweepKind::CV;
    c.x = x;
    c.y = y;
    CHECK(extract_vth_cv(c, kSpec) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("C-V threshold requires a 2x rise") {
    auto x = linspace(-3.0, 0.0, 31);
    std::vector<double> y(31, 1e-12);
    y.back() = 1.5e-12;
    SweepCurve c;
    c.kind = SweepKind::CV;
    c.x = x;
    c.y = y;
    CHECK_THROWS_AS(extract_vth_cv(c, kSpec), NumericError);
}

TEST_CASE("charge integration: zero, constant, and logistic capacitance") {
    const DeviceGeometry geo{100.0, 1.0};
    SweepCurve c;
    c.kind = SweepKind::CV;
    c.x = linspace(-2.0, 0.0, 201);

    c.y.assign(201, 0.0);
    ChargeCurve q0 = integrate_charge(c, geo, 1e-4);
    for (double q : q0.q_C_cm2) CHECK(q == 0.0);

    c.y.assign(201, 1e-12);  // 1 pF over 2 V, area 1e-4 cm^2
    ChargeCurve qc = integrate_charge(c, geo, 1e-4);
    CHECK(qc.q_C_cm2.front() == 0.0);
    CHECK(qc.q_C_cm2.back() == doctest::Approx(2e-8).epsilon(1e-12));
    for (std::size_t i = 1; i < qc.q_C_cm2.size(); ++i)
        CHECK(qc.q_C_cm2[i] >= qc.q_C_cm2[i - 1]);

    // Logistic C(V): closed-form integral is s*ln((1+e^{(v-v0)/s})/(1+e^{(a-v0)/s})).
    const double c0 = 2e-12, v0 = -1.0, s = 0.07, a = -2.0;
    for (std::size_t i = 0; i < c.x.size(); ++i)
        c.y[i] = c0 / (1.0 + std::exp(-(c.x[i] - v0) / s));
    ChargeCurve ql = integrate_charge(c, geo, 1e-4);
    for (std::size_t i = 0; i < c.x.size(); i += 40) {
        const double exact = c0 * s *
                             (std::log1p(std::exp((c.x[i] - v0) / s)) -
                              std::log1p(std::exp((a - v0) / s))) / 1e-4;
        CHECK(ql.q_C_cm2[i] == doctest::Approx(exact).epsilon(2e-4));
    }

    CHECK_THROWS_AS(integrate_charge(c, geo, 0.0), ValidationError);
}

TEST_CASE("R_ON of a pure resistor output curve") {
    SweepFamily fam;
    SweepCurve c;
    c.kind = SweepKind::Output;
    c.fixed_bias = 0.0;
    c.x = linspace(0.0, 0.3, 31);
    for (double v : c.x) c.y.push_back(v / 100.0);  // 100 ohms
    fam.curves = {c};
    const RonResult r = extract_ron(fam, DeviceGeometry{1.0, 1.0});
    CHECK(r.ron_ohm == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.ron_ohm_um == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.ohmic_ok);
}

TEST_CASE("R_ON fit recovers the model's total resistance within 1%") {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.5;
    p.knee_order = 8;
    p.r_series = 1.0;
    synth::SweepPlan plan;
    plan.output_vds = {0.0, 0.12, 13};
    plan.output_vgs = {p.vth + 2.0};
    plan.transfer_vgs = {-2.0, 0.0, 11};
    plan.transfer_vds = {0.01};
    plan.cv_vgs = {-2.0, 0.0, 11};
    const SweepFamily out = synth::make_output_family(p, plan);
    const RonResult r = extract_ron(out, DeviceGeometry{p.width_um, p.length_um});

    // Small-signal oracle: channel conductance at vds -> 0 plus the series term.
    const double eta_vt = p.ss_factor * constants::thermal_voltage(300.0);
    const double x = 2.0 / eta_vt;
    const double g_ch = (p.width_um / p.length_um) * p.mu0 * p.cg * eta_vt *
                        std::log1p(std::exp(x));
    const double r_total = 1.0 / g_ch + p.r_series;
    CHECK(std::abs(r.ron_ohm - r_total) / r_total < 0.01);
    CHECK(r.ohmic_ok);
}

TEST_CASE("R_ON needs at least 3 ohmic samples") {
    SweepFamily fam;
    SweepCurve c;
    c.kind = SweepKind::Output;
    c.fixed_bias = 0.0;
    c.x = {0.0, 0.2, 0.4, 0.6};
    c.y = {0.0, 0.002, 0.004, 0.006};
    fam.curves = {c};
    CHECK_THROWS_AS(extract_ron(fam, DeviceGeometry{1.0, 1.0}), NumericError);
}

TEST_CASE("knee voltage of a hard piecewise-linear output curve") {
    SweepCurve c;
    c.kind = SweepKind::Output;
    c.fixed_bias = 0.0;
    c.x = linspace(0.0, 1.5, 151);  // 10 mV steps
    for (double v : c.x) c.y.push_back(v < 0.5 ? v : 0.5);
    const double knee = extract_vsat(c, kSpec);
    CHECK(std::abs(knee - 0.5) <= 0.031);  // within the smoothing footprint

    SweepCurve lin;
    lin.kind = SweepKind::Output;
    lin.fixed_bias = 0.0;
    lin.x = linspace(0.0, 1.0, 51);
    for (double v : lin.x) lin.y.push_back(v);
    CHECK_THROWS_AS(extract_vsat(lin, kSpec), NumericError);
}

TEST_CASE("knee voltage tracks the compact-model saturation parameter") {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.8;
    p.knee_order = 16;
    synth::SweepPlan plan;
    plan.output_vds = {0.0, 2.5, 251};
    plan.output_vgs = {p.vth + 2.0};
    plan.transfer_vgs = {-2.0, 0.0, 11};
    plan.transfer_vds = {0.01};
    plan.cv_vgs = {-2.0, 0.0, 11};
    const SweepFamily out = synth::make_output_family(p, plan);
    const double knee = extract_vsat(out.curves.front(), kSpec);

    // 10%-slope point of the knee function, in closed form.
    const double m = p.knee_order;
    const double analytic = p.vdsat * std::pow(std::pow(10.0, m / (m + 1.0)) - 1.0, 1.0 / m);
    CHECK(std::abs(knee - analytic) <= 0.021);          // within ~2 grid steps
    CHECK(std::abs(knee - p.vdsat) / p.vdsat <= 0.15);  // close to vdsat itself
}

TEST_CASE("transfer threshold: ideal linear-region law") {
    const double vt_true = -1.0, k = 5e-3, vds = 0.05;
    auto x = linspace(-2.0, 1.0, 301);
    std::vector<double> y;
    for (double v : x) y.push_back(v > vt_true ? k * (v - vt_true) * vds : 0.0);
    const VthTransferResult r = extract_vth_transfer(transfer_curve(x, y, vds), kSpec);
    // The smoothing window rounds the kink, biasing the tangent point by a
    // fraction of a grid step; the intercept itself stays within ~2 mV.
    CHECK(std::abs(r.intercept_V - vt_true) <= 2e-3);
    CHECK(r.correction_V == doctest::Approx(vds / 2.0));
    CHECK(std::abs(r.vth_V - (vt_true - vds / 2.0)) <= 2e-3);
}

TEST_CASE("transfer threshold recovers a synth device within 20 mV") {
    synth::CompactModelParams p;
    p.vth = -1.2;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.5;
    p.dibl_coeff = 0.005;
    synth::SweepPlan plan;
    plan.transfer_vgs = {p.vth - 0.45, p.vth + 2.0, 1226};
    plan.transfer_vds = {0.01};
    plan.output_vds = {0.0, 1.0, 11};
    plan.output_vgs = {0.0};
    plan.cv_vgs = {-2.0, 0.0, 11};
    const SweepFamily fam = synth::make_transfer_family(p, plan);
    const VthTransferResult r = extract_vth_transfer(fam.curves.front(), kSpec);
    CHECK(std::abs(r.vth_V - p.vth) <= 0.020);
}

TEST_CASE("DIBL of identical curves is zero") {
    auto x = linspace(-2.0, 0.0, 201);
    std::vector<double> y;
    for (double v : x) y.push_back(1e-6 * std::pow(10.0, (v + 1.5) / 0.08) + 1e-10);
    SweepCurve low = transfer_curve(x, y, 0.1);
    SweepCurve high = transfer_curve(x, y, 1.0);
    const DiblResult r = extract_dibl(low, high, kSpec, DeviceGeometry{50.0, 1.0});
    CHECK(std::abs(r.dibl_mV_per_V) < 1e-9);
}

TEST_CASE("DIBL recovers the built-in threshold shift within 2%") {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.3;
    p.knee_order = 8;
    p.dibl_coeff = 0.005;
    synth::SweepPlan plan;
    plan.transfer_vgs = {p.vth - 0.45, p.vth + 2.0, 1226};
    plan.transfer_vds = {1.5, 2.5};  // both deep in saturation
    plan.output_vds = {0.0, 1.0, 11};
    plan.output_vgs = {0.0};
    plan.cv_vgs = {-2.0, 0.0, 11};
    const SweepFamily fam = synth::make_transfer_family(p, plan);
    const DiblResult r = extract_dibl(fam.curves.front(), fam.curves.back(), kSpec,
                                      DeviceGeometry{p.width_um, p.length_um});
    CHECK(std::abs(r.dibl_mV_per_V - 5.0) / 5.0 < 0.02);
}

TEST_CASE("DIBL reports an uncrossed threshold") {
    auto x = linspace(-2.0, 0.0, 51);
    std::vector<double> y(51, 1e-12);  // far below 1 uA * W/L
    SweepCurve low = transfer_curve(x, y, 0.1);
    SweepCurve high = transfer_curve(x, y, 1.0);
    CHECK_THROWS_AS(extract_dibl(low, high, kSpec, DeviceGeometry{50.0, 1.0}),
                    NumericError);
}

TEST_CASE("mobility: direct formula inversion") {
    auto x = linspace(-1.0, 0.0, 5);
    std::vector<double> y(5, 10e-3);  // 10 mA
    SweepCurve c = transfer_curve(x, y, 0.1);
    ChargeCurve q;
    q.vgs = x;
    q.q_C_cm2.assign(5, 1e-6);
    const MobilityCurve mc = extract_mobility(c, q, DeviceGeometry{100.0, 1.0});
    for (double mu : mc.mu_cm2_Vs)
        CHECK(mu == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("mobility recovers the synth device's mu0 within 3%") {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 0.5;
    p.dibl_coeff = 0.005;
    p.r_series = 0.2;
    synth::SweepPlan plan;
    plan.transfer_vgs = {p.vth - 0.45, p.vth + 2.0, 1226};
    plan.transfer_vds = {0.01};
    plan.output_vds = {0.0, 1.0, 11};
    plan.output_vgs = {0.0};
    plan.cv_vgs = {p.vth - 0.6, p.vth + 2.1, 541};
    const SweepFamily tf = synth::make_transfer_family(p, plan);
    const SweepFamily cv = synth::make_cv_family(p, plan);
    const DeviceGeometry geo{p.width_um, p.length_um};
    const ChargeCurve qc = integrate_charge(cv.curves.front(), geo, geo.area_cm2());
    SweepCurve ct;
    ChargeCurve qa;
    align_transfer_and_charge(tf.curves.front(), qc, ct, qa);
    const MobilityCurve mc = extract_mobility(ct, qa, geo);
    CHECK(std::abs(mc.mu_peak - p.mu0) / p.mu0 < 0.03);
}

TEST_CASE("mobility trend is flat for a field-independent device") {
    synth::CompactModelParams p;
    p.vth = -1.5;
    p.mu0 = 900;
    p.cg = 2e-7;
    p.width_um = 50;
    p.length_um = 1;
    p.ss_factor = 1.2;
    p.vdsat = 50.0;  // no compression in the measured window
    p.dibl_coeff = 0.0;
    synth::SweepPlan plan;
    plan.transfer_vgs = {p.vth - 0.45, p.vth + 2.0, 613};
    plan.transfer_vds = {0.01, 0.05, 0.1};
    plan.output_vds = {0.0, 1.0, 11};
    plan.output_vgs = {0.0};
    plan.cv_vgs = {p.vth - 0.6, p.vth + 2.1, 541};
    const SweepFamily tf = synth::make_transfer_family(p, plan);
    const SweepFamily cv = synth::make_cv_family(p, plan);
    const DeviceGeometry geo{p.width_um, p.length_um};
    const ChargeCurve qc = integrate_charge(cv.curves.front(), geo, geo.area_cm2());
    const auto trend = mobility_bias_trend(tf, qc, geo);
    REQUIRE(trend.size() == 3);
    for (const auto& [vds, mu] : trend)
        CHECK(std::abs(mu - trend.front().second) / trend.front().second < 0.01);

    // Degenerate single-curve family.
    SweepFamily single;
    single.curves = {tf.curves.front()};
    CHECK(mobility_bias_trend(single, qc, geo).size() == 1);
}

TEST_CASE("current-scaling covariance") {
    const synth::PaperFixture fx = synth::paper_fixture();
    synth::SweepPlan plan = fx.plan_linear;
    plan.transfer_vds = {0.1};
    const SweepFamily fam = synth::make_transfer_family(fx.params, plan);
    const SweepFamily out = synth::make_output_family(fx.params, plan);
    const DeviceGeometry geo{fx.params.width_um, fx.params.length_um};

    const double alpha = 3.7;
    SweepCurve scaled = fam.curves.front();
    for (double& v : scaled.y) v *= alpha;
    SweepFamily out_scaled = out;
    for (auto& c : out_scaled.curves)
        for (double& v : c.y) v *= alpha;

    const GmResult gm0 = extract_gm(fam.curves.front(), kSpec);
    const GmResult gm1 = extract_gm(scaled, kSpec);
    CHECK(gm1.gm_peak == doctest::Approx(alpha * gm0.gm_peak).epsilon(1e-12));

    const SsResult ss0 = extract_ss(fam.curves.front(), kSpec);
    const SsResult ss1 = extract_ss(scaled, kSpec);
    CHECK(ss1.ss_mV_per_decade ==
          doctest::Approx(ss0.ss_mV_per_decade).epsilon(1e-12));

    const VthTransferResult vt0 = extract_vth_transfer(fam.curves.front(), kSpec);
    const VthTransferResult vt1 = extract_vth_transfer(scaled, kSpec);
    CHECK(vt1.vth_V == doctest::Approx(vt0.vth_V).epsilon(1e-12));

    const RonResult r0 = extract_ron(out, geo);
    const RonResult r1 = extract_ron(out_scaled, geo);
    CHECK(r1.ron_ohm == doctest::Approx(r0.ron_ohm / alpha).epsilon(1e-12));

    const double k0 = extract_vsat(out.curves.back(), kSpec);
    const double k1 = extract_vsat(out_scaled.curves.back(), kSpec);
    CHECK(k0 == k1);
}

TEST_CASE("current scaling leaves DIBL unchanged on exponential curves") {
    // Constant-current thresholds shift equally on both curves only when the
    // crossings sit on a common exponential law; assert exactness there.
    auto x = linspace(-2.0, -0.5, 301);
    std::vector<double> y_low, y_high;
    for (double v : x) {
        y_low.push_back(1e-3 * std::pow(10.0, (v + 1.45) / 0.08));
        y_high.push_back(1e-3 * std::pow(10.0, (v + 1.4545) / 0.08));
    }
    SweepCurve low = transfer_curve(x, y_low, 0.1);
    SweepCurve high = transfer_curve(x, y_high, 1.0);
    const DeviceGeometry geo{50.0, 1.0};
    const DiblResult d0 = extract_dibl(low, high, kSpec, geo);
    for (double& v : low.y) v *= 2.0;
    for (double& v : high.y) v *= 2.0;
    const DiblResult d1 = extract_dibl(low, high, kSpec, geo);
    CHECK(d1.dibl_mV_per_V == doctest::Approx(d0.dibl_mV_per_V).epsilon(1e-9));
    CHECK(d0.dibl_mV_per_V == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("voltage-shift covariance") {
    const synth::PaperFixture fx = synth::paper_fixture();
    synth::SweepPlan plan = fx.plan_linear;
    plan.transfer_vds = {0.05};
    const SweepFamily fam = synth::make_transfer_family(fx.params, plan);
    const double delta = 0.3;
    SweepCurve shifted = fam.curves.front();
    for (double& v : shifted.x) v += delta;

    const VthTransferResult vt0 = extract_vth_transfer(fam.curves.front(), kSpec);
    const VthTransferResult vt1 = extract_vth_transfer(shifted, kSpec);
    CHECK(vt1.vth_V == doctest::Approx(vt0.vth_V + delta).epsilon(1e-10));

    const SsResult ss0 = extract_ss(fam.curves.front(), kSpec);
    const SsResult ss1 = extract_ss(shifted, kSpec);
    CHECK(ss1.ss_mV_per_decade ==
          doctest::Approx(ss0.ss_mV_per_decade).epsilon(1e-10));

    const GmResult gm0 = extract_gm(fam.curves.front(), kSpec);
    const GmResult gm1 = extract_gm(shifted, kSpec);
    CHECK(gm1.gm_peak == doctest::Approx(gm0.gm_peak).epsilon(1e-10));
}

TEST_CASE("report entries enforce units and uniqueness") {
    ExtractionReport rep;
    rep.device_id = "dut";
    rep.add({"vth_cv", -1.5, "V", "cv-max-slope", {}, {}, std::nullopt});
    CHECK_THROWS_AS(
        rep.add({"vth_cv", -1.4, "V", "cv-max-slope", {}, {}, std::nullopt}),
        ValidationError);
    CHECK_THROWS_AS(
        rep.add({"r_on_raw", 2.0, "ohm", "fit", {}, {}, std::nullopt}),
        ValidationError);  // "ohm" alone is not an allowed unit
}
