#include "hemtkit/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hemtkit/errors.hpp"

namespace hemtkit {

using num::SmoothingSpec;

GmResult extract_gm(const SweepCurve& curve, const SmoothingSpec& spec) {
    curve.validate();
    if (curve.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_gm expects a transfer curve");

    const std::vector<double> ismooth = num::smooth(curve.y, spec);
    GmResult r;
    r.gm = num::derivative(curve.x, ismooth);
    const num::PeakLocation peak = num::argmax_smoothed(curve.x, r.gm, spec);
    r.gm_peak = peak.y_max;
    r.vgs_at_peak = peak.x_at_max;
    r.peak_index = peak.index;
    return r;
}

SsResult extract_ss(const SweepCurve& curve, const SmoothingSpec& spec,
                    double noise_floor_factor, double ceiling_fraction) {
    curve.validate();
    if (curve.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_ss expects a transfer curve");

    const std::size_t n = curve.x.size();
    std::vector<double> logi(n);
    double i_min = std::numeric_limits<double>::infinity();
    double i_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(curve.y[i]);
        i_min = std::min(i_min, a);
        i_max = std::max(i_max, a);
        logi[i] = std::log10(std::max(a, 1e-300));
    }
    const double floor = noise_floor_factor * i_min;
    const double ceiling = ceiling_fraction * i_max;

    const std::vector<double> logi_s = num::smooth(logi, spec);
    std::vector<double> slope = num::derivative(curve.x, logi_s);
    slope = num::smooth(slope, spec);  // stabilizes the log-slope on noisy data

    // Maximal contiguous run with positive log-slope and current inside
    // [floor, ceiling].
    auto qualifies = [&](std::size_t i) {
        const double a = std::abs(curve.y[i]);
        return slope[i] > 0.0 && a >= floor && a <= ceiling;
    };
    std::size_t best_lo = 0, best_len = 0, run_lo = 0, run_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (qualifies(i)) {
            if (run_len == 0) run_lo = i;
            ++run_len;
            if (run_len > best_len) { best_len = run_len; best_lo = run_lo; }
        } else {
            run_len = 0;
        }
    }
    if (best_len < 4)
        throw NumericError("NoSubthresholdRegion",
                           "fewer than 4 qualifying subthreshold samples");

    SsResult r;
    double best_ss = std::numeric_limits<double>::infinity();
    for (std::size_t i = best_lo; i < best_lo + best_len; ++i) {
        const double ss = 1000.0 / slope[i];  // mV per decade
        if (ss < best_ss) {
            best_ss = ss;
            r.slope_dec_per_V = slope[i];
        }
    }
    r.ss_mV_per_decade = best_ss;
    r.window_lo_V = curve.x[best_lo];
    r.window_hi_V = curve.x[best_lo + best_len - 1];
    return r;
}

OnOffResult extract_on_off(const SweepCurve& curve) {
    curve.validate();
    if (curve.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_on_off expects a transfer curve");
    OnOffResult r;
    r.i_off = curve.y.front();
    r.i_on = curve.y.back();
    r.vgs_off = curve.x.front();
    r.vgs_on = curve.x.back();
    if (r.i_off > 0.0) r.ratio = r.i_on / r.i_off;
    return r;
}

double extract_vth_cv(const SweepCurve& curve, const SmoothingSpec& spec) {
    curve.validate();
    if (curve.kind != SweepKind::CV)
        throw ValidationError("WrongKind", "extract_vth_cv expects a C-V curve");
    const double c_min = *std::min_element(curve.y.begin(), curve.y.end());
    const double c_max = *std::max_element(curve.y.begin(), curve.y.end());
    if (!(c_max >= 2.0 * c_min) || c_max <= 0.0)
        throw NumericError("FlatCapacitance", "capacitance rise below 2x");

    const std::vector<double> cs = num::smooth(curve.y, spec);
    const std::vector<double> dc = num::derivative(curve.x, cs);
    return num::argmax_smoothed(curve.x, dc, spec).x_at_max;
}

ChargeCurve integrate_charge(const SweepCurve& curve, const DeviceGeometry& geometry,
                             double area_cm2) {
    curve.validate();
    geometry.validate();
    if (curve.kind != SweepKind::CV)
        throw ValidationError("WrongKind", "integrate_charge expects a C-V curve");
    if (!(area_cm2 > 0.0))
        throw ValidationError("NonPositiveArea", "area must be positive");

    ChargeCurve qc;
    qc.vgs = curve.x;
    qc.q_C_cm2 = num::cumtrapz(curve.x, curve.y);
    for (double& q : qc.q_C_cm2) q /= area_cm2;
    return qc;
}

RonResult extract_ron(const SweepFamily& family, const DeviceGeometry& geometry,
                      double linear_cap_V) {
    family.validate();
    geometry.validate();
    if (family.curves.front().kind != SweepKind::Output)
        throw ValidationError("WrongKind", "extract_ron expects output curves");

    const SweepCurve& top = family.curves.back();  // highest V_GS
    std::size_t hi = 0;
    while (hi < top.x.size() && top.x[hi] <= linear_cap_V) ++hi;
    if (hi < 3)
        throw NumericError("NoLinearRegion",
                           "fewer than 3 samples at V_DS <= linear cap");

    const num::LinFit fit = num::linfit(top.x, top.y, 0, hi);
    if (!(fit.slope > 0.0))
        throw NumericError("NoLinearRegion", "non-positive ohmic slope");

    RonResult r;
    r.ron_ohm = 1.0 / fit.slope;
    r.ron_ohm_um = r.ron_ohm * geometry.width_um;
    r.vgs_used = top.fixed_bias;
    r.intercept_A = fit.intercept;
    r.rms_residual_A = fit.rms_residual;
    r.n_fit = static_cast<int>(hi);
    double i_fit_max = 0.0;
    for (std::size_t i = 0; i < hi; ++i)
        i_fit_max = std::max(i_fit_max, std::abs(top.y[i]));
    r.ohmic_ok = std::abs(fit.intercept) < 0.05 * i_fit_max;
    return r;
}

double extract_vsat(const SweepCurve& curve, const SmoothingSpec& spec) {
    curve.validate();
    if (curve.kind != SweepKind::Output)
        throw ValidationError("WrongKind", "extract_vsat expects an output curve");

    const std::vector<double> ismooth = num::smooth(curve.y, spec);
    const std::vector<double> g = num::derivative(curve.x, ismooth);
    const double g0 = (g[0] + g[1] + g[2]) / 3.0;
    if (!(g0 > 0.0))
        throw NumericError("NoSaturation", "initial output slope is not positive");
    const double threshold = 0.1 * g0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] <= threshold) return curve.x[i];
    throw NumericError("NoSaturation", "slope never falls to 10% of its initial value");
}

VthTransferResult extract_vth_transfer(const SweepCurve& curve,
                                       const SmoothingSpec& spec) {
    curve.validate();
    if (curve.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_vth_transfer expects a transfer curve");

    const std::vector<double> ismooth = num::smooth(curve.y, spec);
    const GmResult gm = extract_gm(curve, spec);
    if (!(gm.gm_peak > 0.0))
        throw NumericError("NoGmPeak", "transconductance peak is not positive");

    VthTransferResult r;
    r.gm_peak_S = gm.gm_peak;
    r.vgs_at_gm_peak = gm.vgs_at_peak;
    const double i_at_peak = ismooth[gm.peak_index];
    r.intercept_V = gm.vgs_at_peak - i_at_peak / gm.gm_peak;
    r.correction_V = curve.fixed_bias / 2.0;
    r.vth_V = r.intercept_V - r.correction_V;
    return r;
}

namespace {

// V_GS where the (smoothed) current crosses i_crit, interpolated in
// log-current space.
double constant_current_crossing(const SweepCurve& curve, const SmoothingSpec& spec,
                                 double i_crit) {
    const std::size_t n = curve.x.size();
    std::vector<double> logi(n);
    for (std::size_t i = 0; i < n; ++i)
        logi[i] = std::log10(std::max(std::abs(curve.y[i]), 1e-300));
    const std::vector<double> ls = num::smooth(logi, spec);
    const double target = std::log10(i_crit);

    for (std::size_t i = 1; i < n; ++i) {
        const bool below = ls[i - 1] < target;
        const bool above = ls[i] >= target;
        if (below && above) {
            const double t = (target - ls[i - 1]) / (ls[i] - ls[i - 1]);
            return curve.x[i - 1] + t * (curve.x[i] - curve.x[i - 1]);
        }
    }
    throw NumericError("ThresholdNotCrossed",
                       "curve never crosses the constant-current threshold");
}

}  // namespace

DiblResult extract_dibl(const SweepCurve& low, const SweepCurve& high,
                        const SmoothingSpec& spec, const DeviceGeometry& geometry) {
    low.validate();
    high.validate();
    geometry.validate();
    if (low.kind != SweepKind::Transfer || high.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_dibl expects transfer curves");
    if (!(low.fixed_bias < high.fixed_bias))
        throw ValidationError("BadBiasPair", "low V_DS must be below high V_DS");

    DiblResult r;
    r.i_crit_A = 1e-6 * geometry.width_um / geometry.length_um;
    r.vth_low_V = constant_current_crossing(low, spec, r.i_crit_A);
    r.vth_high_V = constant_current_crossing(high, spec, r.i_crit_A);
    r.dibl_mV_per_V = (r.vth_low_V - r.vth_high_V) /
                      (high.fixed_bias - low.fixed_bias) * 1000.0;
    return r;
}

MobilityCurve extract_mobility(const SweepCurve& curve, const ChargeCurve& charge,
                               const DeviceGeometry& geometry) {
    curve.validate();
    geometry.validate();
    if (curve.kind != SweepKind::Transfer)
        throw ValidationError("WrongKind", "extract_mobility expects a transfer curve");
    if (curve.x != charge.vgs)
        throw ValidationError("ChargeCurveMismatch",
                              "transfer and charge curves must share the V_GS grid");
    if (!(curve.fixed_bias > 0.0))
        throw ValidationError("BadBias", "mobility needs a positive V_DS");

    double q_max = 0.0;
    for (double q : charge.q_C_cm2) q_max = std::max(q_max, q);
    const double guard = 0.01 * q_max;

    // W, L in cm so mu comes out in cm^2/(V*s).
    const double w_cm = geometry.width_um * 1e-4;
    const double l_cm = geometry.length_um * 1e-4;

    MobilityCurve mc;
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        const double q = charge.q_C_cm2[i];
        if (q <= guard) continue;
        mc.vgs.push_back(curve.x[i]);
        mc.mu_cm2_Vs.push_back(curve.y[i] * l_cm / (w_cm * q * curve.fixed_bias));
    }
    if (mc.vgs.empty())
        throw NumericError("AllPointsGuarded", "no samples above the charge guard");

    std::size_t best = 0;
    for (std::size_t i = 1; i < mc.mu_cm2_Vs.size(); ++i)
        if (mc.mu_cm2_Vs[i] > mc.mu_cm2_Vs[best]) best = i;
    mc.mu_peak = mc.mu_cm2_Vs[best];
    mc.vgs_at_peak = mc.vgs[best];
    return mc;
}

std::vector<std::pair<double, double>> mobility_bias_trend(
    const SweepFamily& family, const ChargeCurve& charge,
    const DeviceGeometry& geometry, double linear_cap_V) {
    family.validate();
    std::vector<std::pair<double, double>> out;
    for (const auto& c : family.curves) {
        if (c.fixed_bias > linear_cap_V) continue;
        SweepCurve ct;
        ChargeCurve qa;
        align_transfer_and_charge(c, charge, ct, qa);
        const MobilityCurve mc = extract_mobility(ct, qa, geometry);
        out.emplace_back(c.fixed_bias, mc.mu_peak);
    }
    if (out.empty())
        throw ValidationError("NoLinearCurves", "no transfer curves in the linear region");
    std::sort(out.begin(), out.end());
    return out;
}

void align_transfer_and_charge(const SweepCurve& transfer, const ChargeCurve& charge,
                               SweepCurve& transfer_out, ChargeCurve& charge_out) {
    const double lo = std::max(transfer.x.front(), charge.vgs.front());
    const double hi = std::min(transfer.x.back(), charge.vgs.back());
    if (!(lo < hi))
        throw ValidationError("NoOverlap", "transfer and charge grids do not overlap");

    std::set<double> grid;
    for (double v : transfer.x)
        if (v >= lo && v <= hi) grid.insert(v);
    for (double v : charge.vgs)
        if (v >= lo && v <= hi) grid.insert(v);
    if (grid.size() < 3)
        throw ValidationError("NoOverlap", "common grid has fewer than 3 samples");

    transfer_out = transfer;
    transfer_out.x.assign(grid.begin(), grid.end());
    transfer_out.y.clear();
    charge_out.vgs = transfer_out.x;
    charge_out.q_C_cm2.clear();
    for (double v : transfer_out.x) {
        transfer_out.y.push_back(interp_linear(transfer.x, transfer.y, v));
        charge_out.q_C_cm2.push_back(interp_linear(charge.vgs, charge.q_C_cm2, v));
    }
}

// ---------------------------------------------------------------------------
// Report builders

namespace {

std::map<std::string, double> vds_cond(double vds) { return {{"vds_V", vds}}; }

template <typename Fn>
void guarded(ExtractionReport& report, const std::string& name,
             const std::map<std::string, double>& conditions, Fn&& fn) {
    try {
        fn();
    } catch (const NumericError& e) {
        ReportEntry entry;
        entry.name = name;
        entry.conditions = conditions;
        entry.error = e.code();
        report.add(std::move(entry));
    }
}

}  // namespace

void report_transfer_family(const SweepFamily& family, const SweepMetadata& meta,
                            const ExtractionOptions& opt, ExtractionReport& report) {
    family.validate();
    for (const auto& c : family.curves) {
        const auto cond = vds_cond(c.fixed_bias);

        guarded(report, "gm_peak", cond, [&] {
            const GmResult gm = extract_gm(c, opt.smoothing);
            report.add({"gm_peak", gm.gm_peak, "S", "smoothed-derivative-peak", cond,
                        {{"vgs_at_peak_V", gm.vgs_at_peak}}, std::nullopt});
        });

        guarded(report, "ss", cond, [&] {
            const SsResult ss = extract_ss(c, opt.smoothing);
            report.add({"ss", ss.ss_mV_per_decade, "mV/decade", "min-reciprocal-log-slope",
                        cond,
                        {{"window_lo_V", ss.window_lo_V},
                         {"window_hi_V", ss.window_hi_V},
                         {"slope_dec_per_V", ss.slope_dec_per_V}},
                        std::nullopt});
        });

        {
            const OnOffResult oo = extract_on_off(c);
            report.add({"i_on", oo.i_on, "A", "sweep-endpoint", cond,
                        {{"vgs_V", oo.vgs_on}}, std::nullopt});
            report.add({"i_off", oo.i_off, "A", "sweep-endpoint", cond,
                        {{"vgs_V", oo.vgs_off}}, std::nullopt});
            if (oo.ratio) {
                report.add({"on_off_ratio", *oo.ratio, "dimensionless", "endpoint-quotient",
                            cond, {}, std::nullopt});
            } else {
                ReportEntry entry;
                entry.name = "on_off_ratio";
                entry.conditions = cond;
                entry.error = "NonPositiveIOff";
                report.add(std::move(entry));
            }
        }

        if (c.fixed_bias <= opt.linear_cap_V + 1e-12) {
            guarded(report, "vth_transfer", cond, [&] {
                const VthTransferResult vt = extract_vth_transfer(c, opt.smoothing);
                report.add({"vth_transfer", vt.vth_V, "V", "lin-extrap-maxgm", cond,
                            {{"intercept_V", vt.intercept_V},
                             {"drain_correction_V", vt.correction_V},
                             {"gm_peak_S", vt.gm_peak_S},
                             {"vgs_at_gm_peak_V", vt.vgs_at_gm_peak}},
                            std::nullopt});
            });
        }
    }
    (void)meta;
}

void report_output_family(const SweepFamily& family, const SweepMetadata& meta,
                          const ExtractionOptions& opt, ExtractionReport& report) {
    family.validate();
    const SweepCurve& top = family.curves.back();
    const std::map<std::string, double> cond{{"vgs_V", top.fixed_bias}};

    guarded(report, "r_on", cond, [&] {
        const RonResult ron = extract_ron(family, meta.geometry, opt.linear_cap_V);
        report.add({"r_on", ron.ron_ohm_um, "ohm·um", "ohmic-region-fit", cond,
                    {{"r_on_ohm", ron.ron_ohm},
                     {"intercept_A", ron.intercept_A},
                     {"rms_residual_A", ron.rms_residual_A},
                     {"ohmic_ok", ron.ohmic_ok ? 1.0 : 0.0},
                     {"n_fit", static_cast<double>(ron.n_fit)}},
                    std::nullopt});
    });

    guarded(report, "v_sat", cond, [&] {
        const double knee = extract_vsat(top, opt.smoothing);
        report.add({"v_sat", knee, "V", "knee-10pct-slope", cond, {}, std::nullopt});
    });
}

void report_cv_curve(const SweepFamily& family, const SweepMetadata& meta,
                     const ExtractionOptions& opt, ExtractionReport& report,
                     ChargeCurve* charge_out) {
    family.validate();
    const SweepCurve& cv = family.curves.front();

    guarded(report, "vth_cv", {}, [&] {
        const double vth = extract_vth_cv(cv, opt.smoothing);
        report.add({"vth_cv", vth, "V", "cv-max-slope", {}, {}, std::nullopt});
    });

    const ChargeCurve qc = integrate_charge(cv, meta.geometry, meta.geometry.area_cm2());
    report.add({"sheet_charge_max", qc.q_C_cm2.back(), "C/cm^2", "cv-integration",
                {}, {{"vgs_V", qc.vgs.back()}}, std::nullopt});
    if (charge_out) *charge_out = qc;
}

void report_mobility(const SweepFamily& transfer, const SweepFamily& cv,
                     const SweepMetadata& meta, const ExtractionOptions& opt,
                     ExtractionReport& report,
                     std::vector<MobilityCurve>* curves_out,
                     std::vector<double>* curve_vds_out) {
    transfer.validate();
    cv.validate();
    const ChargeCurve qc =
        integrate_charge(cv.curves.front(), meta.geometry, meta.geometry.area_cm2());

    for (const auto& c : transfer.curves) {
        if (c.fixed_bias > opt.linear_cap_V + 1e-12) continue;
        const auto cond = vds_cond(c.fixed_bias);
        guarded(report, "mu_peak", cond, [&] {
            SweepCurve ct;
            ChargeCurve qa;
            align_transfer_and_charge(c, qc, ct, qa);
            const MobilityCurve mc = extract_mobility(ct, qa, meta.geometry);
            report.add({"mu_peak", mc.mu_peak, "cm^2/(V·s)", "transconductance-charge",
                        cond, {{"vgs_at_peak_V", mc.vgs_at_peak}}, std::nullopt});
            if (curves_out) {
                curves_out->push_back(mc);
                if (curve_vds_out) curve_vds_out->push_back(c.fixed_bias);
            }
        });
    }
}

void report_dibl(const SweepFamily& family, const SweepMetadata& meta,
                 double vds_low, double vds_high, const ExtractionOptions& opt,
                 ExtractionReport& report) {
    const SweepCurve& low = family.curve_with_fixed_bias(vds_low, 1e-9);
    const SweepCurve& high = family.curve_with_fixed_bias(vds_high, 1e-9);
    const std::map<std::string, double> cond{{"vds_low_V", vds_low},
                                             {"vds_high_V", vds_high}};
    guarded(report, "dibl", cond, [&] {
        const DiblResult d = extract_dibl(low, high, opt.smoothing, meta.geometry);
        report.add({"dibl", d.dibl_mV_per_V, "mV/V", "constant-current", cond,
                    {{"vth_low_V", d.vth_low_V},
                     {"vth_high_V", d.vth_high_V},
                     {"i_crit_A", d.i_crit_A}},
                    std::nullopt});
    });
}

}  // namespace hemtkit
