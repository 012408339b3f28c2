#pragma once

#include <optional>
#include <vector>

#include "hemtkit/numerics.hpp"
#include "hemtkit/report.hpp"
#include "hemtkit/sweep.hpp"

namespace hemtkit {

// Transconductance gm = dI_D/dV_GS of a transfer curve, computed as the
// derivative of the smoothed current; the peak is located on the smoothed
// gm curve.
struct GmResult {
    std::vector<double> gm;     // siemens, one per grid sample
    double gm_peak = 0.0;       // siemens
    double vgs_at_peak = 0.0;   // volts
    std::size_t peak_index = 0;
};
GmResult extract_gm(const SweepCurve& curve, const num::SmoothingSpec& spec);

// Subthreshold swing: minimum reciprocal log10-slope over the auto-detected
// subthreshold window (current between 3x the minimum |I_D| and 10% of the
// curve maximum, log-slope positive).
struct SsResult {
    double ss_mV_per_decade = 0.0;
    double window_lo_V = 0.0;
    double window_hi_V = 0.0;
    double slope_dec_per_V = 0.0;  // log-slope at the reported point
};
SsResult extract_ss(const SweepCurve& curve, const num::SmoothingSpec& spec,
                    double noise_floor_factor = 3.0, double ceiling_fraction = 0.1);

// Sweep-endpoint currents. ratio is absent when I_OFF <= 0.
struct OnOffResult {
    double i_on = 0.0;    // amps, at max V_GS
    double i_off = 0.0;   // amps, at min V_GS
    double vgs_on = 0.0;
    double vgs_off = 0.0;
    std::optional<double> ratio;
};
OnOffResult extract_on_off(const SweepCurve& curve);

// Threshold from C-V: abscissa of the maximum of the smoothed dC/dV_GS.
// Requires at least a 2x rise of C across the sweep.
double extract_vth_cv(const SweepCurve& curve, const num::SmoothingSpec& spec);

// Channel charge per area from C-V integration: Q(V) = (1/area) * int C dV,
// zero at the sweep start.
struct ChargeCurve {
    std::vector<double> vgs;       // volts
    std::vector<double> q_C_cm2;   // C/cm^2
};
ChargeCurve integrate_charge(const SweepCurve& curve, const DeviceGeometry& geometry,
                             double area_cm2);

// ON-resistance from the highest-V_GS output curve: OLS fit of I_D vs V_DS
// over the ohmic samples (V_DS <= cap). ohmic_ok is false when the fit
// intercept exceeds 5% of the maximum fitted current.
struct RonResult {
    double ron_ohm_um = 0.0;
    double ron_ohm = 0.0;
    double vgs_used = 0.0;
    double intercept_A = 0.0;
    double rms_residual_A = 0.0;
    bool ohmic_ok = true;
    int n_fit = 0;
};
RonResult extract_ron(const SweepFamily& family, const DeviceGeometry& geometry,
                      double linear_cap_V = 0.1);

// Knee voltage: smallest V_DS where the smoothed output slope falls to 10%
// of its average over the first three samples.
double extract_vsat(const SweepCurve& curve, const num::SmoothingSpec& spec);

// Threshold from the transfer curve: tangent to the smoothed I_D at the
// max-gm point, V-intercept minus fixed_bias/2.
struct VthTransferResult {
    double vth_V = 0.0;
    double intercept_V = 0.0;     // tangent V-intercept before correction
    double correction_V = 0.0;    // fixed_bias / 2
    double gm_peak_S = 0.0;
    double vgs_at_gm_peak = 0.0;
};
VthTransferResult extract_vth_transfer(const SweepCurve& curve,
                                       const num::SmoothingSpec& spec);

// Drain-induced barrier lowering from two transfer curves via
// constant-current thresholds at I_crit = 1 uA * (W/L).
struct DiblResult {
    double dibl_mV_per_V = 0.0;
    double vth_low_V = 0.0;
    double vth_high_V = 0.0;
    double i_crit_A = 0.0;
};
DiblResult extract_dibl(const SweepCurve& low, const SweepCurve& high,
                        const num::SmoothingSpec& spec, const DeviceGeometry& geometry);

// Field-effect mobility mu_e(V_GS) = I_D*L / (W*Q*V_DS), evaluated where
// Q exceeds 1% of its maximum. Curves must already share the V_GS grid.
struct MobilityCurve {
    std::vector<double> vgs;           // guarded grid
    std::vector<double> mu_cm2_Vs;
    double mu_peak = 0.0;
    double vgs_at_peak = 0.0;
};
MobilityCurve extract_mobility(const SweepCurve& curve, const ChargeCurve& charge,
                               const DeviceGeometry& geometry);

// Applies extract_mobility per linear-region transfer curve; pairs sorted
// by V_DS ascending.
std::vector<std::pair<double, double>> mobility_bias_trend(
    const SweepFamily& families, const ChargeCurve& charge,
    const DeviceGeometry& geometry, double linear_cap_V = 0.1 + 1e-12);

// ---------------------------------------------------------------------------
// Report builders used by the CLI: run every applicable extraction on a
// family and collect entries (failures become error-marked entries).

struct ExtractionOptions {
    num::SmoothingSpec smoothing;
    double linear_cap_V = 0.1;
};

void report_transfer_family(const SweepFamily& family, const SweepMetadata& meta,
                            const ExtractionOptions& opt, ExtractionReport& report);
void report_output_family(const SweepFamily& family, const SweepMetadata& meta,
                          const ExtractionOptions& opt, ExtractionReport& report);
void report_cv_curve(const SweepFamily& family, const SweepMetadata& meta,
                     const ExtractionOptions& opt, ExtractionReport& report,
                     ChargeCurve* charge_out = nullptr);
void report_mobility(const SweepFamily& transfer, const SweepFamily& cv,
                     const SweepMetadata& meta, const ExtractionOptions& opt,
                     ExtractionReport& report,
                     std::vector<MobilityCurve>* curves_out = nullptr,
                     std::vector<double>* curve_vds_out = nullptr);
void report_dibl(const SweepFamily& family, const SweepMetadata& meta,
                 double vds_low, double vds_high, const ExtractionOptions& opt,
                 ExtractionReport& report);

// Aligns a transfer curve and a charge curve onto their common grid
// (union of abscissae over the overlap interval).
void align_transfer_and_charge(const SweepCurve& transfer, const ChargeCurve& charge,
                               SweepCurve& transfer_out, ChargeCurve& charge_out);

}  // namespace hemtkit
