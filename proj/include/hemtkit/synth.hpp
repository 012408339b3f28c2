#pragma once

#include <string>
#include <vector>

#include "hemtkit/sweep.hpp"

namespace hemtkit::synth {

// Closed-form charge-control device. One parameter set yields mutually
// consistent transfer, output, and C-V data:
//   n_s  = eta*Vt*(cg/q) * ln(1 + exp((vgs - vth')/(eta*Vt))),  vth' = vth - sigma*vds
//   VDSe = vds * (1 + (vds/vdsat)^m)^(-1/m)
//   I    = (W/L)*q*mu0*n_s*VDSe  (+ one-pass series-R correction) + i_floor
//   C    = cg / (1 + exp(-(vgs - vth)/(eta*Vt)))   [exact d(q*n_s)/dvgs at vds=0]
struct CompactModelParams {
    double vth = -1.5;          // V
    double mu0 = 1200.0;        // cm^2/(V*s)
    double cg = 2e-7;           // F/cm^2
    double width_um = 50.0;
    double length_um = 1.0;
    double ss_factor = 1.2;     // eta >= 1; SS = eta*(kT/q)*ln10
    double vdsat = 0.5;         // V
    int knee_order = 8;         // m >= 2
    double r_series = 0.0;      // ohm
    double i_floor = 0.0;       // A
    double dibl_coeff = 0.0;    // sigma >= 0 shifts vth down with vds
    double noise_amplitude = 0.0;  // relative multiplicative
    unsigned long long seed = 0;

    void validate() const;
    double ss_mV_per_decade(double temperature_K = 300.0) const;
};

void write_params(const CompactModelParams& p, const std::string& path);
CompactModelParams read_params(const std::string& path);

// Drain current of the compact model, amps. Total on valid params.
double model_current(const CompactModelParams& p, double vgs, double vds,
                     double temperature_K = 300.0);

// Gate capacitance per area, F/cm^2.
double model_capacitance(const CompactModelParams& p, double vgs,
                         double temperature_K = 300.0);

struct GridSpec {
    double lo = 0.0;
    double hi = 1.0;
    int n = 11;

    std::vector<double> points() const;
};

// Bias plan for one generated fixture.
struct SweepPlan {
    GridSpec transfer_vgs;
    std::vector<double> transfer_vds;       // one transfer curve per value
    GridSpec output_vds;
    std::vector<double> output_vgs;         // one output curve per value
    GridSpec cv_vgs;
    double cv_frequency_Hz = 1e6;
    double temperature_K = 300.0;
};

struct FixtureFiles {
    std::string transfer_csv;
    std::string output_csv;
    std::string cv_csv;
    std::string meta_transfer;
    std::string meta_output;
    std::string meta_cv;
    std::string truth_json;
};

// Synthesizes the in-memory families for a plan (noise applied per the
// params' amplitude/seed).
SweepFamily make_transfer_family(const CompactModelParams& p, const SweepPlan& plan);
SweepFamily make_output_family(const CompactModelParams& p, const SweepPlan& plan);
SweepFamily make_cv_family(const CompactModelParams& p, const SweepPlan& plan);

// Writes transfer/output/cv sweep files plus metadata sidecars and the
// ground-truth parameter file into out_dir.
FixtureFiles generate_fixture(const CompactModelParams& p, const SweepPlan& plan,
                              const std::string& out_dir,
                              const std::string& device_id = "synth-device");

// The bundled reproduction fixture: a calibrated parameter set plus the
// measurement bias plan (linear transfer V_DS 10..100 mV, saturation
// transfer 0.1..1 V, output V_GS -2..0 V, C-V at 1 MHz). Calibration is
// deterministic; see PaperFixture for the realized targets.
struct PaperFixture {
    CompactModelParams params;
    SweepPlan plan_linear;       // transfer V_DS in {10,...,100 mV}
    SweepPlan plan_saturation;   // transfer V_DS in {0.1,...,1.0 V}
    std::string device_id = "algan-gan-hemt-fixture";
};
PaperFixture paper_fixture();

struct PaperFixtureFiles {
    std::string transfer_linear_csv;
    std::string transfer_saturation_csv;
    std::string output_csv;
    std::string cv_csv;
    std::string meta_transfer;
    std::string meta_output;
    std::string meta_cv;
    std::string truth_json;
};
PaperFixtureFiles generate_paper_fixture(const std::string& out_dir,
                                         double noise_amplitude = 0.0,
                                         unsigned long long seed = 0);

// One device of the 3x3x3 oracle-closure grid (vth x mu0 x eta) plus the
// plan its recovery tests use.
struct GridDevice {
    CompactModelParams params;
    SweepPlan plan;
};
GridDevice oracle_grid_device(int vth_index, int mu0_index, int eta_index);

}  // namespace hemtkit::synth
