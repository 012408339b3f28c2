#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hemtkit {

enum class SweepKind { Transfer, Output, CV };
enum class FamilyVariable { FixedVds, FixedVgs };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& s);

// Gate width/length in micrometers.
struct DeviceGeometry {
    double width_um = 0.0;
    double length_um = 0.0;

    void validate() const;
    double area_cm2() const;  // W*L converted from um^2
};

// Sidecar metadata for a sweep file.
struct SweepMetadata {
    std::string device_id;
    SweepKind kind = SweepKind::Transfer;
    DeviceGeometry geometry;
    double temperature_K = 300.0;
    std::optional<double> frequency_Hz;  // CV only
};

SweepMetadata load_metadata(const std::string& path);
void write_metadata(const SweepMetadata& meta, const std::string& path);

// One measured curve: swept voltage grid (strictly increasing) plus the
// response samples, with the held terminal bias.
struct SweepCurve {
    std::vector<double> x;   // volts
    std::vector<double> y;   // amps (I-V) or farads (C-V)
    double fixed_bias = 0.0; // volts
    SweepKind kind = SweepKind::Transfer;
    double temperature_K = 300.0;

    void validate() const;
};

struct SweepFamily {
    std::vector<SweepCurve> curves;  // ordered by fixed_bias ascending
    FamilyVariable family_variable = FamilyVariable::FixedVds;
    std::string provenance;
    bool resampled_at_ingest = false;

    void validate() const;
    const SweepCurve& curve_with_fixed_bias(double bias, double tol = 1e-12) const;
};

// Parses a long-format CSV sweep file (see the formats below) into a
// validated family. Rows are grouped by the fixed-bias column, sorted by
// swept voltage, and duplicate abscissae are averaged. If grids differ
// between curves they are resampled to the common grid and the family is
// flagged.
//
//   transfer: vgs_V,vds_V,id_A     output: vds_V,vgs_V,id_A     cv: vgs_V,c_F
//
// Lines starting with '#' are comments; the header row is required.
SweepFamily ingest_sweep_file(const std::string& path, const SweepMetadata& meta);

// Writes a family back in the same format (17 significant digits, so
// ingest(write(f)) == f).
void write_sweep_file(const SweepFamily& family, const std::string& path);

// Interpolates every curve onto the union of abscissae restricted to the
// common overlap interval. Throws NoOverlap if the ranges are disjoint.
SweepFamily resample_to_common_grid(const SweepFamily& family);

// Linear interpolation helper shared with extraction (x strictly increasing).
double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double xq);

}  // namespace hemtkit
