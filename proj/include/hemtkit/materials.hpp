#pragma once

#include <map>
#include <string>

namespace hemtkit::band {

// Per-material constants for the 1D band solver. Polarization is the lumped
// spontaneous + piezoelectric value along the depth axis; the bound sheet
// charge at an interface is P(layer above) - P(layer below).
struct MaterialParams {
    double bandgap_eV = 0.0;
    double conduction_band_offset_vs_GaN_eV = 0.0;
    double relative_permittivity = 0.0;
    double electron_effective_mass = 0.0;  // units of m_e
    double net_polarization_C_m2 = 0.0;

    void validate(const std::string& name) const;
};

class MaterialTable {
public:
    // Conventional literature defaults for GaN/AlN; AlGaN is produced by
    // linear interpolation in the Al fraction with dEc = 0.63*dEg.
    static MaterialTable defaults();
    static MaterialTable load(const std::string& path);
    void save(const std::string& path) const;

    const MaterialParams& get(const std::string& name) const;
    bool has(const std::string& name) const;
    void set(const std::string& name, const MaterialParams& params);

    // GaN for x == 0, otherwise GaN/AlN linear interpolation.
    MaterialParams algan(double al_fraction) const;

private:
    std::map<std::string, MaterialParams> table_;
};

}  // namespace hemtkit::band
