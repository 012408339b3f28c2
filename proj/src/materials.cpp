#include "hemtkit/materials.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hemtkit/errors.hpp"

namespace hemtkit::band {

void MaterialParams::validate(const std::string& name) const {
    if (!(bandgap_eV > 0.0))
        throw ValidationError("BadMaterial", name + ": bandgap must be positive");
    if (!(relative_permittivity > 1.0))
        throw ValidationError("BadMaterial", name + ": relative permittivity must exceed 1");
    if (!(electron_effective_mass > 0.0))
        throw ValidationError("BadMaterial", name + ": effective mass must be positive");
}

MaterialTable MaterialTable::defaults() {
    // Conventional literature defaults, not measured data. AlN polarization
    // lumps the spontaneous offset with the piezoelectric term of a
    // pseudomorphic barrier on GaN.
    MaterialTable t;
    t.set("GaN", {3.4, 0.0, 8.9, 0.2, 0.034});
    t.set("AlN", {6.2, 0.63 * (6.2 - 3.4), 8.5, 0.4, 0.1045});
    return t;
}

MaterialTable MaterialTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("FileNotFound", "cannot open material table " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("BadMaterialTable",
                              std::string("material table parse error: ") + e.what());
    }
    MaterialTable t;
    for (const auto& [name, m] : j.items()) {
        if (name.rfind("_", 0) == 0) continue;  // comment keys
        MaterialParams p;
        p.bandgap_eV = m.at("bandgap_eV").get<double>();
        p.conduction_band_offset_vs_GaN_eV =
            m.value("conduction_band_offset_vs_GaN_eV", 0.0);
        p.relative_permittivity = m.at("relative_permittivity").get<double>();
        p.electron_effective_mass = m.at("electron_effective_mass").get<double>();
        p.net_polarization_C_m2 = m.value("net_polarization_C_m2", 0.0);
        t.set(name, p);
    }
    if (!t.has("GaN") || !t.has("AlN"))
        throw ValidationError("BadMaterialTable", "table must define GaN and AlN");
    return t;
}

void MaterialTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "{\n  \"_comment\": \"Conventional literature defaults, editable; "
           "not device-specific measured data.\"";
    for (const auto& [name, p] : table_) {
        out << ",\n  \"" << name << "\": {\n"
            << "    \"bandgap_eV\": " << fmt(p.bandgap_eV) << ",\n"
            << "    \"conduction_band_offset_vs_GaN_eV\": "
            << fmt(p.conduction_band_offset_vs_GaN_eV) << ",\n"
            << "    \"relative_permittivity\": " << fmt(p.relative_permittivity) << ",\n"
            << "    \"electron_effective_mass\": " << fmt(p.electron_effective_mass) << ",\n"
            << "    \"net_polarization_C_m2\": " << fmt(p.net_polarization_C_m2) << "\n"
            << "  }";
    }
    out << "\n}\n";
}

const MaterialParams& MaterialTable::get(const std::string& name) const {
    auto it = table_.find(name);
    if (it == table_.end())
        throw ValidationError("UnknownMaterial", "material '" + name + "' not in table");
    return it->second;
}

bool MaterialTable::has(const std::string& name) const {
    return table_.count(name) != 0;
}

void MaterialTable::set(const std::string& name, const MaterialParams& params) {
    params.validate(name);
    table_[name] = params;
}

MaterialParams MaterialTable::algan(double al_fraction) const {
    if (al_fraction < 0.0 || al_fraction > 1.0)
        throw ValidationError("BadMaterial", "al_fraction must be in [0, 1]");
    const MaterialParams& gan = get("GaN");
    if (al_fraction == 0.0) return gan;
    const MaterialParams& aln = get("AlN");
    MaterialParams p;
    const double x = al_fraction;
    p.bandgap_eV = gan.bandgap_eV + x * (aln.bandgap_eV - gan.bandgap_eV);
    p.conduction_band_offset_vs_GaN_eV = 0.63 * (p.bandgap_eV - gan.bandgap_eV);
    p.relative_permittivity =
        gan.relative_permittivity + x * (aln.relative_permittivity - gan.relative_permittivity);
    p.electron_effective_mass =
        gan.electron_effective_mass + x * (aln.electron_effective_mass - gan.electron_effective_mass);
    p.net_polarization_C_m2 =
        gan.net_polarization_C_m2 + x * (aln.net_polarization_C_m2 - gan.net_polarization_C_m2);
    return p;
}

}  // namespace hemtkit::band
