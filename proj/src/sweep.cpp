#include "hemtkit/sweep.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hemtkit/errors.hpp"

namespace hemtkit {

using nlohmann::json;

std::string to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::Transfer: return "transfer";
        case SweepKind::Output: return "output";
        case SweepKind::CV: return "cv";
    }
    return "unknown";
}

SweepKind sweep_kind_from_string(const std::string& s) {
    if (s == "transfer") return SweepKind::Transfer;
    if (s == "output") return SweepKind::Output;
    if (s == "cv") return SweepKind::CV;
    throw ValidationError("BadKind", "unknown sweep kind '" + s + "'");
}

void DeviceGeometry::validate() const {
    if (!(width_um > 0.0) || !(length_um > 0.0))
        throw ValidationError("BadGeometry", "width and length must be positive");
}

double DeviceGeometry::area_cm2() const {
    return width_um * length_um * 1e-8;
}

SweepMetadata load_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("FileNotFound", "cannot open metadata file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("BadMetadata", std::string("metadata parse error: ") + e.what());
    }
    SweepMetadata m;
    try {
        m.device_id = j.at("device_id").get<std::string>();
        m.kind = sweep_kind_from_string(j.at("kind").get<std::string>());
        m.geometry.width_um = j.at("w_um").get<double>();
        m.geometry.length_um = j.at("l_um").get<double>();
        m.temperature_K = j.value("temperature_K", 300.0);
        if (j.contains("frequency_Hz"))
            m.frequency_Hz = j.at("frequency_Hz").get<double>();
    } catch (const json::exception& e) {
        throw ValidationError("BadMetadata", std::string("metadata field error: ") + e.what());
    }
    m.geometry.validate();
    if (!(m.temperature_K > 0.0))
        throw ValidationError("BadMetadata", "temperature_K must be positive");
    return m;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_metadata(const SweepMetadata& meta, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    out << "{\n";
    out << "  \"device_id\": \"" << meta.device_id << "\",\n";
    out << "  \"kind\": \"" << to_string(meta.kind) << "\",\n";
    out << "  \"w_um\": " << fmt17(meta.geometry.width_um) << ",\n";
    out << "  \"l_um\": " << fmt17(meta.geometry.length_um) << ",\n";
    out << "  \"temperature_K\": " << fmt17(meta.temperature_K);
    if (meta.frequency_Hz)
        out << ",\n  \"frequency_Hz\": " << fmt17(*meta.frequency_Hz);
    out << "\n}\n";
}

void SweepCurve::validate() const {
    if (x.size() != y.size())
        throw ValidationError("LengthMismatch", "curve x/y lengths differ");
    if (x.size() < 3)
        throw ValidationError("TooFewPoints", "curve needs at least 3 samples");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw ValidationError("NonMonotonicGrid", "curve x must be strictly increasing");
    if (kind == SweepKind::CV)
        for (double c : y)
            if (c < 0.0)
                throw ValidationError("NegativeCapacitance", "C-V response must be non-negative");
}

void SweepFamily::validate() const {
    if (curves.empty())
        throw ValidationError("EmptyFamily", "family holds no curves");
    const SweepKind k = curves.front().kind;
    for (const auto& c : curves) {
        c.validate();
        if (c.kind != k)
            throw ValidationError("InconsistentKind", "curves in a family must share kind");
    }
    for (std::size_t i = 1; i < curves.size(); ++i) {
        if (!(curves[i].fixed_bias > curves[i - 1].fixed_bias))
            throw ValidationError("NonMonotonicFamily",
                                  "fixed-bias values must be strictly increasing");
        if (curves[i].x != curves.front().x)
            throw ValidationError("GridMismatch", "curves in a family must share the x grid");
    }
}

const SweepCurve& SweepFamily::curve_with_fixed_bias(double bias, double tol) const {
    for (const auto& c : curves)
        if (std::abs(c.fixed_bias - bias) <= tol)
            return c;
    throw ValidationError("CurveNotFound", "no curve at requested fixed bias");
}

namespace {

struct ColumnSpec {
    std::string swept;
    std::string fixed;  // empty for CV
    std::string response;
};

ColumnSpec columns_for(SweepKind kind) {
    switch (kind) {
        case SweepKind::Transfer: return {"vgs_V", "vds_V", "id_A"};
        case SweepKind::Output: return {"vds_V", "vgs_V", "id_A"};
        case SweepKind::CV: return {"vgs_V", "", "c_F"};
    }
    return {};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim whitespace
        auto b = field.find_first_not_of(" \t\r");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
}

double parse_cell(const std::string& cell, int row) {
    const char* b = cell.data();
    const char* e = b + cell.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e)
        throw ValidationError("NonNumericCell",
                              "non-numeric value '" + cell + "' at row " + std::to_string(row));
    return v;
}

}  // namespace

SweepFamily ingest_sweep_file(const std::string& path, const SweepMetadata& meta) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("FileNotFound", "cannot open sweep file " + path);

    const ColumnSpec want = columns_for(meta.kind);
    std::string line;
    int row = 0;

    // Header row (first non-comment line).
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv(line);
        break;
    }
    if (header.empty())
        throw ValidationError("EmptyFamily", "no header row in " + path);

    auto col_index = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };

    // A header that matches a different kind's signature is a kind clash,
    // not a missing column.
    for (SweepKind other : {SweepKind::Transfer, SweepKind::Output, SweepKind::CV}) {
        if (other == meta.kind) continue;
        const ColumnSpec sig = columns_for(other);
        std::vector<std::string> expect{sig.swept};
        if (!sig.fixed.empty()) expect.push_back(sig.fixed);
        expect.push_back(sig.response);
        if (header == expect)
            throw ValidationError("InconsistentKind",
                                  "file header matches kind '" + to_string(other) +
                                  "' but metadata says '" + to_string(meta.kind) + "'");
    }

    const int ci_swept = col_index(want.swept);
    const int ci_fixed = want.fixed.empty() ? -2 : col_index(want.fixed);
    const int ci_resp = col_index(want.response);
    if (ci_swept < 0)
        throw ValidationError("MissingColumn", "missing column " + want.swept);
    if (ci_fixed == -1)
        throw ValidationError("MissingColumn", "missing column " + want.fixed);
    if (ci_resp < 0)
        throw ValidationError("MissingColumn", "missing column " + want.response);

    // fixed bias -> (swept -> list of responses); duplicates averaged later.
    std::map<double, std::map<double, std::pair<double, int>>> groups;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> cells = split_csv(line);
        const std::size_t need = static_cast<std::size_t>(
            std::max({ci_swept, ci_fixed == -2 ? 0 : ci_fixed, ci_resp})) + 1;
        if (cells.size() < need)
            throw ValidationError("MissingColumn",
                                  "short row at line " + std::to_string(row));
        const double xv = parse_cell(cells[static_cast<std::size_t>(ci_swept)], row);
        const double fb = ci_fixed == -2 ? 0.0
                             : parse_cell(cells[static_cast<std::size_t>(ci_fixed)], row);
        const double yv = parse_cell(cells[static_cast<std::size_t>(ci_resp)], row);
        auto& cell = groups[fb][xv];
        cell.first += yv;
        cell.second += 1;
    }
    if (groups.empty())
        throw ValidationError("EmptyFamily", "no data rows in " + path);

    SweepFamily family;
    family.provenance = path;
    family.family_variable = meta.kind == SweepKind::Output ? FamilyVariable::FixedVgs
                                                            : FamilyVariable::FixedVds;
    for (const auto& [bias, points] : groups) {
        SweepCurve c;
        c.kind = meta.kind;
        c.fixed_bias = bias;
        c.temperature_K = meta.temperature_K;
        for (const auto& [xv, acc] : points) {
            c.x.push_back(xv);
            c.y.push_back(acc.first / acc.second);
        }
        c.validate();
        family.curves.push_back(std::move(c));
    }

    // Shared grid required; resample on ingest when grids differ.
    bool same = true;
    for (const auto& c : family.curves)
        if (c.x != family.curves.front().x) { same = false; break; }
    if (!same) {
        family = resample_to_common_grid(family);
        family.resampled_at_ingest = true;
        family.provenance = path;
    }
    family.validate();
    return family;
}

void write_sweep_file(const SweepFamily& family, const std::string& path) {
    family.validate();
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    const ColumnSpec cols = columns_for(family.curves.front().kind);
    if (cols.fixed.empty())
        out << cols.swept << "," << cols.response << "\n";
    else
        out << cols.swept << "," << cols.fixed << "," << cols.response << "\n";
    for (const auto& c : family.curves)
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (cols.fixed.empty())
                out << fmt17(c.x[i]) << "," << fmt17(c.y[i]) << "\n";
            else
                out << fmt17(c.x[i]) << "," << fmt17(c.fixed_bias) << ","
                    << fmt17(c.y[i]) << "\n";
        }
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double xq) {
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (xq - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

SweepFamily resample_to_common_grid(const SweepFamily& family) {
    if (family.curves.empty())
        throw ValidationError("EmptyFamily", "family holds no curves");

    double lo = family.curves.front().x.front();
    double hi = family.curves.front().x.back();
    for (const auto& c : family.curves) {
        lo = std::max(lo, c.x.front());
        hi = std::min(hi, c.x.back());
    }
    if (!(lo < hi))
        throw ValidationError("NoOverlap", "curve x-ranges do not overlap");

    std::set<double> grid;
    for (const auto& c : family.curves)
        for (double v : c.x)
            if (v >= lo && v <= hi) grid.insert(v);
    if (grid.size() < 3)
        throw ValidationError("NoOverlap", "common grid has fewer than 3 samples");

    SweepFamily out = family;
    const std::vector<double> gx(grid.begin(), grid.end());
    for (auto& c : out.curves) {
        std::vector<double> ny(gx.size());
        for (std::size_t i = 0; i < gx.size(); ++i)
            ny[i] = interp_linear(c.x, c.y, gx[i]);
        c.x = gx;
        c.y = std::move(ny);
    }
    out.validate();
    return out;
}

}  // namespace hemtkit
