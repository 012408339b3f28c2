#include "hemtkit/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hemtkit/errors.hpp"

namespace hemtkit {

using nlohmann::json;

namespace {

const std::array<const char*, 11> kUnits = {
    "V", "A", "mA", "S", "mS", "mV/decade", "mV/V",
    "ohm·um", "C/cm^2", "cm^2/(V·s)", "dimensionless",
};

bool unit_allowed(const std::string& u) {
    return std::any_of(kUnits.begin(), kUnits.end(),
                       [&](const char* k) { return u == k; });
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void emit_map(std::ostream& os, const std::map<std::string, double>& m) {
    os << "{";
    bool first = true;
    for (const auto& [k, v] : m) {
        if (!first) os << ", ";
        first = false;
        os << "\"" << k << "\": " << fmt9(v);
    }
    os << "}";
}

}  // namespace

bool ReportEntry::operator<(const ReportEntry& other) const {
    if (name != other.name) return name < other.name;
    return conditions < other.conditions;
}

void ExtractionReport::add(ReportEntry entry) {
    if (!entry.error && !unit_allowed(entry.unit))
        throw ValidationError("BadUnit", "unit '" + entry.unit + "' not in the allowed set");
    for (const auto& e : entries)
        if (e.name == entry.name && e.conditions == entry.conditions)
            throw ValidationError("DuplicateEntry",
                                  "entry (" + entry.name + ", conditions) already present");
    entries.push_back(std::move(entry));
    std::sort(entries.begin(), entries.end());
}

const ReportEntry* ExtractionReport::find(
    const std::string& name, const std::map<std::string, double>& conditions) const {
    for (const auto& e : entries)
        if (e.name == name && e.conditions == conditions) return &e;
    return nullptr;
}

const ReportEntry* ExtractionReport::find_first(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

bool ExtractionReport::any_errors() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const ReportEntry& e) { return e.error.has_value(); });
}

std::string report_to_json(const ExtractionReport& report) {
    std::ostringstream os;
    os << "{\n  \"device_id\": \"" << report.device_id << "\",\n  \"entries\": [";
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        const ReportEntry& e = report.entries[i];
        os << (i ? ",\n    " : "\n    ");
        os << "{\"name\": \"" << e.name << "\"";
        if (e.error) {
            os << ", \"error\": \"" << *e.error << "\"";
        } else {
            os << ", \"value\": " << fmt9(e.value)
               << ", \"unit\": \"" << e.unit << "\""
               << ", \"method\": \"" << e.method << "\"";
        }
        os << ", \"conditions\": ";
        emit_map(os, e.conditions);
        os << ", \"diagnostics\": ";
        emit_map(os, e.diagnostics);
        os << "}";
    }
    os << (report.entries.empty() ? "]" : "\n  ]") << "\n}\n";
    return os.str();
}

void write_report(const ExtractionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    out << report_to_json(report);
}

ExtractionReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("FileNotFound", "cannot open report " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("BadReport", std::string("report parse error: ") + e.what());
    }
    ExtractionReport r;
    r.device_id = j.value("device_id", "");
    for (const auto& je : j.at("entries")) {
        ReportEntry e;
        e.name = je.at("name").get<std::string>();
        if (je.contains("error")) {
            e.error = je.at("error").get<std::string>();
        } else {
            e.value = je.at("value").get<double>();
            e.unit = je.at("unit").get<std::string>();
            e.method = je.value("method", "");
        }
        for (const auto& [k, v] : je.value("conditions", json::object()).items())
            e.conditions[k] = v.get<double>();
        for (const auto& [k, v] : je.value("diagnostics", json::object()).items())
            e.diagnostics[k] = v.get<double>();
        r.entries.push_back(std::move(e));
    }
    std::sort(r.entries.begin(), r.entries.end());
    return r;
}

ExtractionReport merge_reports(const std::vector<ExtractionReport>& parts) {
    if (parts.empty())
        throw ValidationError("EmptyMerge", "no reports to merge");
    ExtractionReport out;
    out.device_id = parts.front().device_id;
    for (const auto& p : parts) {
        if (p.device_id != out.device_id)
            throw ValidationError("DeviceMismatch", "reports describe different devices");
        for (const auto& e : p.entries) {
            const ReportEntry* existing = out.find(e.name, e.conditions);
            if (existing) {
                if (existing->value != e.value || existing->error != e.error)
                    throw ValidationError("DuplicateEntry",
                                          "conflicting values for entry " + e.name);
                continue;
            }
            out.entries.push_back(e);
        }
    }
    std::sort(out.entries.begin(), out.entries.end());
    return out;
}

}  // namespace hemtkit
