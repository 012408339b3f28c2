#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hemtkit {

// One extracted parameter. Units come from a closed set; entries that
// failed numerically carry an error code instead of a value.
struct ReportEntry {
    std::string name;
    double value = 0.0;
    std::string unit;
    std::string method;
    std::map<std::string, double> conditions;   // bias name -> volts
    std::map<std::string, double> diagnostics;  // fit residuals, window bounds, ...
    std::optional<std::string> error;           // set when extraction failed

    bool operator<(const ReportEntry& other) const;
};

struct ExtractionReport {
    std::string device_id;
    std::vector<ReportEntry> entries;

    // Enforces unit whitelist and (name, conditions) uniqueness, keeps the
    // entries sorted by (name, conditions).
    void add(ReportEntry entry);
    const ReportEntry* find(const std::string& name,
                            const std::map<std::string, double>& conditions) const;
    const ReportEntry* find_first(const std::string& name) const;
    bool any_errors() const;
};

// Deterministic JSON serialization; values use 9 significant digits.
std::string report_to_json(const ExtractionReport& report);
void write_report(const ExtractionReport& report, const std::string& path);
ExtractionReport read_report(const std::string& path);

// Merge reports (identical device required); duplicate (name, conditions)
// pairs must agree bit-for-bit.
ExtractionReport merge_reports(const std::vector<ExtractionReport>& parts);

}  // namespace hemtkit
