#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncindex/indexengines.hpp"

namespace ncindex {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Reads NCINDEX_LOG once; unknown values fall back to error.
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

// One key=value assignment with its source position (1-based).
struct ConfigEntry {
    std::string value;
    int line = 0;
    int column = 0;
};

// Flat view of a sectioned config: "[model]\nkind = circle" and
// "model.kind = circle" both land under the key "model.kind".
struct ConfigFile {
    std::string source;
    std::map<std::string, ConfigEntry> entries;

    bool has(const std::string& key) const { return entries.count(key) != 0; }
    const ConfigEntry* find(const std::string& key) const;
};

ConfigFile parse_config_text(std::istream& in, const std::string& source = "<config>");
ConfigFile load_config_file(const std::string& path);

enum class ReportFormat { Csv, JsonLines, Table };
ReportFormat format_from_string(const std::string& s);

struct RunConfig {
    std::string source;
    // model
    std::string model_kind;  // circle | torus | moyal
    int N = 0;
    double theta = 0.0;
    int p = 1;
    std::optional<double> mu;
    double eps = 1.0;
    double scale = 1.0;
    // class
    std::string class_kind;  // winding | modes | scalar | identity
    int winding = 1;
    std::vector<int> modes;
    // methods, in report order
    std::vector<Method> methods;
    // tolerance overrides
    double fredholm_tol = 1e-8;
    double mass_threshold = 0.5;
    double tol_scale = 1.0;
    // output
    ReportFormat format = ReportFormat::Csv;
    std::optional<std::string> out_path;
    std::optional<long> seed;
};

// Interprets a parsed file. Structural problems raise ConfigParseError with
// the offending position; unknown kinds raise UnknownModel / UnknownClass.
RunConfig interpret_config(const ConfigFile& f);
RunConfig load_run_config(const std::string& path);

// Parity and size checks that need no model construction.
void validate_config(const RunConfig& c);

SpectralTriple build_model(const RunConfig& c);
IndexClass build_class(const RunConfig& c, const SpectralTriple& t);
std::string model_label(const RunConfig& c);

// Validates, builds, runs every method and finalizes the verdict.
IndexReport run_config(const RunConfig& c);
// Loads the file, runs it and writes the report to the configured output.
IndexReport run_config(const std::string& path);

void emit_report(const IndexReport& r, ReportFormat fmt, std::ostream& os);
void emit_report(const IndexReport& r, ReportFormat fmt, const std::string& path);

// Parse-back of the CSV form; method errors and diagnostics are not carried.
IndexReport parse_report_csv(std::istream& in);

}  // namespace ncindex
