#include "ncindex/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace ncindex {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("NCINDEX_LOG");
        const std::string v = env ? env : "";
        if (v == "debug") return LogLevel::Debug;
        if (v == "info") return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

void log_message(LogLevel level, const std::string& msg) {
    if (int(level) > int(log_level())) return;
    static const char* names[] = {"error", "info", "debug"};
    std::cerr << "[ncindex " << names[int(level)] << "] " << msg << "\n";
}

const ConfigEntry* ConfigFile::find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void parse_error(const std::string& source, int line, int col, const std::string& msg) {
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": " << msg;
    fail(ErrorKind::ConfigParseError, os.str());
}

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile parse_config_text(std::istream& in, const std::string& source) {
    ConfigFile f;
    f.source = source;
    std::string section, raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = raw.substr(0, raw.find('#'));
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const int col0 = int(first) + 1;
        if (line[first] == '[') {
            const auto close = line.find(']', first);
            if (close == std::string::npos) parse_error(source, line_no, col0, "section header is missing ']'");
            const std::string name = trim(line.substr(first + 1, close - first - 1));
            if (name.empty() || !std::all_of(name.begin(), name.end(), name_char))
                parse_error(source, line_no, col0 + 1, "section name must be letters, digits, '_', '-' or '.'");
            if (!trim(line.substr(close + 1)).empty())
                parse_error(source, line_no, int(close) + 2, "unexpected text after section header");
            section = name;
            continue;
        }
        const auto eq = line.find('=', first);
        if (eq == std::string::npos) parse_error(source, line_no, col0, "expected 'key = value' or '[section]'");
        const std::string key = trim(line.substr(first, eq - first));
        if (key.empty()) parse_error(source, line_no, col0, "empty key before '='");
        for (size_t i = 0; i < key.size(); ++i)
            if (!name_char(key[i]))
                parse_error(source, line_no, col0 + int(i), std::string("invalid character '") + key[i] + "' in key");
        const std::string value = trim(line.substr(eq + 1));
        const auto vpos = line.find_first_not_of(" \t", eq + 1);
        const int vcol = vpos == std::string::npos ? int(eq) + 2 : int(vpos) + 1;
        if (value.empty()) parse_error(source, line_no, vcol, "missing value for key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (f.has(full)) {
            const ConfigEntry& prev = f.entries[full];
            std::ostringstream os;
            os << "duplicate key '" << full << "' (first set at line " << prev.line << ")";
            parse_error(source, line_no, col0, os.str());
        }
        f.entries[full] = {value, line_no, vcol};
    }
    return f;
}

ConfigFile load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open config file '" + path + "'");
    return parse_config_text(in, path);
}

ReportFormat format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "jsonl" || s == "json-lines") return ReportFormat::JsonLines;
    if (s == "table" || s == "text-table") return ReportFormat::Table;
    fail(ErrorKind::ConfigParseError, "unknown report format '" + s + "' (use csv, jsonl or table)");
}

namespace {

struct Reader {
    const ConfigFile& f;
    std::set<std::string> used;

    const ConfigEntry* get(const std::string& key) {
        used.insert(key);
        return f.find(key);
    }
    const ConfigEntry& need(const std::string& key) {
        const ConfigEntry* e = get(key);
        if (!e) parse_error(f.source, 1, 1, "missing required key '" + key + "'");
        return *e;
    }
    [[noreturn]] void bad(const ConfigEntry& e, const std::string& msg) { parse_error(f.source, e.line, e.column, msg); }

    long integer(const ConfigEntry& e, const std::string& key) {
        long v = 0;
        const char* b = e.value.data();
        const char* end = b + e.value.size();
        auto [ptr, ec] = std::from_chars(b, end, v);
        if (ec != std::errc() || ptr != end) bad(e, "'" + key + "' expects an integer, got '" + e.value + "'");
        return v;
    }
    double real(const ConfigEntry& e, const std::string& key) {
        char* endp = nullptr;
        const double v = std::strtod(e.value.c_str(), &endp);
        if (endp != e.value.c_str() + e.value.size() || !std::isfinite(v))
            bad(e, "'" + key + "' expects a number, got '" + e.value + "'");
        return v;
    }
    std::vector<std::string> list(const ConfigEntry& e) {
        std::vector<std::string> out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) bad(e, "empty item in comma list");
            out.push_back(item);
        }
        return out;
    }
};

const std::set<std::string> kKnownKeys = {
    "model.kind", "model.N",  "model.theta",  "model.p",      "model.mu",   "model.eps",    "model.scale",
    "class.kind", "class.winding", "class.modes", "methods.list", "tol.fredholm", "tol.mass", "tol.scale",
    "output.format", "output.path", "run.seed"};

}  // namespace

RunConfig interpret_config(const ConfigFile& f) {
    for (const auto& [key, e] : f.entries)
        if (!kKnownKeys.count(key)) {
            std::ostringstream os;
            os << "unknown key '" << key << "'; known keys:";
            for (const auto& k : kKnownKeys) os << " " << k;
            parse_error(f.source, e.line, 1, os.str());
        }
    Reader rd{f, {}};
    RunConfig c;
    c.source = f.source;

    const ConfigEntry& kind = rd.need("model.kind");
    c.model_kind = kind.value;
    if (c.model_kind != "circle" && c.model_kind != "torus" && c.model_kind != "moyal")
        fail(ErrorKind::UnknownModel, f.source + ":" + std::to_string(kind.line) + ": unknown model '" + kind.value +
                                          "' (known: circle, torus, moyal)");
    c.N = int(rd.integer(rd.need("model.N"), "model.N"));
    c.theta = c.model_kind == "moyal" ? 2.0 : 1.0;
    if (auto* e = rd.get("model.theta")) c.theta = rd.real(*e, "model.theta");
    if (auto* e = rd.get("model.p")) c.p = int(rd.integer(*e, "model.p"));
    if (auto* e = rd.get("model.mu")) c.mu = rd.real(*e, "model.mu");
    if (auto* e = rd.get("model.eps")) c.eps = rd.real(*e, "model.eps");
    if (auto* e = rd.get("model.scale")) c.scale = rd.real(*e, "model.scale");

    const ConfigEntry& ck = rd.need("class.kind");
    c.class_kind = ck.value;
    if (c.class_kind != "winding" && c.class_kind != "modes" && c.class_kind != "scalar" && c.class_kind != "identity")
        fail(ErrorKind::UnknownClass, f.source + ":" + std::to_string(ck.line) + ": unknown class '" + ck.value +
                                          "' (known: winding, modes, scalar, identity)");
    if (c.class_kind == "winding") c.winding = int(rd.integer(rd.need("class.winding"), "class.winding"));
    if (c.class_kind == "modes") {
        const ConfigEntry& m = rd.need("class.modes");
        for (const auto& s : rd.list(m)) {
            ConfigEntry item{s, m.line, m.column};
            c.modes.push_back(int(rd.integer(item, "class.modes")));
        }
    }

    const ConfigEntry& ml = rd.need("methods.list");
    for (const auto& s : rd.list(ml)) {
        try {
            c.methods.push_back(method_from_string(s));
        } catch (const Error& err) {
            rd.bad(ml, err.what());
        }
    }

    if (auto* e = rd.get("tol.fredholm")) c.fredholm_tol = rd.real(*e, "tol.fredholm");
    if (auto* e = rd.get("tol.mass")) c.mass_threshold = rd.real(*e, "tol.mass");
    if (auto* e = rd.get("tol.scale")) c.tol_scale = rd.real(*e, "tol.scale");
    if (auto* e = rd.get("output.format")) {
        try {
            c.format = format_from_string(e->value);
        } catch (const Error& err) {
            rd.bad(*e, err.what());
        }
    }
    if (auto* e = rd.get("output.path")) c.out_path = e->value;
    if (auto* e = rd.get("run.seed")) c.seed = rd.integer(*e, "run.seed");
    return c;
}

RunConfig load_run_config(const std::string& path) { return interpret_config(load_config_file(path)); }

namespace {

Parity model_parity(const RunConfig& c) {
    if (c.model_kind == "circle") return Parity::Odd;
    if (c.model_kind == "moyal") return Parity::Even;
    return c.p == 1 ? Parity::Odd : Parity::Even;
}

}  // namespace

void validate_config(const RunConfig& c) {
    auto invalid = [&](const std::string& msg) { fail(ErrorKind::ValidationFailure, c.source + ": " + msg); };
    if (c.model_kind == "torus" && c.p != 1 && c.p != 2)
        fail(ErrorKind::InvalidDimension, c.source + ": torus dimension p must be 1 or 2");
    const int min_n = c.model_kind == "moyal" ? 4 : 2;
    if (c.N < min_n) invalid("model.N must be at least " + std::to_string(min_n) + " for " + c.model_kind);
    if (!(c.theta > 0.0) && c.model_kind != "circle") fail(ErrorKind::InvalidTheta, c.source + ": theta must be positive");
    if (c.mu && !(*c.mu > 0.0)) fail(ErrorKind::InvalidMu, c.source + ": mu must be positive");
    if (!(c.scale > 0.0)) invalid("model.scale must be positive");
    if (!(c.tol_scale > 0.0)) invalid("tolerance scale must be positive");

    const Parity mp = model_parity(c);
    const bool odd_class = c.class_kind == "winding" || c.class_kind == "identity";
    if (odd_class != (mp == Parity::Odd)) {
        std::ostringstream os;
        os << c.source << ": class '" << c.class_kind << "' is " << (odd_class ? "odd (unitary)" : "even (projection)")
           << " but model '" << c.model_kind << "' is " << to_string(mp);
        fail(ErrorKind::ParityMismatch, os.str());
    }
    for (Method m : c.methods) {
        if ((m == Method::NoDouble && mp != Parity::Odd) || (m == Method::McKeanSinger && mp != Parity::Even)) {
            std::ostringstream os;
            os << c.source << ": method '" << to_string(m) << "' does not apply to the " << to_string(mp) << " model '"
               << c.model_kind << "'";
            fail(ErrorKind::ParityMismatch, os.str());
        }
    }
    if (c.class_kind == "winding") {
        if (c.model_kind == "moyal" || (c.model_kind == "torus" && c.p != 1))
            fail(ErrorKind::UnknownClass, c.source + ": winding classes need a one-dimensional lattice model");
        if (std::abs(c.winding) > c.N - 1) invalid("class.winding exceeds N-1");
    }
    if (c.class_kind == "modes") {
        if (c.model_kind != "moyal") fail(ErrorKind::UnknownClass, c.source + ": mode classes need a moyal model");
        const int top = c.N - boundary_width(c.N);
        for (int m : c.modes)
            if (m < 0 || m > top) invalid("mode " + std::to_string(m) + " lies outside 0.." + std::to_string(top));
    }
}

SpectralTriple build_model(const RunConfig& c) {
    if (c.model_kind == "circle") return circle_triple(c.N, {});
    if (c.model_kind == "torus") return torus_triple(c.p, c.N, c.theta);
    if (c.model_kind == "moyal") return moyal_triple(c.N, c.theta);
    fail(ErrorKind::UnknownModel, "unknown model '" + c.model_kind + "'");
}

IndexClass build_class(const RunConfig& c, const SpectralTriple& t) {
    if (c.class_kind == "winding") return circle_winding_class(t, c.winding);
    if (c.class_kind == "modes") return moyal_mode_class(t, c.modes);
    if (c.class_kind == "scalar") return scalar_projection_class(t);
    if (c.class_kind == "identity") return identity_unitary_class(t);
    fail(ErrorKind::UnknownClass, "unknown class '" + c.class_kind + "'");
}

std::string model_label(const RunConfig& c) {
    std::ostringstream os;
    os << c.model_kind << "(";
    if (c.model_kind == "torus") os << "p=" << c.p << ";";
    os << "N=" << c.N;
    if (c.model_kind != "circle") os << ";theta=" << c.theta;
    if (c.mu) os << ";mu=" << *c.mu;
    if (c.scale != 1.0) os << ";scale=" << c.scale;
    os << ")";
    return os.str();
}

IndexReport run_config(const RunConfig& c) {
    validate_config(c);
    IndexReport report;
    report.model = model_label(c);
    log_message(LogLevel::Info, "building " + report.model);
    const SpectralTriple t = build_model(c);
    const IndexClass x = build_class(c, t);
    report.cls = x.name;
    PairingOptions opt;
    opt.mu = c.mu;
    opt.eps = c.eps;
    opt.scale = c.scale;
    opt.tol = c.fredholm_tol * c.tol_scale;
    opt.mass_threshold = c.mass_threshold;
    for (Method m : c.methods) {
        MethodResult r = run_method(t, x, m, opt);
        r.gap_tolerance *= c.tol_scale;
        std::ostringstream os;
        os << r.method << ": value " << r.value.real() << (r.value.imag() < 0 ? "-" : "+") << std::abs(r.value.imag())
           << "i, gap " << r.gap << ", " << r.runtime_ms << " ms";
        if (!r.ok) os << ", error: " << r.error;
        log_message(r.ok ? LogLevel::Info : LogLevel::Error, os.str());
        for (const auto& [k, v] : r.diagnostics) log_message(LogLevel::Debug, "  " + k + " = " + std::to_string(v));
        report.methods.push_back(std::move(r));
    }
    report.finalize();
    return report;
}

IndexReport run_config(const std::string& path) {
    const RunConfig c = load_run_config(path);
    IndexReport r = run_config(c);
    if (c.out_path) emit_report(r, c.format, *c.out_path);
    else emit_report(r, c.format, std::cout);
    return r;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

const std::vector<std::string> kColumns = {"model", "class", "method", "value_re", "value_im",
                                           "rounded", "gap", "runtime_ms", "verdict"};

struct Row {
    std::vector<std::string> cells;
};

std::vector<Row> report_rows(const IndexReport& r) {
    std::vector<Row> rows;
    double gap = 0.0, runtime = 0.0;
    for (const auto& m : r.methods) {
        rows.push_back({{r.model, r.cls, m.method, num(m.value.real()), num(m.value.imag()), std::to_string(m.rounded),
                         num(m.gap), num(m.runtime_ms), m.ok ? "ok" : "error"}});
        gap = std::max(gap, m.gap);
        runtime += m.runtime_ms;
    }
    if (!r.methods.empty())
        rows.push_back({{r.model, r.cls, "verdict", num(double(r.agreed)), num(0.0), std::to_string(r.agreed), num(gap),
                         num(runtime), r.verdict ? "true" : "false"}});
    return rows;
}

std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (quoted) fail(ErrorKind::IoError, "report csv line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(cur);
    return out;
}

}  // namespace

void emit_report(const IndexReport& r, ReportFormat fmt, std::ostream& os) {
    const auto rows = report_rows(r);
    if (fmt == ReportFormat::Csv) {
        for (size_t i = 0; i < kColumns.size(); ++i) os << (i ? "," : "") << kColumns[i];
        os << "\n";
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.cells.size(); ++i) os << (i ? "," : "") << csv_field(row.cells[i]);
            os << "\n";
        }
    } else if (fmt == ReportFormat::JsonLines) {
        for (const auto& m : r.methods) {
            nlohmann::json j = {{"model", r.model},        {"class", r.cls},       {"method", m.method},
                                {"value_re", m.value.real()}, {"value_im", m.value.imag()}, {"rounded", m.rounded},
                                {"gap", m.gap},            {"runtime_ms", m.runtime_ms}, {"verdict", m.ok ? "ok" : "error"},
                                {"gap_tolerance", m.gap_tolerance}};
            if (!m.error.empty()) j["error"] = m.error;
            j["diagnostics"] = m.diagnostics;
            os << j.dump() << "\n";
        }
        if (!r.methods.empty()) {
            nlohmann::json j = {{"model", r.model}, {"class", r.cls}, {"method", "verdict"},
                                {"rounded", r.agreed}, {"verdict", r.verdict}};
            os << j.dump() << "\n";
        }
    } else {
        std::vector<size_t> width(kColumns.size());
        for (size_t i = 0; i < kColumns.size(); ++i) width[i] = kColumns[i].size();
        std::vector<Row> shown = rows;
        for (auto& row : shown) {
            // shorter numbers read better in a table
            for (size_t i : {3u, 4u, 6u, 7u}) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", std::strtod(row.cells[i].c_str(), nullptr));
                row.cells[i] = buf;
            }
            for (size_t i = 0; i < row.cells.size(); ++i) width[i] = std::max(width[i], row.cells[i].size());
        }
        auto line = [&](const std::vector<std::string>& cells) {
            for (size_t i = 0; i < cells.size(); ++i) {
                os << (i ? "  " : "") << cells[i];
                if (i + 1 < cells.size()) os << std::string(width[i] - cells[i].size(), ' ');
            }
            os << "\n";
        };
        line(kColumns);
        size_t total = 0;
        for (size_t w : width) total += w + 2;
        os << std::string(total - 2, '-') << "\n";
        for (const auto& row : shown) line(row.cells);
        for (const auto& m : r.methods)
            if (!m.ok) os << m.method << " failed: " << m.error << "\n";
    }
}

void emit_report(const IndexReport& r, ReportFormat fmt, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IoError, "cannot open report file '" + path + "' for writing");
    emit_report(r, fmt, out);
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write to '" + path + "' failed");
}

IndexReport parse_report_csv(std::istream& in) {
    IndexReport r;
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) fail(ErrorKind::IoError, "report csv: empty input");
    ++line_no;
    if (split_csv_line(line, line_no) != kColumns) fail(ErrorKind::IoError, "report csv: unexpected header");
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line, line_no);
        if (f.size() != kColumns.size())
            fail(ErrorKind::IoError, "report csv line " + std::to_string(line_no) + ": wrong field count");
        r.model = f[0];
        r.cls = f[1];
        if (f[2] == "verdict") {
            r.agreed = std::stol(f[5]);
            r.verdict = f[8] == "true";
            continue;
        }
        MethodResult m;
        m.method = f[2];
        m.value = cplx(std::strtod(f[3].c_str(), nullptr), std::strtod(f[4].c_str(), nullptr));
        m.rounded = std::stol(f[5]);
        m.gap = std::strtod(f[6].c_str(), nullptr);
        m.runtime_ms = std::strtod(f[7].c_str(), nullptr);
        m.ok = f[8] == "ok";
        r.methods.push_back(std::move(m));
    }
    return r;
}

}  // namespace ncindex
