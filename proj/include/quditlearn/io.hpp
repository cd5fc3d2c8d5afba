#pragma once

// Run configuration, result envelopes, and deterministic serialization.
//
// Output files are byte-deterministic functions of (config, seed, schema
// version): floating-point cells are rendered with 17 significant digits so
// parsed values round-trip bit-faithfully, the JSON writer emits a fixed key
// order, and wall-clock timing never enters a file (it is reported on stderr
// by the CLI instead).

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "quditlearn/common.hpp"
#include "quditlearn/experiments.hpp"

namespace quditlearn {

// Bumped whenever the column set or ordering of any command's table changes.
inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::string command;       // verify | learn | shadows | scaling | twirl | norms
    int d = 3;
    double epsilon = 0.1;
    double delta = 0.1;
    std::uint64_t seed = 1;
    long long trials = 100;
    std::string output_path;   // empty: results go to stdout only
    std::string format = "csv";
    int workers = 0;           // 0: resolve via QUDIT_LEARN_WORKERS or 1

    // Command-specific knobs.
    std::string state = "spike:1,1:+";                           // learn / shadows input
    int k = 2;                                                   // twirl tensor power
    std::string dlist = "3,5,7";                                 // scaling dimensions
    std::string protocols = "conjugate_bell,single_copy_shadow"; // scaling protocols
};

inline void validate_config(const RunConfig& c) {
    static const std::vector<std::string> commands{"verify",  "learn", "shadows",
                                                   "scaling", "twirl", "norms"};
    bool known = false;
    for (const auto& cmd : commands) known = known || cmd == c.command;
    if (!known)
        throw std::invalid_argument(
            "config: unknown command '" + c.command +
            "' (expected verify|learn|shadows|scaling|twirl|norms)");
    Dimension probe(c.d);  // throws "d must be prime, got ..." on composite d
    (void)probe;
    if (!(c.epsilon > 0.0) || !(c.epsilon < 1.0))
        throw std::invalid_argument("config: epsilon must lie in (0, 1), got " +
                                    std::to_string(c.epsilon));
    if (!(c.delta > 0.0) || !(c.delta < 1.0))
        throw std::invalid_argument("config: delta must lie in (0, 1), got " +
                                    std::to_string(c.delta));
    if (c.trials < 1)
        throw std::invalid_argument("config: trials must be positive, got " +
                                    std::to_string(c.trials));
    if (c.format != "csv" && c.format != "json")
        throw std::invalid_argument("config: format must be csv or json, got '" + c.format +
                                    "'");
    if (c.workers < 0)
        throw std::invalid_argument("config: workers must be non-negative");
}

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct ResultEnvelope {
    int schema_version = kSchemaVersion;
    RunConfig config;
    std::string content_hash;     // FNV-1a over the canonical config string
    ResultTable table;
    bool all_pass = false;
    double wall_seconds = 0.0;    // stderr-only; excluded from serialization
};

// --- deterministic formatting ------------------------------------------------

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_complex(cplx z) {
    return format_double(z.real()) + (z.imag() < 0.0 ? "-" : "+") +
           format_double(std::abs(z.imag())) + "i";
}

// --- content hash -------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Canonical rendering of the computational inputs. The output path, format,
// and worker count deliberately do not participate: they change where or how
// fast results are produced, never what they are.
inline std::string config_canonical_string(const RunConfig& c) {
    std::ostringstream os;
    os << "command=" << c.command << ";d=" << c.d << ";epsilon=" << format_double(c.epsilon)
       << ";delta=" << format_double(c.delta) << ";seed=" << c.seed << ";trials=" << c.trials
       << ";state=" << c.state << ";k=" << c.k << ";dlist=" << c.dlist
       << ";protocols=" << c.protocols << ";schema=" << kSchemaVersion;
    return os.str();
}

inline std::string content_hash_hex(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_canonical_string(c))));
    return buf;
}

// --- CSV ----------------------------------------------------------------------

inline std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char ch : cell) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

// Header row always present; an empty table serializes to the header alone.
inline void write_csv(const ResultEnvelope& env, std::ostream& os) {
    for (std::size_t i = 0; i < env.table.columns.size(); ++i)
        os << (i ? "," : "") << csv_escape(env.table.columns[i]);
    os << "\n";
    for (const auto& row : env.table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(row[i]);
        os << "\n";
    }
}

// --- JSON ---------------------------------------------------------------------

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

}  // namespace detail

// Fixed key order, no whitespace variance: identical envelopes give identical bytes.
inline void write_json(const ResultEnvelope& env, std::ostream& os) {
    const RunConfig& c = env.config;
    os << "{\n";
    os << "  \"schema_version\": " << env.schema_version << ",\n";
    os << "  \"command\": \"" << detail::json_escape(c.command) << "\",\n";
    os << "  \"config\": {\n";
    os << "    \"d\": " << c.d << ",\n";
    os << "    \"epsilon\": " << format_double(c.epsilon) << ",\n";
    os << "    \"delta\": " << format_double(c.delta) << ",\n";
    os << "    \"seed\": " << c.seed << ",\n";
    os << "    \"trials\": " << c.trials << ",\n";
    os << "    \"state\": \"" << detail::json_escape(c.state) << "\",\n";
    os << "    \"k\": " << c.k << ",\n";
    os << "    \"dlist\": \"" << detail::json_escape(c.dlist) << "\",\n";
    os << "    \"protocols\": \"" << detail::json_escape(c.protocols) << "\"\n";
    os << "  },\n";
    os << "  \"content_hash\": \"" << env.content_hash << "\",\n";
    os << "  \"all_pass\": " << (env.all_pass ? "true" : "false") << ",\n";
    os << "  \"columns\": [";
    for (std::size_t i = 0; i < env.table.columns.size(); ++i)
        os << (i ? ", " : "") << '"' << detail::json_escape(env.table.columns[i]) << '"';
    os << "],\n";
    os << "  \"rows\": [";
    for (std::size_t r = 0; r < env.table.rows.size(); ++r) {
        os << (r ? ",\n    " : "\n    ") << "[";
        const auto& row = env.table.rows[r];
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? ", " : "") << '"' << detail::json_escape(row[i]) << '"';
        os << "]";
    }
    os << (env.table.rows.empty() ? "]" : "\n  ]") << "\n";
    os << "}\n";
}

inline std::string serialize(const ResultEnvelope& env, const std::string& format) {
    std::ostringstream os;
    if (format == "json")
        write_json(env, os);
    else
        write_csv(env, os);
    return os.str();
}

inline void write_results(const ResultEnvelope& env, const std::string& path,
                          const std::string& format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("write_results: cannot open '" + path +
                                 "': " + std::strerror(errno));
    out << serialize(env, format);
    out.flush();
    if (!out)
        throw std::runtime_error("write_results: write to '" + path +
                                 "' failed: " + std::strerror(errno));
}

// --- scaling-report table glue -------------------------------------------------

inline ResultTable table_from_scaling(const ScalingReport& report) {
    ResultTable t;
    t.columns = {"d", "protocol", "epsilon", "trials", "success_target", "samples_to_success"};
    for (const auto& row : report.rows)
        t.rows.push_back({std::to_string(row.d), protocol_name(row.protocol),
                          format_double(report.epsilon), std::to_string(report.trials),
                          format_double(report.success_target),
                          std::to_string(row.samples_to_success)});
    return t;
}

}  // namespace quditlearn
