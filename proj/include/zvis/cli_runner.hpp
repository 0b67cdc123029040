#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "zvis/errors.hpp"

namespace zvis {

struct ConfigEntry {
    std::string value;
    int line = 0;
};

/// Flat sectioned key-value config: [section] headers, key = value lines,
/// '#' comments. Values are untyped strings; typed access below.
class Config {
public:
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");
    static Config parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    const std::string& origin() const { return origin_; }

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback);
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback);
    long get_long(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key, long fallback);
    std::uint64_t get_seed(const std::string& section, const std::string& key,
                           std::uint64_t fallback);
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_long(const std::string& section, const std::string& key, long value);

    /// Rejects any key outside the allowed (section, key) set; the
    /// [provenance] section is always tolerated. Error messages carry the
    /// offending line and field.
    void require_known_keys(const std::map<std::string, std::vector<std::string>>& allowed) const;

    /// Serialize in the same grammar (sections sorted, keys in insertion order).
    std::string to_text() const;

    const std::map<std::string, std::vector<std::pair<std::string, ConfigEntry>>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::vector<std::pair<std::string, ConfigEntry>>> sections_;
    std::string origin_;
};

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

/// Runs one experiment from a config file: writes results.csv (plus trace.csv
/// and value.txt for policy-iteration runs) and manifest.cfg into the output
/// directory. Returns the process exit status: 0 on success, nonzero on
/// invalid configs and on runs that end in a divergence status.
int run_experiment(const std::string& config_path, const CliOverrides& overrides,
                   std::ostream& log);

enum class OracleKind { Shell, DoubleWell, BmMfet };

struct CompareOptions {
    OracleKind oracle = OracleKind::Shell;
    double tol = 5e-2;
    std::string coord_col;   // default depends on the oracle
    std::string value_col;
    std::string out_path;    // empty = stdout
    // oracle parameters
    int dim = 10;
    double r1 = 5.0;
    double r2 = 10.0;
    double beta = 4.0;
    double boundary = 1.5;
    double a = -1.0;
    double b = 1.0;
    double sigma = 1.0;
};

/// Emits an error-table CSV (per-point absolute errors plus max-abs and RMSE
/// aggregates) for a results file against a closed-form oracle. Coordinates
/// outside the oracle domain produce NA rows and are skipped in aggregates.
/// Returns 0 when max|error| <= tol, 1 otherwise.
int compare_to_oracle(const std::string& results_csv, const CompareOptions& options,
                      std::ostream& log);

} // namespace zvis
