#pragma once

// File formats: CSV matrices and label files, flat key-value configs, JSON
// run reports, selection tables, and the SVG spot map.
//
// Numeric text is written with %.17g so that every double round-trips
// exactly; reports are serialized through nlohmann::json, whose shortest
// round-trip double formatting keeps reruns byte-identical.

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/estimation.hpp"
#include "spacoclust/selection.hpp"
#include "spacoclust/simulate.hpp"
#include "spacoclust/version.hpp"

namespace spacoclust {
namespace io {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    if (t.empty()) {
        throw Error(Errc::ParseError, where + ": empty numeric field");
    }
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
        throw Error(Errc::ParseError, where + ": cannot parse '" + t + "' as a number");
    }
    return v;
}

inline long parse_long(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw Error(Errc::ParseError, where + ": cannot parse '" + t + "' as an integer");
    }
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::IoError, "cannot write '" + path + "'");
    }
    out << content;
    if (!out) {
        throw Error(Errc::IoError, "write failed for '" + path + "'");
    }
}

inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- expression matrix and coordinates ----

inline std::string serialize_matrix(const ExpressionDataset& ds) {
    std::ostringstream out;
    out << "id";
    for (const auto& id : ds.col_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
        out << ds.row_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ds.n_cols(); ++j) {
            out << ',' << format_double(ds.values(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline std::string serialize_coords(const ExpressionDataset& ds) {
    std::ostringstream out;
    out << "spot_id,x,y\n";
    for (std::size_t j = 0; j < ds.col_ids.size(); ++j) {
        out << ds.col_ids[j] << ',' << format_double(ds.coords[j][0]) << ','
            << format_double(ds.coords[j][1]) << '\n';
    }
    return out.str();
}

/// Reads a coordinate CSV (header `spot_id,x,y`) into (id, coord) pairs in
/// file order, rejecting repeated ids.
inline std::vector<std::pair<std::string, Coord>> load_coords_list(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    long line_no = 0;
    std::vector<std::pair<std::string, Coord>> out;
    std::unordered_map<std::string, bool> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (line_no == 1 && !cells.empty() && trim(cells[0]) == "spot_id") continue;
        if (cells.size() != 3) {
            throw Error(Errc::ParseError,
                        path + ":" + std::to_string(line_no) + ": expected spot_id,x,y");
        }
        const std::string id = trim(cells[0]);
        if (seen.count(id)) {
            throw Error(Errc::DuplicateColumnId,
                        path + ":" + std::to_string(line_no) + ": repeated coordinates for '" + id + "'");
        }
        seen[id] = true;
        out.emplace_back(id, Coord{parse_double(cells[1], path + ":" + std::to_string(line_no)),
                                   parse_double(cells[2], path + ":" + std::to_string(line_no))});
    }
    return out;
}

/// Loads a matrix CSV (header row of spot ids, first column of gene ids) and
/// a coordinate CSV (spot_id,x,y), joins coordinates by spot id, and
/// validates the assembled dataset.
inline ExpressionDataset load_dataset(const std::string& matrix_path,
                                      const std::string& coords_path) {
    ExpressionDataset ds;
    {
        std::istringstream in(read_file(matrix_path));
        std::string line;
        long line_no = 0;
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            const std::vector<std::string> cells = split(line, ',');
            if (line_no == 1) {
                for (std::size_t j = 1; j < cells.size(); ++j) {
                    ds.col_ids.push_back(trim(cells[j]));
                }
                continue;
            }
            if (cells.size() != ds.col_ids.size() + 1) {
                throw Error(Errc::ParseError, matrix_path + ":" + std::to_string(line_no) +
                                                  ": expected " + std::to_string(ds.col_ids.size() + 1) +
                                                  " fields, found " + std::to_string(cells.size()));
            }
            ds.row_ids.push_back(trim(cells[0]));
            std::vector<double> row;
            row.reserve(cells.size() - 1);
            for (std::size_t j = 1; j < cells.size(); ++j) {
                row.push_back(parse_double(cells[j], matrix_path + ":" + std::to_string(line_no) +
                                                         ":col " + std::to_string(j + 1)));
            }
            rows.push_back(std::move(row));
        }
        if (ds.col_ids.empty() || rows.empty()) {
            throw Error(Errc::ParseError, matrix_path + ": matrix has no data");
        }
        ds.values.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(ds.col_ids.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
        }
    }
    {
        std::unordered_map<std::string, bool> known;
        for (const auto& id : ds.col_ids) known[id] = true;
        std::unordered_map<std::string, Coord> by_id;
        for (const auto& [id, coord] : load_coords_list(coords_path)) {
            if (!known.count(id)) {
                throw Error(Errc::UnknownSpotId,
                            coords_path + ": spot id '" + id + "' not in the matrix header");
            }
            by_id[id] = coord;
        }
        ds.coords.reserve(ds.col_ids.size());
        for (const auto& id : ds.col_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw Error(Errc::MissingCoordinate, coords_path + ": no coordinates for spot '" + id + "'");
            }
            ds.coords.push_back(it->second);
        }
    }
    const ValidationReport report = validate_dataset(ds);
    if (!report.ok()) {
        throw Error(report.violations.front().code, report.violations.front().message);
    }
    return ds;
}

// ---- label files ----

inline std::string serialize_labels(const std::vector<std::string>& ids,
                                    const std::vector<int>& labels) {
    if (ids.size() != labels.size()) {
        throw Error(Errc::LengthMismatch, "ids and labels differ in length");
    }
    std::ostringstream out;
    out << "id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << labels[i] << '\n';
    }
    return out.str();
}

inline std::vector<std::pair<std::string, int>> parse_labels(const std::string& content,
                                                             const std::string& where) {
    std::istringstream in(content);
    std::string line;
    long line_no = 0;
    std::vector<std::pair<std::string, int>> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (line_no == 1 && cells.size() >= 2 && trim(cells[0]) == "id") continue;
        if (cells.size() != 2) {
            throw Error(Errc::ParseError, where + ":" + std::to_string(line_no) + ": expected id,cluster");
        }
        out.emplace_back(trim(cells[0]),
                         static_cast<int>(parse_long(cells[1], where + ":" + std::to_string(line_no))));
    }
    if (out.empty()) {
        throw Error(Errc::ParseError, where + ": no labels found");
    }
    return out;
}

// ---- flat key-value configuration ----

/// key = value file with '#' comments.  Every key must be consumed by the
/// caller; leftovers are reported as errors so typos cannot silently fall
/// back to defaults.
class ConfigMap {
public:
    ConfigMap() = default;

    static ConfigMap from_file(const std::string& path) {
        ConfigMap cfg;
        cfg.source_ = path;
        std::istringstream in(read_file(path));
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            if (trim(line).empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw Error(Errc::ParseError,
                            path + ":" + std::to_string(line_no) + ": expected key = value");
            }
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) {
                throw Error(Errc::ParseError, path + ":" + std::to_string(line_no) + ": empty key");
            }
            if (cfg.values_.count(key)) {
                throw Error(Errc::ParseError,
                            path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
            }
            cfg.values_[key] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return parse_double(it->second, source_ + ": key '" + key + "'");
    }

    long get_long(const std::string& key, long fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return parse_long(it->second, source_ + ": key '" + key + "'");
    }

    std::vector<double> get_double_list(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        used_.insert(key);
        std::vector<double> out;
        for (const auto& cell : split(it->second, ',')) {
            out.push_back(parse_double(cell, source_ + ": key '" + key + "'"));
        }
        return out;
    }

    /// Semicolon-separated rows of comma-separated numbers.
    Eigen::MatrixXd get_matrix(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        used_.insert(key);
        std::vector<std::vector<double>> rows;
        for (const auto& row : split(it->second, ';')) {
            std::vector<double> vals;
            for (const auto& cell : split(row, ',')) {
                vals.push_back(parse_double(cell, source_ + ": key '" + key + "'"));
            }
            rows.push_back(std::move(vals));
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.front().size()) {
                throw Error(Errc::ParseError, source_ + ": key '" + key + "': ragged matrix rows");
            }
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
        }
        return m;
    }

    /// Errors out if any key was never consumed.
    void finish() const {
        std::vector<std::string> unknown;
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) unknown.push_back(key);
        }
        if (!unknown.empty()) {
            std::string list;
            for (const auto& k : unknown) {
                if (!list.empty()) list += ", ";
                list += "'" + k + "'";
            }
            throw Error(Errc::ConfigInvalid, source_ + ": unknown key(s) " + list);
        }
    }

private:
    std::string source_ = "<config>";
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

// ---- model / fit / scenario assembly from config ----

inline ModelSpec model_spec_from_config(ConfigMap& cfg) {
    ModelSpec spec;
    spec.K = static_cast<int>(cfg.get_long("K", 1));
    spec.R = static_cast<int>(cfg.get_long("R", 1));
    spec.kernel = parse_kernel_kind(cfg.get_string("kernel", "exponential"));
    spec.c_delta = cfg.get_double("c_delta", 10.0);
    for (int r = 1; r <= spec.R; ++r) {
        const std::string key = "phi_" + std::to_string(r);
        if (!cfg.has(key)) continue;
        const std::vector<double> vals = cfg.get_double_list(key);
        Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
        if (spec.phi.empty()) spec.phi.resize(static_cast<std::size_t>(spec.R));
        spec.phi[static_cast<std::size_t>(r - 1)] = v;
    }
    if (!spec.phi.empty()) {
        for (const auto& v : spec.phi) {
            if (v.size() == 0) {
                throw Error(Errc::ConfigInvalid, "phi_r keys must cover every column cluster or none");
            }
        }
    }
    spec.check();
    return spec;
}

inline FitConfig fit_config_from_config(ConfigMap& cfg) {
    FitConfig fc;
    fc.max_iterations = static_cast<int>(cfg.get_long("max_iterations", fc.max_iterations));
    fc.se_repeats_per_iteration =
        static_cast<int>(cfg.get_long("se_repeats_per_iteration", fc.se_repeats_per_iteration));
    fc.m_max = static_cast<int>(cfg.get_long("m_max", fc.m_max));
    fc.n_starts = static_cast<int>(cfg.get_long("n_starts", fc.n_starts));
    fc.seed = static_cast<std::uint64_t>(cfg.get_long("seed", static_cast<long>(fc.seed)));
    fc.move_m1_probability = cfg.get_double("move_m1_probability", fc.move_m1_probability);
    fc.optimizer_tolerance = cfg.get_double("optimizer_tolerance", fc.optimizer_tolerance);
    fc.parameter_floor = cfg.get_double("parameter_floor", fc.parameter_floor);
    fc.optimizer_max_iterations =
        static_cast<int>(cfg.get_long("optimizer_max_iterations", fc.optimizer_max_iterations));
    fc.threads = static_cast<int>(cfg.get_long("threads", fc.threads));
    fc.check();
    return fc;
}

inline KernelParams kernel_params_from_text(const std::string& text, const std::string& where) {
    std::istringstream in(text);
    std::string name;
    in >> name;
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    KernelParams params;
    params.kind = parse_kernel_kind(name);
    params.values.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) params.values[static_cast<Eigen::Index>(i)] = vals[i];
    try {
        params.check();
    } catch (const Error& e) {
        throw Error(Errc::ConfigInvalid, where + ": " + e.what());
    }
    return params;
}

inline WishartSpec wishart_spec_from_text(const std::string& text, const std::string& where) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    WishartSpec spec;
    bool ok = false;
    if (kind == "fixed") {
        spec.kind = WishartSpec::Kind::FixedIso;
        ok = static_cast<bool>(in >> spec.scale);
    } else if (kind == "iso") {
        spec.kind = WishartSpec::Kind::Iso;
        ok = static_cast<bool>(in >> spec.df >> spec.scale);
    } else if (kind == "scaledprev") {
        spec.kind = WishartSpec::Kind::ScaledPrev;
        ok = static_cast<bool>(in >> spec.df >> spec.prev >> spec.divisor);
    } else if (kind == "nested") {
        spec.kind = WishartSpec::Kind::Nested;
        ok = static_cast<bool>(in >> spec.df >> spec.divisor >> spec.aux_df >> spec.aux_scale);
    }
    if (!ok) {
        throw Error(Errc::ConfigInvalid,
                    where + ": expected 'fixed s' | 'iso df s' | 'scaledprev df prev div' | "
                            "'nested df div aux_df aux_s'");
    }
    return spec;
}

inline ScenarioConfig scenario_config_from_config(ConfigMap& cfg, Scenario scenario,
                                                  std::uint64_t seed) {
    ScenarioConfig sc = default_scenario_config(scenario, seed);
    sc.seed = static_cast<std::uint64_t>(cfg.get_long("seed", static_cast<long>(sc.seed)));
    sc.K = static_cast<int>(cfg.get_long("K", sc.K));
    sc.R = static_cast<int>(cfg.get_long("R", sc.R));
    sc.c_delta = cfg.get_double("c_delta", sc.c_delta);
    sc.coord_spacing = cfg.get_double("spacing", sc.coord_spacing);

    if (cfg.has("row_sizes")) {
        sc.row_sizes.clear();
        for (double v : cfg.get_double_list("row_sizes")) sc.row_sizes.push_back(static_cast<int>(v));
    }
    if (cfg.has("col_sizes")) {
        sc.col_sizes.clear();
        for (double v : cfg.get_double_list("col_sizes")) sc.col_sizes.push_back(static_cast<int>(v));
    }
    if (cfg.has("snr")) sc.snr = cfg.get_matrix("snr");
    if (cfg.has("mu")) sc.mu = cfg.get_matrix("mu");

    sc.kernels.resize(static_cast<std::size_t>(sc.R));
    if (static_cast<int>(default_scenario_config(scenario, seed).kernels.size()) != sc.R) {
        // Shape changed relative to the defaults: require explicit kernels.
        for (int r = 1; r <= sc.R; ++r) {
            if (!cfg.has("kernel_" + std::to_string(r))) {
                throw Error(Errc::ConfigInvalid,
                            "kernel_" + std::to_string(r) + " required when R differs from the default");
            }
        }
    } else {
        sc.kernels = default_scenario_config(scenario, seed).kernels;
    }
    for (int r = 1; r <= sc.R; ++r) {
        const std::string key = "kernel_" + std::to_string(r);
        if (cfg.has(key)) {
            sc.kernels[static_cast<std::size_t>(r - 1)] =
                kernel_params_from_text(cfg.get_string(key, ""), "key '" + key + "'");
        }
    }

    {
        const ScenarioConfig defaults = default_scenario_config(scenario, seed);
        sc.wisharts.resize(static_cast<std::size_t>(sc.K));
        for (int k = 1; k <= sc.K; ++k) {
            const std::string key = "wishart_" + std::to_string(k);
            if (cfg.has(key)) {
                sc.wisharts[static_cast<std::size_t>(k - 1)] =
                    wishart_spec_from_text(cfg.get_string(key, ""), "key '" + key + "'");
            } else if (k <= static_cast<int>(defaults.wisharts.size())) {
                sc.wisharts[static_cast<std::size_t>(k - 1)] = defaults.wisharts[static_cast<std::size_t>(k - 1)];
            } else {
                throw Error(Errc::ConfigInvalid,
                            key + " required when K differs from the default");
            }
        }
    }

    if (scenario == Scenario::S4) {
        sc.lambda_signal = cfg.get_double("lambda_signal", sc.lambda_signal);
        sc.lambda_noise = cfg.get_double("lambda_noise", sc.lambda_noise);
        if (cfg.has("noise_kernel")) {
            sc.noise_kernel =
                kernel_params_from_text(cfg.get_string("noise_kernel", ""), "key 'noise_kernel'");
        }
        if (cfg.has("noise_wishart")) {
            sc.noise_wishart =
                wishart_spec_from_text(cfg.get_string("noise_wishart", ""), "key 'noise_wishart'");
        }
        sc.noise_snr = cfg.get_double("noise_snr", sc.noise_snr);
    }
    if (scenario == Scenario::S5) {
        bool any = false;
        for (int r = 1; r <= sc.R; ++r) {
            if (cfg.has("nested_rows_" + std::to_string(r))) any = true;
        }
        if (any) {
            sc.nested_rows.assign(static_cast<std::size_t>(sc.R), {});
            for (int r = 1; r <= sc.R; ++r) {
                const std::string key = "nested_rows_" + std::to_string(r);
                std::vector<int> part;
                for (double v : cfg.get_double_list(key)) part.push_back(static_cast<int>(v));
                if (part.empty()) {
                    throw Error(Errc::ConfigInvalid, key + " required for every column cluster");
                }
                sc.nested_rows[static_cast<std::size_t>(r - 1)] = std::move(part);
            }
        }
    }
    return sc;
}

// ---- run report ----

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json kernel_params_to_json(const KernelParams& k) {
    nlohmann::json vals = nlohmann::json::array();
    for (Eigen::Index i = 0; i < k.values.size(); ++i) vals.push_back(k.values[i]);
    return nlohmann::json{{"kind", kernel_kind_name(k.kind)}, {"values", std::move(vals)}};
}

inline nlohmann::json theta_to_json(const ThetaGrid& theta) {
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 0; k < theta.K; ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int r = 0; r < theta.R; ++r) {
            const BlockParameters& b = theta.at(k, r);
            row.push_back({{"mu", b.mu},
                           {"tau", b.tau},
                           {"xi", b.xi},
                           {"alpha", b.alpha},
                           {"beta", b.beta},
                           {"snr", b.snr()}});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ThetaGrid theta_from_json(const nlohmann::json& j) {
    ThetaGrid theta(static_cast<int>(j.size()), j.empty() ? 0 : static_cast<int>(j.front().size()));
    for (int k = 0; k < theta.K; ++k) {
        for (int r = 0; r < theta.R; ++r) {
            const auto& cell = j.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(r));
            BlockParameters& b = theta.at(k, r);
            b.mu = cell.at("mu").get<double>();
            b.tau = cell.at("tau").get<double>();
            b.xi = cell.at("xi").get<double>();
            b.alpha = cell.at("alpha").get<double>();
            b.beta = cell.at("beta").get<double>();
        }
    }
    return theta;
}

inline nlohmann::json run_report(const ExpressionDataset& ds, const ModelSpec& spec,
                                 const FitConfig& config, const FitResult& result,
                                 const nlohmann::json& inputs, double wallclock_seconds) {
    nlohmann::json phi = nlohmann::json::array();
    for (const auto& v : result.phi) {
        nlohmann::json vec = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) vec.push_back(v[i]);
        phi.push_back(std::move(vec));
    }
    nlohmann::json starts = nlohmann::json::array();
    for (const auto& s : result.starts) {
        starts.push_back({{"start_index", s.start_index},
                          {"stream_seed", s.stream_seed},
                          {"best_loglik", s.best_loglik},
                          {"best_iteration", s.best_iteration},
                          {"se_accepted", s.se_accepted},
                          {"se_rejected", s.se_rejected},
                          {"se_infeasible", s.se_infeasible},
                          {"monotonicity_violations", s.monotonicity_violations}});
    }
    return nlohmann::json{
        {"version", version},
        {"inputs", inputs},
        {"model",
         {{"K", spec.K},
          {"R", spec.R},
          {"kernel", kernel_kind_name(spec.kernel)},
          {"c_delta", spec.c_delta}}},
        {"config",
         {{"max_iterations", config.max_iterations},
          {"se_repeats_per_iteration", config.se_repeats_per_iteration},
          {"m_max", config.m_max},
          {"n_starts", config.n_starts},
          {"seed", config.seed},
          {"move_m1_probability", config.move_m1_probability},
          {"optimizer_tolerance", config.optimizer_tolerance},
          {"parameter_floor", config.parameter_floor},
          {"optimizer_max_iterations", config.optimizer_max_iterations},
          {"threads", config.threads}}},
        {"result",
         {{"row_ids", ds.row_ids},
          {"col_ids", ds.col_ids},
          {"row_labels", result.labels.rows},
          {"col_labels", result.labels.cols},
          {"theta", theta_to_json(result.theta)},
          {"phi", std::move(phi)},
          {"best_loglik", result.best_loglik},
          {"best_iteration", result.best_iteration},
          {"best_start", result.best_start},
          {"icl", result.icl},
          {"loglik_trace", result.loglik_trace},
          {"seed", result.seed},
          {"n_starts", result.n_starts},
          {"monotonicity_violations", result.monotonicity_violations},
          {"starts", std::move(starts)}}},
        {"wallclock_seconds", wallclock_seconds}};
}

inline nlohmann::json load_report(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    if (!j.contains("result") || !j["result"].contains("row_labels")) {
        throw Error(Errc::ParseError, path + ": not a run report");
    }
    return j;
}

// ---- selection table ----

inline std::string serialize_selection_table(const std::vector<SelectionRow>& table) {
    std::ostringstream out;
    out << "K,R,kernel,loglik,icl,best_start,best_iteration,status\n";
    for (const auto& row : table) {
        out << row.entry.K << ',' << row.entry.R << ',' << kernel_kind_name(row.entry.kernel) << ','
            << format_double(row.loglik) << ',' << format_double(row.icl) << ',' << row.best_start
            << ',' << row.best_iteration << ',' << row.status << '\n';
    }
    return out.str();
}

// ---- plots ----

inline std::string serialize_block_summary(const ThetaGrid& theta) {
    std::ostringstream out;
    out << "k,r,mu,tau,xi,snr,alpha,beta\n";
    for (int k = 0; k < theta.K; ++k) {
        for (int r = 0; r < theta.R; ++r) {
            const BlockParameters& b = theta.at(k, r);
            out << (k + 1) << ',' << (r + 1) << ',' << format_double(b.mu) << ','
                << format_double(b.tau) << ',' << format_double(b.xi) << ','
                << format_double(b.snr()) << ',' << format_double(b.alpha) << ','
                << format_double(b.beta) << '\n';
        }
    }
    return out.str();
}

/// Spot map colored by column cluster.
inline std::string spot_map_svg(const std::vector<Coord>& coords, const std::vector<int>& col_labels) {
    if (coords.size() != col_labels.size()) {
        throw Error(Errc::LengthMismatch, "coordinates and labels differ in length");
    }
    static const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                    "#66ccee", "#aa3377", "#bbbbbb", "#222255",
                                    "#996633", "#117755", "#dd66aa", "#555555"};
    double min_x = coords.front()[0];
    double max_x = min_x;
    double min_y = coords.front()[1];
    double max_y = min_y;
    for (const auto& c : coords) {
        min_x = std::min(min_x, c[0]);
        max_x = std::max(max_x, c[0]);
        min_y = std::min(min_y, c[1]);
        max_y = std::max(max_y, c[1]);
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double pad = 0.05 * span;
    const double scale = 760.0 / (span + 2.0 * pad);
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
           "viewBox=\"0 0 800 800\">\n";
    out << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
    for (std::size_t j = 0; j < coords.size(); ++j) {
        const double x = 20.0 + (coords[j][0] - min_x + pad) * scale;
        const double y = 780.0 - (coords[j][1] - min_y + pad) * scale;
        const char* color = palette[static_cast<std::size_t>((col_labels[j] - 1) % 12)];
        char buf[160];
        std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n", x,
                      y, color);
        out << buf;
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace io
} // namespace spacoclust
