#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdyn/map_model.hpp"

namespace rdyn {

/// Shortest round-trip decimal form; deterministic across runs.
std::string format_double(double v);

/// Minimal CSV emitter with fixed formatting so identical inputs give
/// byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t columns_;
};

/// Parses a small TOML subset: [section] headers and key = value lines with
/// string, number, boolean, or flat-array values. Returns the equivalent
/// JSON object. Files whose first significant byte is '{' are parsed as JSON.
nlohmann::json load_config(const std::string& path);
nlohmann::json parse_toml_subset(const std::string& text);

/// FNV-1a over the canonical JSON dump, hex-encoded.
std::string config_hash(const nlohmann::json& config);

void write_json(const std::string& path, const nlohmann::json& j);

} // namespace rdyn
