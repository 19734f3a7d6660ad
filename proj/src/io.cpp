#include "rdyn/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace rdyn {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw InputError("CsvWriter: cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw InputError("CsvWriter: column-count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << (i ? "," : "") << format_double(values[i]);
    out_ << "\n";
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InputError("CsvWriter: column-count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

nlohmann::json parse_scalar(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw InputError("config line " + std::to_string(line_no) + ": unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size())
            throw InputError("config line " + std::to_string(line_no) + ": bad number '" + v + "'");
        if (d == std::floor(d) && std::abs(d) < 9e15 && v.find_first_of(".eE") == std::string::npos)
            return static_cast<long long>(d);
        return d;
    } catch (const std::invalid_argument&) {
        throw InputError("config line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
    }
}

} // namespace

nlohmann::json parse_toml_subset(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* section = &root;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InputError("config line " + std::to_string(line_no) + ": malformed section");
            const std::string name = trim(line.substr(1, line.size() - 2));
            root[name] = nlohmann::json::object();
            section = &root[name];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!val.empty() && val.front() == '[') {
            if (val.back() != ']')
                throw InputError("config line " + std::to_string(line_no) + ": unterminated array");
            nlohmann::json arr = nlohmann::json::array();
            std::string body = val.substr(1, val.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ','))
                if (!trim(item).empty()) arr.push_back(parse_scalar(item, line_no));
            (*section)[key] = std::move(arr);
        } else {
            (*section)[key] = parse_scalar(val, line_no);
        }
    }
    return root;
}

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return nlohmann::json::parse(text);
        break;
    }
    return parse_toml_subset(text);
}

std::string config_hash(const nlohmann::json& config) {
    const std::string dump = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

} // namespace rdyn
