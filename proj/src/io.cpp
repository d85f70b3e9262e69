#include "isa/io.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace isa::io {

namespace {

double parse_field(std::string_view field, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw std::invalid_argument("matrix CSV: cannot parse '" + std::string(field) + "' on line " +
                                    std::to_string(line));
    }
    return v;
}

}  // namespace

MatrixXd parse_matrix_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(parse_field(rest.substr(0, comma), line_no));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument("matrix CSV: ragged row on line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("matrix CSV: no data");
    MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return m;
}

MatrixXd read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(read_text(path)); }

std::string format_double(double v, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
    return buf;
}

std::string format_matrix_csv(const MatrixXd& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c > 0) out += ',';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m) { write_text(path, format_matrix_csv(m)); }

GroupPartition parse_partition_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("partition JSON: ") + e.what());
    }
    if (!j.contains("groups") || !j["groups"].is_array()) {
        throw std::invalid_argument("partition JSON: missing \"groups\" array");
    }
    std::vector<std::vector<Index>> groups;
    for (const auto& g : j["groups"]) {
        std::vector<Index> group;
        for (const auto& i : g) {
            if (!i.is_number_integer() || i.get<Index>() < 1) {
                throw std::invalid_argument("partition JSON: indices must be positive integers");
            }
            group.push_back(i.get<Index>() - 1);
        }
        groups.push_back(std::move(group));
    }
    return GroupPartition(std::move(groups));
}

GroupPartition read_partition_json(const std::filesystem::path& path) { return parse_partition_json(read_text(path)); }

std::string format_partition_json(const GroupPartition& p) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : p.groups()) {
        nlohmann::json group = nlohmann::json::array();
        for (Index i : g) group.push_back(i + 1);
        groups.push_back(std::move(group));
    }
    return nlohmann::json{{"groups", groups}}.dump() + "\n";
}

void write_partition_json(const std::filesystem::path& path, const GroupPartition& p) {
    write_text(path, format_partition_json(p));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace isa::io
