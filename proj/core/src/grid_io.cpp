#include "v2xdose/grid_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "v2xdose/errors.hpp"

namespace v2xdose {

std::string field_file_name(double height) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "field_z%.2f.csv", height);
    return buf;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_field_csv(const std::filesystem::path& path, const FieldLayer& layer) {
    std::string text = kFieldCsvHeader;
    text += '\n';
    for (const auto& s : layer.samples) {
        text += format_number(s.position.x) + ',' + format_number(s.position.y) + ',' + format_number(s.position.z) +
                ',' + format_number(s.discarded ? 0.0 : s.e_rms) + ',' +
                format_number(s.discarded ? -INFINITY : s.p_dbm) + ',' + std::to_string(s.path_count) + '\n';
    }
    write_text_file(path, text);
}

namespace {

double parse_cell(const std::string& cell, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) throw ParseError(where + ": bad number '" + cell + "'");
    return v;
}

}  // namespace

FieldLayer read_field_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kFieldCsvHeader) {
        throw ParseError(path.string() + ": expected header '" + std::string(kFieldCsvHeader) + "'");
    }
    FieldLayer layer;
    int line_no = 1;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw ParseError(where + ": expected 6 columns");
        FieldSample s;
        s.position = {parse_cell(cells[0], where), parse_cell(cells[1], where), parse_cell(cells[2], where)};
        s.e_rms = parse_cell(cells[3], where);
        s.p_dbm = parse_cell(cells[4], where);
        const double pc = parse_cell(cells[5], where);
        if (pc < 0 || pc != std::floor(pc)) throw ParseError(where + ": path_count must be a non-negative integer");
        s.path_count = static_cast<std::uint32_t>(pc);
        s.discarded = std::isinf(s.p_dbm) && s.p_dbm < 0;
        if (s.e_rms < 0.0) throw ParseError(where + ": negative field");
        if (first) {
            layer.height = s.position.z;
            first = false;
        } else if (std::abs(s.position.z - layer.height) > 1e-9) {
            throw ParseError(where + ": mixed heights in one field file");
        }
        layer.samples.push_back(s);
    }
    if (first) throw ParseError(path.string() + ": no samples");
    return layer;
}

void write_sar_csv(const std::filesystem::path& path, const FieldLayer& layer,
                   const std::vector<std::optional<double>>& sar) {
    std::string text = kSarCsvHeader;
    text += '\n';
    for (std::size_t i = 0; i < layer.samples.size(); ++i) {
        if (!sar[i]) continue;
        const Vec3& p = layer.samples[i].position;
        text += format_number(p.x) + ',' + format_number(p.y) + ',' + format_number(p.z) + ',' +
                format_number(*sar[i]) + '\n';
    }
    write_text_file(path, text);
}

}  // namespace v2xdose
