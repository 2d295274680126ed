#include "cdexggm/io.hpp"

#include "cdexggm/error.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cdexggm {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t line) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size()) {
        throw ParseError("line " + std::to_string(line) + ": non-numeric cell '" + std::string(cell) + "'", line);
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

Matrix parse_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    std::size_t width = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view content = trim(raw);
        if (content.empty() || content.front() == '#') continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = content.find(',', start);
            row.push_back(parse_cell(content.substr(start, comma - start), line));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw ParseError("line " + std::to_string(line) + ": expected " + std::to_string(width) + " columns, found " +
                                 std::to_string(row.size()),
                             line);
        }
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

Matrix read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header) {
    std::string text;
    for (const auto& h : header) text += "# " + h + "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) text += ',';
            text += format_number(m(r, c));
        }
        text += '\n';
    }
    write_text(path, text);
}

Dataset read_dataset(const std::filesystem::path& y_path, const std::optional<std::filesystem::path>& x_path,
                     bool center, const std::optional<std::vector<std::pair<double, double>>>& scale_bounds) {
    Matrix y = read_csv(y_path);
    if (y.rows() == 0) throw ParseError("'" + y_path.string() + "' contains no observations", 0);
    CovariateDesign design = CovariateDesign::none(static_cast<std::size_t>(y.rows()));
    if (x_path) {
        const Matrix raw = read_csv(*x_path);
        if (raw.rows() != y.rows()) {
            throw ParseError("Y has " + std::to_string(y.rows()) + " rows but X has " + std::to_string(raw.rows()), 0);
        }
        design = min_max_scale(raw, scale_bounds).design;
    }
    return Dataset(std::move(y), std::move(design), center ? Centering::center : Centering::assume_centered);
}

std::string config_digest(const std::string& text) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < 8 && i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

}  // namespace cdexggm
