#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wgboost/cli.hpp"
#include "wgboost/error.hpp"
#include "wgboost/model_io.hpp"

namespace wgboost::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool skippable(std::string_view line) {
    const auto first = line.find_first_not_of(" \t\r");
    return first == std::string_view::npos || line[first] == '#';
}

} // namespace

Index CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("column '" + name + "' not found");
    return static_cast<Index>(it - columns.begin());
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    CsvTable table;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (skippable(line)) continue;
        auto fields = split_fields(line);
        if (!have_header) {
            table.columns = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns.size()) {
            throw DataError(source + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size()) + " fields, found " + std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            const char* end = f.data() + f.size();
            const char* begin = f.data() + (!f.empty() && f[0] == '+' ? 1 : 0);
            auto [ptr, ec] = std::from_chars(begin, end, row[c]);
            if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(row[c])) {
                throw DataError(source + " line " + std::to_string(line_no) + ", column '" + table.columns[c] +
                                "': non-numeric value '" + f + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (!have_header) throw DataError(source + ": missing header row");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return table;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw ContractError("cannot format number");
    return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) throw ContractError("CSV row width does not match the header");
    rows_.push_back(std::move(fields));
}

void CsvWriter::set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : meta_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    meta_.emplace_back(key, value);
}

std::string CsvWriter::str() const {
    std::string out;
    auto append_line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += '\n';
    };
    append_line(header_);
    for (const auto& row : rows_) append_line(row);
    out += '#';
    for (std::size_t i = 0; i < meta_.size(); ++i) {
        out += i ? "," : " ";
        out += meta_[i].first + "=" + meta_[i].second;
    }
    out += '\n';
    return out;
}

void CsvWriter::write(const fs::path& path) const { write_file_atomic(path, str()); }

Split random_split(Index n_rows, double fraction, std::uint64_t seed, Stream stream) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
    const auto n_second = static_cast<Index>(std::lround(fraction * static_cast<double>(n_rows)));
    if (n_second == 0 || n_second >= n_rows) {
        throw DataError("splitting " + std::to_string(n_rows) + " rows leaves an empty part");
    }
    std::vector<Index> perm(static_cast<std::size_t>(n_rows));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng = make_rng(seed, stream);
    std::shuffle(perm.begin(), perm.end(), rng);
    Split split;
    split.second.assign(perm.begin(), perm.begin() + n_second);
    split.first.assign(perm.begin() + n_second, perm.end());
    std::sort(split.first.begin(), split.first.end());
    std::sort(split.second.begin(), split.second.end());
    return split;
}

Matrix take_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

} // namespace wgboost::cli
