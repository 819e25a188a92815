#include "coc/manifest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "coc/error.hpp"
#include "coc/image_io.hpp"

namespace coc::cli {

namespace fs = std::filesystem;

namespace {

/// Plain comma-split (no quoting; paths with commas are not supported).
/// Returns the fields plus the 1-based character column where each starts.
std::vector<std::pair<std::string, int>> split_csv_line(const std::string& line) {
    std::vector<std::pair<std::string, int>> out;
    int col = 1;
    std::string cur;
    int cur_col = 1;
    for (char ch : line) {
        if (ch == ',') {
            out.emplace_back(cur, cur_col);
            cur.clear();
            cur_col = col + 1;
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
        ++col;
    }
    out.emplace_back(cur, cur_col);
    return out;
}

[[noreturn]] void manifest_error(const fs::path& path, int line, int col,
                                 const std::string& what) {
    fail(errc::invalid_manifest,
         path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const fs::path& path, int line, int col) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        manifest_error(path, line, col, "not a number: '" + s + "'");
    return v;
}

} // namespace

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io_error, "cannot open manifest " + path.string());
    Manifest m;
    m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");

    std::string line;
    int line_no = 0;
    std::vector<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (line_no == 1) {
            static const char* expected[5] = {"id", "image_path", "grade", "cell_mask_path",
                                              "nucleus_mask_path"};
            if (fields.size() != 5)
                manifest_error(path, 1, 1, "header must have 5 columns");
            for (int i = 0; i < 5; ++i)
                if (fields[i].first != expected[i])
                    manifest_error(path, 1, fields[i].second,
                                   "expected header column '" + std::string(expected[i]) +
                                       "', got '" + fields[i].first + "'");
            continue;
        }
        if (fields.size() < 2 || fields.size() > 5)
            manifest_error(path, line_no, 1, "row must have 2..5 columns");
        while (fields.size() < 5) fields.emplace_back("", static_cast<int>(line.size()) + 1);

        ManifestRow row;
        row.id = fields[0].first;
        if (row.id.empty()) manifest_error(path, line_no, fields[0].second, "empty id");
        for (const std::string& s : seen_ids)
            if (s == row.id)
                manifest_error(path, line_no, fields[0].second, "duplicate id '" + row.id + "'");
        seen_ids.push_back(row.id);

        if (fields[1].first.empty())
            manifest_error(path, line_no, fields[1].second, "empty image path");
        row.image_path = m.base_dir / fields[1].first;

        if (!fields[2].first.empty()) {
            const auto g = parse_grade(fields[2].first);
            if (!g)
                manifest_error(path, line_no, fields[2].second,
                               "unknown grade token '" + fields[2].first + "'");
            row.grade = g;
        }
        if (!fields[3].first.empty()) row.cell_mask_path = m.base_dir / fields[3].first;
        if (!fields[4].first.empty()) row.nucleus_mask_path = m.base_dir / fields[4].first;
        m.rows.push_back(std::move(row));
    }
    return m;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::ostringstream out;
    out << "id,image_path,grade,cell_mask_path,nucleus_mask_path\n";
    auto rel = [&base](const fs::path& p) {
        std::error_code ec;
        const fs::path r = fs::relative(p, base, ec);
        return ec || r.empty() ? p.string() : r.string();
    };
    for (const ManifestRow& row : manifest.rows) {
        out << row.id << "," << rel(row.image_path) << ",";
        if (row.grade) out << grade_letter(*row.grade);
        out << ",";
        if (row.cell_mask_path) out << rel(*row.cell_mask_path);
        out << ",";
        if (row.nucleus_mask_path) out << rel(*row.nucleus_mask_path);
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
    std::ostringstream out;
    out << "id";
    for (int f = 1; f <= feat::kFeatureCount; ++f)
        out << ",f" << (f < 10 ? "0" : "") << f;
    out << ",grade\n";
    for (const FeatureRow& row : rows) {
        out << row.id;
        for (double v : row.values) out << "," << fmt_double(v);
        out << ",";
        if (row.grade) out << grade_letter(*row.grade);
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

std::vector<FeatureRow> read_features_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io_error, "cannot open features CSV " + path.string());
    std::vector<FeatureRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (line_no == 1) {
            if (fields.size() != feat::kFeatureCount + 2)
                manifest_error(path, 1, 1, "header must have 33 columns (id,f01..f31,grade)");
            if (fields.front().first != "id")
                manifest_error(path, 1, 1, "missing column 'id'");
            if (fields.back().first != "grade")
                manifest_error(path, 1, fields.back().second, "missing column 'grade'");
            for (int f = 1; f <= feat::kFeatureCount; ++f) {
                std::ostringstream expect;
                expect << "f" << (f < 10 ? "0" : "") << f;
                if (fields[f].first != expect.str())
                    manifest_error(path, 1, fields[f].second,
                                   "expected column '" + expect.str() + "', got '" +
                                       fields[f].first + "'");
            }
            continue;
        }
        if (fields.size() != feat::kFeatureCount + 2)
            manifest_error(path, line_no, 1, "row must have 33 columns");
        FeatureRow row;
        row.id = fields[0].first;
        if (row.id.empty()) manifest_error(path, line_no, 1, "empty id");
        for (int f = 0; f < feat::kFeatureCount; ++f)
            row.values[f] =
                parse_double(fields[f + 1].first, path, line_no, fields[f + 1].second);
        if (!fields.back().first.empty()) {
            const auto g = parse_grade(fields.back().first);
            if (!g)
                manifest_error(path, line_no, fields.back().second,
                               "unknown grade token '" + fields.back().first + "'");
            row.grade = g;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace coc::cli
