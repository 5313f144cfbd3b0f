#include "ivmcd/io.hpp"

#include "ivmcd/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ivmcd {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    for (auto& c : cells) {
        const auto b = c.find_first_not_of(" \t");
        const auto e = c.find_last_not_of(" \t\r");
        c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
    }
    return cells;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct HeaderMap {
    CsvSchema schema;
    std::vector<std::size_t> first;   // lo or center column per variable
    std::vector<std::size_t> second;  // hi or range column per variable
    std::ptrdiff_t id_col = -1;
    std::ptrdiff_t label_col = -1;
    std::size_t width = 0;
};

HeaderMap parse_header(const std::string& line, const std::string& source) {
    const auto cols = split_csv_line(line);
    HeaderMap h;
    h.width = cols.size();
    bool bounds = false;
    bool center_range = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto& name = cols[k];
        if (name == "id") {
            h.id_col = static_cast<std::ptrdiff_t>(k);
        } else if (name == "label") {
            h.label_col = static_cast<std::ptrdiff_t>(k);
        } else if (ends_with(name, "_lo") || ends_with(name, "_c")) {
            const bool is_lo = ends_with(name, "_lo");
            (is_lo ? bounds : center_range) = true;
            const std::string var = name.substr(0, name.size() - (is_lo ? 3 : 2));
            const std::string partner = var + (is_lo ? "_hi" : "_r");
            std::size_t pk = cols.size();
            for (std::size_t q = 0; q < cols.size(); ++q)
                if (cols[q] == partner) pk = q;
            IVMCD_REQUIRE(pk < cols.size(), source + ":1: column " + name + " has no matching " + partner);
            h.schema.variables.push_back(var);
            h.first.push_back(k);
            h.second.push_back(pk);
        } else if (ends_with(name, "_hi") || ends_with(name, "_r")) {
            continue;
        } else {
            throw InputError(source + ":1: unrecognized column \"" + name +
                             "\" (expected <var>_lo/<var>_hi, <var>_c/<var>_r, id or label)");
        }
    }
    IVMCD_REQUIRE(!(bounds && center_range), source + ":1: header mixes bounds and center-range columns");
    IVMCD_REQUIRE(!h.schema.variables.empty(), source + ":1: header declares no interval variables");
    const std::size_t consumed = 2 * h.first.size() + (h.id_col >= 0) + (h.label_col >= 0);
    IVMCD_REQUIRE(consumed == cols.size(), source + ":1: header has unpaired interval columns");
    h.schema.layout = bounds ? CsvLayout::Bounds : CsvLayout::CenterRange;
    return h;
}

double parse_number(const std::string& cell, const std::string& where) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = cell.data() + cell.size();
    if (!cell.empty() && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    IVMCD_REQUIRE(ec == std::errc() && ptr == e && std::isfinite(v),
                  where + ": \"" + cell + "\" is not a finite number");
    return v;
}

}  // namespace

IntervalDataset read_interval_csv(std::istream& in, std::vector<LatentSpec> latents, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    HeaderMap h;
    bool have_header = false;
    std::vector<std::vector<double>> firsts, seconds;
    std::vector<int> labels;
    std::vector<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        if (!have_header) {
            h = parse_header(line, source);
            have_header = true;
            continue;
        }
        const auto cells = split_csv_line(line);
        const std::string where =
            source + ":" + std::to_string(line_no) + " (data row " + std::to_string(firsts.size() + 1) + ")";
        IVMCD_REQUIRE(cells.size() == h.width, where + ": expected " + std::to_string(h.width) +
                                                   " fields, found " + std::to_string(cells.size()));
        std::vector<double> a, b;
        for (std::size_t j = 0; j < h.first.size(); ++j) {
            const double u = parse_number(cells[h.first[j]], where);
            const double v = parse_number(cells[h.second[j]], where);
            if (h.schema.layout == CsvLayout::Bounds) {
                IVMCD_REQUIRE(v >= u, where + ": upper bound " + cells[h.second[j]] + " below lower bound " +
                                          cells[h.first[j]] + " for variable " + h.schema.variables[j]);
                a.push_back((u + v) / 2.0);
                b.push_back(v - u);
            } else {
                IVMCD_REQUIRE(v >= 0.0, where + ": negative range for variable " + h.schema.variables[j]);
                a.push_back(u);
                b.push_back(v);
            }
        }
        firsts.push_back(std::move(a));
        seconds.push_back(std::move(b));
        if (h.label_col >= 0) {
            const double l = parse_number(cells[static_cast<std::size_t>(h.label_col)], where);
            IVMCD_REQUIRE(l == 0.0 || l == 1.0, where + ": label must be 0 or 1");
            labels.push_back(static_cast<int>(l));
        }
        ids.push_back(h.id_col >= 0 ? cells[static_cast<std::size_t>(h.id_col)] : std::to_string(firsts.size()));
    }
    IVMCD_REQUIRE(have_header, source + ": empty file");
    IVMCD_REQUIRE(!firsts.empty(), source + ": no data rows");
    const auto n = static_cast<Index>(firsts.size());
    const auto p = static_cast<Index>(h.first.size());
    IVMCD_REQUIRE(static_cast<Index>(latents.size()) == p,
                  source + ": latent config lists " + std::to_string(latents.size()) + " variables, data has " +
                      std::to_string(p));
    Matrix c(n, p), r(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) {
            c(i, j) = firsts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            r(i, j) = seconds[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    std::optional<std::vector<int>> lab;
    if (h.label_col >= 0) lab = std::move(labels);
    IntervalDataset ds(std::move(c), std::move(r), std::move(latents), std::move(lab));
    ds.variable_names = h.schema.variables;
    ds.row_ids = std::move(ids);
    return ds;
}

IntervalDataset load_interval_csv(const std::filesystem::path& path, std::vector<LatentSpec> latents) {
    std::ifstream in(path);
    IVMCD_REQUIRE(in.good(), "cannot open data file " + path.string());
    return read_interval_csv(in, std::move(latents), path.string());
}

CsvSchema read_csv_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    IVMCD_REQUIRE(in.good(), "cannot open data file " + path.string());
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos && line[0] != '#')
            return parse_header(line, path.string()).schema;
    throw InputError(path.string() + ": empty file");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_interval_csv(std::ostream& out, const IntervalDataset& ds, CsvLayout layout) {
    const bool has_ids = !ds.row_ids.empty();
    std::vector<std::string> names = ds.variable_names;
    if (names.empty())
        for (Index j = 0; j < ds.p(); ++j) names.push_back("v" + std::to_string(j + 1));
    if (has_ids) out << "id,";
    for (Index j = 0; j < ds.p(); ++j) {
        const auto& v = names[static_cast<std::size_t>(j)];
        out << (j ? "," : "") << v << (layout == CsvLayout::Bounds ? "_lo," : "_c,") << v
            << (layout == CsvLayout::Bounds ? "_hi" : "_r");
    }
    if (ds.labels()) out << ",label";
    out << '\n';
    for (Index i = 0; i < ds.n(); ++i) {
        if (has_ids) out << ds.row_ids[static_cast<std::size_t>(i)] << ',';
        for (Index j = 0; j < ds.p(); ++j) {
            const double c = ds.centers()(i, j);
            const double r = ds.ranges()(i, j);
            if (j) out << ',';
            if (layout == CsvLayout::Bounds)
                out << format_double(c - r / 2.0) << ',' << format_double(c + r / 2.0);
            else
                out << format_double(c) << ',' << format_double(r);
        }
        if (ds.labels()) out << ',' << (*ds.labels())[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

}  // namespace ivmcd
