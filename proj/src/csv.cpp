#include "uplift/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "uplift/errors.hpp"

namespace uplift {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0') || errno == ERANGE)
        throw DataError("non-numeric cell at row " + std::to_string(row) +
                        ", column '" + col + "': '" + cell + "'");
    return v;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            if (found != header.size())
                throw SchemaError("duplicate column '" + name + "' in header");
            found = i;
        }
    }
    if (found == header.size())
        throw SchemaError("missing column '" + name + "' in header");
    return found;
}

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string IngestResult::level_map_json() const {
    nlohmann::json j;
    j["level_map"] = nlohmann::json::object();
    for (const auto& [orig, dense] : level_map)
        j["level_map"][format_cell(orig)] = dense;
    return j.dump(2);
}

IngestResult ingest_csv(const std::string& path, const SchemaConfig& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    std::vector<std::size_t> feat_idx;
    feat_idx.reserve(schema.feature_columns.size());
    for (const std::string& name : schema.feature_columns)
        feat_idx.push_back(find_column(header, name));
    {
        std::vector<std::size_t> sorted = feat_idx;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw SchemaError("duplicate feature column in schema");
    }
    const std::size_t t_idx = find_column(header, schema.treatment_column);
    const std::size_t r_idx = find_column(header, schema.reward_column);
    std::size_t c_idx = header.size();
    if (schema.cost_column) c_idx = find_column(header, *schema.cost_column);

    const int d = static_cast<int>(feat_idx.size());
    if (d < 1) throw SchemaError("schema names no feature columns");

    std::vector<double> features;
    std::vector<double> raw_treatment;
    std::vector<double> reward, cost;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        for (std::size_t k = 0; k < feat_idx.size(); ++k)
            features.push_back(parse_cell(cells[feat_idx[k]], row, header[feat_idx[k]]));
        raw_treatment.push_back(parse_cell(cells[t_idx], row, schema.treatment_column));
        const double r = parse_cell(cells[r_idx], row, schema.reward_column);
        if (r < 0.0)
            throw DataError("negative reward at row " + std::to_string(row));
        reward.push_back(r);
        if (schema.cost_column) {
            const double c = parse_cell(cells[c_idx], row, *schema.cost_column);
            if (c < 0.0)
                throw DataError("negative cost at row " + std::to_string(row));
            cost.push_back(c);
        } else {
            cost.push_back(0.0);
        }
    }
    if (raw_treatment.empty()) throw DataError("no data rows in '" + path + "'");

    // Dense re-indexing, order-preserving in the original numeric value.
    std::map<double, int> level_of;
    for (const double t : raw_treatment) level_of[t] = 0;
    if (level_of.size() < 2)
        throw DataError("treatment column holds fewer than 2 distinct levels");
    int next = 0;
    std::vector<std::pair<double, int>> level_map;
    for (auto& [orig, dense] : level_of) {
        dense = next++;
        level_map.emplace_back(orig, dense);
    }
    std::vector<int> treatment;
    treatment.reserve(raw_treatment.size());
    for (const double t : raw_treatment) treatment.push_back(level_of[t]);

    RctDataset ds(std::move(features), d, std::move(treatment), std::move(reward),
                  std::move(cost), next);
    return IngestResult{std::move(ds), std::move(level_map)};
}

void emit_csv(const RctDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (int k = 0; k < ds.feature_dim(); ++k) out << 'f' << k << ',';
    out << "treatment,reward,cost\n";
    for (std::size_t i = 0; i < ds.total(); ++i) {
        const auto x = ds.features_of(i);
        for (const double f : x) out << format_cell(f) << ',';
        out << ds.treatment(i) << ',' << format_cell(ds.reward(i)) << ','
            << format_cell(ds.cost(i)) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

SchemaConfig default_schema(int feature_dim, bool with_cost) {
    SchemaConfig s;
    for (int k = 0; k < feature_dim; ++k) s.feature_columns.push_back("f" + std::to_string(k));
    s.treatment_column = "treatment";
    s.reward_column = "reward";
    if (with_cost) s.cost_column = "cost";
    return s;
}

InstanceCsv read_instance_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);
    int levels = 0;
    while (true) {
        const std::string want = "r_" + std::to_string(levels);
        if (std::find(header.begin(), header.end(), want) == header.end()) break;
        ++levels;
    }
    if (levels < 2) throw SchemaError("instance file needs columns r_0..r_{L-1} with L >= 2");
    std::vector<std::size_t> r_idx, c_idx;
    for (int j = 0; j < levels; ++j) {
        r_idx.push_back(find_column(header, "r_" + std::to_string(j)));
        c_idx.push_back(find_column(header, "c_" + std::to_string(j)));
    }
    InstanceCsv out;
    out.levels = levels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has wrong cell count");
        for (int j = 0; j < levels; ++j)
            out.r.push_back(parse_cell(cells[r_idx[static_cast<std::size_t>(j)]], row,
                                       "r_" + std::to_string(j)));
        for (int j = 0; j < levels; ++j)
            out.c.push_back(parse_cell(cells[c_idx[static_cast<std::size_t>(j)]], row,
                                       "c_" + std::to_string(j)));
        ++out.rows;
    }
    if (out.rows == 0) throw DataError("no data rows in '" + path + "'");
    return out;
}

void write_instance_csv(const std::vector<double>& r, const std::vector<double>& c,
                        std::size_t rows, int levels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (int j = 0; j < levels; ++j) out << "r_" << j << ',';
    for (int j = 0; j < levels; ++j) {
        out << "c_" << j;
        out << (j + 1 < levels ? ',' : '\n');
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (int j = 0; j < levels; ++j)
            out << format_cell(r[i * static_cast<std::size_t>(levels) +
                                 static_cast<std::size_t>(j)])
                << ',';
        for (int j = 0; j < levels; ++j) {
            out << format_cell(c[i * static_cast<std::size_t>(levels) +
                                 static_cast<std::size_t>(j)]);
            out << (j + 1 < levels ? ',' : '\n');
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace uplift
