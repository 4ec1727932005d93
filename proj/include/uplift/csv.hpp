#pragma once

#include <string>
#include <vector>

#include "uplift/types.hpp"

namespace uplift {

struct IngestResult {
    RctDataset dataset;
    // Original treatment value -> dense level, ascending in the original value.
    std::vector<std::pair<double, int>> level_map;

    std::string level_map_json() const;  // key: "level_map"
};

// Reads a UTF-8, comma-separated file with a mandatory header row. Rows that
// fail to parse or violate invariants abort ingestion (silent drops would
// bias the per-level counts every loss weight depends on).
IngestResult ingest_csv(const std::string& path, const SchemaConfig& schema);

// Writes f0..f{d-1},treatment,reward,cost with 17 significant digits so that
// ingest(emit(ds)) round-trips bit-identically.
void emit_csv(const RctDataset& ds, const std::string& path);

// Schema matching emit_csv's layout.
SchemaConfig default_schema(int feature_dim, bool with_cost = true);

// Allocation instance files: columns r_0..r_{L-1},c_0..c_{L-1}.
struct InstanceCsv {
    std::vector<double> r;  // M x L row-major
    std::vector<double> c;
    std::size_t rows = 0;
    int levels = 0;
};

InstanceCsv read_instance_csv(const std::string& path);
void write_instance_csv(const std::vector<double>& r, const std::vector<double>& c,
                        std::size_t rows, int levels, const std::string& path);

}  // namespace uplift
