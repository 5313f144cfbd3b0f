#pragma once

#include "ivmcd/interval.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ivmcd {

enum class CsvLayout { Bounds, CenterRange };

/// Column layout read from a CSV header.
///
/// Bounds layout names columns `<var>_lo,<var>_hi`; center-range layout
/// names them `<var>_c,<var>_r`. An optional `id` column carries row names
/// and an optional `label` column carries 0/1 benchmark truth.
struct CsvSchema {
    CsvLayout layout;
    std::vector<std::string> variables;
};

/// Parse an interval dataset; errors name the offending line.
IntervalDataset read_interval_csv(std::istream& in, std::vector<LatentSpec> latents,
                                  const std::string& source = "<input>");
IntervalDataset load_interval_csv(const std::filesystem::path& path, std::vector<LatentSpec> latents);

/// Header-only inspection, used when the number of variables is needed
/// before latent specs exist.
CsvSchema read_csv_schema(const std::filesystem::path& path);

void write_interval_csv(std::ostream& out, const IntervalDataset& ds, CsvLayout layout);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace ivmcd
