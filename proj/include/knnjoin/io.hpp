#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "knnjoin/dataset.hpp"
#include "knnjoin/orchestrator.hpp"

namespace knnjoin {

enum class FileFormat { Csv, Tsv, BinaryF64 };

FileFormat format_from_string(const std::string& s);

// CSV/TSV: one point per row, consistent column count. Binary: little-endian
// u64 |D| and n, then row-major f64 coordinates. Non-finite or non-numeric
// values are rejected with the 1-based row and column.
Dataset ingest_dataset(const std::filesystem::path& path, FileFormat format);
void export_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format);

// "query_id<TAB>neighbor_id<TAB>distance" lines sorted by (query_id, rank);
// distances print with enough digits to round-trip, so equal runs produce
// equal bytes.
void write_tsv(const KnnRunResult& result, std::ostream& out);
std::string tsv_string(const KnnRunResult& result);

}  // namespace knnjoin
