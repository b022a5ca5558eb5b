#include "knnjoin/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "knnjoin/errors.hpp"

namespace knnjoin {

FileFormat format_from_string(const std::string& s) {
    if (s == "csv") return FileFormat::Csv;
    if (s == "tsv") return FileFormat::Tsv;
    if (s == "bin" || s == "binary-f64") return FileFormat::BinaryF64;
    throw UsageError("unknown dataset format '" + s + "' (expected csv, tsv, or bin)");
}

namespace {

Dataset ingest_text(const std::filesystem::path& path, char sep) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());

    std::vector<double> coords;
    std::size_t dims = 0, row = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        std::size_t col = 0, at = 0;
        while (at <= line.size()) {
            std::size_t end = line.find(sep, at);
            if (end == std::string::npos) end = line.size();
            ++col;
            const char* first = line.data() + at;
            const char* last = line.data() + end;
            while (first < last && (*first == ' ' || *first == '\t')) ++first;
            double v = 0;
            auto [p, ec] = std::from_chars(first, last, v);
            while (p < last && (*p == ' ' || *p == '\t')) ++p;
            if (ec != std::errc() || p != last)
                throw IngestError(path.string() + ": row " + std::to_string(row) + ", column " +
                                  std::to_string(col) + ": not a number: '" +
                                  std::string(line.data() + at, line.data() + end) + "'");
            if (!std::isfinite(v))
                throw IngestError(path.string() + ": row " + std::to_string(row) + ", column " +
                                  std::to_string(col) + ": non-finite value");
            coords.push_back(v);
            if (end == line.size()) break;
            at = end + 1;
        }
        if (dims == 0) {
            dims = col;
        } else if (col != dims) {
            throw IngestError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(col) + " columns, expected " + std::to_string(dims));
        }
    }
    if (coords.empty()) throw IngestError(path.string() + ": no points");
    return Dataset(std::move(coords), dims);
}

Dataset ingest_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path.string());

    std::uint64_t size = 0, dims = 0;
    in.read(reinterpret_cast<char*>(&size), sizeof size);
    in.read(reinterpret_cast<char*>(&dims), sizeof dims);
    if (!in) throw IngestError(path.string() + ": truncated header");
    if (size == 0 || dims == 0) throw IngestError(path.string() + ": empty dataset in header");

    std::vector<double> coords(size * dims);
    in.read(reinterpret_cast<char*>(coords.data()),
            std::streamsize(coords.size() * sizeof(double)));
    if (std::size_t(in.gcount()) != coords.size() * sizeof(double))
        throw IngestError(path.string() + ": body shorter than header promises (" +
                          std::to_string(size) + " x " + std::to_string(dims) + ")");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (!std::isfinite(coords[i]))
            throw IngestError(path.string() + ": row " + std::to_string(i / dims + 1) +
                              ", column " + std::to_string(i % dims + 1) + ": non-finite value");
    }
    return Dataset(std::move(coords), dims);
}

void append_double(std::string& out, double v) {
    char buf[40];
    int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, std::size_t(len));
}

}  // namespace

Dataset ingest_dataset(const std::filesystem::path& path, FileFormat format) {
    switch (format) {
        case FileFormat::Csv: return ingest_text(path, ',');
        case FileFormat::Tsv: return ingest_text(path, '\t');
        case FileFormat::BinaryF64: return ingest_binary(path);
    }
    throw UsageError("unknown dataset format");
}

void export_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format) {
    if (format == FileFormat::BinaryF64) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IngestError("cannot write " + path.string());
        std::uint64_t size = d.size(), dims = d.dims();
        out.write(reinterpret_cast<const char*>(&size), sizeof size);
        out.write(reinterpret_cast<const char*>(&dims), sizeof dims);
        out.write(reinterpret_cast<const char*>(d.raw().data()),
                  std::streamsize(d.raw().size() * sizeof(double)));
        return;
    }
    const char sep = format == FileFormat::Csv ? ',' : '\t';
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path.string());
    std::string line;
    for (std::size_t i = 0; i < d.size(); ++i) {
        line.clear();
        const double* p = d.point(PointId(i));
        for (std::size_t j = 0; j < d.dims(); ++j) {
            if (j) line.push_back(sep);
            append_double(line, p[j]);
        }
        line.push_back('\n');
        out << line;
    }
}

void write_tsv(const KnnRunResult& result, std::ostream& out) {
    out << tsv_string(result);
}

std::string tsv_string(const KnnRunResult& result) {
    std::string out;
    for (std::size_t i = 0; i < result.queries.size(); ++i) {
        for (const Neighbor& nb : result.neighbors[i]) {
            out += std::to_string(result.queries[i]);
            out.push_back('\t');
            out += std::to_string(nb.id);
            out.push_back('\t');
            append_double(out, nb.dist);
            out.push_back('\n');
        }
    }
    return out;
}

}  // namespace knnjoin
