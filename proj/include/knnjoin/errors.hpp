#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace knnjoin {

// Caller violated a documented precondition (bad dimensions, out-of-range
// parameter, invalid flag combination).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Input file could not be parsed; message carries the 1-based row/column.
class IngestError : public std::runtime_error {
public:
    explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

// Grid extent would overflow the linear cell id range.
class IndexingError : public std::runtime_error {
public:
    explicit IndexingError(const std::string& what) : std::runtime_error(what) {}
};

// The sampled distance profile cannot support epsilon selection
// (e.g. mean pairwise distance is zero).
class DegenerateProfileError : public std::runtime_error {
public:
    explicit DegenerateProfileError(const std::string& what) : std::runtime_error(what) {}
};

// The requested cumulative neighbor target exceeds what the histogram's
// search radius can reach; carries the achievable maximum.
class TargetUnreachableError : public std::runtime_error {
public:
    TargetUnreachableError(const std::string& what, double achievable)
        : std::runtime_error(what), achievable_max(achievable) {}
    double achievable_max;
};

// A batch produced more result pairs than its buffer allows.
class BatchOverflowError : public std::runtime_error {
public:
    BatchOverflowError(const std::string& what, std::size_t batch)
        : std::runtime_error(what), batch_index(batch) {}
    std::size_t batch_index;
};

// Parameter-search sample would fall below the query floor.
class SampleTooSmallError : public std::runtime_error {
public:
    explicit SampleTooSmallError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset too large for the quadratic verification oracle.
class OracleCapError : public std::runtime_error {
public:
    explicit OracleCapError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace knnjoin
