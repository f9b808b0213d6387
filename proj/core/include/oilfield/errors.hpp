#pragma once

#include <stdexcept>
#include <string>

namespace oilfield {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- ingest ---

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line, const std::string& reason)
        : Error("malformed row at line " + std::to_string(line) + ": " + reason), line(line), reason(reason) {}
    std::size_t line;
    std::string reason;
};

class DuplicateObservation : public Error {
public:
    DuplicateObservation(const std::string& date, const std::string& well)
        : Error("duplicate observation for well '" + well + "' on " + date), date(date), well(well) {}
    std::string date;
    std::string well;
};

class UnknownWellKind : public Error {
public:
    explicit UnknownWellKind(const std::string& value)
        : Error("unknown well type '" + value + "' (expected PRODUCER or INJECTOR)"), value(value) {}
    std::string value;
};

class GapFound : public Error {
public:
    GapFound(const std::string& well, const std::string& date)
        : Error("gap in series for well '" + well + "' at " + date), well(well), date(date) {}
    std::string well;
    std::string date;
};

class TestTooLong : public Error {
public:
    explicit TestTooLong(const std::string& what) : Error(what) {}
};

// --- crm ---

class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& what) : Error(what) {}
};

class InvalidParameters : public Error {
public:
    explicit InvalidParameters(const std::string& violated) : Error("invalid CRM parameters: " + violated) {}
};

class InvalidWindow : public Error {
public:
    explicit InvalidWindow(const std::string& what) : Error(what) {}
};

class WindowTooShort : public Error {
public:
    WindowTooShort(long length, long minimum)
        : Error("window length " + std::to_string(length) + " below minimum " + std::to_string(minimum)) {}
};

class OptimizerDiverged : public Error {
public:
    OptimizerDiverged(std::size_t iteration, double value)
        : Error("optimizer diverged at iteration " + std::to_string(iteration) +
                " (objective " + std::to_string(value) + ")"),
          iteration(iteration), value(value) {}
    std::size_t iteration;
    double value;
};

class NeedAtLeastTwoMembers : public Error {
public:
    NeedAtLeastTwoMembers() : Error("ensemble forecast needs at least two window lengths") {}
};

// --- features ---

class SeriesTooShort : public Error {
public:
    explicit SeriesTooShort(const std::string& what) : Error(what) {}
};

class UnknownWell : public Error {
public:
    explicit UnknownWell(const std::string& well) : Error("unknown well '" + well + "'"), well(well) {}
    std::string well;
};

class RowCountMismatch : public Error {
public:
    RowCountMismatch(long expected, long got)
        : Error("row count mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(got)) {}
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset is empty") {}
};

// --- learners ---

class NotEnoughSamples : public Error {
public:
    explicit NotEnoughSamples(const std::string& what) : Error(what) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(long expected, long got)
        : Error("feature dimension mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(got)) {}
};

// --- pipeline ---

class ValidationFailed : public Error {
public:
    explicit ValidationFailed(const std::string& what) : Error("pipeline validation failed: " + what) {}
};

class NodeFailed : public Error {
public:
    NodeFailed(const std::string& node_id, const std::string& what)
        : Error("node '" + node_id + "': " + what), node_id(node_id) {}
    std::string node_id;
};

// --- evolution ---

class IncompatibleParents : public Error {
public:
    explicit IncompatibleParents(const std::string& what) : Error(what) {}
};

class MissingFitness : public Error {
public:
    MissingFitness() : Error("individual has no fitness assigned") {}
};

// --- metrics ---

class EmptySequence : public Error {
public:
    explicit EmptySequence(const std::string& what) : Error(what) {}
};

class TooFewMembers : public Error {
public:
    explicit TooFewMembers(std::size_t n)
        : Error("t-interval needs at least 2 members, got " + std::to_string(n)) {}
};

// --- cli / protocol ---

class HistoryTooShort : public Error {
public:
    explicit HistoryTooShort(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace oilfield
