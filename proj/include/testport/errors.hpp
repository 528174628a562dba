#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace testport {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Documents and schemas
// ---------------------------------------------------------------------------

class MalformedDocument : public Error {
public:
    using Error::Error;
};

/// A document parsed but violated the expected shape. `index` is the event
/// (or element) position when one applies, `npos` otherwise.
class SchemaViolation : public Error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    SchemaViolation(std::size_t index, std::string field, const std::string& detail)
        : Error(describe(index, field, detail)), index_(index), field_(std::move(field)) {}

    std::size_t index() const noexcept { return index_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string describe(std::size_t index, const std::string& field, const std::string& detail) {
        std::string out = "schema violation";
        if (index != npos) out += " at index " + std::to_string(index);
        if (!field.empty()) out += " (field '" + field + "')";
        return out + ": " + detail;
    }

    std::size_t index_;
    std::string field_;
};

class MalformedXml : public Error {
public:
    using Error::Error;
};

class DanglingReference : public Error {
public:
    explicit DanglingReference(std::string name)
        : Error("dangling reference: " + name), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnknownScreen : public Error {
public:
    explicit UnknownScreen(const std::string& id) : Error("unknown screen: " + id) {}
};

// ---------------------------------------------------------------------------
// Device
// ---------------------------------------------------------------------------

class BackendUnreachable : public Error {
public:
    using Error::Error;
};

class InstallFailed : public Error {
public:
    using Error::Error;
};

class StaleSession : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// Raised by a backend primitive when the device rejects an interaction.
/// The message is forwarded verbatim into ExecutionOutcome::DriverError.
class DriverException : public Error {
public:
    using Error::Error;
};

class ReplayDiverged : public Error {
public:
    ReplayDiverged(std::size_t step, const std::string& cause)
        : Error("replay diverged at step " + std::to_string(step) + ": " + cause), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// ---------------------------------------------------------------------------
// LLM agent
// ---------------------------------------------------------------------------

class MissingSlot : public Error {
public:
    explicit MissingSlot(std::string slot) : Error("missing prompt slot: " + slot), slot_(std::move(slot)) {}
    const std::string& slot() const noexcept { return slot_; }

private:
    std::string slot_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    ProviderError(int status, std::string body)
        : Error("provider error " + std::to_string(status) + ": " + body), status_(status), body_(std::move(body)) {}
    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class NoJsonFound : public Error {
public:
    using Error::Error;
};

class EmptyMerge : public Error {
public:
    using Error::Error;
};

class EmptyAbstraction : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

class AugmentationFailed : public Error {
public:
    AugmentationFailed(std::size_t step, const std::string& cause)
        : Error("augmentation failed at step " + std::to_string(step) + ": " + cause), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class InvalidSourceTest : public Error {
public:
    using Error::Error;
};

class EmptyGroundTruth : public Error {
public:
    EmptyGroundTruth() : Error("ground truth test is empty") {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace testport
