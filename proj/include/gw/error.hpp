#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gw {

// Machine-readable failure kinds. The names double as the `code` field of
// problem-details responses, so renaming one is a wire-format change.
enum class Errc {
    MalformedCsv,
    EmptyDataset,
    UnknownRow,
    UnknownColumn,
    StaleDelta,
    NoCategoricalColumns,
    NoNumericColumns,
    InvalidConfig,
    DuplicateCode,
    ExpressionParseError,
    ExpressionTypeError,
    UnknownErrorCode,
    UnknownGroup,
    NoSuchErrorInGroup,
    InvalidAction,
    InapplicableAction,
    SequenceGap,
    NothingToUndo,
    NothingToRedo,
    StorageFailure,
    CorruptLog,
    UnsupportedTarget,
    NoAnchor,
    UnknownDataset,
    BadRequest,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> offset = std::nullopt)
        : std::runtime_error(message), code_(code), offset_(offset) {}

    Errc code() const noexcept { return code_; }

    // Byte offset into the offending input (expression parse errors, CSV records).
    std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::optional<std::size_t> offset_;
};

}  // namespace gw
