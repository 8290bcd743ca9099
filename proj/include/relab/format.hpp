#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include "relab/trajectory.hpp"

namespace relab {

// Canonical "respond-then-think" rendering, six lines:
//
//   2-Mismatch
//   1. Query: ...
//   2. Item: ...
//   3. Category Match: ... The conclusion is Excellent.
//   4. Attribution Match: ... The conclusion is Mismatch.
//   5. Judgement: ... Relevance label is 2-Mismatch.
//
// The parser is strict about the structural anchors (header, step numbers
// and names, conclusion clauses, case-sensitive tier words) and free about
// the prose between them. No repair of malformed output is attempted.

enum class FormatErrorReason {
    missing_label_header,
    bad_step_order,
    unknown_tier_word,
    truncated,
    corrupted_token,
};

std::string_view format_error_reason_name(FormatErrorReason r);

struct FormatError {
    // Number of slot tokens recovered before the failure, in [0, 5]:
    // 0 header, 1 category conclusion, 2 attribute conclusion, 3 final label.
    std::size_t position = 0;
    FormatErrorReason reason = FormatErrorReason::truncated;
};

using ParseResult = std::variant<Trajectory, FormatError>;

// Renders a well-formed trajectory as canonical text. Throws
// std::invalid_argument on a malformed trajectory.
std::string serialize_trajectory(const Trajectory& traj);

// Strict parse; FormatError is the non-exceptional failure value and
// reports the earliest offending position. Never throws on arbitrary input.
ParseResult parse_trajectory(std::string_view text);

}  // namespace relab
