#include "relab/format.hpp"

#include <stdexcept>
#include <vector>

namespace relab {

namespace {

constexpr std::string_view kStepNames[5] = {
    "Query", "Item", "Category Match", "Attribution Match", "Judgement"};
constexpr std::string_view kConclusionClause = "The conclusion is ";
constexpr std::string_view kJudgementClause = "Relevance label is ";

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        if (end == text.size()) {
            break;
        }
        start = end + 1;
    }
    // trailing blank lines are tolerated
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    return lines;
}

// Parses "<ordinal>-<Name>" where the ordinal must agree with the name.
struct LabelParse {
    bool ok = false;
    bool unknown_word = false;
    bool mismatched = false;
    Tier tier = Tier::Irrelevant;
};

LabelParse parse_tier_label(std::string_view s) {
    LabelParse r;
    if (s.size() < 3 || s[0] < '1' || s[0] > '4' || s[1] != '-') {
        return r;
    }
    auto named = tier_from_name(s.substr(2));
    if (!named) {
        r.unknown_word = true;
        return r;
    }
    if (ordinal(*named) != s[0] - '0') {
        r.mismatched = true;
        return r;
    }
    r.ok = true;
    r.tier = *named;
    return r;
}

FormatError fail(std::size_t position, FormatErrorReason reason) {
    return FormatError{position, reason};
}

}  // namespace

std::string_view format_error_reason_name(FormatErrorReason r) {
    switch (r) {
        case FormatErrorReason::missing_label_header: return "missing-label-header";
        case FormatErrorReason::bad_step_order:       return "bad-step-order";
        case FormatErrorReason::unknown_tier_word:    return "unknown-tier-word";
        case FormatErrorReason::truncated:            return "truncated";
        case FormatErrorReason::corrupted_token:      return "corrupted-token";
    }
    return "corrupted-token";
}

std::string serialize_trajectory(const Trajectory& traj) {
    if (!traj.format_valid) {
        throw std::invalid_argument("cannot serialize a malformed trajectory");
    }
    std::string out;
    out += tier_label(traj.initial_label());
    out += "\n1. Query: the query names the desired product and its required attributes.";
    out += "\n2. Item: the candidate item with its category and listed attributes.";
    out += "\n3. Category Match: the item category is compared with the queried category. "
           "The conclusion is ";
    out += tier_name(traj.category_tier());
    out += ".\n4. Attribution Match: the item attributes are checked against the queried "
           "requirements. The conclusion is ";
    out += tier_name(traj.attribute_tier());
    out += ".\n5. Judgement: the derivation rules are applied to the two conclusions. "
           "Relevance label is ";
    out += tier_label(traj.derived_label());
    out += ".\n";
    return out;
}

ParseResult parse_trajectory(std::string_view text) {
    const std::vector<std::string_view> lines = split_lines(text);
    if (lines.empty() || lines[0].empty()) {
        return fail(0, FormatErrorReason::missing_label_header);
    }

    // header: "<ordinal>-<Name>"
    const LabelParse header = parse_tier_label(lines[0]);
    if (!header.ok) {
        if (header.unknown_word) {
            return fail(0, FormatErrorReason::unknown_tier_word);
        }
        if (header.mismatched) {
            return fail(0, FormatErrorReason::corrupted_token);
        }
        return fail(0, FormatErrorReason::missing_label_header);
    }

    Tier tiers[4] = {header.tier, header.tier, header.tier, header.tier};
    std::size_t parsed = 1;  // tokens recovered so far (header done)

    for (int step = 0; step < 5; ++step) {
        const std::size_t line_idx = static_cast<std::size_t>(step) + 1;
        if (line_idx >= lines.size()) {
            return fail(parsed, FormatErrorReason::truncated);
        }
        std::string_view line = lines[line_idx];
        std::string prefix = std::to_string(step + 1) + ". " + std::string(kStepNames[step]) + ":";
        if (line.substr(0, prefix.size()) != prefix) {
            return fail(parsed, FormatErrorReason::bad_step_order);
        }
        if (step == 2 || step == 3) {
            // "... The conclusion is <Name>."
            const std::size_t at = line.rfind(kConclusionClause);
            if (at == std::string_view::npos || line.empty() || line.back() != '.') {
                return fail(parsed, FormatErrorReason::truncated);
            }
            std::string_view word = line.substr(at + kConclusionClause.size());
            word.remove_suffix(1);  // trailing '.'
            auto tier = tier_from_name(word);
            if (!tier) {
                return fail(parsed, FormatErrorReason::unknown_tier_word);
            }
            tiers[step - 1] = *tier;
            ++parsed;
        } else if (step == 4) {
            // "... Relevance label is <ordinal>-<Name>."
            const std::size_t at = line.rfind(kJudgementClause);
            if (at == std::string_view::npos || line.empty() || line.back() != '.') {
                return fail(parsed, FormatErrorReason::truncated);
            }
            std::string_view label = line.substr(at + kJudgementClause.size());
            label.remove_suffix(1);
            const LabelParse final_label = parse_tier_label(label);
            if (!final_label.ok) {
                if (final_label.unknown_word) {
                    return fail(parsed, FormatErrorReason::unknown_tier_word);
                }
                if (final_label.mismatched) {
                    return fail(parsed, FormatErrorReason::corrupted_token);
                }
                return fail(parsed, FormatErrorReason::truncated);
            }
            tiers[3] = final_label.tier;
            ++parsed;
        }
    }

    if (lines.size() > 6) {
        return fail(parsed, FormatErrorReason::bad_step_order);
    }
    return make_trajectory(tiers[0], tiers[1], tiers[2], tiers[3]);
}

}  // namespace relab
