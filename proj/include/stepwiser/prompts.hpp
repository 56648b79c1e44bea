#pragma once

#include <string>
#include <string_view>

namespace stepwiser {

// Prompt templates are versioned assets: the strings here are the single
// source of truth, and the files under assets/ must stay byte-identical
// (enforced by a unit test). Bump the version when editing either.
inline constexpr int kPromptVersion = 1;

// Judge prompt with {problem}, {history}, {chunk} placeholders.
std::string_view judge_prompt_template();

// Segmentation instructions with a {solution} placeholder.
std::string_view segmentation_prompt_template();

// Solver prompt with a {problem} placeholder, used when sampling responses
// for segmentation-SFT data.
std::string_view policy_prompt_template();

// Replaces every occurrence of `{key}` in the template.
std::string fill_placeholder(std::string_view text, std::string_view key,
                             std::string_view value);

}  // namespace stepwiser
