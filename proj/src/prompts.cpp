#include "stepwiser/prompts.hpp"

namespace stepwiser {

namespace {

constexpr std::string_view kJudgePrompt =
    R"(Instruction:
You are a reasoning validator for mathematical problems. Your task is to think step by step and determine if the "New Reasoning Chunk" contains any explicit errors based on the problem description and historical context.

First, you must always perform a step-by-step chain of thought analysis to justify your final judgment. Then, based on your analysis, you will make a definitive judgment. It is OK that the chunk does not contain any numerical calculation.

Based on your evaluation, provide your final judgment:
- Use Positive if the reasoning chunk is free of mistakes.
- Use Negative if the reasoning chunk contains one or more mistakes.

---

Input:
Mathematical Problem: {problem}
Historical Reasoning Path: {history}
New Reasoning Chunk: {chunk}

---

Output format:
1. Analysis: [Always provide a step-by-step analysis here. First, briefly state the goal of the current reasoning chunk. Second, verify the logic, method, and any calculations against the problem's requirements and the historical path. If an error is found, clearly explain the error and why it's wrong. If the reasoning is correct, explain why it is a valid and logical step forward.]
2. Final Judgment: [Provide the final judgment within \boxed{}. Examples: \boxed{Positive} or \boxed{Negative}.]
)";

constexpr std::string_view kSegmentationPrompt =
    R"(Segment the solution below into purpose-driven chunks, following these rules:

Segmentation principles
1. Unified purpose: A chunk should serve a single, clear objective. For example: setting up an initial equation, executing a self-contained calculation (like integration by parts), or stating a final/intermediate conclusion. All content within the chunk must directly serve this one core goal.
2. Logical cohesion: All lines within a chunk must form a continuous and uninterrupted logical flow. A new chunk should begin as soon as the focus or purpose of the reasoning shifts.
3. Clear transition: A new chunk must begin when the problem-solving process enters a new phase. This includes transitioning from "solving for a variable" to "verifying the answer", or inserting an "explanatory side-note" into the main workflow.

Format rules
1. Use <chunk> ... </chunk> to mark the beginning and end of each segment. The text and newlines inside the tags must not be altered.
2. The final output should only contain the tagged content, without any additional text, titles, or blank lines.
3. You must preserve all original text and newlines exactly as they appear within the tags.

<<<BEGIN SOLUTION>>>
{solution}
<<<END SOLUTION>>>
)";

constexpr std::string_view kPolicyPrompt =
    R"(You are a helpful assistant designed to solve mathematical problems step-by-step. Your task is to think step-by-step and provide a detailed solution process following a specific format.

You MUST follow the following format:
1. Enclose each part of your step-by-step reasoning within <chunk> and </chunk> tags.
2. After completing the chain-of-thought reasoning, provide the final answer within \boxed{}.

Ensure strict compliance with this format for every response.

---

Problem: {problem}
)";

}  // namespace

std::string_view judge_prompt_template() { return kJudgePrompt; }
std::string_view segmentation_prompt_template() { return kSegmentationPrompt; }
std::string_view policy_prompt_template() { return kPolicyPrompt; }

std::string fill_placeholder(std::string_view text, std::string_view key,
                             std::string_view value) {
  const std::string needle = "{" + std::string(key) + "}";
  std::string out;
  out.reserve(text.size() + value.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = text.find(needle, pos);
    if (at == std::string_view::npos) {
      out.append(text.substr(pos));
      return out;
    }
    out.append(text.substr(pos, at - pos));
    out.append(value);
    pos = at + needle.size();
  }
}

}  // namespace stepwiser
