#pragma once

#include <array>
#include <string_view>

namespace manifail {

// Five phrasings per question type, indexed by QuestionType order.
const std::array<std::array<std::string_view, 5>, 8>& question_templates();

// Placeholders: {task} {subtask} {error type} {error stage} {error detail}
// {error correction} {error low level}.
std::string_view annotation_prompt();

// Placeholders: {question} {ref} {pred}.
std::string_view judge_prompt();

}  // namespace manifail
