#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entropy_triage/dataset.hpp"
#include "entropy_triage/error.hpp"

namespace entropy_triage {

inline constexpr std::size_t kMaxRationaleWords = 30;

struct RenderedPrompt {
  std::string text;
  std::vector<ContextKind> context_kinds_included;
  int set_id = 0;
  bool operator==(const RenderedPrompt&) const = default;
};

inline std::string_view section_header(ContextKind k) {
  switch (k) {
    case ContextKind::ReadingPassage: return "READING PASSAGE: ";
    case ContextKind::ExperimentalSetup: return "EXPERIMENTAL SETUP: ";
    case ContextKind::VisualInformation: return "VISUAL INFORMATION: ";
  }
  return "";
}

/// Renders the single subject-agnostic grading prompt. Conditional context
/// sections follow the fixed template order (reading passage, experimental
/// setup, visual information), one section per block.
inline RenderedPrompt render_grading_prompt(const EssaySetSpec& spec,
                                            std::string_view response_text) {
  if (spec.rubric_text.empty()) {
    throw TemplateError("essay set " + std::to_string(spec.set_id) + " has no rubric");
  }
  if (spec.task_prompt.empty()) {
    throw TemplateError("essay set " + std::to_string(spec.set_id) + " has no task prompt");
  }
  if (response_text.empty()) throw TemplateError("empty student response");

  RenderedPrompt p;
  p.set_id = spec.set_id;
  std::string& t = p.text;
  t += "You are an expert educational assessor analyzing student responses.\n\n";
  t += "ASSESSMENT CONTEXT:\n";
  t += "- Domain: " + spec.domain_label + "\n";
  t += "- Subject: " + to_string(spec.subject) + "\n";
  t += "- Topic: " + spec.topic + "\n";
  t += "- Grade Level: " + spec.grade_level + "\n";
  t += std::string("- Source Dependent: ") + (spec.source_dependent ? "true" : "false") + "\n\n";

  bool any_block = false;
  for (auto kind : {ContextKind::ReadingPassage, ContextKind::ExperimentalSetup,
                    ContextKind::VisualInformation}) {
    for (const auto& b : spec.context_blocks) {
      if (b.kind != kind) continue;
      t += section_header(kind);
      t += b.text + "\n";
      p.context_kinds_included.push_back(kind);
      any_block = true;
    }
  }
  if (any_block) t += "\n";

  t += "STUDENT TASK: " + spec.task_prompt + "\n";
  t += "STUDENT RESPONSE: ";
  t += response_text;
  t += "\n";
  t += "ASSESSMENT RUBRIC: " + spec.rubric_text + "\n\n";
  t += "**Instructions**\n";
  t += "0. Score range: " + std::to_string(spec.score_min) + "-" + std::to_string(spec.score_max) +
       "\n";
  t += "1. Think step-by-step to decide which rubric level fits best.\n";
  t += "2. When ready, call the function record_score() with arguments only.\n";
  t += "3. The rationale argument must be at most 30 words.\n";
  return p;
}

/// Pulls the student response back out of a rendered grading prompt.
inline std::optional<std::string> extract_student_response(std::string_view prompt) {
  constexpr std::string_view open = "\nSTUDENT RESPONSE: ";
  constexpr std::string_view close = "\nASSESSMENT RUBRIC: ";
  auto a = prompt.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  a += open.size();
  auto b = prompt.find(close, a);
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(prompt.substr(a, b - a));
}

inline std::optional<std::pair<int, int>> extract_score_range(std::string_view prompt) {
  constexpr std::string_view key = "0. Score range: ";
  auto a = prompt.find(key);
  if (a == std::string_view::npos) return std::nullopt;
  a += key.size();
  auto nl = prompt.find('\n', a);
  auto field = prompt.substr(a, nl - a);
  auto dash = field.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  try {
    return std::pair{std::stoi(std::string(field.substr(0, dash))),
                     std::stoi(std::string(field.substr(dash + 1)))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// --- entailment judge prompt -------------------------------------------------

inline constexpr std::string_view kPremiseOpen = "<<<PREMISE>>>\n";
inline constexpr std::string_view kPremiseClose = "\n<<<END PREMISE>>>\n";
inline constexpr std::string_view kHypothesisOpen = "<<<HYPOTHESIS>>>\n";
inline constexpr std::string_view kHypothesisClose = "\n<<<END HYPOTHESIS>>>\n";

/// Backslash-escapes '\' and '<' so no segment can contain a marker.
inline std::string escape_segment(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\' || c == '<') out += '\\';
    out += c;
  }
  return out;
}

inline std::string unescape_segment(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) ++i;
    out += s[i];
  }
  return out;
}

inline RenderedPrompt render_entailment_prompt(std::string_view premise,
                                               std::string_view hypothesis) {
  RenderedPrompt p;
  std::string& t = p.text;
  t += "You compare two short rationales written by graders of the same student response.\n";
  t += "Decide whether the PREMISE semantically entails the HYPOTHESIS: every grading-relevant "
       "claim in the HYPOTHESIS (which rubric criteria are met or missed, and the resulting "
       "judgement) must follow from the PREMISE. Ignore wording and style differences.\n\n";
  t += kPremiseOpen;
  t += escape_segment(premise);
  t += kPremiseClose;
  t += kHypothesisOpen;
  t += escape_segment(hypothesis);
  t += kHypothesisClose;
  t += "\nAnswer with a single token: YES or NO.\n";
  return p;
}

/// Inverse of render_entailment_prompt; returns (premise, hypothesis).
inline std::optional<std::pair<std::string, std::string>> parse_entailment_prompt(
    std::string_view prompt) {
  auto segment = [&](std::string_view open, std::string_view close)
      -> std::optional<std::string> {
    auto a = prompt.find(open);
    if (a == std::string_view::npos) return std::nullopt;
    a += open.size();
    auto b = prompt.find(close, a);
    if (b == std::string_view::npos) return std::nullopt;
    return unescape_segment(prompt.substr(a, b - a));
  };
  auto premise = segment(kPremiseOpen, kPremiseClose);
  auto hypothesis = segment(kHypothesisOpen, kHypothesisClose);
  if (!premise || !hypothesis) return std::nullopt;
  return std::pair{std::move(*premise), std::move(*hypothesis)};
}

// --- rationale length --------------------------------------------------------

/// Keeps the first 30 whitespace-delimited words, returning a literal prefix
/// of the input. Inputs already within the limit come back unchanged.
inline std::string truncate_rationale(std::string_view text,
                                      std::size_t max_words = kMaxRationaleWords) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_word) {
      if (words == max_words) {
        // Cut at the end of the previous word.
        std::size_t end = i;
        while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
        return std::string(text.substr(0, end));
      }
      ++words;
    }
    in_word = !space;
  }
  return std::string(text);
}

}  // namespace entropy_triage
