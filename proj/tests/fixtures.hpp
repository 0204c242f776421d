#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "entropy_triage/dataset.hpp"

namespace fixtures {

inline entropy_triage::EssaySetSpec make_spec(int set_id, int lo, int hi,
                                              bool source_dependent = false) {
  using namespace entropy_triage;
  EssaySetSpec s;
  s.set_id = set_id;
  s.subject = Subject::Science;
  s.source_dependent = source_dependent;
  s.score_min = lo;
  s.score_max = hi;
  s.domain_label = "STEM";
  s.topic = "Acid rain";
  s.grade_level = "10";
  s.rubric_text = "3 points: three key elements. 0 points: none.";
  s.task_prompt = "Describe two ways to improve the experiment.";
  if (source_dependent) {
    s.context_blocks.push_back({ContextKind::ReadingPassage, "A short passage."});
  }
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("entropy_triage_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
