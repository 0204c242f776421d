#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropy_triage/detail/hash.hpp"
#include "entropy_triage/detail/rng.hpp"
#include "entropy_triage/error.hpp"

namespace entropy_triage {

enum class Subject { Science, ELA, Biology, English };
enum class ContextKind { ReadingPassage, ExperimentalSetup, VisualInformation };
enum class Band { Low, Medium, High };

inline constexpr std::array<Subject, 4> kAllSubjects = {Subject::Science, Subject::ELA,
                                                        Subject::Biology, Subject::English};
inline constexpr std::array<Band, 3> kAllBands = {Band::Low, Band::Medium, Band::High};

inline std::string to_string(Subject s) {
  switch (s) {
    case Subject::Science: return "Science";
    case Subject::ELA: return "ELA";
    case Subject::Biology: return "Biology";
    case Subject::English: return "English";
  }
  return "?";
}

inline Subject subject_from_string(std::string_view s) {
  if (s == "Science") return Subject::Science;
  if (s == "ELA" || s == "English Language Arts") return Subject::ELA;
  if (s == "Biology") return Subject::Biology;
  if (s == "English") return Subject::English;
  throw ParseError("unknown subject '" + std::string(s) + "'");
}

inline std::string to_string(ContextKind k) {
  switch (k) {
    case ContextKind::ReadingPassage: return "reading_passage";
    case ContextKind::ExperimentalSetup: return "experimental_setup";
    case ContextKind::VisualInformation: return "visual_information";
  }
  return "?";
}

inline ContextKind context_kind_from_string(std::string_view s) {
  if (s == "reading_passage") return ContextKind::ReadingPassage;
  if (s == "experimental_setup") return ContextKind::ExperimentalSetup;
  if (s == "visual_information") return ContextKind::VisualInformation;
  throw ParseError("unknown context block kind '" + std::string(s) + "'");
}

inline std::string to_string(Band b) {
  switch (b) {
    case Band::Low: return "Low";
    case Band::Medium: return "Medium";
    case Band::High: return "High";
  }
  return "?";
}

struct ContextBlock {
  ContextKind kind;
  std::string text;
  bool operator==(const ContextBlock&) const = default;
};

/// Per-prompt metadata for one essay set.
struct EssaySetSpec {
  int set_id = 0;
  Subject subject = Subject::Science;
  bool source_dependent = false;
  int score_min = 0;
  int score_max = 0;
  std::string domain_label;
  std::string topic;
  std::string grade_level;
  std::string rubric_text;
  std::vector<ContextBlock> context_blocks;
  std::string task_prompt;

  bool operator==(const EssaySetSpec&) const = default;
};

inline void validate(const EssaySetSpec& spec) {
  if (spec.set_id <= 0) {
    throw ValidationError("essay set id must be positive, got " + std::to_string(spec.set_id));
  }
  if (spec.score_min < 0 || spec.score_max <= spec.score_min) {
    throw ValidationError("essay set " + std::to_string(spec.set_id) +
                          ": score range must satisfy 0 <= min < max");
  }
  if (spec.source_dependent && spec.context_blocks.empty()) {
    throw ValidationError("essay set " + std::to_string(spec.set_id) +
                          " is source dependent but has no context blocks");
  }
}

struct ResponseRecord {
  std::int64_t response_id = 0;
  int set_id = 0;
  std::string text;
  int raw_score_1 = 0;
  int raw_score_2 = 0;
  double norm_score_1 = 0.0;
  double norm_score_2 = 0.0;
  double delta = 0.0;
  Band band = Band::Low;
  std::size_t token_count = 0;

  double mean_norm_score() const { return 0.5 * (norm_score_1 + norm_score_2); }
  bool operator==(const ResponseRecord&) const = default;
};

struct Corpus {
  std::map<int, EssaySetSpec> sets;
  std::vector<ResponseRecord> records;

  const EssaySetSpec& spec_of(const ResponseRecord& r) const {
    auto it = sets.find(r.set_id);
    if (it == sets.end()) {
      throw StructuralError("record " + std::to_string(r.response_id) +
                            " references unknown essay set " + std::to_string(r.set_id));
    }
    return it->second;
  }
  bool operator==(const Corpus&) const = default;
};

// --- scoring primitives ---------------------------------------------------

inline double normalize_score(int raw, const EssaySetSpec& spec) {
  if (raw < spec.score_min || raw > spec.score_max) {
    throw RangeError("score " + std::to_string(raw) + " outside [" +
                     std::to_string(spec.score_min) + ", " + std::to_string(spec.score_max) +
                     "] for essay set " + std::to_string(spec.set_id));
  }
  return static_cast<double>(raw - spec.score_min) /
         static_cast<double>(spec.score_max - spec.score_min);
}

/// Upper edges are inclusive: Low is delta <= 0.2, Medium is (0.2, 0.5].
inline Band band_of(double delta) {
  if (delta <= 0.2) return Band::Low;
  if (delta <= 0.5) return Band::Medium;
  return Band::High;
}

inline std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

/// Builds a fully derived record (normalized scores, delta, band, length).
inline ResponseRecord make_record(std::int64_t response_id, const EssaySetSpec& spec,
                                  std::string text, int raw1, int raw2) {
  ResponseRecord r;
  r.response_id = response_id;
  r.set_id = spec.set_id;
  r.raw_score_1 = raw1;
  r.raw_score_2 = raw2;
  r.norm_score_1 = normalize_score(raw1, spec);
  r.norm_score_2 = normalize_score(raw2, spec);
  // Integer difference first so equal raw scores give an exact zero.
  r.delta = static_cast<double>(std::abs(raw1 - raw2)) /
            static_cast<double>(spec.score_max - spec.score_min);
  r.band = band_of(r.delta);
  r.token_count = count_whitespace_tokens(text);
  r.text = std::move(text);
  return r;
}

// --- metadata JSON ----------------------------------------------------------

inline EssaySetSpec essay_set_from_json(const nlohmann::json& j) {
  EssaySetSpec s;
  try {
    s.set_id = j.at("set_id").get<int>();
    s.subject = subject_from_string(j.at("subject").get<std::string>());
    s.source_dependent = j.at("source_dependent").get<bool>();
    s.score_min = j.at("score_min").get<int>();
    s.score_max = j.at("score_max").get<int>();
    s.domain_label = j.value("domain", "");
    s.topic = j.value("topic", "");
    s.grade_level = j.value("grade_level", "");
    s.rubric_text = j.value("rubric", "");
    s.task_prompt = j.value("task_prompt", "");
    if (j.contains("context_blocks")) {
      for (const auto& b : j.at("context_blocks")) {
        s.context_blocks.push_back(
            {context_kind_from_string(b.at("kind").get<std::string>()),
             b.at("text").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("essay set metadata: ") + e.what());
  }
  validate(s);
  return s;
}

inline nlohmann::json to_json(const EssaySetSpec& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : s.context_blocks) {
    blocks.push_back({{"kind", to_string(b.kind)}, {"text", b.text}});
  }
  return {{"set_id", s.set_id},
          {"subject", to_string(s.subject)},
          {"source_dependent", s.source_dependent},
          {"score_min", s.score_min},
          {"score_max", s.score_max},
          {"domain", s.domain_label},
          {"topic", s.topic},
          {"grade_level", s.grade_level},
          {"rubric", s.rubric_text},
          {"task_prompt", s.task_prompt},
          {"context_blocks", blocks}};
}

inline std::vector<EssaySetSpec> parse_metadata(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metadata is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("metadata must be a JSON array of essay sets");
  std::vector<EssaySetSpec> out;
  std::set<int> seen;
  for (const auto& item : doc) {
    auto spec = essay_set_from_json(item);
    if (!seen.insert(spec.set_id).second) {
      throw ParseError("duplicate essay set id " + std::to_string(spec.set_id));
    }
    out.push_back(std::move(spec));
  }
  return out;
}

inline std::string serialize_metadata(const std::vector<EssaySetSpec>& sets) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : sets) doc.push_back(to_json(s));
  return doc.dump(2) + "\n";
}

// --- corpus TSV ---------------------------------------------------------------

inline constexpr std::string_view kCorpusHeader = "Id\tEssaySet\tScore1\tScore2\tEssayText";

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Int>
Int parse_int(std::string_view field, std::string_view column, std::size_t line_no) {
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(std::string(column) + " is not an integer: '" + std::string(field) + "'",
                     line_no);
  }
  return value;
}

}  // namespace detail

/// Parses an ASAP-style TSV against known essay-set metadata.
inline Corpus parse_corpus(std::string_view tsv_text, const std::vector<EssaySetSpec>& meta) {
  Corpus corpus;
  for (const auto& s : meta) {
    validate(s);
    corpus.sets.emplace(s.set_id, s);
  }

  std::set<std::int64_t> ids;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= tsv_text.size()) {
    auto end = tsv_text.find('\n', pos);
    if (end == std::string_view::npos) end = tsv_text.size();
    std::string_view line = tsv_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      if (line != kCorpusHeader) {
        throw ParseError("expected header 'Id<TAB>EssaySet<TAB>Score1<TAB>Score2<TAB>EssayText'",
                         line_no);
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    auto cols = detail::split_tabs(line);
    if (cols.size() != 5) {
      throw ParseError("expected 5 tab-separated columns, found " + std::to_string(cols.size()),
                       line_no);
    }
    const auto id = detail::parse_int<std::int64_t>(cols[0], "Id", line_no);
    const auto set_id = detail::parse_int<int>(cols[1], "EssaySet", line_no);
    const auto s1 = detail::parse_int<int>(cols[2], "Score1", line_no);
    const auto s2 = detail::parse_int<int>(cols[3], "Score2", line_no);

    auto it = corpus.sets.find(set_id);
    if (it == corpus.sets.end()) {
      throw ParseError("unknown essay set " + std::to_string(set_id), line_no);
    }
    if (!ids.insert(id).second) {
      throw ParseError("duplicate response id " + std::to_string(id), line_no);
    }
    try {
      corpus.records.push_back(make_record(id, it->second, std::string(cols[4]), s1, s2));
    } catch (const RangeError& e) {
      throw RangeError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw ParseError("empty corpus file");
  return corpus;
}

inline std::string serialize_corpus_tsv(const Corpus& corpus) {
  std::string out(kCorpusHeader);
  out += '\n';
  for (const auto& r : corpus.records) {
    if (r.text.find_first_of("\t\n\r") != std::string::npos) {
      throw ValidationError("response " + std::to_string(r.response_id) +
                            " text contains tab or newline");
    }
    out += std::to_string(r.response_id) + '\t' + std::to_string(r.set_id) + '\t' +
           std::to_string(r.raw_score_1) + '\t' + std::to_string(r.raw_score_2) + '\t' + r.text +
           '\n';
  }
  return out;
}

inline std::vector<EssaySetSpec> metadata_of(const Corpus& corpus) {
  std::vector<EssaySetSpec> v;
  for (const auto& [id, s] : corpus.sets) v.push_back(s);
  return v;
}

// --- stratified sampling -------------------------------------------------------

struct SampleOptions {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 250;
};

namespace detail {

/// Proportional split of `total` across `weights`: floors first,
/// then the leftover goes to the heaviest stratum while it has room.
inline std::vector<std::size_t> allocate_proportional(std::size_t total,
                                                      const std::vector<std::size_t>& capacity) {
  std::size_t cap_sum = 0;
  for (auto c : capacity) cap_sum += c;
  std::vector<std::size_t> quota(capacity.size(), 0);
  if (cap_sum == 0) return quota;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < capacity.size(); ++i) {
    quota[i] = total * capacity[i] / cap_sum;
    assigned += quota[i];
  }
  std::vector<std::size_t> order(capacity.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return capacity[a] > capacity[b]; });
  std::size_t remainder = total - assigned;
  for (auto i : order) {
    const auto room = capacity[i] - quota[i];
    const auto give = std::min(room, remainder);
    quota[i] += give;
    remainder -= give;
  }
  return quota;
}

}  // namespace detail

/// Length-filtered, set- and band-stratified subsample. Records come back in
/// their original corpus order.
inline Corpus stratified_sample(const Corpus& corpus, const SampleOptions& opt) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto t = corpus.records[i].token_count;
    if (t >= opt.min_tokens && t <= opt.max_tokens) eligible.push_back(i);
  }
  Corpus out;
  out.sets = corpus.sets;
  if (opt.n > eligible.size()) {
    throw CapacityError("requested " + std::to_string(opt.n) + " records but only " +
                        std::to_string(eligible.size()) + " pass the length filter");
  }
  if (opt.n == eligible.size()) {
    for (auto i : eligible) out.records.push_back(corpus.records[i]);
    return out;
  }

  // set_id -> band -> record indices
  std::map<int, std::array<std::vector<std::size_t>, 3>> strata;
  for (const auto& r : corpus.records) strata[r.set_id];
  for (auto i : eligible) {
    const auto& r = corpus.records[i];
    strata[r.set_id][static_cast<int>(r.band)].push_back(i);
  }

  const std::size_t n_sets = strata.size();
  std::vector<bool> chosen(corpus.records.size(), false);
  std::ostringstream shortfall;
  std::size_t set_pos = 0;
  for (auto& [set_id, bands] : strata) {
    const std::size_t set_quota = opt.n / n_sets + (set_pos < opt.n % n_sets ? 1 : 0);
    ++set_pos;
    std::vector<std::size_t> capacity;
    std::size_t available = 0;
    for (const auto& b : bands) {
      capacity.push_back(b.size());
      available += b.size();
    }
    if (set_quota > available) {
      shortfall << " set " << set_id << ": need " << set_quota << ", have " << available << ";";
      continue;
    }
    const auto quota = detail::allocate_proportional(set_quota, capacity);
    for (int b = 0; b < 3; ++b) {
      auto pool = bands[b];
      detail::Rng rng(detail::mix(opt.seed, detail::mix(static_cast<std::uint64_t>(set_id),
                                                        static_cast<std::uint64_t>(b))));
      rng.shuffle(pool);
      for (std::size_t k = 0; k < quota[b]; ++k) chosen[pool[k]] = true;
    }
  }
  if (!shortfall.str().empty()) {
    throw CapacityError("insufficient eligible records per stratum:" + shortfall.str());
  }
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (chosen[i]) out.records.push_back(corpus.records[i]);
  }
  return out;
}

}  // namespace entropy_triage
