#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ain/game.hpp"

namespace ain {

struct SimulationConfig {
  std::uint64_t seed = 0;
  // "synthetic" or a table file path (.tsv for text, otherwise binary).
  std::string table = "synthetic";
  std::size_t table_n = kDefaultCharCount;
  std::size_t table_dim = kDefaultEmbeddingDim;
  std::string corpus;
  std::string script;
  Linkage linkage = Linkage::average;
  int feedback_levels = kDefaultFeedbackLevels;
  double epsilon = kDefaultEpsilon;
  std::int64_t max_iterations = 1000;
  std::int64_t saturation_window = 50;
  std::int64_t accuracy_window = 50;
  std::size_t k_retrieval = kDefaultRetrievalK;
  std::size_t max_verse_length = kDefaultMaxVerseLength;
  ComposeMode compose_mode = ComposeMode::templated;
  std::string output_dir = "out";
  std::string provider_url;
  std::int64_t provider_timeout_ms = 10000;
  bool randomize_hint_ties = false;
};

// `key = value` lines; `#` comments; `[section]` headers ignored; string values
// may be double-quoted.
std::map<std::string, std::string> parse_key_values(const std::string& text);
// Applies known keys; throws ConfigError on unknown keys or bad values.
void apply_settings(SimulationConfig& config, const std::map<std::string, std::string>& settings);
SimulationConfig load_config(const std::string& path);
// Throws ConfigError describing the first problem found.
void validate(const SimulationConfig& config);

EmbeddingTable load_table_source(const SimulationConfig& config);

struct SessionReport {
  std::optional<std::int64_t> saturation_iteration;
  std::string stopped_by;  // "max_iterations" | "saturation" | "none"
  std::int64_t rounds = 0;
  std::size_t coinages = 0;
  std::size_t final_lexicon_size = 0;
  std::size_t solved = 0;
  double solve_rate = 0.0;
  double mean_guesses_per_coinage = 0.0;
  std::vector<double> window_accuracy;  // first-guess accuracy per window of coinage rounds
  DivergenceSummary divergence;
  double duration_seconds = 0.0;
};

struct SessionResult {
  SessionReport report;
  std::vector<RoundOutcome> outcomes;
  AinLexicon lexicon;  // agent A's (equal to B's)
  std::vector<double> trailing_accuracy;  // per round, NaN when undefined
};

// `service` overrides the HTTP client built from provider_url.
SessionResult run_session(const SimulationConfig& config,
                          std::shared_ptr<TextService> service = nullptr);

std::string report_json(const SessionReport& report);
std::string metrics_csv(const SessionResult& result);
std::string glyph_index(const AinLexicon& lexicon);

struct VerifyResult {
  std::size_t rounds = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Replays the game invariants over transcript lines. When `tree` is given the
// listener-consistency check is performed as well.
VerifyResult verify_transcript(const std::vector<std::string>& lines,
                               const ClusterTree* tree = nullptr,
                               int feedback_levels = kDefaultFeedbackLevels);

}  // namespace ain
