#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ain/cluster.hpp"
#include "ain/corpus.hpp"
#include "ain/glyph.hpp"
#include "ain/lexicon.hpp"

namespace ain {

// Listener attempts per round before the speaker reveals the answer.
inline constexpr int kMaxGuesses = 5;
inline constexpr int kTranscriptVersion = 1;

enum class Role { speaker, listener };

struct AgentState {
  AgentId id = AgentId::A;
  AinLexicon lexicon;
  Rng rng;
  Role role = Role::listener;
  std::unique_ptr<ObservationProvider> provider;
};

struct AinToken {
  GlyphCode glyph;
  bool operator==(const AinToken&) const = default;
};
struct PlainToken {
  char32_t ch;
  bool operator==(const PlainToken&) const = default;
};
using Token = std::variant<AinToken, PlainToken>;

struct NewSymbol {
  GlyphCode glyph;
  char32_t hint;
  bool operator==(const NewSymbol&) const = default;
};

struct EncodedMessage {
  std::vector<Token> tokens;
  std::optional<NewSymbol> new_symbol;
  std::size_t target_position = 0;
  bool operator==(const EncodedMessage&) const = default;
};

struct Encoding {
  EncodedMessage message;
  std::optional<AinEntry> coined;  // set when the target was unknown
};

struct TargetChoice {
  char32_t ch;
  bool was_known;
};

// First unknown character by corpus frequency rank, else the first character.
TargetChoice select_target(const Sentence& verse, const AinLexicon& lexicon, const Corpus& corpus);

struct EncodeParams {
  double epsilon = kDefaultEpsilon;
  std::int64_t iteration = 0;
  AgentId speaker = AgentId::A;
  bool randomize_hint_ties = false;
};

// Known characters become AIN tokens. An unknown target is coined (vector +
// glyph) and every occurrence of it carries the new glyph; the hint rides
// along in `new_symbol`.
Encoding encode(const Sentence& verse, char32_t target, const AinLexicon& lexicon,
                const ClusterTree& tree, const EmbeddingTable& table, const Projection& projection,
                const EncodeParams& params, Rng& rng);

struct GuessRecord {
  char32_t guess;
  int feedback;
  bool operator==(const GuessRecord&) const = default;
};

// Characters consistent with every (guess, feedback) pair in `history`.
std::vector<char32_t> consistent_candidates(const ClusterTree& tree,
                                            const std::vector<GuessRecord>& history, int levels);

// Next listener guess: the candidate closest (cophenetic) to the hint, never
// the hint, a known character, or a repeat. Throws DomainError once the guess
// budget is spent.
char32_t listener_guess(const ClusterTree& tree, char32_t hint, const CharSet& known,
                        const std::vector<GuessRecord>& history, int levels);

struct RoundOutcome {
  std::int64_t iteration = 0;
  AgentId speaker = AgentId::A;
  Sentence observation;
  std::size_t matched_index = 0;
  Sentence verse;
  char32_t target = 0;
  bool was_known = false;
  std::vector<GuessRecord> guesses;
  std::optional<int> solved_in;
  bool revealed = false;
  std::size_t lexicon_size = 0;
  std::uint64_t hash_a = 0;
  std::uint64_t hash_b = 0;
  EncodedMessage message;

  bool operator==(const RoundOutcome&) const = default;
};

struct GameContext {
  const EmbeddingTable* table = nullptr;
  const Corpus* corpus = nullptr;
  const ClusterTree* tree = nullptr;
  const Projection* projection = nullptr;
  int feedback_levels = kDefaultFeedbackLevels;
  double epsilon = kDefaultEpsilon;
  std::size_t k_retrieval = kDefaultRetrievalK;
  ComposeOptions compose;
  bool randomize_hint_ties = false;
};

// One full exchange. Both lexicons receive the same entry on a coinage round;
// throws Error if they diverge.
RoundOutcome run_round(AgentState& speaker, AgentState& listener, const GameContext& context,
                       std::int64_t iteration);

// JSON-lines transcript record (schema v1).
std::string transcript_line(const RoundOutcome& outcome);
RoundOutcome parse_transcript_line(const std::string& line);

}  // namespace ain
