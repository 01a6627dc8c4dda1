#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ain/embedding.hpp"
#include "ain/rng.hpp"
#include "ain/text_service.hpp"

namespace ain {

using Sentence = std::vector<char32_t>;

inline constexpr std::size_t kDefaultRetrievalK = 3;
inline constexpr std::size_t kDefaultMaxVerseLength = 14;

// Drops characters missing from `table`; adds the number removed to *dropped.
Sentence filter_oov(const Sentence& sentence, const EmbeddingTable& table,
                    std::size_t* dropped = nullptr);

// One sentence per line, `#` comments and blank lines skipped. Decoded only;
// no vocabulary filtering.
std::vector<Sentence> read_sentence_file(const std::string& path);
void write_sentence_file(const std::string& path, const std::vector<Sentence>& sentences);

struct CorpusStats {
  std::size_t kept = 0;
  std::size_t dropped_sentences = 0;
  std::size_t dropped_chars = 0;
};

// OOV-filtered sentence collection with precomputed centroid vectors and
// character frequencies.
class Corpus {
 public:
  // Throws DomainError when nothing survives filtering.
  Corpus(const std::vector<Sentence>& raw, const EmbeddingTable& table);

  std::size_t size() const { return sentences_.size(); }
  const std::vector<Sentence>& sentences() const { return sentences_; }
  const Sentence& sentence(std::size_t i) const { return sentences_.at(i); }
  // Row i is the centroid of sentence i.
  const Matrix& vectors() const { return vectors_; }
  const CorpusStats& stats() const { return stats_; }

  std::size_t frequency(char32_t ch) const;
  // True when `a` ranks ahead of `b`: more frequent first, then lower codepoint.
  bool ranks_before(char32_t a, char32_t b) const;

 private:
  std::vector<Sentence> sentences_;
  Matrix vectors_;
  CorpusStats stats_;
  std::unordered_map<char32_t, std::size_t> frequency_;
};

Corpus load_corpus(const std::string& path, const EmbeddingTable& table);

enum class ObservationSource { scripted, external };

struct Observation {
  Sentence text;
  ObservationSource source = ObservationSource::scripted;
};

struct Retrieval {
  std::size_t index;
  double score;
  bool operator==(const Retrieval&) const = default;
};

std::vector<Retrieval> top_k_similar(const Corpus& corpus, const Observation& query,
                                     const EmbeddingTable& table, std::size_t k = kDefaultRetrievalK);

// Uniform pick among the retrieved sentences; returns the sentence index.
std::size_t pick_matched(const std::vector<Retrieval>& top, Rng& rng);

class ObservationProvider {
 public:
  virtual ~ObservationProvider() = default;
  virtual Observation next(Rng& rng) = 0;
  virtual std::unique_ptr<ObservationProvider> clone() const = 0;
};

// Cycles through a fixed list of sentences, reshuffled with `rng` at the start
// of every epoch.
class ScriptedProvider final : public ObservationProvider {
 public:
  // Sentences are OOV-filtered against `table`; empty ones dropped.
  ScriptedProvider(const std::vector<Sentence>& raw, const EmbeddingTable& table);
  static ScriptedProvider from_file(const std::string& path, const EmbeddingTable& table);

  Observation next(Rng& rng) override;
  std::unique_ptr<ObservationProvider> clone() const override;

  const std::vector<Sentence>& sentences() const { return sentences_; }

 private:
  std::vector<Sentence> sentences_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// Asks a TextService ("observe" role) for each observation. Failures and
// replies that filter to nothing fall back to `fallback` when given.
class ExternalProvider final : public ObservationProvider {
 public:
  ExternalProvider(std::shared_ptr<TextService> service, const EmbeddingTable& table,
                   std::unique_ptr<ObservationProvider> fallback = nullptr);

  Observation next(Rng& rng) override;
  std::unique_ptr<ObservationProvider> clone() const override;

 private:
  std::shared_ptr<TextService> service_;
  const EmbeddingTable* table_;
  std::unique_ptr<ObservationProvider> fallback_;
};

Observation observe(ObservationProvider& provider, Rng& rng);

enum class ComposeMode { templated, external };

struct ComposeOptions {
  ComposeMode mode = ComposeMode::templated;
  std::size_t max_length = kDefaultMaxVerseLength;
  TextService* service = nullptr;       // external mode only
  const EmbeddingTable* table = nullptr;  // filters external replies
  bool fallback_to_template = true;
};

// Template mode: (observation ++ matched) truncated to max_length.
Sentence compose_verse(const Observation& observation, const Sentence& matched,
                       const ComposeOptions& options = {});

// Random sentences over the first `vocab` characters of `table`, lengths in
// [min_len, max_len]. Deterministic in `seed`.
std::vector<Sentence> generate_sentences(const EmbeddingTable& table, std::size_t count,
                                         std::size_t vocab, std::size_t min_len,
                                         std::size_t max_len, std::uint64_t seed);

}  // namespace ain
