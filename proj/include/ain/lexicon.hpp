#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ain/embedding.hpp"
#include "ain/glyph.hpp"
#include "ain/rng.hpp"

namespace ain {

enum class AgentId : std::uint8_t { A, B };

inline char to_char(AgentId id) { return id == AgentId::A ? 'A' : 'B'; }
AgentId parse_agent(const std::string& text);

inline constexpr double kDefaultEpsilon = 0.3;

// normalize(v_hat + epsilon * u) for a seeded unit perturbation u, where v_hat
// is the unit Chinese vector of `ch`. cosine(result, v) >= sqrt(1 - eps^2).
Vector coin(char32_t ch, const EmbeddingTable& table, double epsilon, Rng& rng);

struct AinEntry {
  char32_t ch = 0;
  Vector ain_vec;  // single-precision values
  GlyphCode glyph;
  double epsilon = kDefaultEpsilon;
  std::int64_t coined_at = 0;
  AgentId coined_by = AgentId::A;

  bool operator==(const AinEntry& other) const;
};

// Rounds `vec` through float, matching what the lexicon file stores.
Vector to_single_precision(const Vector& vec);

// Bijective char <-> glyph dictionary, capped at the glyph space size.
class AinLexicon {
 public:
  void insert(AinEntry entry);

  const AinEntry* lookup(char32_t ch) const;
  std::optional<char32_t> reverse_lookup(const GlyphCode& glyph) const;
  bool contains(char32_t ch) const { return entries_.count(ch) != 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Characters in coinage order.
  const std::vector<char32_t>& order() const { return order_; }
  const std::map<char32_t, AinEntry>& entries() const { return entries_; }
  const GlyphSet& occupied() const { return occupied_; }
  CharSet known() const;

  // FNV-1a over the full content, in coinage order.
  std::uint64_t content_hash() const;

  bool operator==(const AinLexicon& other) const;

 private:
  std::map<char32_t, AinEntry> entries_;
  std::map<GlyphCode, char32_t> by_glyph_;
  std::vector<char32_t> order_;
  GlyphSet occupied_;
};

std::vector<ScoredChar> nearest_ain(const AinLexicon& lexicon, const Vector& query, std::size_t k,
                                    const CharSet& exclude = {});

void save_lexicon(const AinLexicon& lexicon, const std::string& path);
AinLexicon load_lexicon(const std::string& path);

// Mean/min/max overlap between each entry's k AIN-space neighbours and its k
// Chinese-space neighbours, both taken among lexicon characters.
struct DivergenceSummary {
  std::size_t entries = 0;
  std::size_t k = 0;
  double mean_overlap = 0.0;
  double min_overlap = 0.0;
  double max_overlap = 0.0;
};

DivergenceSummary neighborhood_divergence(const AinLexicon& lexicon, const EmbeddingTable& table,
                                          std::size_t k = 5);

namespace base64 {
std::string encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> decode(const std::string& text);
}  // namespace base64

}  // namespace ain
