#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ain/error.hpp"

namespace ain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CharSet = std::set<char32_t>;

// Defaults for a real character dictionary.
inline constexpr std::size_t kDefaultCharCount = 3768;
inline constexpr std::size_t kDefaultEmbeddingDim = 768;

// First codepoint and size of the CJK Unified Ideographs block used for
// synthetic tables.
inline constexpr char32_t kCjkFirst = 0x4E00;
inline constexpr std::size_t kCjkBlockSize = 20992;

enum class TableFormat { tsv, binary };

// Cosine similarity of two dense vectors, clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw DomainError("cosine: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) throw DomainError("cosine: undefined similarity for zero vector");
  const Scalar c = a.dot(b) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

struct ScoredChar {
  char32_t ch;
  double score;
  bool operator==(const ScoredChar&) const = default;
};

// Character -> vector dictionary. Immutable after construction; row i of
// `vectors()` belongs to `chars()[i]` and file order is iteration order.
// Components are held at single precision (rounded through float on
// construction) so the binary format round-trips bit-exactly.
class EmbeddingTable {
 public:
  EmbeddingTable(std::vector<char32_t> chars, Matrix vectors);

  std::size_t size() const { return chars_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }

  const std::vector<char32_t>& chars() const { return chars_; }
  const Matrix& vectors() const { return vectors_; }
  const Vector& norms() const { return norms_; }

  bool contains(char32_t ch) const { return index_.count(ch) != 0; }
  std::optional<std::size_t> index_of(char32_t ch) const;
  // Throws NotFoundError naming the character.
  std::size_t require_index(char32_t ch) const;
  Vector vector_of(char32_t ch) const { return vectors_.row(require_index(ch)).transpose(); }

  bool operator==(const EmbeddingTable& other) const;

 private:
  std::vector<char32_t> chars_;
  Matrix vectors_;
  Vector norms_;
  std::unordered_map<char32_t, std::size_t> index_;
};

EmbeddingTable load_table(const std::string& path, TableFormat format);
void save_table(const EmbeddingTable& table, const std::string& path, TableFormat format);
// Picks the format from the extension: ".tsv" is text, anything else binary.
TableFormat format_for_path(const std::string& path);

EmbeddingTable generate_synthetic(std::size_t n, std::size_t dim, std::uint64_t seed);

// k best entries by cosine to `query`, descending; equal scores by ascending
// codepoint.
std::vector<ScoredChar> nearest(const EmbeddingTable& table, const Vector& query, std::size_t k,
                                const CharSet& exclude = {});

Vector centroid(const EmbeddingTable& table, const std::vector<char32_t>& chars);

// Shared ranking helper: sorts by descending score, ties by ascending codepoint,
// and keeps the first k.
void rank_top_k(std::vector<ScoredChar>& scored, std::size_t k);

}  // namespace ain
