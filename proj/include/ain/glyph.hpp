#pragma once

#include <Eigen/Dense>

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "ain/embedding.hpp"

namespace ain {

inline constexpr int kComponentCount = 24;
inline constexpr std::size_t kGlyphSpace =
    static_cast<std::size_t>(kComponentCount) * kComponentCount * kComponentCount;  // 13824
inline constexpr int kComponentSize = 8;
inline constexpr int kGlyphWidth = kComponentSize;
inline constexpr int kGlyphHeight = 3 * kComponentSize;

// Three stacked component indices, top to bottom.
struct GlyphCode {
  int c0 = 0;
  int c1 = 0;
  int c2 = 0;

  auto operator<=>(const GlyphCode&) const = default;

  bool valid() const;
  std::size_t linear() const;
  static GlyphCode from_linear(std::size_t index);
  // `c0.c1.c2`
  std::string str() const;
  static GlyphCode parse(const std::string& text);
};

int l1_distance(const GlyphCode& a, const GlyphCode& b);

// Occupancy over the full 24^3 grid.
class GlyphSet {
 public:
  bool contains(const GlyphCode& code) const { return bits_.test(code.linear()); }
  void insert(const GlyphCode& code) { bits_.set(code.linear()); }
  std::size_t size() const { return bits_.count(); }
  bool full() const { return bits_.all(); }

 private:
  std::bitset<kGlyphSpace> bits_;
};

struct Projection {
  Vector mean;
  Eigen::Matrix<double, Eigen::Dynamic, 3> axes;  // orthonormal columns
  Eigen::Vector3d variances;                      // descending
  Eigen::Vector3d lower;
  Eigen::Vector3d upper;
};

// Fits the top-3 principal axes of the rows of `data`. Each axis is signed so
// its first non-negligible coefficient is positive. Throws DomainError when the
// data has fewer than 3 non-degenerate directions.
Projection fit_pca(const Matrix& data);
Projection fit_pca(const EmbeddingTable& table);

Eigen::Vector3d project(const Projection& projection, const Vector& vec);

// 24 equal-width bins per axis over [lower, upper], clamped at the ends.
GlyphCode quantize(const Projection& projection, const Eigen::Vector3d& point);
int quantize_axis(double value, double lower, double upper);

// Returns `code` if free, else the nearest free cell by L1 distance (ties by
// lexicographic order). Throws CapacityError when the grid is full.
GlyphCode resolve_collision(const GlyphCode& code, const GlyphSet& occupied);

// 8x8 bitmap, bit (row * 8 + col).
using ComponentBitmap = std::uint64_t;

inline bool pixel(ComponentBitmap bitmap, int row, int col) {
  return (bitmap >> (row * kComponentSize + col)) & 1u;
}

// 24 distinct components ordered from simple to complex (non-decreasing set
// pixel count).
class ComponentAtlas {
 public:
  // Throws FormatError unless the components form a valid atlas.
  explicit ComponentAtlas(const std::vector<ComponentBitmap>& components);

  // Procedural stroke/dot components; deterministic.
  static ComponentAtlas synthetic();
  static ComponentAtlas load(const std::string& path);
  void save(const std::string& path) const;

  ComponentBitmap component(int index) const { return components_.at(static_cast<std::size_t>(index)); }
  const std::array<ComponentBitmap, kComponentCount>& components() const { return components_; }

 private:
  std::array<ComponentBitmap, kComponentCount> components_{};
};

using GlyphBitmap = Eigen::Matrix<std::uint8_t, kGlyphHeight, kGlyphWidth>;

GlyphBitmap render(const GlyphCode& code, const ComponentAtlas& atlas);

enum class GlyphFormat { text, pgm, svg };
GlyphFormat parse_glyph_format(const std::string& name);

std::string glyph_text(const GlyphBitmap& bitmap);
std::string glyph_pgm(const GlyphBitmap& bitmap);
std::string glyph_svg(const GlyphBitmap& bitmap);

void export_glyph(const GlyphCode& code, const ComponentAtlas& atlas, GlyphFormat format,
                  const std::string& path);

// All glyphs in the given order, tiled `columns` per row with a one-pixel gutter.
void write_contact_sheet(const std::vector<GlyphCode>& codes, const ComponentAtlas& atlas,
                         const std::string& path, int columns = 16);

}  // namespace ain
