#include "ain/glyph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ain {

bool GlyphCode::valid() const {
  auto in = [](int c) { return c >= 0 && c < kComponentCount; };
  return in(c0) && in(c1) && in(c2);
}

std::size_t GlyphCode::linear() const {
  if (!valid()) throw DomainError("glyph code out of range: " + str());
  return static_cast<std::size_t>((c0 * kComponentCount + c1) * kComponentCount + c2);
}

GlyphCode GlyphCode::from_linear(std::size_t index) {
  if (index >= kGlyphSpace) throw DomainError("glyph index out of range");
  const int i = static_cast<int>(index);
  return {i / (kComponentCount * kComponentCount), (i / kComponentCount) % kComponentCount, i % kComponentCount};
}

std::string GlyphCode::str() const {
  return std::to_string(c0) + "." + std::to_string(c1) + "." + std::to_string(c2);
}

GlyphCode GlyphCode::parse(const std::string& text) {
  GlyphCode code;
  char d1 = 0, d2 = 0;
  std::istringstream in(text);
  if (!(in >> code.c0 >> d1 >> code.c1 >> d2 >> code.c2) || d1 != '.' || d2 != '.' || in.peek() != EOF ||
      !code.valid()) {
    throw FormatError("malformed glyph code '" + text + "'");
  }
  return code;
}

int l1_distance(const GlyphCode& a, const GlyphCode& b) {
  return std::abs(a.c0 - b.c0) + std::abs(a.c1 - b.c1) + std::abs(a.c2 - b.c2);
}

Projection fit_pca(const Matrix& data) {
  if (data.rows() < 4 || data.cols() < 3) throw DomainError("PCA needs at least 4 rows and 3 columns");
  Projection p;
  p.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - p.mean.transpose();
  const Matrix covariance = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
  if (solver.info() != Eigen::Success) throw DomainError("PCA eigendecomposition failed");
  const auto& values = solver.eigenvalues();  // ascending
  const Eigen::Index d = values.size();
  const double top = values(d - 1);
  if (!(top > 0.0) || values(d - 3) <= 1e-12 * top) throw DomainError("degenerate table: rank < 3");

  p.axes.resize(data.cols(), 3);
  for (int k = 0; k < 3; ++k) {
    p.variances(k) = values(d - 1 - k);
    Vector axis = solver.eigenvectors().col(d - 1 - k);
    for (Eigen::Index i = 0; i < axis.size(); ++i) {
      if (std::abs(axis(i)) > 1e-9) {
        if (axis(i) < 0) axis = -axis;
        break;
      }
    }
    p.axes.col(k) = axis;
  }
  const Eigen::Matrix<double, Eigen::Dynamic, 3> projected = centered * p.axes;
  p.lower = projected.colwise().minCoeff().transpose();
  p.upper = projected.colwise().maxCoeff().transpose();
  return p;
}

Projection fit_pca(const EmbeddingTable& table) { return fit_pca(table.vectors()); }

Eigen::Vector3d project(const Projection& projection, const Vector& vec) {
  if (vec.size() != projection.mean.size()) throw DomainError("project: dimension mismatch");
  return projection.axes.transpose() * (vec - projection.mean);
}

int quantize_axis(double value, double lower, double upper) {
  if (!(upper > lower) || std::isnan(value)) return 0;
  const double bin = std::floor(kComponentCount * (value - lower) / (upper - lower));
  return static_cast<int>(std::clamp(bin, 0.0, static_cast<double>(kComponentCount - 1)));
}

GlyphCode quantize(const Projection& projection, const Eigen::Vector3d& point) {
  return {quantize_axis(point(0), projection.lower(0), projection.upper(0)),
          quantize_axis(point(1), projection.lower(1), projection.upper(1)),
          quantize_axis(point(2), projection.lower(2), projection.upper(2))};
}

GlyphCode resolve_collision(const GlyphCode& code, const GlyphSet& occupied) {
  if (occupied.full()) throw CapacityError("glyph space is full (" + std::to_string(kGlyphSpace) + " cells)");
  if (!occupied.contains(code)) return code;
  constexpr int kMaxRadius = 3 * (kComponentCount - 1);
  auto in = [](int c) { return c >= 0 && c < kComponentCount; };
  // Shells of increasing L1 radius, each walked in lexicographic order.
  for (int r = 1; r <= kMaxRadius; ++r) {
    for (int c0 = code.c0 - r; c0 <= code.c0 + r; ++c0) {
      if (!in(c0)) continue;
      const int r0 = r - std::abs(c0 - code.c0);
      for (int c1 = code.c1 - r0; c1 <= code.c1 + r0; ++c1) {
        if (!in(c1)) continue;
        const int rem = r0 - std::abs(c1 - code.c1);
        for (int c2 : {code.c2 - rem, code.c2 + rem}) {
          if (in(c2)) {
            const GlyphCode candidate{c0, c1, c2};
            if (!occupied.contains(candidate)) return candidate;
          }
          if (rem == 0) break;
        }
      }
    }
  }
  throw CapacityError("no free glyph cell");
}

namespace {

using PixelList = std::vector<std::pair<int, int>>;

PixelList hline(int row, int from, int to) {
  PixelList px;
  for (int c = from; c <= to; ++c) px.emplace_back(row, c);
  return px;
}

PixelList vline(int col, int from, int to) {
  PixelList px;
  for (int r = from; r <= to; ++r) px.emplace_back(r, col);
  return px;
}

ComponentBitmap to_bitmap(const PixelList& px) {
  ComponentBitmap b = 0;
  for (auto [r, c] : px) b |= ComponentBitmap{1} << (r * kComponentSize + c);
  return b;
}

void check_atlas(const std::array<ComponentBitmap, kComponentCount>& components) {
  std::set<ComponentBitmap> seen;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i] == 0) throw FormatError("atlas component " + std::to_string(i) + " is empty");
    if (!seen.insert(components[i]).second) throw FormatError("atlas component " + std::to_string(i) + " is a duplicate");
    if (i > 0 && std::popcount(components[i]) < std::popcount(components[i - 1])) {
      throw FormatError("atlas component " + std::to_string(i) + " is simpler than its predecessor");
    }
  }
}

}  // namespace

ComponentAtlas::ComponentAtlas(const std::vector<ComponentBitmap>& components) {
  if (components.size() != static_cast<std::size_t>(kComponentCount)) {
    throw FormatError("atlas must hold exactly " + std::to_string(kComponentCount) + " components, got " +
                      std::to_string(components.size()));
  }
  std::copy(components.begin(), components.end(), components_.begin());
  check_atlas(components_);
}

ComponentAtlas ComponentAtlas::synthetic() {
  // Stroke primitives: dot, bars, posts, diagonals, centre cross strokes.
  PixelList diag, anti;
  for (int i = 1; i <= 6; ++i) {
    diag.emplace_back(i, i);
    anti.emplace_back(i, 7 - i);
  }
  const std::vector<ComponentBitmap> prim = {
      to_bitmap({{3, 3}, {3, 4}, {4, 3}, {4, 4}}),  // 0 dot
      to_bitmap(hline(1, 1, 6)),                    // 1 top bar
      to_bitmap(hline(6, 1, 6)),                    // 2 bottom bar
      to_bitmap(vline(1, 1, 6)),                    // 3 left post
      to_bitmap(vline(6, 1, 6)),                    // 4 right post
      to_bitmap(diag),                              // 5
      to_bitmap(anti),                              // 6
      to_bitmap(hline(3, 0, 7)),                    // 7 middle bar
      to_bitmap(vline(4, 0, 7)),                    // 8 middle post
  };
  const std::vector<std::vector<int>> recipes = {
      {0},       {1},       {3},          {5},          {6},          {7},
      {8},       {1, 2},    {3, 4},       {5, 6},       {7, 8},       {0, 1},
      {0, 3},    {1, 3},    {2, 4},       {1, 2, 7},    {3, 4, 8},    {5, 6, 8},
      {1, 3, 5}, {2, 4, 6}, {1, 2, 3, 4}, {5, 6, 7, 8}, {1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6, 7, 8},
  };
  std::vector<ComponentBitmap> components;
  for (const auto& recipe : recipes) {
    ComponentBitmap b = 0;
    for (int k : recipe) b |= prim[static_cast<std::size_t>(k)];
    components.push_back(b);
  }
  std::stable_sort(components.begin(), components.end(),
                   [](ComponentBitmap a, ComponentBitmap b) { return std::popcount(a) < std::popcount(b); });
  return ComponentAtlas(components);
}

ComponentAtlas ComponentAtlas::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open atlas '" + path + "'");
  std::vector<ComponentBitmap> components;
  ComponentBitmap current = 0;
  int row = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.size() != static_cast<std::size_t>(kComponentSize) ||
        line.find_first_not_of("01") != std::string::npos) {
      throw FormatError("atlas row must be 8 characters of 0/1", line_no);
    }
    for (int c = 0; c < kComponentSize; ++c) {
      if (line[static_cast<std::size_t>(c)] == '1') current |= ComponentBitmap{1} << (row * kComponentSize + c);
    }
    if (++row == kComponentSize) {
      components.push_back(current);
      current = 0;
      row = 0;
    }
  }
  if (row != 0) throw FormatError("atlas ends inside a component");
  return ComponentAtlas(components);
}

void ComponentAtlas::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (int i = 0; i < kComponentCount; ++i) {
    out << "# component " << i << '\n';
    for (int r = 0; r < kComponentSize; ++r) {
      for (int c = 0; c < kComponentSize; ++c) out << (pixel(component(i), r, c) ? '1' : '0');
      out << '\n';
    }
    out << '\n';
  }
}

GlyphBitmap render(const GlyphCode& code, const ComponentAtlas& atlas) {
  if (!code.valid()) throw DomainError("glyph code out of range: " + code.str());
  GlyphBitmap bitmap;
  const int parts[3] = {code.c0, code.c1, code.c2};
  for (int band = 0; band < 3; ++band) {
    const ComponentBitmap b = atlas.component(parts[band]);
    for (int r = 0; r < kComponentSize; ++r) {
      for (int c = 0; c < kComponentSize; ++c) bitmap(band * kComponentSize + r, c) = pixel(b, r, c) ? 1 : 0;
    }
  }
  return bitmap;
}

GlyphFormat parse_glyph_format(const std::string& name) {
  if (name == "text") return GlyphFormat::text;
  if (name == "pgm") return GlyphFormat::pgm;
  if (name == "svg") return GlyphFormat::svg;
  throw DomainError("unknown glyph format '" + name + "'");
}

std::string glyph_text(const GlyphBitmap& bitmap) {
  std::string out;
  for (int r = 0; r < kGlyphHeight; ++r) {
    for (int c = 0; c < kGlyphWidth; ++c) out.push_back(bitmap(r, c) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

std::string glyph_pgm(const GlyphBitmap& bitmap) {
  std::string out = "P5\n" + std::to_string(kGlyphWidth) + " " + std::to_string(kGlyphHeight) + "\n255\n";
  for (int r = 0; r < kGlyphHeight; ++r) {
    for (int c = 0; c < kGlyphWidth; ++c) out.push_back(static_cast<char>(bitmap(r, c) ? 255 : 0));
  }
  return out;
}

std::string glyph_svg(const GlyphBitmap& bitmap) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kGlyphWidth << ' ' << kGlyphHeight
      << "\" width=\"" << kGlyphWidth * 10 << "\" height=\"" << kGlyphHeight * 10 << "\">\n";
  for (int r = 0; r < kGlyphHeight; ++r) {
    for (int c = 0; c < kGlyphWidth; ++c) {
      if (bitmap(r, c)) out << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"1\" height=\"1\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
  if (path.empty()) throw IoError("empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void export_glyph(const GlyphCode& code, const ComponentAtlas& atlas, GlyphFormat format, const std::string& path) {
  const GlyphBitmap bitmap = render(code, atlas);
  switch (format) {
    case GlyphFormat::text: write_bytes(path, glyph_text(bitmap)); break;
    case GlyphFormat::pgm: write_bytes(path, glyph_pgm(bitmap)); break;
    case GlyphFormat::svg: write_bytes(path, glyph_svg(bitmap)); break;
  }
}

void write_contact_sheet(const std::vector<GlyphCode>& codes, const ComponentAtlas& atlas, const std::string& path,
                         int columns) {
  if (columns < 1) throw DomainError("contact sheet needs at least one column");
  const int count = static_cast<int>(codes.size());
  const int cols = std::max(1, std::min(columns, count));
  const int rows = std::max(1, (count + cols - 1) / cols);
  const int cell_w = kGlyphWidth + 1, cell_h = kGlyphHeight + 1;
  const int width = cols * cell_w + 1, height = rows * cell_h + 1;
  std::string pixels(static_cast<std::size_t>(width * height), '\0');
  for (int i = 0; i < count; ++i) {
    const GlyphBitmap bitmap = render(codes[static_cast<std::size_t>(i)], atlas);
    const int x0 = 1 + (i % cols) * cell_w, y0 = 1 + (i / cols) * cell_h;
    for (int r = 0; r < kGlyphHeight; ++r) {
      for (int c = 0; c < kGlyphWidth; ++c) {
        if (bitmap(r, c)) pixels[static_cast<std::size_t>((y0 + r) * width + x0 + c)] = static_cast<char>(255);
      }
    }
  }
  write_bytes(path, "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n" + pixels);
}

}  // namespace ain
