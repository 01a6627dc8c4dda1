#include "ain/embedding.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ain/rng.hpp"
#include "ain/utf8.hpp"

namespace ain {

namespace {

constexpr char kTsvMagic[] = "#AIN-EMB";
constexpr char kBinaryMagic[4] = {'A', 'I', 'N', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

std::string describe(char32_t ch) { return "'" + utf8::encode(ch) + "'"; }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  if (path.empty()) throw IoError("empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

// Parses `key=<unsigned>` out of a header token.
std::size_t header_field(const std::string& token, const std::string& key, std::size_t line) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0) throw FormatError("malformed header: expected " + prefix, line);
  std::size_t value = 0;
  const char* first = token.data() + prefix.size();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw FormatError("malformed header value for " + key, line);
  return value;
}

void check_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, char32_t ch, std::size_t line) {
  if (!row.allFinite()) throw FormatError("non-finite value for " + describe(ch), line);
  if (row.squaredNorm() == 0.0) throw FormatError("zero vector for " + describe(ch), line);
}

EmbeddingTable load_tsv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header", 1);
  std::istringstream header(line);
  std::string magic, version, dim_token, count_token;
  header >> magic >> version >> dim_token >> count_token;
  if (magic != kTsvMagic || version != "v1") throw FormatError("malformed header", 1);
  const std::size_t dim = header_field(dim_token, "dim", 1);
  const std::size_t count = header_field(count_token, "count", 1);
  if (dim == 0) throw FormatError("malformed header: dim must be positive", 1);

  std::vector<char32_t> chars;
  std::vector<double> values;
  CharSet seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("missing TAB separator", line_no);
    char32_t ch;
    try {
      ch = utf8::single(line.substr(0, tab));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    }
    if (!seen.insert(ch).second) throw FormatError("duplicate character " + describe(ch), line_no);

    Eigen::RowVectorXd row(static_cast<Eigen::Index>(dim));
    std::size_t n = 0;
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw FormatError("unparsable number", line_no);
      if (n < dim) row(static_cast<Eigen::Index>(n)) = v;
      ++n;
      p = next;
      if (p < end) {
        if (*p != ',') throw FormatError("expected ',' between values", line_no);
        ++p;
        if (p == end) throw FormatError("trailing ','", line_no);
      }
    }
    if (n != dim) {
      throw FormatError("dimension mismatch: expected " + std::to_string(dim) + " values, got " +
                            std::to_string(n),
                        line_no);
    }
    check_row(row, ch, line_no);
    chars.push_back(ch);
    values.insert(values.end(), row.data(), row.data() + row.size());
  }
  if (chars.size() != count) {
    throw FormatError("header declares count=" + std::to_string(count) + " but file has " +
                      std::to_string(chars.size()) + " rows");
  }
  Matrix vectors = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  return EmbeddingTable(std::move(chars), std::move(vectors));
}

EmbeddingTable load_binary(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16) throw FormatError("file too short for header (" + std::to_string(bytes.size()) + " bytes)");
  if (bytes.compare(0, 4, kBinaryMagic, 4) != 0) throw FormatError("bad magic at offset 0");
  if (get_u32(bytes, 4) != kFormatVersion) throw FormatError("unsupported version at offset 4");
  const std::size_t dim = get_u32(bytes, 8);
  const std::size_t count = get_u32(bytes, 12);
  if (dim == 0) throw FormatError("dim must be positive (offset 8)");
  const std::size_t record = 4 + 4 * dim;
  if (bytes.size() != 16 + count * record) {
    throw FormatError("size mismatch: expected " + std::to_string(16 + count * record) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::vector<char32_t> chars;
  chars.reserve(count);
  Matrix vectors(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  CharSet seen;
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t offset = 16 + r * record;
    const char32_t ch = get_u32(bytes, offset);
    if (ch > 0x10FFFF) throw FormatError("invalid codepoint at offset " + std::to_string(offset));
    if (!seen.insert(ch).second) {
      throw FormatError("duplicate character " + describe(ch) + " at offset " + std::to_string(offset));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::bit_cast<float>(get_u32(bytes, offset + 4 + 4 * c));
    }
    const auto row = vectors.row(static_cast<Eigen::Index>(r));
    if (!row.allFinite() || row.squaredNorm() == 0.0) {
      throw FormatError("non-finite or zero vector for " + describe(ch) + " at offset " + std::to_string(offset));
    }
    chars.push_back(ch);
  }
  return EmbeddingTable(std::move(chars), std::move(vectors));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<char32_t> chars, Matrix vectors)
    : chars_(std::move(chars)), vectors_(std::move(vectors)) {
  if (chars_.empty()) throw DomainError("embedding table needs at least one entry");
  if (static_cast<std::size_t>(vectors_.rows()) != chars_.size()) {
    throw DomainError("embedding table: row count does not match character count");
  }
  if (vectors_.cols() == 0) throw DomainError("embedding table: dim must be positive");
  vectors_ = vectors_.cast<float>().cast<double>();
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], i).second) throw DuplicateError("duplicate character " + describe(chars_[i]));
  }
  if (!vectors_.allFinite()) throw DomainError("embedding table: non-finite value");
  norms_ = vectors_.rowwise().norm();
  for (Eigen::Index i = 0; i < norms_.size(); ++i) {
    if (norms_(i) == 0.0) throw DomainError("zero vector for " + describe(chars_[static_cast<std::size_t>(i)]));
  }
}

std::optional<std::size_t> EmbeddingTable::index_of(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingTable::require_index(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) throw NotFoundError("unknown character " + describe(ch));
  return it->second;
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  return chars_ == other.chars_ && vectors_.rows() == other.vectors_.rows() &&
         vectors_.cols() == other.vectors_.cols() && vectors_ == other.vectors_;
}

TableFormat format_for_path(const std::string& path) {
  const std::string ext = ".tsv";
  if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return TableFormat::tsv;
  }
  return TableFormat::binary;
}

EmbeddingTable load_table(const std::string& path, TableFormat format) {
  return format == TableFormat::tsv ? load_tsv(path) : load_binary(path);
}

void save_table(const EmbeddingTable& table, const std::string& path, TableFormat format) {
  if (path.empty()) throw IoError("empty output path");
  const auto& vectors = table.vectors();
  std::string out;
  if (format == TableFormat::tsv) {
    out = std::string(kTsvMagic) + " v1 dim=" + std::to_string(table.dim()) +
          " count=" + std::to_string(table.size()) + "\n";
    char buf[32];
    for (std::size_t r = 0; r < table.size(); ++r) {
      out += utf8::encode(table.chars()[r]);
      out.push_back('\t');
      for (std::size_t c = 0; c < table.dim(); ++c) {
        if (c) out.push_back(',');
        // 9 significant digits round-trip any float exactly.
        const int len = std::snprintf(buf, sizeof buf, "%.9g",
                                      static_cast<double>(static_cast<float>(
                                          vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)))));
        out.append(buf, static_cast<std::size_t>(len));
      }
      out.push_back('\n');
    }
  } else {
    out.reserve(16 + table.size() * (4 + 4 * table.dim()));
    out.append(kBinaryMagic, 4);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(table.dim()));
    put_u32(out, static_cast<std::uint32_t>(table.size()));
    for (std::size_t r = 0; r < table.size(); ++r) {
      put_u32(out, static_cast<std::uint32_t>(table.chars()[r]));
      for (std::size_t c = 0; c < table.dim(); ++c) {
        const float v = static_cast<float>(vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        put_u32(out, std::bit_cast<std::uint32_t>(v));
      }
    }
  }
  write_file(path, out);
}

EmbeddingTable generate_synthetic(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n > kCjkBlockSize) {
    throw DomainError("synthetic table size " + std::to_string(n) + " exceeds the CJK block (" +
                      std::to_string(kCjkBlockSize) + ")");
  }
  if (n < 2 || dim < 2) throw DomainError("synthetic table needs n >= 2 and dim >= 2");
  Rng rng(seed);
  std::vector<char32_t> chars(n);
  Matrix vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r) {
    chars[r] = kCjkFirst + static_cast<char32_t>(r);
    auto row = vectors.row(static_cast<Eigen::Index>(r));
    do {
      for (Eigen::Index c = 0; c < row.size(); ++c) row(c) = rng.uniform(-1.0, 1.0);
    } while (row.squaredNorm() == 0.0);
    row /= row.norm();
  }
  return EmbeddingTable(std::move(chars), std::move(vectors));
}

void rank_top_k(std::vector<ScoredChar>& scored, std::size_t k) {
  auto better = [](const ScoredChar& a, const ScoredChar& b) {
    return a.score != b.score ? a.score > b.score : a.ch < b.ch;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  scored.resize(keep);
}

std::vector<ScoredChar> nearest(const EmbeddingTable& table, const Vector& query, std::size_t k,
                                const CharSet& exclude) {
  if (static_cast<std::size_t>(query.size()) != table.dim()) throw DomainError("nearest: dimension mismatch");
  const double qn = query.norm();
  if (qn == 0.0) throw DomainError("nearest: zero query vector");
  const Vector dots = table.vectors() * query;
  std::vector<ScoredChar> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const char32_t ch = table.chars()[i];
    if (exclude.count(ch)) continue;
    const auto row = static_cast<Eigen::Index>(i);
    scored.push_back({ch, std::clamp(dots(row) / (table.norms()(row) * qn), -1.0, 1.0)});
  }
  rank_top_k(scored, k);
  return scored;
}

Vector centroid(const EmbeddingTable& table, const std::vector<char32_t>& chars) {
  if (chars.empty()) throw DomainError("centroid of an empty character list");
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
  for (char32_t ch : chars) sum += table.vectors().row(static_cast<Eigen::Index>(table.require_index(ch))).transpose();
  return sum / static_cast<double>(chars.size());
}

}  // namespace ain
