#include "ain/lexicon.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ain/utf8.hpp"

namespace ain {

AgentId parse_agent(const std::string& text) {
  if (text == "A") return AgentId::A;
  if (text == "B") return AgentId::B;
  throw FormatError("unknown agent id '" + text + "'");
}

Vector to_single_precision(const Vector& vec) { return vec.cast<float>().cast<double>(); }

Vector coin(char32_t ch, const EmbeddingTable& table, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("coin: epsilon must lie in (0, 1)");
  const Vector v = table.vector_of(ch);
  const Vector unit = v / v.norm();
  Vector u(v.size());
  while (true) {
    do {
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(-1.0, 1.0);
    } while (u.squaredNorm() == 0.0);
    u /= u.norm();
    Vector ain = unit + epsilon * u;
    const double n = ain.norm();
    if (n == 0.0) continue;
    ain /= n;
    if (ain != v) return ain;
  }
}

bool AinEntry::operator==(const AinEntry& other) const {
  return ch == other.ch && ain_vec.size() == other.ain_vec.size() && ain_vec == other.ain_vec &&
         glyph == other.glyph && epsilon == other.epsilon && coined_at == other.coined_at &&
         coined_by == other.coined_by;
}

void AinLexicon::insert(AinEntry entry) {
  const std::string name = "'" + utf8::encode(entry.ch) + "'";
  if (entries_.size() >= kGlyphSpace) {
    throw CapacityError("lexicon is full (" + std::to_string(kGlyphSpace) + " entries); cannot add " + name);
  }
  if (!entry.glyph.valid()) throw DomainError("glyph out of range for " + name);
  if (entries_.count(entry.ch)) throw DuplicateError("character " + name + " is already in the lexicon");
  if (occupied_.contains(entry.glyph)) throw DuplicateError("glyph " + entry.glyph.str() + " is already assigned");
  if (!entries_.empty() && entry.ain_vec.size() != entries_.begin()->second.ain_vec.size()) {
    throw DomainError("AIN vector dimension mismatch for " + name);
  }
  occupied_.insert(entry.glyph);
  by_glyph_.emplace(entry.glyph, entry.ch);
  order_.push_back(entry.ch);
  entries_.emplace(entry.ch, std::move(entry));
}

const AinEntry* AinLexicon::lookup(char32_t ch) const {
  auto it = entries_.find(ch);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<char32_t> AinLexicon::reverse_lookup(const GlyphCode& glyph) const {
  auto it = by_glyph_.find(glyph);
  if (it == by_glyph_.end()) return std::nullopt;
  return it->second;
}

CharSet AinLexicon::known() const {
  CharSet out;
  for (const auto& [ch, entry] : entries_) out.insert(ch);
  return out;
}

std::uint64_t AinLexicon::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (value >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  };
  feed(entries_.size(), 8);
  for (char32_t ch : order_) {
    const AinEntry& e = entries_.at(ch);
    feed(ch, 4);
    feed(static_cast<std::uint64_t>(e.ain_vec.size()), 4);
    for (Eigen::Index i = 0; i < e.ain_vec.size(); ++i) feed(std::bit_cast<std::uint32_t>(static_cast<float>(e.ain_vec(i))), 4);
    feed(e.glyph.linear(), 4);
    feed(std::bit_cast<std::uint64_t>(e.epsilon), 8);
    feed(static_cast<std::uint64_t>(e.coined_at), 8);
    feed(static_cast<std::uint64_t>(e.coined_by), 1);
  }
  return h;
}

bool AinLexicon::operator==(const AinLexicon& other) const {
  return order_ == other.order_ && entries_ == other.entries_;
}

std::vector<ScoredChar> nearest_ain(const AinLexicon& lexicon, const Vector& query, std::size_t k,
                                    const CharSet& exclude) {
  if (lexicon.empty()) return {};
  const double qn = query.norm();
  if (qn == 0.0) throw DomainError("nearest_ain: zero query vector");
  std::vector<ScoredChar> scored;
  for (const auto& [ch, entry] : lexicon.entries()) {
    if (exclude.count(ch)) continue;
    if (entry.ain_vec.size() != query.size()) throw DomainError("nearest_ain: dimension mismatch");
    scored.push_back({ch, std::clamp(entry.ain_vec.dot(query) / (entry.ain_vec.norm() * qn), -1.0, 1.0)});
  }
  rank_top_k(scored, k);
  return scored;
}

namespace base64 {

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t n = std::min<std::size_t>(3, bytes.size() - i);
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (n > 1) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (n > 2) chunk |= bytes[i + 2];
    out.push_back(kAlphabet[(chunk >> 18) & 63]);
    out.push_back(kAlphabet[(chunk >> 12) & 63]);
    out.push_back(n > 1 ? kAlphabet[(chunk >> 6) & 63] : '=');
    out.push_back(n > 2 ? kAlphabet[chunk & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t chunk = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int v;
      if (c == '=' && last && k >= 2) {
        ++pad;
        v = 0;
      } else {
        if (pad) throw FormatError("invalid base64 padding");
        v = value(c);
        if (v < 0) throw FormatError("invalid base64 character");
      }
      chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
    }
    out.push_back(static_cast<std::uint8_t>(chunk >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(chunk & 0xFF));
  }
  return out;
}

}  // namespace base64

void save_lexicon(const AinLexicon& lexicon, const std::string& path) {
  if (path.empty()) throw IoError("empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::size_t dim = lexicon.empty() ? 0 : static_cast<std::size_t>(lexicon.entries().begin()->second.ain_vec.size());
  out << "#AIN-LEX v1 dim=" << dim << " count=" << lexicon.size() << '\n';
  char eps[40];
  for (char32_t ch : lexicon.order()) {
    const AinEntry& e = *lexicon.lookup(ch);
    std::vector<std::uint8_t> bytes;
    bytes.reserve(4 * dim);
    for (Eigen::Index i = 0; i < e.ain_vec.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(e.ain_vec(i)));
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF));
    }
    std::snprintf(eps, sizeof eps, "%.17g", e.epsilon);
    out << utf8::encode(ch) << '\t' << eps << '\t' << base64::encode(bytes) << '\t' << e.glyph.str() << '\t'
        << e.coined_at << '\t' << to_char(e.coined_by) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

AinLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header", 1);
  std::size_t dim = 0, count = 0;
  {
    std::istringstream header(line);
    std::string magic, version, dim_token, count_token;
    header >> magic >> version >> dim_token >> count_token;
    if (magic != "#AIN-LEX" || version != "v1" || dim_token.rfind("dim=", 0) != 0 ||
        count_token.rfind("count=", 0) != 0) {
      throw FormatError("malformed header", 1);
    }
    try {
      dim = std::stoul(dim_token.substr(4));
      count = std::stoul(count_token.substr(6));
    } catch (const std::exception&) {
      throw FormatError("malformed header", 1);
    }
  }
  AinLexicon lexicon;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string f; std::getline(row, f, '\t');) fields.push_back(f);
    if (fields.size() != 6) throw FormatError("expected 6 tab-separated fields", line_no);
    try {
      AinEntry e;
      e.ch = utf8::single(fields[0]);
      std::size_t used = 0;
      e.epsilon = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw FormatError("bad epsilon");
      const auto bytes = base64::decode(fields[2]);
      if (bytes.size() != 4 * dim) throw FormatError("vector length does not match dim=" + std::to_string(dim));
      e.ain_vec.resize(static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < dim; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
        e.ain_vec(static_cast<Eigen::Index>(i)) = std::bit_cast<float>(bits);
      }
      if (!e.ain_vec.allFinite()) throw FormatError("non-finite vector component");
      e.glyph = GlyphCode::parse(fields[3]);
      e.coined_at = std::stoll(fields[4], &used);
      if (used != fields[4].size()) throw FormatError("bad coined_at");
      e.coined_by = parse_agent(fields[5]);
      lexicon.insert(std::move(e));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    } catch (const Error& e) {
      throw FormatError(e.what(), line_no);
    } catch (const std::exception&) {
      throw FormatError("malformed number", line_no);
    }
  }
  if (lexicon.size() != count) {
    throw FormatError("header declares count=" + std::to_string(count) + " but file has " +
                      std::to_string(lexicon.size()) + " records");
  }
  return lexicon;
}

DivergenceSummary neighborhood_divergence(const AinLexicon& lexicon, const EmbeddingTable& table, std::size_t k) {
  DivergenceSummary out;
  out.entries = lexicon.size();
  out.k = k;
  if (lexicon.size() < 2 || k == 0) return out;
  const std::size_t m = lexicon.size();
  const std::size_t keff = std::min(k, m - 1);
  out.k = keff;

  std::vector<char32_t> chars;
  Matrix ain(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(table.dim()));
  Matrix zh(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(table.dim()));
  for (const auto& [ch, entry] : lexicon.entries()) {
    const auto r = static_cast<Eigen::Index>(chars.size());
    ain.row(r) = entry.ain_vec.normalized().transpose();
    zh.row(r) = table.vector_of(ch).normalized().transpose();
    chars.push_back(ch);
  }
  const Matrix ain_sim = ain * ain.transpose();
  const Matrix zh_sim = zh * zh.transpose();

  auto neighbours = [&](const Matrix& sim, std::size_t row) {
    std::vector<ScoredChar> scored;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != row) scored.push_back({chars[j], sim(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j))});
    }
    rank_top_k(scored, keff);
    CharSet set;
    for (const auto& s : scored) set.insert(s.ch);
    return set;
  };

  double sum = 0.0;
  out.min_overlap = 1.0;
  out.max_overlap = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const CharSet a = neighbours(ain_sim, i);
    const CharSet z = neighbours(zh_sim, i);
    std::size_t shared = 0;
    for (char32_t c : a) shared += z.count(c);
    const double overlap = static_cast<double>(shared) / static_cast<double>(keff);
    sum += overlap;
    out.min_overlap = std::min(out.min_overlap, overlap);
    out.max_overlap = std::max(out.max_overlap, overlap);
  }
  out.mean_overlap = sum / static_cast<double>(m);
  return out;
}

}  // namespace ain
