#include <cmath>
#include <set>

#include "doctest.h"

#include "ain/error.hpp"
#include "ain/lexicon.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ain;
using testing::TempDir;

namespace {

AinEntry entry_for(char32_t ch, GlyphCode glyph, Vector vec = Vector::Ones(2)) {
  AinEntry e;
  e.ch = ch;
  e.ain_vec = to_single_precision(vec.normalized());
  e.glyph = glyph;
  e.coined_at = static_cast<std::int64_t>(ch % 1000);
  e.coined_by = ch % 2 ? AgentId::B : AgentId::A;
  return e;
}

AinLexicon random_lexicon(const EmbeddingTable& table, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  AinLexicon lex;
  std::vector<char32_t> chars = table.chars();
  rng.shuffle(chars);
  for (std::size_t i = 0; i < count; ++i) {
    auto code = resolve_collision(GlyphCode::from_linear(rng.uniform_index(kGlyphSpace)), lex.occupied());
    AinEntry e = entry_for(chars[i], code, coin(chars[i], table, 0.3, rng));
    e.coined_at = static_cast<std::int64_t>(i);
    lex.insert(e);
  }
  return lex;
}

}  // namespace

TEST_CASE("coin") {
  auto table = generate_synthetic(100, 16, 5);
  const char32_t ch = table.chars()[0];
  const Vector v = table.vector_of(ch);

  Rng tiny(1);
  CHECK(cosine(coin(ch, table, 1e-9, tiny), v) >= 1 - 1e-12);

  Rng r1(77), r2(77);
  CHECK(coin(ch, table, 0.3, r1) == coin(ch, table, 0.3, r2));

  Rng rng(2);
  for (auto c : table.chars()) {
    Vector a = coin(c, table, 0.3, rng);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(a, table.vector_of(c)) >= 1 - 0.09);
    CHECK(a != table.vector_of(c));
  }
  CHECK_THROWS_AS(coin(ch, table, 0.0, rng), DomainError);
  CHECK_THROWS_AS(coin(ch, table, 1.0, rng), DomainError);
  CHECK_THROWS_AS(coin(U'山', table, 0.3, rng), NotFoundError);
}

TEST_CASE("insert and lookup") {
  AinLexicon lex;
  CHECK(lex.lookup(U'山') == nullptr);
  CHECK_FALSE(lex.reverse_lookup({1, 2, 3}).has_value());

  auto e = entry_for(U'山', {1, 2, 3});
  lex.insert(e);
  REQUIRE(lex.lookup(U'山') != nullptr);
  CHECK(*lex.lookup(U'山') == e);
  CHECK(lex.reverse_lookup({1, 2, 3}) == U'山');
  CHECK_THROWS_AS(lex.insert(entry_for(U'山', {0, 0, 0})), DuplicateError);
  CHECK_THROWS_AS(lex.insert(entry_for(U'水', {1, 2, 3})), DuplicateError);
  CHECK(lex.size() == 1);
}

TEST_CASE("capacity") {
  AinLexicon lex;
  for (std::size_t i = 0; i < kGlyphSpace; ++i)
    lex.insert(entry_for(kCjkFirst + static_cast<char32_t>(i), GlyphCode::from_linear(i)));
  CHECK(lex.size() == 13824);
  CHECK(lex.occupied().full());
  CHECK_THROWS_AS(lex.insert(entry_for(kCjkFirst + 13824, {0, 0, 0})), CapacityError);
  CHECK_THROWS_AS(resolve_collision({0, 0, 0}, lex.occupied()), CapacityError);
}

TEST_CASE("bijection over random inserts") {
  auto table = generate_synthetic(600, 8, 1);
  auto lex = random_lexicon(table, 500, 3);
  REQUIRE(lex.size() == 500);
  std::set<GlyphCode> glyphs;
  for (const auto& [ch, e] : lex.entries()) {
    glyphs.insert(e.glyph);
    CHECK(lex.reverse_lookup(e.glyph) == ch);
  }
  CHECK(glyphs.size() == 500);
  CHECK(lex.occupied().size() == 500);
}

TEST_CASE("nearest_ain") {
  AinLexicon empty;
  CHECK(nearest_ain(empty, Vector::Ones(3), 4).empty());

  auto table = generate_synthetic(80, 6, 4);
  auto lex = random_lexicon(table, 50, 8);
  const auto& first = lex.entries().begin()->second;
  CHECK(nearest_ain(lex, first.ain_vec, 1).at(0).ch == first.ch);

  std::vector<char32_t> chars;
  oracle::Rows rows;
  for (const auto& [ch, e] : lex.entries()) {
    chars.push_back(ch);
    rows.emplace_back(e.ain_vec.data(), e.ain_vec.data() + e.ain_vec.size());
  }
  for (int q = 0; q < 10; ++q) {
    const Vector query = table.vector_of(table.chars()[static_cast<std::size_t>(q)]);
    std::vector<double> qv(query.data(), query.data() + query.size());
    auto want = oracle::scan_and_sort(chars, rows, qv, 7);
    auto got = nearest_ain(lex, query, 7);
    REQUIRE(got.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(got[i].ch == want[i].ch);
      CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("lexicon files") {
  TempDir dir;
  AinLexicon empty;
  save_lexicon(empty, dir.file("empty.ain"));
  CHECK(load_lexicon(dir.file("empty.ain")).empty());

  auto table = generate_synthetic(40, 12, 6);
  auto lex = random_lexicon(table, 10, 2);
  save_lexicon(lex, dir.file("ten.ain"));
  auto back = load_lexicon(dir.file("ten.ain"));
  CHECK(back == lex);
  CHECK(back.order() == lex.order());
  CHECK(back.content_hash() == lex.content_hash());
  for (const auto& [ch, e] : lex.entries()) CHECK(*back.lookup(ch) == e);

  // Copy the second record's glyph onto the third.
  auto text = testing::read_file(dir.file("ten.ain"));
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  auto field = [](const std::string& line, int idx) {
    std::size_t start = 0;
    for (int i = 0; i < idx; ++i) start = line.find('\t', start) + 1;
    return std::make_pair(start, line.find('\t', start) - start);
  };
  auto [s2, n2] = field(lines[2], 3);
  auto [s3, n3] = field(lines[3], 3);
  lines[3].replace(s3, n3, lines[2].substr(s2, n2));
  std::string corrupted;
  for (const auto& l : lines) corrupted += l + "\n";
  testing::write_file(dir.file("bad.ain"), corrupted);
  try {
    load_lexicon(dir.file("bad.ain"));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 4);
  }

  testing::write_file(dir.file("hdr.ain"), "#AIN-LEX v1 dim=3 count=1\n");
  CHECK_THROWS_AS(load_lexicon(dir.file("hdr.ain")), FormatError);
  CHECK_THROWS_AS(load_lexicon(dir.file("none.ain")), IoError);
}

TEST_CASE("content hash sees every field") {
  AinLexicon a, b;
  a.insert(entry_for(U'山', {1, 2, 3}));
  b.insert(entry_for(U'山', {1, 2, 4}));
  CHECK(a.content_hash() != b.content_hash());
  AinLexicon c;
  c.insert(entry_for(U'山', {1, 2, 3}));
  CHECK(a.content_hash() == c.content_hash());
  CHECK(a == c);
}

TEST_CASE("base64") {
  CHECK(base64::encode({}) == "");
  CHECK(base64::encode({'f'}) == "Zg==");
  CHECK(base64::encode({'f', 'o'}) == "Zm8=");
  CHECK(base64::encode({'f', 'o', 'o', 'b', 'a', 'r'}) == "Zm9vYmFy");
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<std::uint8_t>(i));
  CHECK(base64::decode(base64::encode(bytes)) == bytes);
  CHECK_THROWS(base64::decode("Zg="));
}

TEST_CASE("divergence") {
  auto table = generate_synthetic(60, 8, 3);
  AinLexicon empty;
  CHECK(neighborhood_divergence(empty, table).entries == 0);

  // With vectors copied from the table the two neighborhoods coincide.
  AinLexicon same;
  for (std::size_t i = 0; i < 20; ++i) {
    const char32_t ch = table.chars()[i];
    same.insert(entry_for(ch, GlyphCode::from_linear(i), table.vector_of(ch)));
  }
  auto d = neighborhood_divergence(same, table, 5);
  CHECK(d.entries == 20);
  CHECK(d.mean_overlap > 0.99);
  CHECK(d.min_overlap <= d.mean_overlap);
  CHECK(d.max_overlap <= 1.0);
}
