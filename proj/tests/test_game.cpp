#include <algorithm>
#include <set>

#include "doctest.h"

#include "ain/error.hpp"
#include "ain/game.hpp"
#include "ain/utf8.hpp"
#include "helpers.hpp"

using namespace ain;
using testing::kA;
using testing::kB;
using testing::kC;
using testing::kD;

namespace {

Sentence S(const char* text) {
  auto u = utf8::decode(text);
  return Sentence(u.begin(), u.end());
}

// Everything run_round needs, owned in one place.
struct World {
  EmbeddingTable table;
  Corpus corpus;
  ClusterTree tree;
  Projection projection;
  GameContext ctx;
  AgentState a, b;

  World(EmbeddingTable t, const std::vector<Sentence>& sentences, const std::vector<Sentence>& script)
      : table(std::move(t)), corpus(sentences, table), tree(build_tree(table)), projection(fit_pca(table)) {
    ctx.table = &table;
    ctx.corpus = &corpus;
    ctx.tree = &tree;
    ctx.projection = &projection;
    a.id = AgentId::A;
    b.id = AgentId::B;
    a.rng = Rng(1);
    b.rng = Rng(2);
    a.provider = std::make_unique<ScriptedProvider>(script, table);
    b.provider = std::make_unique<ScriptedProvider>(script, table);
  }

  void teach(char32_t ch, GlyphCode glyph) {
    AinEntry e;
    e.ch = ch;
    e.ain_vec = to_single_precision(table.vector_of(ch).normalized());
    e.glyph = glyph;
    a.lexicon.insert(e);
    b.lexicon.insert(e);
  }
};

EmbeddingTable five_chars() {
  return testing::table_of({{U'山', {1.0, 0.0, 0.0}},
                            {U'水', {0.0, 1.0, 0.0}},
                            {U'火', {0.0, 0.0, 1.0}},
                            {U'木', {1.0, 1.0, 0.2}},
                            {U'月', {-1.0, 0.2, 0.5}}});
}

// A tight cluster of six around e1, a target just outside it, and three far points.
// The listener burns all five guesses inside the cluster before reaching the target.
constexpr char32_t kTarget = U'標';
EmbeddingTable decoy_table() {
  std::vector<char32_t> chars;
  Matrix m(10, 4);
  for (int i = 0; i < 6; ++i) {
    chars.push_back(U'一' + static_cast<char32_t>(i));
    m.row(i) << 1.0, 0.02 * i, 0.01 * (i % 2), 0.0;
  }
  chars.push_back(kTarget);
  m.row(6) << 1.0, 0.0, 0.0, 0.45;
  chars.push_back(U'北');
  m.row(7) << -1.0, 0.0, 0.0, 0.1;
  chars.push_back(U'南');
  m.row(8) << -1.0, 0.1, 0.0, 0.0;
  chars.push_back(U'西');
  m.row(9) << 0.0, 0.0, -1.0, 0.3;
  return EmbeddingTable(chars, m);
}

}  // namespace

TEST_CASE("select_target") {
  auto table = five_chars();
  Corpus corpus({S("水水山"), S("水火")}, table);
  AinLexicon lex;
  auto pick = select_target(S("山水"), lex, corpus);
  CHECK(pick.ch == U'水');
  CHECK_FALSE(pick.was_known);

  AinLexicon both;
  both.insert({U'山', Vector::Ones(3), {0, 0, 0}, 0.3, 0, AgentId::A});
  both.insert({U'水', Vector::Ones(3), {0, 0, 1}, 0.3, 0, AgentId::A});
  pick = select_target(S("山水"), both, corpus);
  CHECK(pick.ch == U'山');
  CHECK(pick.was_known);

  auto syn = generate_synthetic(40, 4, 2);
  Corpus big(generate_sentences(syn, 60, 40, 2, 7, 5), syn);
  AinLexicon half;
  for (std::size_t i = 0; i < 40; i += 2) half.insert({syn.chars()[i], Vector::Ones(4), GlyphCode::from_linear(i), 0.3, 0, AgentId::A});
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Sentence verse;
    const std::size_t len = 1 + rng.uniform_index(6);
    for (std::size_t i = 0; i < len; ++i) verse.push_back(syn.chars()[rng.uniform_index(40)]);
    std::vector<char32_t> unknown;
    for (auto ch : verse)
      if (!half.contains(ch)) unknown.push_back(ch);
    char32_t want = verse.front();
    if (!unknown.empty()) {
      want = *std::min_element(unknown.begin(), unknown.end(), [&](char32_t x, char32_t y) {
        const auto fx = big.frequency(x), fy = big.frequency(y);
        return fx != fy ? fx > fy : x < y;
      });
    }
    auto got = select_target(verse, half, big);
    CHECK(got.ch == want);
    CHECK(got.was_known == unknown.empty());
  }
}

TEST_CASE("encode") {
  auto table = five_chars();
  auto tree = build_tree(table);
  auto proj = fit_pca(table);
  Rng rng(4);
  AinLexicon lex;
  lex.insert({U'山', Vector::Ones(3), {1, 1, 1}, 0.3, 0, AgentId::A});

  auto enc = encode(S("山水"), U'水', lex, tree, table, proj, {}, rng);
  REQUIRE(enc.message.tokens.size() == 2);
  CHECK(enc.message.tokens[0] == Token{AinToken{{1, 1, 1}}});
  REQUIRE(enc.message.new_symbol.has_value());
  REQUIRE(enc.coined.has_value());
  CHECK(enc.message.tokens[1] == Token{AinToken{enc.coined->glyph}});
  CHECK(enc.message.new_symbol->glyph == enc.coined->glyph);
  CHECK(enc.message.new_symbol->hint != U'水');
  CHECK(enc.message.target_position == 1);
  CHECK(enc.coined->glyph != GlyphCode{1, 1, 1});

  AinLexicon all = lex;
  all.insert({U'水', Vector::Ones(3), {2, 2, 2}, 0.3, 0, AgentId::A});
  auto known = encode(S("水山水"), U'水', all, tree, table, proj, {}, rng);
  CHECK_FALSE(known.message.new_symbol.has_value());
  CHECK_FALSE(known.coined.has_value());
  for (const auto& t : known.message.tokens) CHECK(std::holds_alternative<AinToken>(t));
  CHECK(known.message.target_position == 0);

  CHECK_THROWS_AS(encode(S("山"), U'水', lex, tree, table, proj, {}, rng), DomainError);
}

TEST_CASE("encoded messages reconstruct the verse") {
  auto table = generate_synthetic(60, 6, 1);
  auto tree = build_tree(table);
  auto proj = fit_pca(table);
  Corpus corpus(generate_sentences(table, 30, 60, 2, 8, 7), table);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    AinLexicon lex;
    for (std::size_t i = 0; i < 60; ++i)
      if (rng.uniform01() < 0.5) lex.insert({table.chars()[i], Vector::Ones(6), GlyphCode::from_linear(i * 7), 0.3, 0, AgentId::A});
    const Sentence& verse = corpus.sentence(rng.uniform_index(corpus.size()));
    auto choice = select_target(verse, lex, corpus);
    auto enc = encode(verse, choice.ch, lex, tree, table, proj, {}, rng);
    REQUIRE(enc.message.tokens.size() == verse.size());
    CHECK(verse[enc.message.target_position] == choice.ch);
    for (std::size_t i = 0; i < verse.size(); ++i) {
      const auto& tok = enc.message.tokens[i];
      if (verse[i] == choice.ch && !choice.was_known) {
        CHECK(std::get<AinToken>(tok).glyph == enc.message.new_symbol->glyph);
      } else if (const auto* ain = std::get_if<AinToken>(&tok)) {
        CHECK(lex.reverse_lookup(ain->glyph) == verse[i]);
      } else {
        CHECK(std::get<PlainToken>(tok).ch == verse[i]);
        CHECK_FALSE(lex.contains(verse[i]));
      }
    }
  }
}

TEST_CASE("listener on two tight pairs") {
  auto tree = build_tree(testing::two_pairs());
  CHECK(listener_guess(tree, kB, {}, {}, 3) == kA);
  CHECK(feedback_level(tree, kA, kA, 3) == 0);

  const char32_t first = listener_guess(tree, kC, {}, {}, 3);
  CHECK(first == kD);
  const int f = feedback_level(tree, first, kA, 3);
  CHECK(f == 3);
  const char32_t second = listener_guess(tree, kC, {}, {{first, f}}, 3);
  CHECK((second == kA || second == kB));

  CHECK(listener_guess(tree, kC, {kD}, {}, 3) != kD);
  std::vector<GuessRecord> spent(5, GuessRecord{kD, 3});
  CHECK_THROWS_AS(listener_guess(tree, kC, {}, spent, 3), DomainError);
}

TEST_CASE("listener exhaustive on five characters") {
  auto table = generate_synthetic(5, 4, 12);
  auto tree = build_tree(table);
  const auto& chars = table.chars();
  for (int L : {2, 3, 4}) {
    for (auto hint : chars) {
      for (auto target : chars) {
        if (hint == target) continue;
        std::vector<GuessRecord> history;
        bool found = false;
        while (history.size() < 5 && !found) {
          // brute-force consistent set
          std::vector<char32_t> want;
          for (auto c : chars) {
            bool ok = true;
            for (const auto& g : history) ok = ok && feedback_level(tree, g.guess, c, L) == g.feedback && c != g.guess;
            if (ok) want.push_back(c);
          }
          CHECK(consistent_candidates(tree, history, L) == want);

          const char32_t guess = listener_guess(tree, hint, {}, history, L);
          CHECK(guess != hint);
          if (!history.empty()) CHECK(std::find(want.begin(), want.end(), guess) != want.end());
          const int f = feedback_level(tree, guess, target, L);
          history.push_back({guess, f});
          found = f == 0;
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("run_round on a known verse") {
  World w(five_chars(), {S("山水")}, {S("山")});
  w.teach(U'山', {0, 0, 0});
  w.teach(U'水', {0, 0, 1});
  const auto before = w.a.lexicon.content_hash();
  auto out = run_round(w.a, w.b, w.ctx, 0);
  CHECK(out.was_known);
  CHECK(out.guesses.empty());
  CHECK_FALSE(out.message.new_symbol.has_value());
  CHECK(w.a.lexicon.content_hash() == before);
  CHECK(out.hash_a == out.hash_b);
  CHECK(out.lexicon_size == 2);
}

TEST_CASE("run_round solves and both agents learn") {
  World w(five_chars(), {S("山水")}, {S("山")});
  auto out = run_round(w.a, w.b, w.ctx, 0);
  CHECK_FALSE(out.was_known);
  CHECK(w.a.lexicon.size() == 1);
  CHECK(w.b.lexicon.size() == 1);
  CHECK(w.a.lexicon == w.b.lexicon);
  CHECK(out.hash_a == out.hash_b);
  CHECK(out.guesses.size() <= 5);
  CHECK(out.solved_in.has_value() != out.revealed);
  CHECK(w.a.role == Role::speaker);
  CHECK(w.b.role == Role::listener);
  const auto* e = w.a.lexicon.lookup(out.target);
  REQUIRE(e != nullptr);
  CHECK(e->coined_by == AgentId::A);
  CHECK(e->coined_at == 0);
}

TEST_CASE("run_round reveals after five misses") {
  World w(decoy_table(), {Sentence{kTarget}}, {Sentence{kTarget}});
  auto out = run_round(w.a, w.b, w.ctx, 3);
  CHECK(out.target == kTarget);
  REQUIRE(out.guesses.size() == 5);
  for (const auto& g : out.guesses) {
    CHECK(g.feedback != 0);
    CHECK(g.guess >= U'一');
    CHECK(g.guess < U'一' + 6);
  }
  CHECK(out.revealed);
  CHECK_FALSE(out.solved_in.has_value());
  CHECK(w.a.lexicon.contains(kTarget));
  CHECK(w.b.lexicon.contains(kTarget));
  CHECK(*w.a.lexicon.lookup(kTarget) == *w.b.lexicon.lookup(kTarget));
  CHECK(out.hash_a == out.hash_b);
}

TEST_CASE("transcript lines round trip") {
  World w(decoy_table(), {Sentence{kTarget, U'北'}}, {Sentence{kTarget}});
  for (int it = 0; it < 3; ++it) {
    auto out = it % 2 ? run_round(w.b, w.a, w.ctx, it) : run_round(w.a, w.b, w.ctx, it);
    auto line = transcript_line(out);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(line.rfind("{\"v\":1,", 0) == 0);
    CHECK(parse_transcript_line(line) == out);
  }
  CHECK_THROWS_AS(parse_transcript_line("{\"v\":2}"), FormatError);
  CHECK_THROWS_AS(parse_transcript_line("not json"), FormatError);
}
