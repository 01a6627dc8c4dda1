#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"

#include "ain/error.hpp"
#include "ain/session.hpp"
#include "ain/utf8.hpp"
#include "helpers.hpp"

using namespace ain;
using testing::TempDir;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CannedService : public TextService {
 public:
  explicit CannedService(std::string reply) : reply_(std::move(reply)) {}
  std::string request(const std::string&, const std::string&) override { return reply_; }

 private:
  std::string reply_;
};

}  // namespace

TEST_CASE("key value parsing") {
  auto kv = parse_key_values("# comment\n[section]\nseed = 7\ncorpus = \"a b.txt\"\nepsilon = 0.2 # note\n");
  CHECK(kv.at("seed") == "7");
  CHECK(kv.at("corpus") == "a b.txt");
  CHECK(kv.at("epsilon") == "0.2");
  CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);

  SimulationConfig c;
  apply_settings(c, kv);
  CHECK(c.seed == 7);
  CHECK(c.epsilon == 0.2);
  CHECK_THROWS_AS(apply_settings(c, {{"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(apply_settings(c, {{"max_iterations", "ten"}}), ConfigError);
  CHECK_THROWS_AS(apply_settings(c, {{"linkage", "ward"}}), ConfigError);
}

TEST_CASE("config paths resolve against the config file") {
  TempDir dir;
  std::filesystem::create_directories(dir.path() / "conf");
  testing::write_file(dir.file("conf/sim.toml"), "corpus = ../c.txt\nscript = s.txt\ntable = synthetic\n");
  auto c = load_config(dir.file("conf/sim.toml"));
  CHECK(std::filesystem::path(c.corpus) == (dir.path() / "c.txt").lexically_normal());
  CHECK(std::filesystem::path(c.script) == (dir.path() / "conf" / "s.txt").lexically_normal());
  CHECK(c.table == "synthetic");
  CHECK_THROWS_AS(load_config(dir.file("missing.toml")), ConfigError);
}

TEST_CASE("validation") {
  TempDir dir;
  testing::write_file(dir.file("c.txt"), "一丁\n");
  SimulationConfig c;
  c.corpus = dir.file("c.txt");
  c.script = dir.file("c.txt");
  CHECK_NOTHROW(validate(c));
  auto bad = [&](auto mutate) {
    SimulationConfig x = c;
    mutate(x);
    CHECK_THROWS_AS(validate(x), ConfigError);
  };
  bad([](SimulationConfig& x) { x.corpus = "nowhere.txt"; });
  bad([](SimulationConfig& x) { x.epsilon = 1.0; });
  bad([](SimulationConfig& x) { x.feedback_levels = 1; });
  bad([](SimulationConfig& x) { x.table_n = 3; });
  bad([](SimulationConfig& x) { x.saturation_window = 0; });
  bad([](SimulationConfig& x) { x.k_retrieval = 0; });
  bad([&](SimulationConfig& x) { x.table = dir.file("no-table.bin"); });
  bad([](SimulationConfig& x) { x.compose_mode = ComposeMode::external; });
}

TEST_CASE("zero iterations") {
  TempDir dir;
  testing::write_file(dir.file("c.txt"), "一丁\n");
  SimulationConfig c;
  c.corpus = c.script = dir.file("c.txt");
  c.max_iterations = 0;
  auto r = run_session(c);
  CHECK(r.report.rounds == 0);
  CHECK(r.outcomes.empty());
  CHECK(r.lexicon.empty());
  CHECK(r.report.final_lexicon_size == 0);
  CHECK_FALSE(r.report.saturation_iteration.has_value());
}

TEST_CASE("three character corpus saturates") {
  TempDir dir;
  // U+4E00..U+4E02 are the first three synthetic characters
  testing::write_file(dir.file("c.txt"), "一丁\n丁丂\n丂一丁\n");
  SimulationConfig c;
  c.table_n = 20;
  c.table_dim = 8;
  c.corpus = c.script = dir.file("c.txt");
  c.saturation_window = 10;
  c.max_iterations = 200;
  auto r = run_session(c);

  const std::set<char32_t> reachable{U'一', U'丁', U'丂'};
  CHECK(r.lexicon.known() == CharSet(reachable.begin(), reachable.end()));
  CHECK(r.report.coinages == 3);
  CHECK(r.report.stopped_by == "saturation");
  std::size_t last_coinage = 0;
  for (std::size_t i = 0; i < r.outcomes.size(); ++i)
    if (!r.outcomes[i].was_known) last_coinage = i;
  for (std::size_t i = last_coinage + 1; i < r.outcomes.size(); ++i) CHECK(r.outcomes[i].was_known);
  CHECK(*r.report.saturation_iteration == static_cast<std::int64_t>(last_coinage + 1));
  CHECK(r.outcomes.size() == last_coinage + 11);
}

TEST_CASE("sessions are deterministic and consistent") {
  TempDir dir;
  auto table = generate_synthetic(80, 12, 5);
  write_sentence_file(dir.file("c.txt"), generate_sentences(table, 30, 60, 2, 6, 1));
  write_sentence_file(dir.file("s.txt"), generate_sentences(table, 10, 60, 2, 6, 2));
  SimulationConfig c;
  c.seed = 5;
  c.table_n = 80;
  c.table_dim = 12;
  c.corpus = dir.file("c.txt");
  c.script = dir.file("s.txt");
  c.max_iterations = 300;
  auto r1 = run_session(c);
  auto r2 = run_session(c);
  REQUIRE(r1.outcomes.size() == r2.outcomes.size());
  for (std::size_t i = 0; i < r1.outcomes.size(); ++i) CHECK(transcript_line(r1.outcomes[i]) == transcript_line(r2.outcomes[i]));
  CHECK(metrics_csv(r1) == metrics_csv(r2));
  CHECK(r1.lexicon == r2.lexicon);

  const auto& rep = r1.report;
  CHECK(rep.final_lexicon_size == rep.coinages);
  CHECK(rep.solve_rate >= 0.0);
  CHECK(rep.solve_rate <= 1.0);
  std::size_t prev = 0;
  for (std::size_t i = 0; i < r1.outcomes.size(); ++i) {
    const auto& o = r1.outcomes[i];
    CHECK(o.speaker == (i % 2 ? AgentId::B : AgentId::A));
    CHECK(o.hash_a == o.hash_b);
    CHECK(o.lexicon_size >= prev);
    prev = o.lexicon_size;
  }

  std::vector<std::string> lines;
  for (const auto& o : r1.outcomes) lines.push_back(transcript_line(o));
  auto tree = build_tree(table);
  auto verdict = verify_transcript(lines, &tree, c.feedback_levels);
  CHECK(verdict.ok());
  CHECK(verdict.rounds == r1.outcomes.size());

  auto csv = split_lines(metrics_csv(r1));
  CHECK(csv[0] == "iteration,lexicon_size,was_known,solved_in,window_accuracy");
  CHECK(csv.size() == r1.outcomes.size() + 1);
  auto json = report_json(rep);
  CHECK(json.find("\"window_first_guess_accuracy\"") != std::string::npos);
  CHECK(split_lines(glyph_index(r1.lexicon)).size() == r1.lexicon.size());

  c.seed = 6;
  auto other = run_session(c);
  CHECK_FALSE(other.lexicon == r1.lexicon);
}

TEST_CASE("verify catches tampering") {
  TempDir dir;
  auto table = generate_synthetic(30, 6, 0);
  write_sentence_file(dir.file("c.txt"), generate_sentences(table, 10, 30, 2, 4, 1));
  SimulationConfig c;
  c.table_n = 30;
  c.table_dim = 6;
  c.corpus = c.script = dir.file("c.txt");
  c.max_iterations = 40;
  auto r = run_session(c);
  std::vector<std::string> lines;
  for (const auto& o : r.outcomes) lines.push_back(transcript_line(o));
  CHECK(verify_transcript(lines).ok());

  auto swapped = lines;
  std::swap(swapped[0], swapped[1]);
  CHECK_FALSE(verify_transcript(swapped).ok());

  auto forked = lines;
  auto o = parse_transcript_line(forked[2]);
  o.hash_b ^= 1;
  forked[2] = transcript_line(o);
  CHECK_FALSE(verify_transcript(forked).ok());

  // a coinage round with a guess outside the consistent set
  std::size_t coin_round = 0;
  while (r.outcomes[coin_round].guesses.size() < 2 && coin_round + 1 < r.outcomes.size()) ++coin_round;
  if (r.outcomes[coin_round].guesses.size() >= 2) {
    auto tree = build_tree(table);
    auto bent = lines;
    auto x = r.outcomes[coin_round];
    x.guesses[1].guess = x.guesses[0].guess;
    bent[coin_round] = transcript_line(x);
    CHECK_FALSE(verify_transcript(bent, &tree, c.feedback_levels).ok());
  }
  CHECK_FALSE(verify_transcript({"{}"}).ok());
}

TEST_CASE("external composition through a service") {
  TempDir dir;
  testing::write_file(dir.file("c.txt"), "一丁\n丁丂\n");
  SimulationConfig c;
  c.table_n = 20;
  c.table_dim = 8;
  c.corpus = c.script = dir.file("c.txt");
  c.compose_mode = ComposeMode::external;
  c.provider_url = "http://unused.invalid/";
  c.max_iterations = 20;
  auto r = run_session(c, std::make_shared<CannedService>("七万天"));
  REQUIRE(!r.outcomes.empty());
  // 天 is outside the 20-character table and is filtered out
  CHECK(r.outcomes[0].verse == Sentence{U'七', U'万'});
  CHECK(r.outcomes[0].observation == Sentence{U'七', U'万'});
  CHECK(r.lexicon.known() == CharSet{U'七', U'万'});
}
