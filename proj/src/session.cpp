#include "ain/session.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ain/utf8.hpp"

namespace ain {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    if constexpr (std::is_unsigned_v<T>) {
      if (v < 0) throw std::invalid_argument(value);
    }
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  }
}

std::uint64_t parse_seed(const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used, 0);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'seed' expects an unsigned integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + value + "'");
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return !path.empty() && fs::is_regular_file(path, ec);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
      value = value.substr(1, close - 1);
    } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

void apply_settings(SimulationConfig& c, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) {
    if (key == "seed") c.seed = parse_seed(value);
    else if (key == "table") c.table = value;
    else if (key == "table_n") c.table_n = parse_integer<std::size_t>(key, value);
    else if (key == "table_dim") c.table_dim = parse_integer<std::size_t>(key, value);
    else if (key == "corpus") c.corpus = value;
    else if (key == "script") c.script = value;
    else if (key == "linkage") {
      try {
        c.linkage = parse_linkage(value);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
    else if (key == "feedback_levels") c.feedback_levels = parse_integer<int>(key, value);
    else if (key == "epsilon") c.epsilon = parse_real(key, value);
    else if (key == "max_iterations") c.max_iterations = parse_integer<std::int64_t>(key, value);
    else if (key == "saturation_window") c.saturation_window = parse_integer<std::int64_t>(key, value);
    else if (key == "accuracy_window") c.accuracy_window = parse_integer<std::int64_t>(key, value);
    else if (key == "k_retrieval") c.k_retrieval = parse_integer<std::size_t>(key, value);
    else if (key == "max_verse_length") c.max_verse_length = parse_integer<std::size_t>(key, value);
    else if (key == "compose_mode") {
      if (value == "template") c.compose_mode = ComposeMode::templated;
      else if (value == "external") c.compose_mode = ComposeMode::external;
      else throw ConfigError("'compose_mode' expects template|external, got '" + value + "'");
    }
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "provider_url") c.provider_url = value;
    else if (key == "provider_timeout_ms") c.provider_timeout_ms = parse_integer<std::int64_t>(key, value);
    else if (key == "randomize_hint_ties") c.randomize_hint_ties = parse_bool(key, value);
    else throw ConfigError("unknown configuration key '" + key + "'");
  }
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  auto settings = parse_key_values(text.str());
  // Relative data paths are taken relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  for (const char* key : {"corpus", "script", "table"}) {
    auto it = settings.find(key);
    if (it == settings.end() || it->second.empty() || it->second == "synthetic") continue;
    if (fs::path(it->second).is_relative()) it->second = (base / it->second).lexically_normal().string();
  }
  SimulationConfig config;
  apply_settings(config, settings);
  return config;
}

void validate(const SimulationConfig& c) {
  if (c.table == "synthetic") {
    if (c.table_n < 4 || c.table_n > kCjkBlockSize) throw ConfigError("table_n must lie in [4, 20992]");
    if (c.table_dim < 3) throw ConfigError("table_dim must be at least 3");
  } else if (!file_exists(c.table)) {
    throw ConfigError("table file not found: '" + c.table + "'");
  }
  if (!file_exists(c.corpus)) throw ConfigError("corpus file not found: '" + c.corpus + "'");
  if (!file_exists(c.script)) throw ConfigError("script file not found: '" + c.script + "'");
  if (c.feedback_levels < 2) throw ConfigError("feedback_levels must be at least 2");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (c.max_iterations < 0) throw ConfigError("max_iterations must not be negative");
  if (c.saturation_window < 1) throw ConfigError("saturation_window must be positive");
  if (c.accuracy_window < 1) throw ConfigError("accuracy_window must be positive");
  if (c.k_retrieval < 1) throw ConfigError("k_retrieval must be positive");
  if (c.max_verse_length < 1) throw ConfigError("max_verse_length must be positive");
  if (c.provider_timeout_ms < 1) throw ConfigError("provider_timeout_ms must be positive");
  if (c.compose_mode == ComposeMode::external && c.provider_url.empty()) {
    throw ConfigError("compose_mode=external needs provider_url");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

EmbeddingTable load_table_source(const SimulationConfig& c) {
  if (c.table == "synthetic") return generate_synthetic(c.table_n, c.table_dim, c.seed);
  return load_table(c.table, format_for_path(c.table));
}

SessionResult run_session(const SimulationConfig& config, std::shared_ptr<TextService> service) {
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  SessionResult result;
  result.report.stopped_by = "none";
  if (config.max_iterations == 0) return result;

  const EmbeddingTable table = load_table_source(config);
  const Corpus corpus = load_corpus(config.corpus, table);
  const ScriptedProvider script = ScriptedProvider::from_file(config.script, table);
  const ClusterTree tree = build_tree(table, config.linkage);
  const Projection projection = fit_pca(table);

  if (!service && !config.provider_url.empty()) {
    service = std::make_shared<HttpTextService>(config.provider_url,
                                                std::chrono::milliseconds(config.provider_timeout_ms));
  }

  auto make_agent = [&](AgentId id, std::uint64_t salt) {
    AgentState agent;
    agent.id = id;
    agent.rng = Rng(mix_seed(config.seed ^ salt));
    if (service) {
      agent.provider = std::make_unique<ExternalProvider>(service, table, script.clone());
    } else {
      agent.provider = script.clone();
    }
    return agent;
  };
  AgentState a = make_agent(AgentId::A, 0xA);
  AgentState b = make_agent(AgentId::B, 0xB);

  GameContext ctx;
  ctx.table = &table;
  ctx.corpus = &corpus;
  ctx.tree = &tree;
  ctx.projection = &projection;
  ctx.feedback_levels = config.feedback_levels;
  ctx.epsilon = config.epsilon;
  ctx.k_retrieval = config.k_retrieval;
  ctx.compose.mode = config.compose_mode;
  ctx.compose.max_length = config.max_verse_length;
  ctx.compose.service = service.get();
  ctx.compose.table = &table;
  ctx.compose.fallback_to_template = true;
  ctx.randomize_hint_ties = config.randomize_hint_ties;

  SessionReport& report = result.report;
  report.stopped_by = "max_iterations";
  std::int64_t streak = 0;
  std::size_t total_guesses = 0;
  for (std::int64_t it = 0; it < config.max_iterations; ++it) {
    RoundOutcome outcome = it % 2 == 0 ? run_round(a, b, ctx, it) : run_round(b, a, ctx, it);
    ++report.rounds;
    if (outcome.was_known) {
      ++streak;
    } else {
      streak = 0;
      ++report.coinages;
      total_guesses += outcome.guesses.size();
      if (outcome.solved_in) ++report.solved;
    }
    result.outcomes.push_back(std::move(outcome));
    if (streak >= config.saturation_window) {
      report.saturation_iteration = it - config.saturation_window + 1;
      report.stopped_by = "saturation";
      break;
    }
  }

  report.final_lexicon_size = a.lexicon.size();
  if (report.coinages) {
    report.solve_rate = static_cast<double>(report.solved) / static_cast<double>(report.coinages);
    report.mean_guesses_per_coinage = static_cast<double>(total_guesses) / static_cast<double>(report.coinages);
  }

  const auto window = static_cast<std::size_t>(config.accuracy_window);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto first_guess_rate = [&](std::size_t from, std::size_t to) {
    std::size_t coined = 0, first = 0;
    for (std::size_t i = from; i < to; ++i) {
      const auto& o = result.outcomes[i];
      if (o.was_known) continue;
      ++coined;
      if (o.solved_in == 1) ++first;
    }
    return coined ? static_cast<double>(first) / static_cast<double>(coined) : nan;
  };
  for (std::size_t from = 0; from < result.outcomes.size(); from += window) {
    report.window_accuracy.push_back(first_guess_rate(from, std::min(from + window, result.outcomes.size())));
  }
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    result.trailing_accuracy.push_back(first_guess_rate(i + 1 >= window ? i + 1 - window : 0, i + 1));
  }

  report.divergence = neighborhood_divergence(a.lexicon, table, 5);
  result.lexicon = std::move(a.lexicon);
  report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string report_json(const SessionReport& r) {
  nlohmann::ordered_json j;
  j["saturation_iteration"] = r.saturation_iteration ? nlohmann::ordered_json(*r.saturation_iteration)
                                                     : nlohmann::ordered_json(nullptr);
  j["stopped_by"] = r.stopped_by;
  j["rounds"] = r.rounds;
  j["coinages"] = r.coinages;
  j["final_lexicon_size"] = r.final_lexicon_size;
  j["solved"] = r.solved;
  j["solve_rate"] = r.solve_rate;
  j["mean_guesses_per_coinage"] = r.mean_guesses_per_coinage;
  auto accuracy = nlohmann::ordered_json::array();
  for (double v : r.window_accuracy) accuracy.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
  j["window_first_guess_accuracy"] = std::move(accuracy);
  j["divergence"] = {{"entries", r.divergence.entries},
                     {"k", r.divergence.k},
                     {"mean_overlap", r.divergence.mean_overlap},
                     {"min_overlap", r.divergence.min_overlap},
                     {"max_overlap", r.divergence.max_overlap}};
  j["duration_seconds"] = r.duration_seconds;
  return j.dump(2);
}

std::string metrics_csv(const SessionResult& result) {
  std::string out = "iteration,lexicon_size,was_known,solved_in,window_accuracy\n";
  char buf[32];
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    out += std::to_string(o.iteration) + "," + std::to_string(o.lexicon_size) + "," + (o.was_known ? "1" : "0") + ",";
    if (o.solved_in) out += std::to_string(*o.solved_in);
    out += ",";
    const double acc = i < result.trailing_accuracy.size() ? result.trailing_accuracy[i] : std::nan("");
    if (!std::isnan(acc)) {
      std::snprintf(buf, sizeof buf, "%.6f", acc);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string glyph_index(const AinLexicon& lexicon) {
  std::string out;
  for (char32_t ch : lexicon.order()) out += utf8::encode(ch) + " " + lexicon.lookup(ch)->glyph.str() + "\n";
  return out;
}

VerifyResult verify_transcript(const std::vector<std::string>& lines, const ClusterTree* tree, int levels) {
  VerifyResult result;
  std::map<char32_t, GlyphCode> known;
  std::set<GlyphCode> glyphs;
  std::size_t expected_size = 0;
  std::optional<std::int64_t> last_iteration;

  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::string where = "record " + std::to_string(n + 1) + ": ";
    auto fail = [&](const std::string& msg) { result.violations.push_back(where + msg); };
    RoundOutcome o;
    try {
      o = parse_transcript_line(lines[n]);
    } catch (const Error& e) {
      fail(e.what());
      continue;
    }
    ++result.rounds;

    if (last_iteration && o.iteration != *last_iteration + 1) fail("iteration does not follow its predecessor");
    last_iteration = o.iteration;
    const AgentId expected_speaker = o.iteration % 2 == 0 ? AgentId::A : AgentId::B;
    if (o.speaker != expected_speaker) fail("speaker does not alternate");
    if (o.hash_a != o.hash_b) fail("lexicon hashes of A and B differ");
    if (o.guesses.size() > static_cast<std::size_t>(kMaxGuesses)) fail("more than 5 guesses");

    const bool last_zero = !o.guesses.empty() && o.guesses.back().feedback == 0;
    if (o.solved_in.has_value() != last_zero) fail("solved_in disagrees with the last feedback");
    if (o.solved_in && *o.solved_in != static_cast<int>(o.guesses.size())) fail("solved_in is not the guess count");
    const bool all_missed = o.guesses.size() == static_cast<std::size_t>(kMaxGuesses) &&
                            std::all_of(o.guesses.begin(), o.guesses.end(), [](const GuessRecord& g) { return g.feedback != 0; });
    if (o.revealed != all_missed) fail("revealed disagrees with the guess record");
    for (std::size_t g = 0; g < o.guesses.size(); ++g) {
      const int f = o.guesses[g].feedback;
      if (f < 0 || f > levels) fail("feedback level out of range");
      if (f == 0 && g + 1 != o.guesses.size()) fail("guessing continued after a correct guess");
    }

    if (o.message.tokens.size() != o.verse.size()) fail("token count differs from verse length");
    if (o.message.target_position >= o.verse.size() || o.verse[o.message.target_position] != o.target) {
      fail("target position does not hold the target");
    }
    const bool target_known = known.count(o.target) != 0;
    if (o.was_known != target_known) fail("was_known disagrees with dictionary history");
    if (o.was_known) {
      if (!o.guesses.empty()) fail("known target but guesses were made");
      if (o.message.new_symbol) fail("known target but a symbol was coined");
      if (o.revealed) fail("known target but the answer was revealed");
    } else {
      if (!o.message.new_symbol) fail("unknown target without a coined symbol");
      if (o.guesses.empty()) fail("coined symbol without any guess");
      ++expected_size;
    }
    if (o.lexicon_size != expected_size) fail("lexicon size does not match the coinage count");

    for (std::size_t i = 0; i < o.verse.size() && i < o.message.tokens.size(); ++i) {
      const char32_t ch = o.verse[i];
      const Token& token = o.message.tokens[i];
      if (auto it = known.find(ch); it != known.end()) {
        const auto* ain = std::get_if<AinToken>(&token);
        if (!ain || ain->glyph != it->second) fail("known character not encoded with its glyph");
      } else if (ch == o.target && o.message.new_symbol) {
        const auto* ain = std::get_if<AinToken>(&token);
        if (!ain || ain->glyph != o.message.new_symbol->glyph) fail("target not encoded with the new glyph");
      } else {
        const auto* plain = std::get_if<PlainToken>(&token);
        if (!plain || plain->ch != ch) fail("unknown character not sent as plaintext");
      }
    }

    if (o.message.new_symbol) {
      const NewSymbol& ns = *o.message.new_symbol;
      if (ns.hint == o.target) fail("hint equals the target");
      if (!glyphs.insert(ns.glyph).second) fail("glyph " + ns.glyph.str() + " assigned twice");

      if (tree) {
        std::vector<GuessRecord> history;
        for (const auto& g : o.guesses) {
          if (g.guess == ns.hint || known.count(g.guess)) fail("guess is the hint or an already known character");
          try {
            const auto consistent = consistent_candidates(*tree, history, levels);
            std::vector<char32_t> eligible;
            for (char32_t c : consistent) {
              if (c != ns.hint && !known.count(c)) eligible.push_back(c);
            }
            if (!history.empty() && !eligible.empty() &&
                !std::binary_search(eligible.begin(), eligible.end(), g.guess)) {
              fail("guess outside the feedback-consistent candidates");
            }
            if (feedback_level(*tree, g.guess, o.target, levels) != g.feedback) fail("feedback does not match the tree");
          } catch (const Error& e) {
            fail(e.what());
          }
          history.push_back(g);
        }
      }
      known.emplace(o.target, ns.glyph);
    }
  }
  return result;
}

}  // namespace ain
