#include "ain/game.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "ain/utf8.hpp"

namespace ain {

TargetChoice select_target(const Sentence& verse, const AinLexicon& lexicon, const Corpus& corpus) {
  if (verse.empty()) throw DomainError("select_target: empty verse");
  std::optional<char32_t> best;
  for (char32_t ch : verse) {
    if (lexicon.contains(ch)) continue;
    if (!best || corpus.ranks_before(ch, *best)) best = ch;
  }
  if (best) return {*best, false};
  return {verse.front(), true};
}

Encoding encode(const Sentence& verse, char32_t target, const AinLexicon& lexicon, const ClusterTree& tree,
                const EmbeddingTable& table, const Projection& projection, const EncodeParams& params, Rng& rng) {
  const auto first = std::find(verse.begin(), verse.end(), target);
  if (first == verse.end()) throw DomainError("encode: target is not in the verse");

  Encoding out;
  out.message.target_position = static_cast<std::size_t>(first - verse.begin());
  std::optional<GlyphCode> fresh;
  if (!lexicon.contains(target)) {
    AinEntry entry;
    entry.ch = target;
    entry.ain_vec = to_single_precision(coin(target, table, params.epsilon, rng));
    entry.glyph = resolve_collision(quantize(projection, project(projection, entry.ain_vec)), lexicon.occupied());
    entry.epsilon = params.epsilon;
    entry.coined_at = params.iteration;
    entry.coined_by = params.speaker;
    fresh = entry.glyph;
    out.message.new_symbol =
        NewSymbol{entry.glyph, hint_for(tree, target, lexicon.known(), rng, params.randomize_hint_ties)};
    out.coined = std::move(entry);
  }
  out.message.tokens.reserve(verse.size());
  for (char32_t ch : verse) {
    if (fresh && ch == target) {
      out.message.tokens.emplace_back(AinToken{*fresh});
    } else if (const AinEntry* e = lexicon.lookup(ch)) {
      out.message.tokens.emplace_back(AinToken{e->glyph});
    } else {
      out.message.tokens.emplace_back(PlainToken{ch});
    }
  }
  return out;
}

std::vector<char32_t> consistent_candidates(const ClusterTree& tree, const std::vector<GuessRecord>& history,
                                            int levels) {
  std::vector<char32_t> current = tree.leaf_chars();
  std::sort(current.begin(), current.end());
  for (const auto& [guess, feedback] : history) {
    std::vector<char32_t> allowed =
        feedback == 0 ? std::vector<char32_t>{guess} : candidates_at_level(tree, guess, feedback, levels);
    std::vector<char32_t> next;
    std::set_intersection(current.begin(), current.end(), allowed.begin(), allowed.end(), std::back_inserter(next));
    current.swap(next);
  }
  std::erase_if(current, [&](char32_t c) {
    return std::any_of(history.begin(), history.end(),
                       [c](const GuessRecord& g) { return g.guess == c && g.feedback != 0; });
  });
  return current;
}

char32_t listener_guess(const ClusterTree& tree, char32_t hint, const CharSet& known,
                        const std::vector<GuessRecord>& history, int levels) {
  if (history.size() >= static_cast<std::size_t>(kMaxGuesses)) {
    throw DomainError("listener_guess: guess budget of " + std::to_string(kMaxGuesses) + " is spent");
  }
  for (const auto& g : history) {
    if (g.feedback == 0) throw DomainError("listener_guess: target already found");
  }
  auto excluded = [&](char32_t c) {
    if (c == hint || known.count(c)) return true;
    return std::any_of(history.begin(), history.end(), [c](const GuessRecord& g) { return g.guess == c; });
  };

  std::vector<char32_t> pool;
  if (!history.empty()) {
    for (char32_t c : consistent_candidates(tree, history, levels)) {
      if (!excluded(c)) pool.push_back(c);
    }
  }
  if (pool.empty()) {
    for (char32_t c : tree.leaf_chars()) {
      if (!excluded(c)) pool.push_back(c);
    }
  }
  if (pool.empty()) throw DomainError("listener_guess: no character left to guess");

  const Vector row = tree.cophenetic_row(hint);
  char32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (char32_t c : pool) {
    const double d = row(tree.leaf_of(c));
    if (d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

RoundOutcome run_round(AgentState& speaker, AgentState& listener, const GameContext& ctx, std::int64_t iteration) {
  if (speaker.lexicon.content_hash() != listener.lexicon.content_hash()) {
    throw Error("consensus violated before round " + std::to_string(iteration));
  }
  speaker.role = Role::speaker;
  listener.role = Role::listener;

  RoundOutcome out;
  out.iteration = iteration;
  out.speaker = speaker.id;

  const Observation obs = observe(*speaker.provider, speaker.rng);
  const auto top = top_k_similar(*ctx.corpus, obs, *ctx.table, ctx.k_retrieval);
  out.observation = obs.text;
  out.matched_index = pick_matched(top, speaker.rng);
  out.verse = compose_verse(obs, ctx.corpus->sentence(out.matched_index), ctx.compose);

  const TargetChoice choice = select_target(out.verse, speaker.lexicon, *ctx.corpus);
  out.target = choice.ch;
  out.was_known = choice.was_known;

  EncodeParams params{ctx.epsilon, iteration, speaker.id, ctx.randomize_hint_ties};
  Encoding enc = encode(out.verse, choice.ch, speaker.lexicon, *ctx.tree, *ctx.table, *ctx.projection, params,
                        speaker.rng);
  out.message = enc.message;

  if (enc.coined) {
    const char32_t hint = enc.message.new_symbol->hint;
    const CharSet known = listener.lexicon.known();
    while (out.guesses.size() < static_cast<std::size_t>(kMaxGuesses)) {
      const char32_t guess = listener_guess(*ctx.tree, hint, known, out.guesses, ctx.feedback_levels);
      const int feedback = feedback_level(*ctx.tree, guess, out.target, ctx.feedback_levels);
      out.guesses.push_back({guess, feedback});
      if (feedback == 0) {
        out.solved_in = static_cast<int>(out.guesses.size());
        break;
      }
    }
    out.revealed = !out.solved_in.has_value();
    speaker.lexicon.insert(*enc.coined);
    listener.lexicon.insert(std::move(*enc.coined));
  }

  const AinLexicon& a = speaker.id == AgentId::A ? speaker.lexicon : listener.lexicon;
  const AinLexicon& b = speaker.id == AgentId::A ? listener.lexicon : speaker.lexicon;
  out.hash_a = a.content_hash();
  out.hash_b = b.content_hash();
  out.lexicon_size = a.size();
  if (out.hash_a != out.hash_b) throw Error("consensus violated after round " + std::to_string(iteration));
  return out;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw FormatError("malformed hash '" + s + "'");
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw FormatError("malformed hash '" + s + "'");
  return v;
}

Sentence to_sentence(const std::string& s) {
  const auto cps = utf8::decode(s);
  return Sentence(cps.begin(), cps.end());
}

}  // namespace

std::string transcript_line(const RoundOutcome& o) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["v"] = kTranscriptVersion;
  j["iteration"] = o.iteration;
  j["speaker"] = std::string(1, to_char(o.speaker));
  j["observation"] = utf8::encode(o.observation);
  j["matched"] = o.matched_index;
  j["verse"] = utf8::encode(o.verse);
  j["target"] = utf8::encode(o.target);
  j["target_position"] = o.message.target_position;
  j["was_known"] = o.was_known;
  ordered_json tokens = ordered_json::array();
  for (const auto& t : o.message.tokens) {
    if (const auto* ain = std::get_if<AinToken>(&t)) {
      tokens.push_back({{"ain", ain->glyph.str()}});
    } else {
      tokens.push_back({{"plain", utf8::encode(std::get<PlainToken>(t).ch)}});
    }
  }
  j["tokens"] = std::move(tokens);
  if (o.message.new_symbol) {
    j["new_symbol"] = {{"glyph", o.message.new_symbol->glyph.str()},
                       {"hint", utf8::encode(o.message.new_symbol->hint)}};
  } else {
    j["new_symbol"] = nullptr;
  }
  ordered_json guesses = ordered_json::array();
  for (const auto& g : o.guesses) guesses.push_back({{"guess", utf8::encode(g.guess)}, {"feedback", g.feedback}});
  j["guesses"] = std::move(guesses);
  j["solved_in"] = o.solved_in ? ordered_json(*o.solved_in) : ordered_json(nullptr);
  j["revealed"] = o.revealed;
  j["lexicon_size"] = o.lexicon_size;
  j["lexicon_hash_a"] = hex64(o.hash_a);
  j["lexicon_hash_b"] = hex64(o.hash_b);
  return j.dump();
}

RoundOutcome parse_transcript_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("transcript record is not JSON: ") + e.what());
  }
  try {
    if (j.at("v").get<int>() != kTranscriptVersion) throw FormatError("unsupported transcript version");
    RoundOutcome o;
    o.iteration = j.at("iteration").get<std::int64_t>();
    o.speaker = parse_agent(j.at("speaker").get<std::string>());
    o.observation = to_sentence(j.at("observation").get<std::string>());
    o.matched_index = j.at("matched").get<std::size_t>();
    o.verse = to_sentence(j.at("verse").get<std::string>());
    o.target = utf8::single(j.at("target").get<std::string>());
    o.message.target_position = j.at("target_position").get<std::size_t>();
    o.was_known = j.at("was_known").get<bool>();
    for (const auto& t : j.at("tokens")) {
      if (t.contains("ain")) {
        o.message.tokens.emplace_back(AinToken{GlyphCode::parse(t.at("ain").get<std::string>())});
      } else {
        o.message.tokens.emplace_back(PlainToken{utf8::single(t.at("plain").get<std::string>())});
      }
    }
    if (!j.at("new_symbol").is_null()) {
      const auto& ns = j.at("new_symbol");
      o.message.new_symbol =
          NewSymbol{GlyphCode::parse(ns.at("glyph").get<std::string>()), utf8::single(ns.at("hint").get<std::string>())};
    }
    for (const auto& g : j.at("guesses")) {
      o.guesses.push_back({utf8::single(g.at("guess").get<std::string>()), g.at("feedback").get<int>()});
    }
    if (!j.at("solved_in").is_null()) o.solved_in = j.at("solved_in").get<int>();
    o.revealed = j.at("revealed").get<bool>();
    o.lexicon_size = j.at("lexicon_size").get<std::size_t>();
    o.hash_a = parse_hex64(j.at("lexicon_hash_a").get<std::string>());
    o.hash_b = parse_hex64(j.at("lexicon_hash_b").get<std::string>());
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("transcript record has wrong shape: ") + e.what());
  }
}

}  // namespace ain
