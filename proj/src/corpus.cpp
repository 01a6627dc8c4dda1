#include "ain/corpus.hpp"

#include <fstream>
#include <numeric>

#include "ain/utf8.hpp"

namespace ain {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

Sentence decode_sentence(const std::string& text) {
  const auto cps = utf8::decode(trim(text));
  return Sentence(cps.begin(), cps.end());
}

}  // namespace

Sentence filter_oov(const Sentence& sentence, const EmbeddingTable& table, std::size_t* dropped) {
  Sentence out;
  out.reserve(sentence.size());
  for (char32_t ch : sentence) {
    if (table.contains(ch)) {
      out.push_back(ch);
    } else if (dropped) {
      ++*dropped;
    }
  }
  return out;
}

std::vector<Sentence> read_sentence_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<Sentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    try {
      out.push_back(decode_sentence(text));
    } catch (const FormatError& e) {
      throw FormatError(path + ": " + e.what(), line_no);
    }
  }
  return out;
}

void write_sentence_file(const std::string& path, const std::vector<Sentence>& sentences) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& s : sentences) out << utf8::encode(s) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

Corpus::Corpus(const std::vector<Sentence>& raw, const EmbeddingTable& table) {
  std::vector<Vector> vectors;
  for (const auto& sentence : raw) {
    Sentence kept = filter_oov(sentence, table, &stats_.dropped_chars);
    if (kept.empty()) {
      ++stats_.dropped_sentences;
      continue;
    }
    Vector v = centroid(table, kept);
    // A zero centroid has no defined similarity to anything.
    if (v.squaredNorm() == 0.0) {
      ++stats_.dropped_sentences;
      continue;
    }
    for (char32_t ch : kept) ++frequency_[ch];
    sentences_.push_back(std::move(kept));
    vectors.push_back(std::move(v));
  }
  if (sentences_.empty()) throw DomainError("corpus is empty after vocabulary filtering");
  stats_.kept = sentences_.size();
  vectors_.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < vectors.size(); ++i) vectors_.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
}

std::size_t Corpus::frequency(char32_t ch) const {
  auto it = frequency_.find(ch);
  return it == frequency_.end() ? 0 : it->second;
}

bool Corpus::ranks_before(char32_t a, char32_t b) const {
  const std::size_t fa = frequency(a), fb = frequency(b);
  return fa != fb ? fa > fb : a < b;
}

Corpus load_corpus(const std::string& path, const EmbeddingTable& table) {
  return Corpus(read_sentence_file(path), table);
}

std::vector<Retrieval> top_k_similar(const Corpus& corpus, const Observation& query, const EmbeddingTable& table,
                                     std::size_t k) {
  if (k == 0) throw DomainError("top_k_similar: k must be at least 1");
  const Sentence text = filter_oov(query.text, table);
  if (text.empty()) throw DomainError("observation has no in-vocabulary characters");
  const Vector q = centroid(table, text);
  const double qn = q.norm();
  if (qn == 0.0) throw DomainError("observation centroid is the zero vector");

  const Vector dots = corpus.vectors() * q;
  const Vector norms = corpus.vectors().rowwise().norm();
  std::vector<Retrieval> scored(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    scored[i] = {i, std::clamp(dots(r) / (norms(r) * qn), -1.0, 1.0)};
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const Retrieval& a, const Retrieval& b) {
                      return a.score != b.score ? a.score > b.score : a.index < b.index;
                    });
  scored.resize(keep);
  return scored;
}

std::size_t pick_matched(const std::vector<Retrieval>& top, Rng& rng) {
  if (top.empty()) throw DomainError("pick_matched: empty retrieval list");
  return top[rng.uniform_index(top.size())].index;
}

ScriptedProvider::ScriptedProvider(const std::vector<Sentence>& raw, const EmbeddingTable& table) {
  for (const auto& s : raw) {
    Sentence kept = filter_oov(s, table);
    if (!kept.empty()) sentences_.push_back(std::move(kept));
  }
  if (sentences_.empty()) throw DomainError("observation script is empty after vocabulary filtering");
  order_.resize(sentences_.size());
}

ScriptedProvider ScriptedProvider::from_file(const std::string& path, const EmbeddingTable& table) {
  return ScriptedProvider(read_sentence_file(path), table);
}

Observation ScriptedProvider::next(Rng& rng) {
  if (cursor_ == 0) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng.shuffle(order_);
  }
  Observation obs{sentences_[order_[cursor_]], ObservationSource::scripted};
  cursor_ = (cursor_ + 1) % sentences_.size();
  return obs;
}

std::unique_ptr<ObservationProvider> ScriptedProvider::clone() const {
  return std::make_unique<ScriptedProvider>(*this);
}

ExternalProvider::ExternalProvider(std::shared_ptr<TextService> service, const EmbeddingTable& table,
                                   std::unique_ptr<ObservationProvider> fallback)
    : service_(std::move(service)), table_(&table), fallback_(std::move(fallback)) {
  if (!service_) throw ConfigError("external provider needs a text service");
}

Observation ExternalProvider::next(Rng& rng) {
  try {
    Sentence text = filter_oov(decode_sentence(service_->request("observe", "")), *table_);
    if (text.empty()) throw ProviderError("observation reply has no in-vocabulary characters");
    return {std::move(text), ObservationSource::external};
  } catch (const Error& e) {
    if (!fallback_) throw ProviderError(std::string("external observation failed: ") + e.what());
    return fallback_->next(rng);
  }
}

std::unique_ptr<ObservationProvider> ExternalProvider::clone() const {
  return std::make_unique<ExternalProvider>(service_, *table_, fallback_ ? fallback_->clone() : nullptr);
}

Observation observe(ObservationProvider& provider, Rng& rng) { return provider.next(rng); }

Sentence compose_verse(const Observation& observation, const Sentence& matched, const ComposeOptions& options) {
  if (observation.text.empty() || matched.empty()) throw DomainError("compose_verse: empty input");
  auto from_template = [&] {
    Sentence verse = observation.text;
    verse.insert(verse.end(), matched.begin(), matched.end());
    if (verse.size() > options.max_length) verse.resize(options.max_length);
    return verse;
  };
  if (options.mode == ComposeMode::templated) return from_template();

  try {
    if (!options.service || !options.table) throw ProviderError("external composition is not configured");
    const std::string payload = utf8::encode(observation.text) + "\n" + utf8::encode(matched);
    Sentence verse = filter_oov(decode_sentence(options.service->request("compose", payload)), *options.table);
    if (verse.empty()) throw ProviderError("composition reply has no in-vocabulary characters");
    return verse;
  } catch (const Error& e) {
    if (!options.fallback_to_template) throw ProviderError(std::string("external composition failed: ") + e.what());
    return from_template();
  }
}

std::vector<Sentence> generate_sentences(const EmbeddingTable& table, std::size_t count, std::size_t vocab,
                                         std::size_t min_len, std::size_t max_len, std::uint64_t seed) {
  if (vocab == 0 || vocab > table.size()) throw DomainError("generate_sentences: vocab out of range");
  if (min_len == 0 || max_len < min_len) throw DomainError("generate_sentences: bad length range");
  Rng rng(seed);
  std::vector<Sentence> out(count);
  for (auto& s : out) {
    const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      // Squared uniform skews toward low indices, giving a frequency gradient.
      const double u = rng.uniform01();
      const auto idx = std::min(vocab - 1, static_cast<std::size_t>(u * u * static_cast<double>(vocab)));
      s.push_back(table.chars()[idx]);
    }
  }
  return out;
}

}  // namespace ain
