#include "ain/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ain/session.hpp"
#include "ain/utf8.hpp"

namespace ain {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& extras) {
  std::map<std::string, std::string> out;
  for (const auto& arg : extras) {
    if (arg.rfind("--", 0) != 0 || arg.find('=') == std::string::npos) {
      throw ConfigError("override must look like --key=value, got '" + arg + "'");
    }
    const auto eq = arg.find('=');
    out[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& extras, std::ostream& out) {
  SimulationConfig config = load_config(config_path);
  apply_settings(config, parse_overrides(extras));
  if (config.provider_url.empty()) {
    if (const char* url = std::getenv("AIN_PROVIDER_URL"); url && *url) config.provider_url = url;
  }
  validate(config);

  const SessionResult result = run_session(config);
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  std::string transcript;
  for (const auto& o : result.outcomes) transcript += transcript_line(o) + "\n";
  write_text(dir / "transcript.jsonl", transcript);
  write_text(dir / "metrics.csv", metrics_csv(result));
  save_lexicon(result.lexicon, (dir / "lexicon.ain").string());
  write_text(dir / "glyph_index.txt", glyph_index(result.lexicon));
  const std::string report = report_json(result.report);
  write_text(dir / "report.json", report + "\n");
  out << report << "\n";
  return 0;
}

ComponentAtlas atlas_from(const std::string& path) {
  return path.empty() ? ComponentAtlas::synthetic() : ComponentAtlas::load(path);
}

int cmd_glyph(const std::string& lexicon_path, const std::string& ch_text, bool all, const std::string& format_name,
              const std::string& out_path, const std::string& atlas_path, std::ostream& out) {
  const AinLexicon lexicon = load_lexicon(lexicon_path);
  const ComponentAtlas atlas = atlas_from(atlas_path);
  if (all) {
    const fs::path dir(out_path.empty() ? "." : out_path);
    fs::create_directories(dir);
    std::vector<GlyphCode> codes;
    for (char32_t ch : lexicon.order()) codes.push_back(lexicon.lookup(ch)->glyph);
    write_contact_sheet(codes, atlas, (dir / "contact_sheet.pgm").string());
    write_text(dir / "glyph_index.txt", glyph_index(lexicon));
    out << "wrote " << codes.size() << " glyphs to " << dir.string() << "\n";
    return 0;
  }
  if (ch_text.empty()) throw ConfigError("glyph: give a character or --all");
  const char32_t ch = utf8::single(ch_text);
  const AinEntry* entry = lexicon.lookup(ch);
  if (!entry) throw NotFoundError("character '" + ch_text + "' is not in the lexicon");
  const GlyphFormat format = parse_glyph_format(format_name);
  if (out_path.empty()) {
    if (format != GlyphFormat::text) throw ConfigError("glyph: --out is required for " + format_name);
    out << glyph_text(render(entry->glyph, atlas));
    return 0;
  }
  export_glyph(entry->glyph, atlas, format, out_path);
  return 0;
}

int cmd_inspect(const std::string& lexicon_path, const std::string& ch_text, std::size_t k,
                const std::string& table_path, const std::string& config_path, std::ostream& out) {
  const AinLexicon lexicon = load_lexicon(lexicon_path);
  if (table_path.empty() && config_path.empty()) throw ConfigError("inspect: give --table or --config");
  const EmbeddingTable table = table_path.empty() ? load_table_source(load_config(config_path))
                                                  : load_table(table_path, format_for_path(table_path));
  const char32_t ch = utf8::single(ch_text);
  const AinEntry* entry = lexicon.lookup(ch);
  if (!entry) throw NotFoundError("character '" + ch_text + "' is not in the lexicon");
  const auto zh = nearest(table, table.vector_of(ch), k, {ch});
  const auto ain = nearest_ain(lexicon, entry->ain_vec, k, {ch});

  out << "neighbours of " << ch_text << " (k=" << k << ")\n";
  out << "rank  chinese            ain\n";
  const std::size_t rows = std::max(zh.size(), ain.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::ostringstream line;
    line << std::setw(4) << i + 1 << "  ";
    std::ostringstream left;
    if (i < zh.size()) left << utf8::encode(zh[i].ch) << ' ' << std::fixed << std::setprecision(6) << zh[i].score;
    // CJK characters are 3 bytes but 2 columns wide; pad on the byte count.
    line << left.str() << std::string(left.str().size() < 19 ? 19 - left.str().size() : 1, ' ');
    if (i < ain.size()) line << utf8::encode(ain[i].ch) << ' ' << std::fixed << std::setprecision(6) << ain[i].score;
    out << line.str() << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& transcript_path, const std::string& config_path, std::ostream& out) {
  const auto lines = read_lines(transcript_path);
  VerifyResult result;
  if (config_path.empty()) {
    result = verify_transcript(lines);
  } else {
    const SimulationConfig config = load_config(config_path);
    const EmbeddingTable table = load_table_source(config);
    const ClusterTree tree = build_tree(table, config.linkage);
    result = verify_transcript(lines, &tree, config.feedback_levels);
  }
  for (const auto& v : result.violations) out << "violation: " << v << "\n";
  out << result.rounds << " rounds checked, " << result.violations.size() << " violations\n";
  return result.ok() ? 0 : 1;
}

struct GenTableOptions {
  std::size_t n = kDefaultCharCount;
  std::size_t dim = kDefaultEmbeddingDim;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::string corpus;
  std::size_t corpus_size = 120;
  std::string script;
  std::size_t script_size = 40;
  std::size_t vocab = 0;
  std::size_t min_len = 3;
  std::size_t max_len = 7;
  std::string dendrogram;
  std::string linkage = "average";
  std::string atlas;
};

int cmd_gen_table(const GenTableOptions& o, std::ostream& out) {
  const EmbeddingTable table = generate_synthetic(o.n, o.dim, o.seed);
  const TableFormat format = o.format.empty() ? format_for_path(o.out)
                             : o.format == "tsv"  ? TableFormat::tsv
                             : o.format == "binary" ? TableFormat::binary
                                                    : throw ConfigError("--format expects tsv|binary");
  save_table(table, o.out, format);
  out << "wrote " << table.size() << "x" << table.dim() << " table to " << o.out << "\n";
  const std::size_t vocab = o.vocab ? o.vocab : table.size();
  if (!o.corpus.empty()) {
    write_sentence_file(o.corpus, generate_sentences(table, o.corpus_size, vocab, o.min_len, o.max_len, mix_seed(o.seed ^ 0xC0)));
    out << "wrote " << o.corpus_size << " corpus sentences to " << o.corpus << "\n";
  }
  if (!o.script.empty()) {
    write_sentence_file(o.script, generate_sentences(table, o.script_size, vocab, o.min_len, o.max_len, mix_seed(o.seed ^ 0x5C)));
    out << "wrote " << o.script_size << " script sentences to " << o.script << "\n";
  }
  if (!o.dendrogram.empty()) {
    std::ofstream d(o.dendrogram, std::ios::trunc);
    if (!d) throw IoError("cannot open '" + o.dendrogram + "' for writing");
    write_dendrogram(build_tree(table, parse_linkage(o.linkage)), d);
  }
  if (!o.atlas.empty()) ComponentAtlas::synthetic().save(o.atlas);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-agent emergent logogram simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a session; extra --key=value flags override the config");
  std::string config_path;
  run->add_option("config", config_path, "Configuration file")->required();
  run->allow_extras();

  auto* glyph = app.add_subcommand("glyph", "Render glyphs from a lexicon file");
  std::string lexicon_path, ch_text, format = "text", out_path, atlas_path;
  bool all = false;
  glyph->add_option("lexicon", lexicon_path, "Lexicon file")->required();
  glyph->add_option("char", ch_text, "Character to render");
  glyph->add_flag("--all", all, "Contact sheet and index of every glyph");
  glyph->add_option("--format", format, "text|pgm|svg")->capture_default_str();
  glyph->add_option("--out", out_path, "Output file (directory with --all)");
  glyph->add_option("--atlas", atlas_path, "Component atlas file (default: built-in)");

  auto* inspect = app.add_subcommand("inspect", "Compare Chinese-space and AIN-space neighbours");
  std::size_t k = 5;
  std::string table_path, inspect_config;
  inspect->add_option("lexicon", lexicon_path, "Lexicon file")->required();
  inspect->add_option("char", ch_text, "Character")->required();
  inspect->add_option("--k", k, "Neighbours per list")->capture_default_str();
  inspect->add_option("--table", table_path, "Embedding table file");
  inspect->add_option("--config", inspect_config, "Session config to rebuild the table from");

  auto* verify = app.add_subcommand("verify", "Check game invariants over a transcript");
  std::string transcript_path, verify_config;
  verify->add_option("transcript", transcript_path, "transcript.jsonl")->required();
  verify->add_option("--config", verify_config, "Session config; enables listener-consistency checks");

  auto* gen = app.add_subcommand("gen-table", "Write a synthetic embedding table (and optional corpus/script)");
  GenTableOptions gen_opts;
  gen->add_option("--n", gen_opts.n, "Characters")->capture_default_str();
  gen->add_option("--dim", gen_opts.dim, "Dimensions")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_opts.out, "Output table path (.tsv => text)")->required();
  gen->add_option("--format", gen_opts.format, "tsv|binary (default from extension)");
  gen->add_option("--corpus", gen_opts.corpus, "Also write a synthetic corpus here");
  gen->add_option("--corpus-size", gen_opts.corpus_size)->capture_default_str();
  gen->add_option("--script", gen_opts.script, "Also write a synthetic observation script here");
  gen->add_option("--script-size", gen_opts.script_size)->capture_default_str();
  gen->add_option("--vocab", gen_opts.vocab, "Restrict sentences to the first N characters");
  gen->add_option("--min-len", gen_opts.min_len)->capture_default_str();
  gen->add_option("--max-len", gen_opts.max_len)->capture_default_str();
  gen->add_option("--dendrogram", gen_opts.dendrogram, "Also dump the merge sequence here");
  gen->add_option("--linkage", gen_opts.linkage, "average|complete|single")->capture_default_str();
  gen->add_option("--atlas", gen_opts.atlas, "Also write the built-in component atlas here");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run) return cmd_run(config_path, run->remaining(), out);
    if (*glyph) return cmd_glyph(lexicon_path, ch_text, all, format, out_path, atlas_path, out);
    if (*inspect) return cmd_inspect(lexicon_path, ch_text, k, table_path, inspect_config, out);
    if (*verify) return cmd_verify(transcript_path, verify_config, out);
    if (*gen) return cmd_gen_table(gen_opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ain
