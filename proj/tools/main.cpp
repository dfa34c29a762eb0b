// screensum command-line front end. All domain work goes through the C API in
// screensum/screensum.h; this file only handles flags and file shuffling.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "screensum/screensum.h"

namespace {

using nlohmann::json;

struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int exit_code, const std::string& code,
                       const std::string& message) {
  throw CliError{exit_code, code, message};
}

void check(ss_status status) {
  if (status != SS_OK) fail(1, ss_status_name(status), ss_last_error());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(1, "UnreadableFile", "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(1, "UnwritableFile", "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(1, "UnwritableFile", "cannot write " + path);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << "\n";
  } else {
    write_file(out_path, text);
  }
}

std::string owned(char* str) {
  std::string out = str ? str : "";
  ss_string_free(str);
  return out;
}

using ScreenplayPtr = std::unique_ptr<ss_screenplay, decltype(&ss_screenplay_free)>;
using EmbedderPtr = std::unique_ptr<ss_embedder, decltype(&ss_embedder_free)>;
using GraphPtr = std::unique_ptr<ss_graph, decltype(&ss_graph_free)>;
using ModelPtr = std::unique_ptr<ss_model, decltype(&ss_model_free)>;

ScreenplayPtr parse_screenplay_file(const std::string& path,
                                    const std::string& format) {
  std::string bytes = read_file(path);
  std::string kind = format;
  if (kind == "auto") {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".xml") kind = "xml";
    else if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
      kind = "json";
    else kind = "txt";
  }
  ss_screenplay* sp = nullptr;
  if (kind == "xml") {
    check(ss_screenplay_parse_xml(bytes.data(), bytes.size(), &sp));
  } else if (kind == "json") {
    check(ss_screenplay_from_json(bytes.data(), bytes.size(), &sp));
  } else if (kind == "txt") {
    std::string stem = path;
    if (size_t slash = stem.find_last_of('/'); slash != std::string::npos)
      stem.erase(0, slash + 1);
    if (size_t dot = stem.find_last_of('.'); dot != std::string::npos)
      stem.erase(dot);
    check(ss_screenplay_parse_text(bytes.data(), bytes.size(), stem.c_str(), &sp));
  } else {
    fail(2, "UsageError", "unknown format '" + kind + "'");
  }
  return ScreenplayPtr(sp, ss_screenplay_free);
}

struct EmbedderFlags {
  std::string kind = "hash";
  int dim = 768;
  uint64_t seed = 0;
  std::string vectors;

  void attach(CLI::App* cmd) {
    cmd->add_option("--embedder", kind, "Embedder backend: hash or external")
        ->check(CLI::IsMember({"hash", "external"}));
    cmd->add_option("--dim", dim, "Embedding dimension (hash backend)");
    cmd->add_option("--embed-seed", seed, "Hash embedder seed");
    cmd->add_option("--vectors", vectors,
                    "JSONL vector file (external backend)");
  }

  EmbedderPtr open() const {
    ss_embedder* embedder = nullptr;
    if (kind == "hash") {
      check(ss_embedder_hash_new(dim, seed, &embedder));
    } else {
      if (vectors.empty())
        fail(2, "UsageError", "--embedder external needs --vectors");
      check(ss_embedder_external_open(vectors.c_str(), &embedder));
    }
    return EmbedderPtr(embedder, ss_embedder_free);
  }
};

GraphPtr load_graph(const std::string& path) {
  std::string bytes = read_file(path);
  ss_graph* graph = nullptr;
  check(ss_graph_import_json(bytes.data(), bytes.size(), &graph));
  return GraphPtr(graph, ss_graph_free);
}

int run(int argc, char** argv) {
  CLI::App app{"screensum: screenplay graphs, summarization, and evaluation"};
  app.set_version_flag("--version", ss_version());
  app.require_subcommand(1);

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "Parse a screenplay to JSON");
  std::string parse_file, parse_format = "auto", parse_out;
  parse_cmd->add_option("file", parse_file, "Screenplay file")->required();
  parse_cmd->add_option("--format", parse_format, "xml | txt | auto")
      ->check(CLI::IsMember({"xml", "txt", "auto"}));
  parse_cmd->add_option("--out", parse_out, "Output JSON path");

  // build-graph
  auto* build_cmd = app.add_subcommand("build-graph",
                                       "Compile a screenplay into a CaD graph");
  std::string build_input, build_out;
  bool no_characters = false, include_mentions = false, embed_headings = false;
  EmbedderFlags build_embedder;
  build_cmd->add_option("screenplay", build_input, "Screenplay JSON (from parse)")
      ->required();
  build_embedder.attach(build_cmd);
  build_cmd->add_option("--out", build_out, "Output graph JSON path");
  build_cmd->add_flag("--no-characters", no_characters,
                      "Strip character nodes and edges");
  build_cmd->add_flag("--include-mentions", include_mentions,
                      "Count action-text mentions as scene presence");
  build_cmd->add_flag("--embed-headings", embed_headings,
                      "Embed scene headings with descriptions");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Graph statistics as JSON");
  std::string stats_input;
  stats_cmd->add_option("graph", stats_input, "Graph JSON file")->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "Export a graph to gexf or dot");
  std::string export_input, export_format, export_out;
  export_cmd->add_option("graph", export_input, "Graph JSON file")->required();
  export_cmd->add_option("--format", export_format, "gexf | dot | json")
      ->required()
      ->check(CLI::IsMember({"gexf", "dot", "json"}));
  export_cmd->add_option("--out", export_out, "Output path");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train an LGAT variant");
  std::string corpus_dir, config_path, train_variant = "full", train_out;
  std::string profile = "desk";
  int train_epochs = -1;
  double train_lr = -1;
  long train_seed = -1;
  int train_arch_dim = -1;
  int train_embed_dim = -1;
  train_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  train_cmd->add_option("--config", config_path, "Config JSON file");
  train_cmd->add_option("--variant", train_variant,
                        "full | text_only | graph_only | full_without_characters")
      ->check(CLI::IsMember({"full", "text_only", "graph_only",
                             "full_without_characters"}));
  train_cmd->add_option("--out", train_out, "Checkpoint directory")->required();
  train_cmd->add_option("--profile", profile, "desk | paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--epochs", train_epochs, "Override: epochs");
  train_cmd->add_option("--lr", train_lr, "Override: learning rate");
  train_cmd->add_option("--seed", train_seed, "Override: seed");
  train_cmd->add_option("--arch-dim", train_arch_dim, "Override: arch_dim");
  train_cmd->add_option("--dim", train_embed_dim, "Override: embedder dim");

  // summarize
  auto* sum_cmd = app.add_subcommand("summarize", "Summarize a screenplay");
  std::string sum_ckpt, sum_script, sum_format = "auto", sum_out;
  bool extractive = false;
  int budget = 3;
  EmbedderFlags sum_embedder;
  sum_cmd->add_option("--ckpt", sum_ckpt, "Checkpoint directory (abstractive)");
  sum_cmd->add_option("--script", sum_script, "Screenplay file")->required();
  sum_cmd->add_option("--format", sum_format, "xml | txt | json | auto")
      ->check(CLI::IsMember({"xml", "txt", "json", "auto"}));
  sum_cmd->add_flag("--extractive", extractive, "TextRank scene extraction");
  sum_cmd->add_option("-k,--k", budget, "Scene budget (extractive)");
  sum_embedder.attach(sum_cmd);
  sum_cmd->add_option("--out", sum_out, "Output path");

  // analyze-characters
  auto* analyze_cmd = app.add_subcommand(
      "analyze-characters", "PCA + k-means over trained character embeddings");
  std::string analyze_ckpt, analyze_graph, analyze_out;
  int clusters = 3;
  uint64_t analyze_seed = 0;
  analyze_cmd->add_option("--ckpt", analyze_ckpt, "Checkpoint directory")
      ->required();
  analyze_cmd->add_option("--graph", analyze_graph, "Graph JSON file")->required();
  analyze_cmd->add_option("-K,--clusters", clusters, "Cluster count");
  analyze_cmd->add_option("--seed", analyze_seed, "k-means seed");
  analyze_cmd->add_option("--out", analyze_out, "Output scatter JSON path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "ROUGE and embedding metrics");
  std::string cand_path, ref_path;
  EmbedderFlags eval_embedder;
  eval_cmd->add_option("--cand", cand_path, "Candidate summary file")->required();
  eval_cmd->add_option("--ref", ref_path, "Reference summary file")->required();
  eval_embedder.attach(eval_cmd);

  // novelty
  auto* novelty_cmd = app.add_subcommand("novelty", "Novel n-gram percentages");
  std::string novelty_summary, novelty_script;
  novelty_cmd->add_option("--summary", novelty_summary, "Summary file")
      ->required();
  novelty_cmd->add_option("--script", novelty_script, "Script file (.xml or text)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help / --version
      return app.exit(e);
    }
    std::cerr << app.help() << "\n";
    json err = {{"error", {{"code", "UsageError"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  if (parse_cmd->parsed()) {
    ScreenplayPtr sp = parse_screenplay_file(parse_file, parse_format);
    char* out = nullptr;
    check(ss_screenplay_to_json(sp.get(), &out));
    emit(owned(out), parse_out);
    return 0;
  }

  if (build_cmd->parsed()) {
    ScreenplayPtr sp = parse_screenplay_file(build_input, "auto");
    EmbedderPtr embedder = build_embedder.open();
    ss_graph* graph = nullptr;
    check(ss_graph_build(sp.get(), embedder.get(), include_mentions ? 1 : 0,
                         embed_headings ? 1 : 0, &graph));
    GraphPtr holder(graph, ss_graph_free);
    if (no_characters) {
      ss_graph* stripped = nullptr;
      check(ss_graph_strip_characters(holder.get(), &stripped));
      holder.reset(stripped);
    }
    char* out = nullptr;
    check(ss_graph_export(holder.get(), "json", &out));
    emit(owned(out), build_out);
    return 0;
  }

  if (stats_cmd->parsed()) {
    GraphPtr graph = load_graph(stats_input);
    char* out = nullptr;
    check(ss_graph_stats_json(graph.get(), &out));
    emit(owned(out), "");
    return 0;
  }

  if (export_cmd->parsed()) {
    GraphPtr graph = load_graph(export_input);
    char* out = nullptr;
    check(ss_graph_export(graph.get(), export_format.c_str(), &out));
    emit(owned(out), export_out);
    return 0;
  }

  if (train_cmd->parsed()) {
    json config = json::object();
    if (!config_path.empty()) {
      config = json::parse(read_file(config_path), nullptr, false);
      if (config.is_discarded() || !config.is_object())
        fail(1, "SchemaViolation", config_path + " is not a JSON object");
    }
    if (!config.contains("profile")) config["profile"] = profile;
    if (train_epochs >= 0) config["epochs"] = train_epochs;
    if (train_lr >= 0) config["lr"] = train_lr;
    if (train_seed >= 0) config["seed"] = train_seed;
    if (train_arch_dim > 0) config["arch_dim"] = train_arch_dim;
    if (train_embed_dim > 0) config["embedder"]["dim"] = train_embed_dim;
    std::string config_str = config.dump();
    check(ss_train(corpus_dir.c_str(), config_str.c_str(), train_variant.c_str(),
                   train_out.c_str()));
    std::cout << "checkpoint written to " << train_out << "\n";
    return 0;
  }

  if (sum_cmd->parsed()) {
    ScreenplayPtr sp = parse_screenplay_file(sum_script, sum_format);
    if (extractive) {
      EmbedderPtr embedder = sum_embedder.open();
      char* out = nullptr;
      check(ss_summarize_extractive(sp.get(), embedder.get(), budget, &out));
      emit(owned(out), sum_out);
      return 0;
    }
    if (sum_ckpt.empty())
      fail(2, "UsageError", "abstractive mode needs --ckpt");
    ss_model* model = nullptr;
    check(ss_model_open(sum_ckpt.c_str(), &model));
    ModelPtr holder(model, ss_model_free);
    char* out = nullptr;
    check(ss_summarize(holder.get(), sp.get(), nullptr, &out));
    emit(owned(out), sum_out);
    return 0;
  }

  if (analyze_cmd->parsed()) {
    ss_model* model = nullptr;
    check(ss_model_open(analyze_ckpt.c_str(), &model));
    ModelPtr holder(model, ss_model_free);
    GraphPtr graph = load_graph(analyze_graph);
    char* out = nullptr;
    check(ss_analyze_characters(holder.get(), graph.get(), clusters,
                                analyze_seed, &out));
    emit(owned(out), analyze_out);
    return 0;
  }

  if (eval_cmd->parsed()) {
    std::string cand = read_file(cand_path);
    std::string ref = read_file(ref_path);
    EmbedderPtr embedder = eval_embedder.open();
    char* out = nullptr;
    check(ss_eval_report(cand.c_str(), ref.c_str(), embedder.get(), &out));
    emit(owned(out), "");
    return 0;
  }

  if (novelty_cmd->parsed()) {
    std::string summary = read_file(novelty_summary);
    std::string script_text = read_file(novelty_script);
    if (novelty_script.size() >= 4 &&
        novelty_script.substr(novelty_script.size() - 4) == ".xml") {
      // compare against the script's running text, not its markup
      ss_screenplay* sp = nullptr;
      check(ss_screenplay_parse_xml(script_text.data(), script_text.size(), &sp));
      ScreenplayPtr holder(sp, ss_screenplay_free);
      char* as_json = nullptr;
      check(ss_screenplay_to_json(holder.get(), &as_json));
      json doc = json::parse(owned(as_json));
      std::ostringstream text;
      for (const auto& scene : doc["scenes"]) {
        text << scene.value("heading", "") << " ";
        for (const auto& element : scene["elements"]) {
          if (element.contains("speaker"))
            text << element["speaker"].get<std::string>() << " ";
          text << element.value("text", "") << " ";
        }
      }
      script_text = text.str();
    }
    char* out = nullptr;
    check(ss_novelty(summary.c_str(), script_text.c_str(), &out));
    emit(owned(out), "");
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CliError& e) {
    json err = {{"error", {{"code", e.code}, {"message", e.message}}}};
    std::cerr << err.dump() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    json err = {{"error", {{"code", "Unknown"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
