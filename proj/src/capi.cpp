#include "screensum/screensum.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "screensum/ablation.hpp"
#include "screensum/analysis.hpp"
#include "screensum/cadgraph.hpp"
#include "screensum/eval.hpp"
#include "screensum/lgat.hpp"
#include "screensum/summarize.hpp"

using namespace screensum;

struct ss_screenplay {
  Screenplay value;
};
struct ss_embedder {
  std::unique_ptr<Embedder> value;
};
struct ss_graph {
  CaDGraph value;
};
struct ss_model {
  LgatModel value;
};

namespace {

thread_local std::string g_last_error;

ss_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SS_ERR_INVALID_ARGUMENT;
    case ErrorCode::MalformedXml: return SS_ERR_MALFORMED_XML;
    case ErrorCode::SchemaViolation: return SS_ERR_SCHEMA_VIOLATION;
    case ErrorCode::EmptyScreenplay: return SS_ERR_EMPTY_SCREENPLAY;
    case ErrorCode::DuplicateId: return SS_ERR_DUPLICATE_ID;
    case ErrorCode::MissingField: return SS_ERR_MISSING_FIELD;
    case ErrorCode::UnreadableFile: return SS_ERR_UNREADABLE_FILE;
    case ErrorCode::UnwritableFile: return SS_ERR_UNWRITABLE_FILE;
    case ErrorCode::EmbeddingDimMismatch: return SS_ERR_EMBEDDING_DIM_MISMATCH;
    case ErrorCode::DimInconsistent: return SS_ERR_DIM_INCONSISTENT;
    case ErrorCode::MissingText: return SS_ERR_MISSING_TEXT;
    case ErrorCode::UnsupportedFormat: return SS_ERR_UNSUPPORTED_FORMAT;
    case ErrorCode::InvariantViolation: return SS_ERR_INVARIANT_VIOLATION;
    case ErrorCode::ShapeMismatch: return SS_ERR_SHAPE_MISMATCH;
    case ErrorCode::NonFinite: return SS_ERR_NON_FINITE;
    case ErrorCode::VocabularyMiss: return SS_ERR_VOCABULARY_MISS;
    case ErrorCode::LengthExceeded: return SS_ERR_LENGTH_EXCEEDED;
    case ErrorCode::ConfigMismatch: return SS_ERR_CONFIG_MISMATCH;
    case ErrorCode::NoCharacters: return SS_ERR_NO_CHARACTERS;
    case ErrorCode::TooFewPoints: return SS_ERR_TOO_FEW_POINTS;
    case ErrorCode::EmptyCorpus: return SS_ERR_EMPTY_CORPUS;
  }
  return SS_ERR_UNKNOWN;
}

template <typename Fn>
ss_status guarded(Fn&& fn) {
  try {
    fn();
    return SS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SS_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return SS_ERR_UNKNOWN;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) raise(ErrorCode::InvalidArgument, "allocation failed");
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require_arg(bool ok, const char* message) {
  if (!ok) raise(ErrorCode::InvalidArgument, message);
}

LgatConfig parse_config(const char* config_json) {
  if (!config_json || !*config_json) return LgatConfig::desk_profile();
  return LgatConfig::from_json_string(config_json);
}

}  // namespace

extern "C" {

const char* ss_version(void) { return "0.1.0"; }

const char* ss_status_name(ss_status status) {
  switch (status) {
    case SS_OK: return "Ok";
    case SS_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case SS_ERR_MALFORMED_XML: return "MalformedXml";
    case SS_ERR_SCHEMA_VIOLATION: return "SchemaViolation";
    case SS_ERR_EMPTY_SCREENPLAY: return "EmptyScreenplay";
    case SS_ERR_DUPLICATE_ID: return "DuplicateId";
    case SS_ERR_MISSING_FIELD: return "MissingField";
    case SS_ERR_UNREADABLE_FILE: return "UnreadableFile";
    case SS_ERR_UNWRITABLE_FILE: return "UnwritableFile";
    case SS_ERR_EMBEDDING_DIM_MISMATCH: return "EmbeddingDimMismatch";
    case SS_ERR_DIM_INCONSISTENT: return "DimInconsistent";
    case SS_ERR_MISSING_TEXT: return "MissingText";
    case SS_ERR_UNSUPPORTED_FORMAT: return "UnsupportedFormat";
    case SS_ERR_INVARIANT_VIOLATION: return "InvariantViolation";
    case SS_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case SS_ERR_NON_FINITE: return "NonFinite";
    case SS_ERR_VOCABULARY_MISS: return "VocabularyMiss";
    case SS_ERR_LENGTH_EXCEEDED: return "LengthExceeded";
    case SS_ERR_CONFIG_MISMATCH: return "ConfigMismatch";
    case SS_ERR_NO_CHARACTERS: return "NoCharacters";
    case SS_ERR_TOO_FEW_POINTS: return "TooFewPoints";
    case SS_ERR_EMPTY_CORPUS: return "EmptyCorpus";
    case SS_ERR_UNKNOWN: break;
  }
  return "Unknown";
}

const char* ss_last_error(void) { return g_last_error.c_str(); }

void ss_string_free(char* str) { std::free(str); }

/* --- screenplays --------------------------------------------------------- */

ss_status ss_screenplay_parse_xml(const char* bytes, size_t len,
                                  ss_screenplay** out) {
  return guarded([&] {
    require_arg(bytes && out, "bytes and out must be non-null");
    *out = new ss_screenplay{parse_xml(std::string_view(bytes, len))};
  });
}

ss_status ss_screenplay_parse_text(const char* bytes, size_t len,
                                   const char* id, ss_screenplay** out) {
  return guarded([&] {
    require_arg(bytes && out, "bytes and out must be non-null");
    *out = new ss_screenplay{
        parse_plaintext(std::string_view(bytes, len), id ? id : "")};
  });
}

ss_status ss_screenplay_from_json(const char* bytes, size_t len,
                                  ss_screenplay** out) {
  return guarded([&] {
    require_arg(bytes && out, "bytes and out must be non-null");
    *out = new ss_screenplay{screenplay_from_json(std::string_view(bytes, len))};
  });
}

ss_status ss_screenplay_to_json(const ss_screenplay* sp, char** out_json) {
  return guarded([&] {
    require_arg(sp && out_json, "sp and out_json must be non-null");
    *out_json = copy_string(to_json(sp->value));
  });
}

ss_status ss_screenplay_to_xml(const ss_screenplay* sp, char** out_xml) {
  return guarded([&] {
    require_arg(sp && out_xml, "sp and out_xml must be non-null");
    *out_xml = copy_string(to_xml(sp->value));
  });
}

void ss_screenplay_free(ss_screenplay* sp) { delete sp; }

/* --- embedders ------------------------------------------------------------ */

ss_status ss_embedder_hash_new(int dim, uint64_t seed, ss_embedder** out) {
  return guarded([&] {
    require_arg(out != nullptr, "out must be non-null");
    *out = new ss_embedder{std::make_unique<HashingEmbedder>(dim, seed)};
  });
}

ss_status ss_embedder_external_open(const char* path, ss_embedder** out) {
  return guarded([&] {
    require_arg(path && out, "path and out must be non-null");
    *out = new ss_embedder{
        std::make_unique<ExternalEmbedder>(ExternalEmbedder::load(path))};
  });
}

int ss_embedder_dim(const ss_embedder* embedder) {
  return embedder ? embedder->value->dim() : 0;
}

ss_status ss_embedder_embed(const ss_embedder* embedder, const char* text,
                            double* out_vec) {
  return guarded([&] {
    require_arg(embedder && text && out_vec, "arguments must be non-null");
    std::vector<real> vec = embedder->value->embed(text);
    std::memcpy(out_vec, vec.data(), vec.size() * sizeof(double));
  });
}

void ss_embedder_free(ss_embedder* embedder) { delete embedder; }

/* --- graphs ---------------------------------------------------------------- */

ss_status ss_graph_build(const ss_screenplay* sp, const ss_embedder* embedder,
                         int include_mentions, int embed_headings,
                         ss_graph** out) {
  return guarded([&] {
    require_arg(sp && embedder && out, "arguments must be non-null");
    BuildOptions options{include_mentions != 0, embed_headings != 0};
    CaDGraph graph = build_graph(sp->value, *embedder->value, options);
    validate_graph(graph);
    *out = new ss_graph{std::move(graph)};
  });
}

ss_status ss_graph_strip_characters(const ss_graph* graph, ss_graph** out) {
  return guarded([&] {
    require_arg(graph && out, "graph and out must be non-null");
    *out = new ss_graph{strip_characters(graph->value)};
  });
}

ss_status ss_graph_stats_json(const ss_graph* graph, char** out_json) {
  return guarded([&] {
    require_arg(graph && out_json, "graph and out_json must be non-null");
    *out_json = copy_string(stats_to_json(graph_stats(graph->value)));
  });
}

ss_status ss_graph_export(const ss_graph* graph, const char* format,
                          char** out_bytes) {
  return guarded([&] {
    require_arg(graph && format && out_bytes, "arguments must be non-null");
    validate_graph(graph->value);
    *out_bytes =
        copy_string(export_graph(graph->value, graph_format_from_string(format)));
  });
}

ss_status ss_graph_import_json(const char* bytes, size_t len, ss_graph** out) {
  return guarded([&] {
    require_arg(bytes && out, "bytes and out must be non-null");
    *out = new ss_graph{import_graph(std::string_view(bytes, len))};
  });
}

void ss_graph_free(ss_graph* graph) { delete graph; }

/* --- training and models ----------------------------------------------------- */

ss_status ss_train(const char* corpus_dir, const char* config_json,
                   const char* variant, const char* out_dir) {
  return guarded([&] {
    require_arg(corpus_dir && variant && out_dir,
                "corpus_dir, variant, and out_dir must be non-null");
    LgatConfig config = parse_config(config_json);
    Variant v = variant_from_string(variant);
    std::vector<TrainPair> corpus = load_corpus(corpus_dir);
    Vocab vocab = build_vocab(corpus, config.vocab_min_freq);
    LgatModel model(config, v, std::move(vocab));
    std::unique_ptr<Embedder> embedder;
    if (model.needs_graph()) embedder = make_embedder(config.embedder);
    TrainResult result = train_model(model, corpus, embedder.get());
    model.save(out_dir);
    write_file(std::string(out_dir) + "/loss.csv", loss_curve_csv(result));
  });
}

ss_status ss_run_ablation(const char* corpus_dir, const char* config_json,
                          const char* variant, char** out_report_json) {
  return guarded([&] {
    require_arg(corpus_dir && variant && out_report_json,
                "corpus_dir, variant, and out_report_json must be non-null");
    LgatConfig config = parse_config(config_json);
    std::vector<TrainPair> corpus = load_corpus(corpus_dir);
    AblationResult result =
        run_ablation(corpus, variant_from_string(variant), config);
    *out_report_json = copy_string(ablation_to_json(result));
  });
}

ss_status ss_model_open(const char* checkpoint_dir, ss_model** out) {
  return guarded([&] {
    require_arg(checkpoint_dir && out, "checkpoint_dir and out must be non-null");
    *out = new ss_model{LgatModel::load(checkpoint_dir)};
  });
}

void ss_model_free(ss_model* model) { delete model; }

/* --- summaries ---------------------------------------------------------------- */

ss_status ss_summarize(ss_model* model, const ss_screenplay* sp,
                       const ss_embedder* embedder, char** out_text) {
  return guarded([&] {
    require_arg(model && sp && out_text, "model, sp, and out_text must be non-null");
    std::unique_ptr<Embedder> owned;
    const Embedder* e;
    if (embedder) {
      e = embedder->value.get();
    } else {
      owned = make_embedder(model->value.config().embedder);
      e = owned.get();
    }
    *out_text = copy_string(summarize_abstractive(model->value, sp->value, *e));
  });
}

ss_status ss_summarize_extractive(const ss_screenplay* sp,
                                  const ss_embedder* embedder, int k,
                                  char** out_json) {
  return guarded([&] {
    require_arg(sp && embedder && out_json, "arguments must be non-null");
    *out_json = copy_string(
        extractive_to_json(summarize_extractive(sp->value, *embedder->value, k)));
  });
}

/* --- analysis ------------------------------------------------------------------ */

ss_status ss_analyze_characters(ss_model* model, const ss_graph* graph, int k,
                                uint64_t seed, char** out_json) {
  return guarded([&] {
    require_arg(model && graph && out_json, "arguments must be non-null");
    CharacterAnalysis analysis =
        analyze_characters(model->value, graph->value, k, seed);
    *out_json = copy_string(scatter_to_json(analysis));
  });
}

/* --- metrics --------------------------------------------------------------------- */

ss_status ss_eval_report(const char* candidate, const char* reference,
                         const ss_embedder* embedder, char** out_json) {
  return guarded([&] {
    require_arg(candidate && reference && out_json,
                "candidate, reference, and out_json must be non-null");
    std::unique_ptr<Embedder> owned;
    const Embedder* e;
    if (embedder) {
      e = embedder->value.get();
    } else {
      owned = std::make_unique<HashingEmbedder>(768, 0);
      e = owned.get();
    }
    *out_json = copy_string(report_to_json(evaluate_pair(candidate, reference, *e)));
  });
}

ss_status ss_novelty(const char* summary, const char* script, char** out_json) {
  return guarded([&] {
    require_arg(summary && script && out_json, "arguments must be non-null");
    *out_json = copy_string(novelty_to_json(ngram_novelty(summary, script)));
  });
}

}  // extern "C"
