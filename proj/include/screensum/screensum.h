/*
 * screensum C API: screenplay parsing, character-aware discourse graphs,
 * LGAT training and summarization, metrics, and character analysis behind
 * opaque handles and status codes.
 *
 * Every function returning ss_status leaves a thread-local message readable
 * via ss_last_error() on failure. Strings returned through char** parameters
 * are owned by the caller and released with ss_string_free().
 */

#ifndef SCREENSUM_SCREENSUM_H
#define SCREENSUM_SCREENSUM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCREENSUM_API __declspec(dllexport)
#else
#define SCREENSUM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_INVALID_ARGUMENT = 1,
  SS_ERR_MALFORMED_XML = 2,
  SS_ERR_SCHEMA_VIOLATION = 3,
  SS_ERR_EMPTY_SCREENPLAY = 4,
  SS_ERR_DUPLICATE_ID = 5,
  SS_ERR_MISSING_FIELD = 6,
  SS_ERR_UNREADABLE_FILE = 7,
  SS_ERR_UNWRITABLE_FILE = 8,
  SS_ERR_EMBEDDING_DIM_MISMATCH = 9,
  SS_ERR_DIM_INCONSISTENT = 10,
  SS_ERR_MISSING_TEXT = 11,
  SS_ERR_UNSUPPORTED_FORMAT = 12,
  SS_ERR_INVARIANT_VIOLATION = 13,
  SS_ERR_SHAPE_MISMATCH = 14,
  SS_ERR_NON_FINITE = 15,
  SS_ERR_VOCABULARY_MISS = 16,
  SS_ERR_LENGTH_EXCEEDED = 17,
  SS_ERR_CONFIG_MISMATCH = 18,
  SS_ERR_NO_CHARACTERS = 19,
  SS_ERR_TOO_FEW_POINTS = 20,
  SS_ERR_EMPTY_CORPUS = 21,
  SS_ERR_UNKNOWN = 127
} ss_status;

typedef struct ss_screenplay ss_screenplay;
typedef struct ss_embedder ss_embedder;
typedef struct ss_graph ss_graph;
typedef struct ss_model ss_model;

SCREENSUM_API const char* ss_version(void);
SCREENSUM_API const char* ss_status_name(ss_status status);
/* Thread-local message for the most recent failure in this thread. */
SCREENSUM_API const char* ss_last_error(void);
SCREENSUM_API void ss_string_free(char* str);

/* --- screenplays --------------------------------------------------------- */

SCREENSUM_API ss_status ss_screenplay_parse_xml(const char* bytes, size_t len,
                                                ss_screenplay** out);
SCREENSUM_API ss_status ss_screenplay_parse_text(const char* bytes, size_t len,
                                                 const char* id,
                                                 ss_screenplay** out);
SCREENSUM_API ss_status ss_screenplay_from_json(const char* bytes, size_t len,
                                                ss_screenplay** out);
SCREENSUM_API ss_status ss_screenplay_to_json(const ss_screenplay* sp,
                                              char** out_json);
SCREENSUM_API ss_status ss_screenplay_to_xml(const ss_screenplay* sp,
                                             char** out_xml);
SCREENSUM_API void ss_screenplay_free(ss_screenplay* sp);

/* --- embedders ------------------------------------------------------------ */

SCREENSUM_API ss_status ss_embedder_hash_new(int dim, uint64_t seed,
                                             ss_embedder** out);
SCREENSUM_API ss_status ss_embedder_external_open(const char* path,
                                                  ss_embedder** out);
SCREENSUM_API int ss_embedder_dim(const ss_embedder* embedder);
/* out_vec must hold ss_embedder_dim() doubles. */
SCREENSUM_API ss_status ss_embedder_embed(const ss_embedder* embedder,
                                          const char* text, double* out_vec);
SCREENSUM_API void ss_embedder_free(ss_embedder* embedder);

/* --- graphs ----------------------------------------------------------------
 * The JSON export is canonical and round-trippable; gexf and dot exports
 * label node types and omit embeddings. */

SCREENSUM_API ss_status ss_graph_build(const ss_screenplay* sp,
                                       const ss_embedder* embedder,
                                       int include_mentions, int embed_headings,
                                       ss_graph** out);
SCREENSUM_API ss_status ss_graph_strip_characters(const ss_graph* graph,
                                                  ss_graph** out);
SCREENSUM_API ss_status ss_graph_stats_json(const ss_graph* graph,
                                            char** out_json);
SCREENSUM_API ss_status ss_graph_export(const ss_graph* graph,
                                        const char* format, char** out_bytes);
SCREENSUM_API ss_status ss_graph_import_json(const char* bytes, size_t len,
                                             ss_graph** out);
SCREENSUM_API void ss_graph_free(ss_graph* graph);

/* --- training and models ---------------------------------------------------
 * corpus_dir holds screenplay .xml files plus summaries.jsonl keyed by id.
 * config_json may be NULL for the built-in desk profile. variant is one of
 * full | text_only | graph_only | full_without_characters. Writes config,
 * vocab, manifest, params.bin, and loss.csv into out_dir. */

SCREENSUM_API ss_status ss_train(const char* corpus_dir, const char* config_json,
                                 const char* variant, const char* out_dir);
SCREENSUM_API ss_status ss_run_ablation(const char* corpus_dir,
                                        const char* config_json,
                                        const char* variant,
                                        char** out_report_json);
SCREENSUM_API ss_status ss_model_open(const char* checkpoint_dir, ss_model** out);
SCREENSUM_API void ss_model_free(ss_model* model);

/* --- summaries -------------------------------------------------------------
 * embedder may be NULL; the checkpoint's embedder configuration is used. */

SCREENSUM_API ss_status ss_summarize(ss_model* model, const ss_screenplay* sp,
                                     const ss_embedder* embedder,
                                     char** out_text);
SCREENSUM_API ss_status ss_summarize_extractive(const ss_screenplay* sp,
                                                const ss_embedder* embedder,
                                                int k, char** out_json);

/* --- analysis -------------------------------------------------------------- */

SCREENSUM_API ss_status ss_analyze_characters(ss_model* model,
                                              const ss_graph* graph, int k,
                                              uint64_t seed, char** out_json);

/* --- metrics ----------------------------------------------------------------
 * embedder may be NULL; a hashing embedder (dim 768, seed 0) is used. */

SCREENSUM_API ss_status ss_eval_report(const char* candidate,
                                       const char* reference,
                                       const ss_embedder* embedder,
                                       char** out_json);
SCREENSUM_API ss_status ss_novelty(const char* summary, const char* script,
                                   char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SCREENSUM_SCREENSUM_H */
