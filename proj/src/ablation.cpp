#include "screensum/ablation.hpp"

#include "json.hpp"
#include "screensum/summarize.hpp"

namespace screensum {

using nlohmann::json;

namespace {

EvalReport mean_report(const std::vector<EvalReport>& reports) {
  EvalReport mean;
  if (reports.empty()) return mean;
  auto accumulate = [](Prf& into, const Prf& from) {
    into.precision += from.precision;
    into.recall += from.recall;
    into.f1 += from.f1;
  };
  for (const auto& report : reports) {
    accumulate(mean.rouge1, report.rouge1);
    accumulate(mean.rouge2, report.rouge2);
    accumulate(mean.rougeL, report.rougeL);
    accumulate(mean.embed, report.embed);
    mean.candidate_tokens += report.candidate_tokens;
    mean.reference_tokens += report.reference_tokens;
  }
  real inv = 1.0 / static_cast<real>(reports.size());
  for (Prf* prf : {&mean.rouge1, &mean.rouge2, &mean.rougeL, &mean.embed}) {
    prf->precision *= inv;
    prf->recall *= inv;
    prf->f1 *= inv;
  }
  return mean;
}

}  // namespace

AblationResult run_ablation(const std::vector<TrainPair>& corpus,
                            Variant variant, const LgatConfig& config) {
  if (corpus.empty()) raise(ErrorCode::EmptyCorpus, "ablation corpus is empty");

  std::vector<TrainPair> train_pairs;
  std::vector<TrainPair> holdout;
  if (corpus.size() >= 2) {
    train_pairs.assign(corpus.begin(), corpus.end() - 1);
    holdout.assign(corpus.end() - 1, corpus.end());
  } else {
    train_pairs = corpus;
    holdout = corpus;
  }

  Vocab vocab = build_vocab(train_pairs, config.vocab_min_freq);
  LgatModel model(config, variant, std::move(vocab));
  std::unique_ptr<Embedder> embedder = make_embedder(config.embedder);

  AblationResult result;
  result.variant = variant;
  result.training = train_model(model, train_pairs, embedder.get());
  result.steps = model.step_count();

  std::vector<EvalReport> reports;
  for (const auto& pair : holdout) {
    std::string candidate = summarize_abstractive(model, pair.screenplay, *embedder);
    reports.push_back(evaluate_pair(candidate, pair.summary, *embedder));
  }
  result.report = mean_report(reports);
  return result;
}

std::string ablation_to_json(const AblationResult& result) {
  json report = json::parse(report_to_json(result.report));
  json doc = {{"schema_version", 1},
              {"variant", variant_name(result.variant)},
              {"steps", result.steps},
              {"final_epoch_loss", result.training.epoch_mean.empty()
                                       ? 0.0
                                       : result.training.epoch_mean.back()},
              {"report", std::move(report)}};
  return doc.dump();
}

}  // namespace screensum
