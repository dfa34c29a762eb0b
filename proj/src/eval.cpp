#include "screensum/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace screensum {

using nlohmann::json;

real f1_of(real precision, real recall) {
  real denom = precision + recall;
  return denom > 0 ? 2.0 * precision * recall / denom : 0.0;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<Ngram, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    Ngram gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

}  // namespace

Prf rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "n must be at least 1");
  auto cand_counts = ngram_counts(tokenize_alnum_lower(candidate), n);
  auto ref_counts = ngram_counts(tokenize_alnum_lower(reference), n);
  size_t cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [gram, count] : cand_counts) cand_total += count;
  for (const auto& [gram, count] : ref_counts) ref_total += count;
  for (const auto& [gram, count] : cand_counts) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  Prf out;
  if (cand_total > 0) out.precision = static_cast<real>(overlap) / cand_total;
  if (ref_total > 0) out.recall = static_cast<real>(overlap) / ref_total;
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

Prf rouge_l(std::string_view candidate, std::string_view reference) {
  std::vector<std::string> cand = tokenize_alnum_lower(candidate);
  std::vector<std::string> ref = tokenize_alnum_lower(reference);
  const size_t m = cand.size(), n = ref.size();
  Prf out;
  if (m == 0 || n == 0) return out;

  // rolling-row LCS
  std::vector<size_t> prev(n + 1, 0), curr(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      if (cand[i - 1] == ref[j - 1])
        curr[j] = prev[j - 1] + 1;
      else
        curr[j] = std::max(prev[j], curr[j - 1]);
    }
    prev.swap(curr);
  }
  size_t lcs = prev[n];
  out.precision = static_cast<real>(lcs) / m;
  out.recall = static_cast<real>(lcs) / n;
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

Prf embed_score(std::string_view candidate, std::string_view reference,
                const Embedder& embedder) {
  std::vector<std::string> cand = tokenize_alnum_lower(candidate);
  std::vector<std::string> ref = tokenize_alnum_lower(reference);
  Prf out;
  if (cand.empty() || ref.empty()) return out;

  std::vector<std::vector<real>> cand_vecs, ref_vecs;
  cand_vecs.reserve(cand.size());
  ref_vecs.reserve(ref.size());
  for (const auto& token : cand) cand_vecs.push_back(embedder.embed(token));
  for (const auto& token : ref) ref_vecs.push_back(embedder.embed(token));

  std::vector<std::vector<real>> sim(cand.size(),
                                     std::vector<real>(ref.size(), 0.0));
  for (size_t i = 0; i < cand.size(); ++i)
    for (size_t j = 0; j < ref.size(); ++j)
      sim[i][j] = cosine_similarity(cand_vecs[i], ref_vecs[j]);

  real precision_sum = 0.0;
  for (size_t i = 0; i < cand.size(); ++i)
    precision_sum += *std::max_element(sim[i].begin(), sim[i].end());
  real recall_sum = 0.0;
  for (size_t j = 0; j < ref.size(); ++j) {
    real best = sim[0][j];
    for (size_t i = 1; i < cand.size(); ++i) best = std::max(best, sim[i][j]);
    recall_sum += best;
  }
  out.precision = precision_sum / static_cast<real>(cand.size());
  out.recall = recall_sum / static_cast<real>(ref.size());
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

EvalReport evaluate_pair(std::string_view candidate, std::string_view reference,
                         const Embedder& embedder) {
  EvalReport report;
  report.rouge1 = rouge_n(candidate, reference, 1);
  report.rouge2 = rouge_n(candidate, reference, 2);
  report.rougeL = rouge_l(candidate, reference);
  report.embed = embed_score(candidate, reference, embedder);
  report.candidate_tokens = tokenize_alnum_lower(candidate).size();
  report.reference_tokens = tokenize_alnum_lower(reference).size();
  return report;
}

namespace {

json prf_to_json(const Prf& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json doc = {{"schema_version", 1},
              {"rouge1", prf_to_json(report.rouge1)},
              {"rouge2", prf_to_json(report.rouge2)},
              {"rougeL", prf_to_json(report.rougeL)},
              {"embed", prf_to_json(report.embed)},
              {"candidate_tokens", report.candidate_tokens},
              {"reference_tokens", report.reference_tokens}};
  return doc.dump();
}

std::string reports_to_csv(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::ostringstream out;
  out << "label,rouge1_p,rouge1_r,rouge1_f1,rouge2_p,rouge2_r,rouge2_f1,"
         "rougeL_p,rougeL_r,rougeL_f1,embed_p,embed_r,embed_f1\n";
  out << std::setprecision(10);
  for (const auto& [label, report] : rows) {
    out << label;
    for (const Prf* prf : {&report.rouge1, &report.rouge2, &report.rougeL,
                           &report.embed}) {
      out << "," << prf->precision << "," << prf->recall << "," << prf->f1;
    }
    out << "\n";
  }
  return out.str();
}

NoveltyReport ngram_novelty(std::string_view summary, std::string_view script) {
  std::vector<std::string> summary_tokens = tokenize_alnum_lower(summary);
  std::vector<std::string> script_tokens = tokenize_alnum_lower(script);
  NoveltyReport report;
  for (int n = 1; n <= 4; ++n) {
    std::set<Ngram> summary_grams;
    if (static_cast<int>(summary_tokens.size()) >= n) {
      for (size_t i = 0; i + n <= summary_tokens.size(); ++i)
        summary_grams.insert(
            Ngram(summary_tokens.begin() + i, summary_tokens.begin() + i + n));
    }
    if (summary_grams.empty()) {
      report.novel_pct[n - 1] = 0.0;
      continue;
    }
    std::set<Ngram> script_grams;
    if (static_cast<int>(script_tokens.size()) >= n) {
      for (size_t i = 0; i + n <= script_tokens.size(); ++i)
        script_grams.insert(
            Ngram(script_tokens.begin() + i, script_tokens.begin() + i + n));
    }
    size_t novel = 0;
    for (const auto& gram : summary_grams)
      if (!script_grams.count(gram)) ++novel;
    report.novel_pct[n - 1] =
        100.0 * static_cast<real>(novel) / static_cast<real>(summary_grams.size());
  }
  return report;
}

std::string novelty_to_json(const NoveltyReport& report) {
  json doc = {{"schema_version", 1},
              {"novel_pct",
               {{"1", report.novel_pct[0]},
                {"2", report.novel_pct[1]},
                {"3", report.novel_pct[2]},
                {"4", report.novel_pct[3]}}}};
  return doc.dump();
}

}  // namespace screensum
