#include "morphoqg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "morphoqg/errors.hpp"
#include "morphoqg/morphology.hpp"

namespace morphoqg {

std::vector<std::string> tokenize(std::string_view text) {
  std::istringstream in{to_lower(text)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

nlohmann::json BleuScores::to_json() const {
  nlohmann::json j;
  for (std::size_t n = 0; n < bleu.size(); ++n) j["bleu_" + std::to_string(n + 1)] = bleu[n];
  j["precisions"] = precisions;
  j["brevity_penalty"] = brevity_penalty;
  j["candidate_length"] = candidate_length;
  j["reference_length"] = reference_length;
  return j;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

BleuScores bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                std::size_t max_n) {
  if (candidates.size() != references.size())
    throw LengthMismatch("BLEU needs one reference per candidate (" +
                         std::to_string(candidates.size()) + " vs " +
                         std::to_string(references.size()) + ")");
  if (max_n == 0) throw DataError("BLEU order must be positive");

  std::vector<std::size_t> matched(max_n, 0), total(max_n, 0);
  BleuScores s;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto cand = tokenize(candidates[k]);
    const auto ref = tokenize(references[k]);
    s.candidate_length += cand.size();
    s.reference_length += ref.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts c = ngrams(cand, n), r = ngrams(ref, n);
      for (const auto& [gram, count] : c) {
        const auto it = r.find(gram);
        matched[n - 1] += std::min(count, it == r.end() ? std::size_t{0} : it->second);
        total[n - 1] += count;
      }
    }
  }

  if (s.candidate_length == 0)
    s.brevity_penalty = 0.0;
  else if (s.candidate_length > s.reference_length)
    s.brevity_penalty = 1.0;
  else
    s.brevity_penalty = std::exp(1.0 - static_cast<double>(s.reference_length) /
                                           static_cast<double>(s.candidate_length));

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < max_n; ++n) {
    const double p = total[n] ? static_cast<double>(matched[n]) / static_cast<double>(total[n]) : 0.0;
    s.precisions.push_back(p);
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    s.bleu.push_back(zero ? 0.0
                          : 100.0 * s.brevity_penalty *
                                std::exp(log_sum / static_cast<double>(n + 1)));
  }
  return s;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l(std::string_view candidate, std::string_view reference, double beta2) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  RougeL r;
  const std::size_t lcs = lcs_length(cand, ref);
  if (lcs == 0) return r;
  r.precision = static_cast<double>(lcs) / static_cast<double>(cand.size());
  r.recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
  r.f = (1.0 + beta2) * r.precision * r.recall / (r.recall + beta2 * r.precision);
  return r;
}

double rouge_l_corpus(std::span<const std::string> candidates,
                      std::span<const std::string> references, double beta2) {
  if (candidates.size() != references.size())
    throw LengthMismatch("ROUGE-L needs one reference per candidate");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    sum += rouge_l(candidates[k], references[k], beta2).f;
  return sum / static_cast<double>(candidates.size());
}

}  // namespace morphoqg
