#pragma once

// Corpus BLEU-1..4 and ROUGE-L for generated questions.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace morphoqg {

/// Lowercased, split on runs of whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct BleuScores {
  std::vector<double> bleu;        // bleu[n-1] = cumulative BLEU-n, 0..100
  std::vector<double> precisions;  // modified n-gram precision per order, 0..1
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  nlohmann::json to_json() const;
};

/// Corpus-level BLEU with one reference per candidate, uniform weights and
/// no smoothing: any zero precision up to order n makes BLEU-n zero.
BleuScores bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                std::size_t max_n = 4);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline constexpr double kRougeBeta2 = 1.2;

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

RougeL rouge_l(std::string_view candidate, std::string_view reference, double beta2 = kRougeBeta2);

/// Mean sentence-level ROUGE-L F over the corpus.
double rouge_l_corpus(std::span<const std::string> candidates,
                      std::span<const std::string> references, double beta2 = kRougeBeta2);

}  // namespace morphoqg
