#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "morphoqg/morphology.hpp"

namespace morphoqg {

struct InflectionReport {
  std::size_t total = 0;
  std::size_t inflected_count = 0;
  std::array<std::size_t, kNumTransforms> per_type{};
  std::size_t skipped_pieces = 0;  // "##" continuation pieces (external vocab only)

  double ratio() const {
    return total == 0 ? 0.0 : static_cast<double>(inflected_count) / static_cast<double>(total);
  }
  nlohmann::json to_json() const;
};

/// Counts words with an inflected reading under Morphology::guess_inflection.
InflectionReport count_inflected(std::span<const std::string> vocab, const Morphology& morph);

/// One token per line. "##" pieces are skipped and counted separately but
/// stay in `total`; only the first `top` non-empty lines are read when top > 0.
InflectionReport analyze_external_vocab(const std::filesystem::path& path, const Morphology& morph,
                                        std::size_t top = 0);

/// Frequency-ranked lowercased word list from whitespace-tokenized text.
std::vector<std::string> frequency_ranked(std::span<const std::string> tokens, std::size_t top);

/// Maximal alphabetic runs of `text`, lowercased.
std::vector<std::string> word_tokens(std::string_view text);

/// Word tokens of every context and question in a SQuAD-format JSON file.
std::vector<std::string> read_squad_words(const std::filesystem::path& path);

}  // namespace morphoqg
