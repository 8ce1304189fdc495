#pragma once

// Template-generated (sentence, question) pairs with POS / NER / answer
// tags, used for overfitting checks and self tests.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "morphoqg/codec.hpp"

namespace morphoqg {

/// `n` examples drawn from six templates with seeded filler choice.
/// Deterministic for a given (n, seed).
std::vector<RawExample> toy_corpus(std::size_t n, std::uint64_t seed = 42);

}  // namespace morphoqg
