#pragma once

// JSON Lines corpus / encoded-example files and one-token-per-line vocab files.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphoqg/codec.hpp"

namespace morphoqg {

/// {"tokens","pos","ner","answer_start","answer_end","question","question_pos"}
RawExample raw_example_from_json(const nlohmann::json& j);
nlohmann::json raw_example_to_json(const RawExample& ex);
std::vector<RawExample> read_corpus(const std::filesystem::path& path);
std::vector<RawExample> read_corpus(std::istream& in);
void write_corpus(const std::filesystem::path& path, const std::vector<RawExample>& corpus);

/// Actions are tagged objects: {"type":"copy","index":i},
/// {"type":"quest","id":q,"word":w}, {"type":"trans","id":t,"tag":"##ed"}.
nlohmann::json encoded_to_json(const EncodedExample& ex, const Vocab& quest_vocab);
EncodedExample encoded_from_json(const nlohmann::json& j);
std::vector<EncodedExample> read_encoded(const std::filesystem::path& path);
void write_encoded(std::ostream& out, const std::vector<EncodedExample>& examples,
                   const Vocab& quest_vocab);

Vocab read_vocab(const std::filesystem::path& path);
void write_vocab(const std::filesystem::path& path, const Vocab& vocab);

/// encoder.txt, quest.txt, pos.txt, ner.txt under `dir`.
Vocabs read_vocabs(const std::filesystem::path& dir);
void write_vocabs(const std::filesystem::path& dir, const Vocabs& vocabs);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace morphoqg
