#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace taco {

enum class Task { summarization, qa };

std::string task_name(Task t);
Task task_from_name(const std::string& name);  // SchemaError on unknown

// An ordered token list with vocabulary ids. tokens.size() == ids.size() >= 1.
struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<int> ids;

    std::size_t size() const { return tokens.size(); }
};

struct Sample {
    std::string id;
    std::string context;
    std::optional<std::string> question;
    std::optional<std::string> reference;
    Task task = Task::summarization;
};

// Bijective token <-> id map with a reserved unknown token at id 0.
// Ids are dense in [0, V) in first-seen order.
class Vocabulary {
  public:
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary();
    static Vocabulary build(const std::vector<std::string>& texts);

    int add(const std::string& token);  // idempotent
    int id_of(const std::string& token) const;
    const std::string& token_of(int id) const;
    int unk_id() const { return 0; }
    std::size_t size() const { return id_to_token_.size(); }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Deterministic word segmentation: split on whitespace, then peel leading
// and trailing punctuation characters off each word as single-char tokens.
// Interior punctuation (don't, u.s) is left alone. Returns {} for blank text.
std::vector<std::string> split_words(const std::string& text);

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);  // EmptyInputError on blank
std::vector<TokenSequence> chunk(const TokenSequence& seq, std::size_t max_len);
std::string detokenize(const TokenSequence& seq);

// JSON Lines dataset: {"id", "context", "question"?, "reference"?, "task"}.
std::vector<Sample> load_dataset(const std::string& path);

bool is_stopword(const std::string& token);
bool is_punct_token(const std::string& token);

// Keep labels for the supervised bootstrap stage: 1 for tokens that are
// neither stopwords nor pure punctuation.
std::vector<std::uint8_t> heuristic_labels(const TokenSequence& seq);

}  // namespace taco
