#include "taco/corpus.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "taco/errors.hpp"

namespace taco {

std::string task_name(Task t) { return t == Task::qa ? "qa" : "summarization"; }

Task task_from_name(const std::string& name) {
    if (name == "qa") return Task::qa;
    if (name == "summarization") return Task::summarization;
    throw SchemaError("unknown task '" + name + "'");
}

Vocabulary::Vocabulary() {
    id_to_token_.push_back(kUnkToken);
    token_to_id_[kUnkToken] = 0;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
    Vocabulary v;
    for (const auto& text : texts) {
        for (const auto& tok : split_words(text)) v.add(tok);
    }
    return v;
}

int Vocabulary::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? unk_id() : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
        throw VocabError("token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vocabulary file " + path);
    for (const auto& tok : id_to_token_) out << tok << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read vocabulary file " + path);
    Vocabulary v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != kUnkToken) throw IntegrityError("vocabulary file missing unk sentinel");
            continue;
        }
        v.add(line);
    }
    return v;
}

namespace {

bool is_space_char(unsigned char c) { return std::isspace(c) != 0; }

// ASCII punctuation only; multibyte UTF-8 sequences are treated as word
// characters so they never get split mid-codepoint.
bool is_punct_char(unsigned char c) { return c < 128 && std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space_char(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < n && !is_space_char(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        std::size_t lo = start, hi = i;  // [lo, hi) is the word
        while (lo < hi && is_punct_char(static_cast<unsigned char>(text[lo]))) {
            out.emplace_back(1, text[lo]);
            ++lo;
        }
        std::size_t core_end = hi;
        while (core_end > lo && is_punct_char(static_cast<unsigned char>(text[core_end - 1]))) --core_end;
        if (core_end > lo) out.emplace_back(text.substr(lo, core_end - lo));
        for (std::size_t k = core_end; k < hi; ++k) out.emplace_back(1, text[k]);
    }
    return out;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
    auto words = split_words(text);
    if (words.empty()) throw EmptyInputError("cannot tokenize empty input");
    TokenSequence seq;
    seq.tokens = std::move(words);
    seq.ids.reserve(seq.tokens.size());
    for (const auto& tok : seq.tokens) seq.ids.push_back(vocab.id_of(tok));
    return seq;
}

std::vector<TokenSequence> chunk(const TokenSequence& seq, std::size_t max_len) {
    if (max_len == 0) throw DimError("chunk length must be >= 1");
    std::vector<TokenSequence> out;
    const std::size_t n = seq.size();
    for (std::size_t start = 0; start < n; start += max_len) {
        std::size_t end = std::min(n, start + max_len);
        TokenSequence c;
        c.tokens.assign(seq.tokens.begin() + start, seq.tokens.begin() + end);
        c.ids.assign(seq.ids.begin() + start, seq.ids.begin() + end);
        out.push_back(std::move(c));
    }
    return out;
}

std::string detokenize(const TokenSequence& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += seq.tokens[i];
    }
    return out;
}

std::vector<Sample> load_dataset(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("dataset file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file: " + path);

    std::vector<Sample> samples;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");

        auto require_string = [&](const char* field) -> std::string {
            if (!j.contains(field)) throw SchemaError(line_no, std::string("missing field '") + field + "'");
            if (!j[field].is_string()) throw SchemaError(line_no, std::string("field '") + field + "' must be a string");
            return j[field].get<std::string>();
        };

        Sample s;
        s.id = require_string("id");
        s.context = require_string("context");
        try {
            s.task = task_from_name(require_string("task"));
        } catch (SchemaError& e) {
            if (e.line == 0) throw SchemaError(line_no, e.what());
            throw;
        }
        if (j.contains("question")) {
            if (!j["question"].is_string()) throw SchemaError(line_no, "field 'question' must be a string");
            s.question = j["question"].get<std::string>();
        }
        if (j.contains("reference")) {
            if (!j["reference"].is_string()) throw SchemaError(line_no, "field 'reference' must be a string");
            s.reference = j["reference"].get<std::string>();
        }
        if (s.task == Task::qa && !s.question)
            throw SchemaError(line_no, "qa sample '" + s.id + "' has no question");
        if (!seen_ids.insert(s.id).second)
            throw SchemaError(line_no, "duplicate sample id '" + s.id + "'");
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

const std::set<std::string>& stopword_set() {
    static const std::set<std::string> words = {
        "a",     "about", "above", "after", "again", "all",   "an",    "and",  "any",   "are",
        "as",    "at",    "be",    "been",  "being", "below", "both",  "but",  "by",    "can",
        "did",   "do",    "does",  "doing", "down",  "each",  "few",   "for",  "from",  "further",
        "had",   "has",   "have",  "having","he",    "her",   "here",  "hers", "him",   "his",
        "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",  "just",  "me",
        "more",  "most",  "my",    "no",    "nor",   "not",   "now",   "of",   "off",   "on",
        "once",  "only",  "or",    "other", "our",   "out",   "over",  "own",  "same",  "she",
        "should","so",    "some",  "such",  "than",  "that",  "the",   "their","them",  "then",
        "there", "these", "they",  "this",  "those", "through","to",   "too",  "under", "until",
        "up",    "very",  "was",   "we",    "were",  "what",  "when",  "where","which", "while",
        "who",   "whom",  "why",   "will",  "with",  "you",   "your",  "yours"};
    return words;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

bool is_stopword(const std::string& token) { return stopword_set().count(to_lower(token)) > 0; }

bool is_punct_token(const std::string& token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (!is_punct_char(c)) return false;
    }
    return true;
}

std::vector<std::uint8_t> heuristic_labels(const TokenSequence& seq) {
    std::vector<std::uint8_t> labels;
    labels.reserve(seq.size());
    for (const auto& tok : seq.tokens)
        labels.push_back(!is_stopword(tok) && !is_punct_token(tok) ? 1 : 0);
    return labels;
}

}  // namespace taco
