#include <doctest.h>

#include <fstream>

#include "taco/corpus.hpp"
#include "taco/errors.hpp"
#include "taco/rng.hpp"
#include "test_util.hpp"

using namespace taco;

TEST_CASE("tokenize splits whitespace and boundary punctuation") {
    Vocabulary v = Vocabulary::build({"The cat sat ."});
    TokenSequence seq = tokenize("The cat sat.", v);
    CHECK(seq.tokens == std::vector<std::string>{"The", "cat", "sat", "."});
    CHECK(seq.size() == 4);

    TokenSequence wrapped = tokenize("(hello), world...", v);
    CHECK(wrapped.tokens ==
          std::vector<std::string>{"(", "hello", ")", ",", "world", ".", ".", "."});

    TokenSequence interior = tokenize("don't re-enter u.s", v);
    CHECK(interior.tokens == std::vector<std::string>{"don't", "re-enter", "u.s"});
}

TEST_CASE("tokenize maps repeated tokens to one id") {
    Vocabulary v = Vocabulary::build({"a a a"});
    TokenSequence seq = tokenize("a a a", v);
    CHECK(seq.size() == 3);
    CHECK(seq.ids[0] == seq.ids[1]);
    CHECK(seq.ids[1] == seq.ids[2]);
}

TEST_CASE("tokenize rejects blank input") {
    Vocabulary v;
    CHECK_THROWS_AS(tokenize("", v), EmptyInputError);
    CHECK_THROWS_AS(tokenize("   \t\n ", v), EmptyInputError);
}

TEST_CASE("tokenize is deterministic") {
    Vocabulary v = Vocabulary::build({"alpha beta gamma, delta."});
    TokenSequence a = tokenize("alpha beta gamma, delta.", v);
    TokenSequence b = tokenize("alpha beta gamma, delta.", v);
    CHECK(a.tokens == b.tokens);
    CHECK(a.ids == b.ids);
}

namespace {

// Reference count for the segmentation rule, written as its own scan so the
// tokenizer has something independent to disagree with.
std::size_t reference_token_count(const std::string& text) {
    std::size_t total = 0;
    std::size_t i = 0;
    auto punct = [](char c) {
        return static_cast<unsigned char>(c) < 128 && std::ispunct(static_cast<unsigned char>(c));
    };
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t lead = 0;
        while (i + lead < j && punct(text[i + lead])) ++lead;
        std::size_t trail = 0;
        while (j - trail > i + lead && punct(text[j - trail - 1])) ++trail;
        total += lead + trail + ((i + lead < j - trail) ? 1 : 0);
        i = j;
    }
    return total;
}

}  // namespace

TEST_CASE("tokenize matches the reference split on a 1200-word document") {
    static const char* pool[] = {"alpha",  "beta,",   "(gamma)", "delta.",  "...",
                                 "eps-i",  "zeta!?",  "it's",    "-dash-",  "plain"};
    Rng rng(123);
    std::string doc;
    for (int w = 0; w < 1200; ++w) {
        if (w) doc.push_back(w % 17 == 0 ? '\n' : ' ');
        doc += pool[rng.index(10)];
    }
    Vocabulary v = Vocabulary::build({doc});
    TokenSequence seq = tokenize(doc, v);
    CHECK(seq.size() == reference_token_count(doc));
}

TEST_CASE("chunk partitions in order with fixed-size pieces") {
    Rng rng(7);
    TokenSequence seq = taco::test::random_seq(rng, 50, 1024);
    auto chunks = chunk(seq, 512);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].size() == 512);
    CHECK(chunks[1].size() == 512);

    TokenSequence tiny = taco::test::random_seq(rng, 50, 5);
    auto one = chunk(tiny, 512);
    REQUIRE(one.size() == 1);
    CHECK(one[0].size() == 5);

    TokenSequence odd = taco::test::random_seq(rng, 50, 1030);
    auto three = chunk(odd, 512);
    REQUIRE(three.size() == 3);
    CHECK(three[0].size() == 512);
    CHECK(three[1].size() == 512);
    CHECK(three[2].size() == 6);
}

TEST_CASE("chunk then concatenate reproduces the original sequence") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 1 + rng.index(10000);
        std::size_t max_len = 1 + rng.index(700);
        TokenSequence seq = taco::test::random_seq(rng, 80, n);
        TokenSequence glued;
        for (const auto& piece : chunk(seq, max_len)) {
            CHECK(piece.size() <= max_len);
            glued.tokens.insert(glued.tokens.end(), piece.tokens.begin(), piece.tokens.end());
            glued.ids.insert(glued.ids.end(), piece.ids.begin(), piece.ids.end());
        }
        REQUIRE(glued.ids == seq.ids);
        REQUIRE(glued.tokens == seq.tokens);
    }
}

TEST_CASE("vocabulary assigns dense ids") {
    Vocabulary v = Vocabulary::build({"b c b a", "d a"});
    CHECK(v.size() == 5);  // unk + 4 tokens
    for (const auto& tok : {"b", "c", "a", "d"}) {
        int id = v.id_of(tok);
        CHECK(id > 0);
        CHECK(id < static_cast<int>(v.size()));
        CHECK(v.token_of(id) == tok);
    }
    CHECK(v.id_of("zzz") == v.unk_id());
    CHECK(v.unk_id() < static_cast<int>(v.size()));
}

TEST_CASE("vocabulary round-trips through its file form") {
    auto dir = taco::test::scratch_dir("vocab");
    Vocabulary v = Vocabulary::build({"alpha beta gamma"});
    v.save((dir / "v.vocab").string());
    Vocabulary loaded = Vocabulary::load((dir / "v.vocab").string());
    CHECK(loaded.size() == v.size());
    CHECK(loaded.id_of("beta") == v.id_of("beta"));
}

TEST_CASE("detokenize joins with single spaces") {
    TokenSequence seq;
    seq.tokens = {"The", "cat"};
    seq.ids = {1, 2};
    CHECK(detokenize(seq) == "The cat");

    TokenSequence single;
    single.tokens = {"x"};
    single.ids = {1};
    CHECK(detokenize(single) == "x");

    Vocabulary v = Vocabulary::build({"a b c"});
    CHECK(detokenize(tokenize("a b c", v)) == "a b c");
}

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("load_dataset keeps file order") {
    auto dir = taco::test::scratch_dir("dataset_ok");
    write_lines(dir / "d.jsonl",
                {R"({"id":"s1","context":"first text","task":"summarization"})",
                 R"({"id":"s2","context":"second text","task":"qa","question":"what?"})",
                 R"({"id":"s3","context":"third text","task":"summarization","reference":"ref"})"});
    auto samples = load_dataset((dir / "d.jsonl").string());
    REQUIRE(samples.size() == 3);
    CHECK(samples[0].id == "s1");
    CHECK(samples[1].id == "s2");
    CHECK(samples[1].task == Task::qa);
    CHECK(samples[1].question.value() == "what?");
    CHECK(samples[2].reference.value() == "ref");
}

TEST_CASE("load_dataset reports the offending line") {
    auto dir = taco::test::scratch_dir("dataset_bad");

    write_lines(dir / "missing.jsonl", {R"({"id":"s1","context":"ok","task":"summarization"})",
                                        R"({"id":"s2","task":"summarization"})"});
    try {
        load_dataset((dir / "missing.jsonl").string());
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line == 2);
    }

    write_lines(dir / "noq.jsonl", {R"({"id":"s1","context":"ok","task":"qa"})"});
    CHECK_THROWS_AS(load_dataset((dir / "noq.jsonl").string()), SchemaError);

    write_lines(dir / "malformed.jsonl", {R"({"id":"s1","context":"ok","task":"summarization"})",
                                          "{not json"});
    try {
        load_dataset((dir / "malformed.jsonl").string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    write_lines(dir / "dup.jsonl", {R"({"id":"s1","context":"ok","task":"summarization"})",
                                    R"({"id":"s1","context":"again","task":"summarization"})"});
    CHECK_THROWS_AS(load_dataset((dir / "dup.jsonl").string()), SchemaError);

    CHECK_THROWS_AS(load_dataset((dir / "missing_file.jsonl").string()), ConfigError);
}

TEST_CASE("heuristic labels keep content words only") {
    Vocabulary v = Vocabulary::build({"the quantum harbor of . !"});
    TokenSequence seq = tokenize("the quantum harbor of . !", v);
    auto labels = heuristic_labels(seq);
    CHECK(labels == std::vector<std::uint8_t>{0, 1, 1, 0, 0, 0});
}

TEST_CASE("toy corpus fillers are all stopwords and keywords are not") {
    for (const auto& w : taco::test::toy_fillers()) CHECK(is_stopword(w));
    for (const auto& w : taco::test::toy_keywords()) CHECK(!is_stopword(w));
}
