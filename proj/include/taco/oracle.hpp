#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/rewards.hpp"

namespace taco {

struct OracleRequest {
    std::string prompt;
    std::optional<std::string> question;
    Task task = Task::summarization;
    std::size_t max_output_tokens = 64;
};

enum class OracleSource { local, remote, cache };

struct OracleResponse {
    std::string text;
    OracleSource source = OracleSource::local;
    std::optional<double> latency_ms;
    int attempts = 1;
};

class Oracle {
  public:
    virtual ~Oracle() = default;
    virtual OracleResponse generate(const OracleRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Deterministic extractive summarizer: ranks sentences by the summed
// corpus IDF of their content tokens and emits the best ones in original
// order until the output budget is reached.
class LocalSummarizer : public Oracle {
  public:
    explicit LocalSummarizer(CorpusStats stats) : stats_(std::move(stats)) {}
    OracleResponse generate(const OracleRequest& request) override;
    std::string id() const override { return "local-sum-v1"; }

  private:
    CorpusStats stats_;
};

// Deterministic extractive answerer: returns the contiguous token window
// with the highest normalized-token overlap with the question, earliest
// window on ties. Output quality degrades when question-relevant tokens
// are missing from the prompt, which is what gives training its signal.
class LocalAnswerer : public Oracle {
  public:
    OracleResponse generate(const OracleRequest& request) override;
    std::string id() const override { return "local-qa-v1"; }
};

// Task-dispatching local oracle used for training and tests.
class LocalOracle : public Oracle {
  public:
    explicit LocalOracle(CorpusStats stats) : summarizer_(std::move(stats)) {}
    OracleResponse generate(const OracleRequest& request) override;
    std::string id() const override { return "local-v1"; }

  private:
    LocalSummarizer summarizer_;
    LocalAnswerer answerer_;
};

// Content digest of (oracle id, task, prompt, question, max_output_tokens).
std::string cache_key(const std::string& oracle_id, const OracleRequest& request);

// Content-addressed directory of responses: {dir}/{first 2 hex}/{digest}.json.
// Writes go through a temp file plus atomic rename; storage failures degrade
// to pass-through with a warning on stderr.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, const std::string& oracle_id, const OracleRequest& request,
               const std::string& text);

    struct Stats {
        std::size_t entries = 0;
        std::uintmax_t bytes = 0;
    };
    Stats stats() const;
    void clear();
    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

// Wraps any oracle with the persistent cache; hits come back with
// source == cache and never touch the inner oracle.
class CachedOracle : public Oracle {
  public:
    CachedOracle(std::shared_ptr<Oracle> inner, std::shared_ptr<ResponseCache> cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}
    OracleResponse generate(const OracleRequest& request) override;
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<Oracle> inner_;
    std::shared_ptr<ResponseCache> cache_;
};

struct HttpResponse {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error;
};

class HttpTransport {
  public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& endpoint, const std::string& path,
                                   const std::string& body,
                                   const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

// cpp-httplib backed transport.
std::shared_ptr<HttpTransport> make_httplib_transport();

struct RemoteConfig {
    std::string endpoint;  // e.g. https://api.example.com/v1
    std::string model;
    std::string api_key;
    std::string template_summarize = "Summarize the following text:";
    std::string template_qa = "Answer the question using the context:";
    int max_attempts = 5;
    double backoff_initial_ms = 500.0;
};

// Chat-completions client. Always sends temperature 0. Retries transient
// failures (429, 5xx, transport errors) with exponential backoff up to
// max_attempts; other 4xx raise ConfigError immediately.
class RemoteOracle : public Oracle {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    explicit RemoteOracle(RemoteConfig config,
                          std::shared_ptr<HttpTransport> transport = nullptr,
                          Sleeper sleeper = nullptr);

    OracleResponse generate(const OracleRequest& request) override;
    std::string id() const override;

  private:
    RemoteConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

}  // namespace taco
