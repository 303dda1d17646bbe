#include "taco/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "taco/digest.hpp"
#include "taco/errors.hpp"

namespace taco {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

}  // namespace

OracleResponse LocalSummarizer::generate(const OracleRequest& request) {
    auto sentences = sentence_split(request.prompt);
    if (sentences.empty()) return {"", OracleSource::local, std::nullopt, 1};

    std::vector<double> score(sentences.size(), 0.0);
    std::vector<std::size_t> length(sentences.size(), 0);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        auto words = split_words(sentences[i]);
        length[i] = words.size();
        for (const auto& tok : words) {
            if (is_stopword(tok) || is_punct_token(tok)) continue;
            score[i] += stats_.idf(tok);
        }
    }

    std::vector<std::size_t> order(sentences.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });

    std::vector<bool> selected(sentences.size(), false);
    std::size_t budget = request.max_output_tokens;
    std::size_t used = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        std::size_t i = order[rank];
        if (rank > 0 && used + length[i] > budget) break;
        selected[i] = true;
        used += length[i];
        if (used >= budget) break;
    }

    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (!selected[i]) continue;
        if (!out.empty()) out.push_back(' ');
        out += sentences[i];
    }
    return {out, OracleSource::local, std::nullopt, 1};
}

OracleResponse LocalAnswerer::generate(const OracleRequest& request) {
    if (!request.question) throw SchemaError("qa oracle request has no question");
    auto tokens = split_words(request.prompt);
    if (tokens.empty()) return {"", OracleSource::local, std::nullopt, 1};

    auto question_bag = [&] {
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& t : normalize_answer_tokens(*request.question)) ++counts[t];
        return counts;
    }();

    const std::size_t w = std::min(request.max_output_tokens, tokens.size());
    std::size_t best_start = 0;
    std::size_t best_overlap = 0;
    for (std::size_t start = 0; start + w <= tokens.size(); ++start) {
        std::unordered_map<std::string, std::size_t> window;
        for (std::size_t k = 0; k < w; ++k) {
            for (const auto& t : normalize_answer_tokens(tokens[start + k])) ++window[t];
        }
        std::size_t overlap = 0;
        for (const auto& [tok, count] : window) {
            auto it = question_bag.find(tok);
            if (it != question_bag.end()) overlap += std::min(count, it->second);
        }
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best_start = start;
        }
    }

    std::string out;
    for (std::size_t k = 0; k < w; ++k) {
        if (k) out.push_back(' ');
        out += tokens[best_start + k];
    }
    return {out, OracleSource::local, std::nullopt, 1};
}

OracleResponse LocalOracle::generate(const OracleRequest& request) {
    return request.task == Task::qa ? answerer_.generate(request) : summarizer_.generate(request);
}

std::string cache_key(const std::string& oracle_id, const OracleRequest& request) {
    nlohmann::json j;
    j["oracle"] = oracle_id;
    j["task"] = task_name(request.task);
    j["prompt"] = request.prompt;
    j["question"] = request.question ? nlohmann::json(*request.question) : nlohmann::json(nullptr);
    j["max_output_tokens"] = request.max_output_tokens;
    return sha256_hex(j.dump());
}

namespace {

std::filesystem::path entry_path(const std::filesystem::path& dir, const std::string& key) {
    return dir / key.substr(0, 2) / (key + ".json");
}

}  // namespace

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
    auto path = entry_path(dir_, key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        nlohmann::json j = nlohmann::json::parse(in);
        return j.at("text").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable entry behaves like a miss
    }
}

void ResponseCache::store(const std::string& key, const std::string& oracle_id,
                          const OracleRequest& request, const std::string& text) {
    try {
        auto path = entry_path(dir_, key);
        std::filesystem::create_directories(path.parent_path());

        nlohmann::json j;
        j["oracle"] = oracle_id;
        j["task"] = task_name(request.task);
        j["prompt"] = request.prompt;
        j["question"] = request.question ? nlohmann::json(*request.question) : nlohmann::json(nullptr);
        j["max_output_tokens"] = request.max_output_tokens;
        j["text"] = text;
        j["timestamp"] = static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());

        // per-writer temp name keeps concurrent stores from clobbering
        // each other before the atomic rename
        static std::atomic<std::uint64_t> counter{0};
        auto tmp = path;
        tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::ios_base::failure("cannot open temp file");
            out << j.dump();
            if (!out) throw std::ios_base::failure("short write");
        }
        std::filesystem::rename(tmp, path);
    } catch (const std::exception& e) {
        std::cerr << "warning: response cache write failed (" << e.what() << "); continuing uncached\n";
    }
}

ResponseCache::Stats ResponseCache::stats() const {
    Stats s;
    std::error_code ec;
    if (!std::filesystem::exists(dir_, ec)) return s;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_, ec)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        ++s.entries;
        s.bytes += entry.file_size();
    }
    return s;
}

void ResponseCache::clear() {
    std::error_code ec;
    if (!std::filesystem::exists(dir_, ec)) return;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        std::filesystem::remove_all(entry.path());
    }
}

OracleResponse CachedOracle::generate(const OracleRequest& request) {
    std::string key = cache_key(inner_->id(), request);
    if (auto hit = cache_->lookup(key)) return {*hit, OracleSource::cache, std::nullopt, 1};
    OracleResponse resp = inner_->generate(request);
    cache_->store(key, inner_->id(), request, resp.text);
    return resp;
}

namespace {

// endpoint -> (scheme://host[:port], path prefix)
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = endpoint.find('/', host_start);
    if (slash == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

class HttplibTransport : public HttpTransport {
  public:
    HttpResponse post_json(const std::string& endpoint, const std::string& path,
                           const std::string& body,
                           const std::vector<std::pair<std::string, std::string>>& headers) override {
        auto [base, prefix] = split_endpoint(endpoint);
        httplib::Client client(base);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);
        auto result = client.Post(prefix + path, hdrs, body, "application/json");
        HttpResponse out;
        if (!result) {
            out.error = httplib::to_string(result.error());
            return out;
        }
        out.transport_ok = true;
        out.status = result->status;
        out.body = result->body;
        return out;
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() { return std::make_shared<HttplibTransport>(); }

RemoteOracle::RemoteOracle(RemoteConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_httplib_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds ms) { std::this_thread::sleep_for(ms); }) {
    if (config_.endpoint.empty()) throw ConfigError("remote oracle requires an endpoint");
    if (config_.model.empty()) throw ConfigError("remote oracle requires a model name");
    if (config_.api_key.empty()) throw ConfigError("remote oracle requires an API key (TACO_API_KEY)");
}

std::string RemoteOracle::id() const {
    // templates are versioned into the id so cached entries are never
    // reused across prompt-template changes
    std::string tag = sha256_hex(config_.template_summarize + "\x1f" + config_.template_qa).substr(0, 12);
    return "remote:" + config_.model + ":" + tag;
}

OracleResponse RemoteOracle::generate(const OracleRequest& request) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = 0;
    body["max_tokens"] = request.max_output_tokens;
    std::string system = request.task == Task::qa ? config_.template_qa : config_.template_summarize;
    std::string user = request.prompt;
    if (request.task == Task::qa) {
        if (!request.question) throw SchemaError("qa oracle request has no question");
        user += "\n\nQuestion: " + *request.question;
    }
    body["messages"] = nlohmann::json::array({
        nlohmann::json{{"role", "system"}, {"content", system}},
        nlohmann::json{{"role", "user"}, {"content", user}},
    });

    std::vector<std::pair<std::string, std::string>> headers = {
        {"Authorization", "Bearer " + config_.api_key}};

    std::string last_error;
    auto start = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(config_.backoff_initial_ms * std::pow(2.0, attempt - 2)));
            sleeper_(delay);
        }
        HttpResponse resp = transport_->post_json(config_.endpoint, "/chat/completions", body.dump(), headers);
        if (!resp.transport_ok) {
            last_error = "transport: " + resp.error;
            continue;
        }
        if (resp.status == 429 || resp.status >= 500) {
            last_error = "http status " + std::to_string(resp.status);
            continue;
        }
        if (resp.status >= 400) {
            throw ConfigError("oracle endpoint rejected request with status " +
                              std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
        }
        try {
            nlohmann::json j = nlohmann::json::parse(resp.body);
            std::string text = trim(j.at("choices").at(0).at("message").at("content").get<std::string>());
            double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                            .count();
            return {text, OracleSource::remote, ms, attempt};
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
            continue;
        }
    }
    throw OracleUnavailableError("oracle unavailable after " + std::to_string(config_.max_attempts) +
                                 " attempts: " + last_error);
}

}  // namespace taco
