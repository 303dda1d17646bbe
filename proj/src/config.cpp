#include "taco/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "taco/errors.hpp"

namespace taco {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double d = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument("bad");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

std::vector<double> parse_rate_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        double r = parse_double("rates", item);
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rate " + item + " must lie in (0, 1]");
        out.push_back(r);
    }
    if (out.empty()) throw ConfigError("rate list is empty");
    return out;
}

void apply_config_entry(AppConfig& config, const std::string& key, const std::string& value) {
    if (key == "dataset") config.dataset = value;
    else if (key == "eval_dataset") config.eval_dataset = value;
    else if (key == "checkpoint") config.checkpoint = value;
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "cache_dir") config.cache_dir = value;
    else if (key == "embed_dim") config.embed_dim = parse_size(key, value);
    else if (key == "depth") config.depth = parse_size(key, value);
    else if (key == "bootstrap_epochs") config.bootstrap_epochs = parse_size(key, value);
    else if (key == "bootstrap_lr") config.bootstrap_lr = parse_double(key, value);
    else if (key == "epochs") config.train.epochs = parse_size(key, value);
    else if (key == "lr") config.train.learning_rate = parse_double(key, value);
    else if (key == "schedule") {
        if (value == "constant") config.train.schedule = LrSchedule::constant;
        else if (value == "cosine") config.train.schedule = LrSchedule::cosine;
        else throw ConfigError("schedule must be 'constant' or 'cosine', got '" + value + "'");
    }
    else if (key == "c") config.train.reward.target_rate = parse_double(key, value);
    else if (key == "L") config.train.reward.tolerance = parse_double(key, value);
    else if (key == "r0") config.train.reward.out_of_range_penalty = parse_double(key, value);
    else if (key == "lambda") config.train.reward.entropy_weight = parse_double(key, value);
    else if (key == "alpha") config.train.reward.relevance_mix = parse_double(key, value);
    else if (key == "metric") config.train.reward.metric = reward_metric_from_name(value);
    else if (key == "halfopen_tolerance") config.train.reward.halfopen_tolerance = parse_bool(key, value);
    else if (key == "k_samples") config.train.samples_per_prompt = parse_size(key, value);
    else if (key == "seed") config.train.seed = static_cast<std::uint64_t>(parse_size(key, value));
    else if (key == "checkpoint_every") config.train.checkpoint_every = parse_size(key, value);
    else if (key == "max_seq_len") config.train.max_seq_len = parse_size(key, value);
    else if (key == "max_output_tokens") config.train.max_output_tokens = parse_size(key, value);
    else if (key == "reward_baseline") config.train.reward_baseline = parse_double(key, value);
    else if (key == "max_steps") config.train.max_steps = parse_size(key, value);
    else if (key == "oracle") {
        if (value != "local" && value != "remote")
            throw ConfigError("oracle must be 'local' or 'remote', got '" + value + "'");
        config.oracle_kind = value;
    }
    else if (key == "endpoint") config.remote.endpoint = value;
    else if (key == "model") config.remote.model = value;
    else if (key == "template_summarize") config.remote.template_summarize = value;
    else if (key == "template_qa") config.remote.template_qa = value;
    else if (key == "rates") config.rates = parse_rate_list(value);
    else if (key == "eval_metrics") {
        config.eval_metrics.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) config.eval_metrics.push_back(item);
        }
    }
    else throw ConfigError("unknown config key '" + key + "'");
}

AppConfig load_config_file(const std::string& path) {
    AppConfig config;
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + " has empty key");
        apply_config_entry(config, key, value);
    }
    return config;
}

}  // namespace taco
