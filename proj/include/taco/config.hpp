#pragma once

#include <string>
#include <vector>

#include "taco/oracle.hpp"
#include "taco/trainer.hpp"

namespace taco {

// Everything the CLI needs, assembled from defaults, an optional flat
// key = value config file, and flag overrides (flags win).
struct AppConfig {
    std::string dataset;
    std::string eval_dataset;
    std::string checkpoint;
    std::string out_dir = "out";
    std::string cache_dir = "cache";

    std::size_t embed_dim = 32;
    std::size_t depth = 1;
    std::size_t bootstrap_epochs = 10;
    double bootstrap_lr = 0.1;

    TrainConfig train;  // c=0.5, L=30, lambda=0.01, r0=-0.1, lr=1e-6 defaults

    std::string oracle_kind = "local";  // local | remote
    RemoteConfig remote;

    std::vector<double> rates = {0.5, 0.33, 0.25, 0.2, 0.166};
    std::vector<std::string> eval_metrics;  // empty = pick by task
};

// Parses "key = value" lines; '#' starts a comment; unknown keys are
// rejected with ConfigError.
AppConfig load_config_file(const std::string& path);
void apply_config_entry(AppConfig& config, const std::string& key, const std::string& value);

std::vector<double> parse_rate_list(const std::string& csv);  // ConfigError on bad entries

}  // namespace taco
