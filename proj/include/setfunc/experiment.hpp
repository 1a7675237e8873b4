#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "setfunc/psearch.hpp"
#include "setfunc/tasks.hpp"
#include "setfunc/training.hpp"

namespace setfunc {

struct DataConfig {
    std::string path = "data.ndjson";
    std::size_t n_sets = 1000;
    std::array<double, 3> split{0.8, 0.1, 0.1};
};

struct ModelConfig {
    MlpSpec phi;
    AggregatorSpec aggregator;
    MlpSpec rho;
};

struct CheckConfig {
    std::size_t n_sets = 20;
    std::size_t n_perms = 50;
    double tolerance = 1e-9;
    std::size_t ground_size = 5;
    // Test hook: swaps the checked predictor for a first-element probe, so
    // the failure path of the permutation check is exercisable end to end.
    bool inject_order_sensitive = false;
};

/// One experiment = task + data + model + training + optional search, all
/// keyed by a single seed. Every command is a pure function of
/// (config file, flag overrides, seed) to output bytes; wall-clock values
/// only appear in files the manifest marks volatile.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    TaskSpec task;
    DataConfig data;
    ModelConfig model;
    TrainConfig train_cfg;
    std::string resume;  // checkpoint path; empty = fresh init
    SearchConfig search;
    CheckConfig check;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Reads the config file and applies dotted-path overrides
/// ("train.optimizer.lr=0.01"); flag > file > default.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);

// ---- artifact plumbing ------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
    // True for files embedding wall-clock measurements; reproducibility
    // audits compare those field-wise with the seconds column ignored.
    bool volatile_timing = false;
};

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<ManifestEntry>& files);
ManifestEntry manifest_entry(const std::filesystem::path& dir, const std::string& name,
                             bool volatile_timing = false);

// ---- commands ---------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_path);
int cmd_train(const ExperimentConfig& cfg);
int cmd_search_p(const ExperimentConfig& cfg, const std::string& strategy);
int cmd_check(const ExperimentConfig& cfg);
int cmd_latent_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& dims);

}  // namespace setfunc
