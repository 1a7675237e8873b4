#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "setfunc/errors.hpp"
#include "setfunc/experiment.hpp"

namespace {

// Exit codes: 0 success, 1 check failure, 2 config/usage error,
// 3 numerical abort.
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::vector<std::size_t> parse_dims(const std::string& list) {
    std::vector<std::size_t> dims;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = list.find(',', start);
        const std::string token = list.substr(start, comma - start);
        if (!token.empty()) dims.push_back(std::stoul(token));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return dims;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"setfunc: learning permutation-invariant set functions with power-mean "
                 "aggregation"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    std::string strategy;
    std::string dims_list = "1,2,4,8,16";

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON")->required();
        cmd->add_option("--set", overrides,
                        "dotted-path override, e.g. train.optimizer.lr=0.01 (repeatable)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset (NDJSON)");
    add_common(gen);
    gen->add_option("--out", out_path, "output dataset path (default: data.path from config)");

    CLI::App* train_cmd = app.add_subcommand("train", "train a set model on a dataset");
    add_common(train_cmd);

    CLI::App* search = app.add_subcommand("search-p", "search the power-mean exponent");
    add_common(search);
    search->add_option("--strategy", strategy, "grid | gd | bayes (overrides config)");

    CLI::App* check = app.add_subcommand("check", "run the property-check suite");
    add_common(check);

    CLI::App* sweep = app.add_subcommand("latent-sweep",
                                         "train one model per latent dimension, emit CSV");
    add_common(sweep);
    sweep->add_option("--dims", dims_list, "comma-separated latent dimensions");

    CLI11_PARSE(app, argc, argv);

    try {
        const setfunc::ExperimentConfig cfg = setfunc::load_config(config_path, overrides);
        if (gen->parsed()) return setfunc::cmd_gen_data(cfg, out_path);
        if (train_cmd->parsed()) return setfunc::cmd_train(cfg);
        if (search->parsed()) return setfunc::cmd_search_p(cfg, strategy);
        if (check->parsed()) return setfunc::cmd_check(cfg);
        if (sweep->parsed()) return setfunc::cmd_latent_sweep(cfg, parse_dims(dims_list));
    } catch (const setfunc::NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const setfunc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
