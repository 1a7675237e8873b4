#include "setfunc/experiment.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "setfunc/errors.hpp"
#include "setfunc/oracles.hpp"
#include "setfunc/serde.hpp"

namespace setfunc {

using nlohmann::json;

namespace {

// Stream ids carving independent rng streams out of the experiment seed.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamSplit = 2;
constexpr std::uint64_t kStreamInit = 3;
constexpr std::uint64_t kStreamCheck = 4;
constexpr std::uint64_t kStreamTrialInit = 5;
constexpr std::uint64_t kStreamLatentBase = 100;

MlpSpec default_phi() {
    MlpSpec s;
    s.widths = {1, 16, 8};
    s.activation = Act::Tanh;
    return s;
}

MlpSpec default_rho() {
    MlpSpec s;
    s.widths = {8, 16, 1};
    s.activation = Act::Tanh;
    return s;
}

LossKind loss_from_string(const std::string& name) {
    if (name == "mse") return LossKind::Mse;
    if (name == "cross_entropy") return LossKind::CrossEntropy;
    throw ConfigError("config: unknown loss '" + name + "'");
}

SearchConfig::Strategy strategy_from_string(const std::string& name) {
    if (name == "grid") return SearchConfig::Strategy::Grid;
    if (name == "gd") return SearchConfig::Strategy::GradientJoint;
    if (name == "bayes") return SearchConfig::Strategy::Bayes;
    throw ConfigError("config: unknown search strategy '" + name + "'");
}

std::string strategy_name(SearchConfig::Strategy s) {
    switch (s) {
        case SearchConfig::Strategy::Grid: return "grid";
        case SearchConfig::Strategy::GradientJoint: return "gd";
        case SearchConfig::Strategy::Bayes: return "bayes";
    }
    return "?";
}

json metrics_to_json(const Metrics& m) {
    return json{{"loss", m.loss}, {"rmse", m.rmse}, {"mae", m.mae}, {"accuracy", m.accuracy}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.output_dir = j.value("output_dir", std::string{"out"});

    if (j.contains("task")) cfg.task = task_from_json(j.at("task"));

    if (j.contains("data")) {
        const json& d = j.at("data");
        cfg.data.path = d.value("path", cfg.data.path);
        cfg.data.n_sets = d.value("n_sets", cfg.data.n_sets);
        if (d.contains("split")) {
            const auto s = d.at("split").get<std::vector<double>>();
            if (s.size() != 3) throw ConfigError("config: data.split needs 3 fractions");
            cfg.data.split = {s[0], s[1], s[2]};
        }
    }

    cfg.model.phi = default_phi();
    cfg.model.rho = default_rho();
    cfg.model.aggregator = AggregatorSpec::mean();
    bool phi_positive_explicit = false;
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("phi")) {
            cfg.model.phi = mlp_spec_from_json(m.at("phi"));
            phi_positive_explicit = m.at("phi").contains("positive_output");
        }
        if (m.contains("aggregator")) cfg.model.aggregator = aggregator_from_json(m.at("aggregator"));
        if (m.contains("rho")) cfg.model.rho = mlp_spec_from_json(m.at("rho"));
    }
    if (!phi_positive_explicit && cfg.model.aggregator.requires_positive_inputs()) {
        cfg.model.phi.positive_output = true;
    }

    cfg.train_cfg.loss =
        cfg.task.is_classification() ? LossKind::CrossEntropy : LossKind::Mse;
    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.train_cfg.epochs = t.value("epochs", cfg.train_cfg.epochs);
        cfg.train_cfg.batch_size = t.value("batch_size", cfg.train_cfg.batch_size);
        if (t.contains("optimizer")) {
            const json& o = t.at("optimizer");
            const std::string kind = o.value("kind", "adam");
            if (kind == "adam") {
                cfg.train_cfg.optimizer.kind = OptimizerCfg::Kind::Adam;
            } else if (kind == "sgd") {
                cfg.train_cfg.optimizer.kind = OptimizerCfg::Kind::Sgd;
            } else {
                throw ConfigError("config: unknown optimizer '" + kind + "'");
            }
            cfg.train_cfg.optimizer.lr = o.value("lr", cfg.train_cfg.optimizer.lr);
            cfg.train_cfg.optimizer.beta1 = o.value("beta1", cfg.train_cfg.optimizer.beta1);
            cfg.train_cfg.optimizer.beta2 = o.value("beta2", cfg.train_cfg.optimizer.beta2);
            cfg.train_cfg.optimizer.eps = o.value("eps", cfg.train_cfg.optimizer.eps);
        }
        if (t.contains("loss")) cfg.train_cfg.loss = loss_from_string(t.at("loss").get<std::string>());
        if (t.contains("p_clamp")) {
            const auto c = t.at("p_clamp").get<std::vector<double>>();
            if (c.size() != 2) throw ConfigError("config: train.p_clamp needs [min, max]");
            cfg.train_cfg.p_min = c[0];
            cfg.train_cfg.p_max = c[1];
        }
        cfg.resume = t.value("resume", std::string{});
    }
    cfg.train_cfg.seed = cfg.seed;

    cfg.search.direction = cfg.train_cfg.loss == LossKind::CrossEntropy
                               ? SearchDirection::Maximize
                               : SearchDirection::Minimize;
    if (j.contains("search")) {
        const json& s = j.at("search");
        if (s.contains("strategy"))
            cfg.search.strategy = strategy_from_string(s.at("strategy").get<std::string>());
        if (s.contains("range")) {
            const auto r = s.at("range").get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("config: search.range needs [min, max]");
            cfg.search.p_min = r[0];
            cfg.search.p_max = r[1];
        }
        cfg.search.step = s.value("step", cfg.search.step);
        cfg.search.trials = s.value("trials", cfg.search.trials);
        cfg.search.init_points = s.value("init_points", cfg.search.init_points);
        if (s.contains("direction")) {
            const std::string d = s.at("direction").get<std::string>();
            if (d == "minimize") {
                cfg.search.direction = SearchDirection::Minimize;
            } else if (d == "maximize") {
                cfg.search.direction = SearchDirection::Maximize;
            } else {
                throw ConfigError("config: unknown direction '" + d + "'");
            }
        }
    }
    cfg.search.seed = cfg.seed;

    if (j.contains("check")) {
        const json& c = j.at("check");
        cfg.check.n_sets = c.value("n_sets", cfg.check.n_sets);
        cfg.check.n_perms = c.value("n_perms", cfg.check.n_perms);
        cfg.check.tolerance = c.value("tolerance", cfg.check.tolerance);
        cfg.check.ground_size = c.value("ground_size", cfg.check.ground_size);
        cfg.check.inject_order_sensitive =
            c.value("inject_order_sensitive", cfg.check.inject_order_sensitive);
    }
    return cfg;
}

json ExperimentConfig::to_json() const {
    json j;
    j["format_version"] = 1;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["task"] = task_to_json(task);
    j["data"] = {{"path", data.path}, {"n_sets", data.n_sets},
                 {"split", std::vector<double>{data.split[0], data.split[1], data.split[2]}}};
    j["model"] = {{"phi", setfunc::to_json(model.phi)},
                  {"aggregator", setfunc::to_json(model.aggregator)},
                  {"rho", setfunc::to_json(model.rho)}};
    j["train"] = {{"epochs", train_cfg.epochs},
                  {"batch_size", train_cfg.batch_size},
                  {"optimizer",
                   {{"kind", train_cfg.optimizer.kind == OptimizerCfg::Kind::Adam ? "adam" : "sgd"},
                    {"lr", train_cfg.optimizer.lr}}},
                  {"loss", train_cfg.loss == LossKind::CrossEntropy ? "cross_entropy" : "mse"},
                  {"p_clamp", std::vector<double>{train_cfg.p_min, train_cfg.p_max}}};
    j["search"] = {{"strategy", strategy_name(search.strategy)},
                   {"range", std::vector<double>{search.p_min, search.p_max}},
                   {"step", search.step},
                   {"trials", search.trials},
                   {"init_points", search.init_points},
                   {"direction",
                    search.direction == SearchDirection::Minimize ? "minimize" : "maximize"}};
    return j;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config: " + path + ": " + e.what());
    }
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: override '" + kv + "' is not key=value");
        }
        std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        for (char& c : key) {
            if (c == '.') c = '/';
        }
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;  // plain string
        }
        j[json::json_pointer("/" + key)] = parsed;
    }
    return ExperimentConfig::from_json(j);
}

// ---- artifact plumbing ------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("sha256: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("write: cannot open '" + tmp.string() + "'");
        out << content;
        if (!out) throw Error("write: failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

ManifestEntry manifest_entry(const std::filesystem::path& dir, const std::string& name,
                             bool volatile_timing) {
    ManifestEntry e;
    e.name = name;
    e.sha256 = sha256_file(dir / name);
    e.bytes = std::filesystem::file_size(dir / name);
    e.volatile_timing = volatile_timing;
    return e;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<ManifestEntry>& files) {
    json j;
    j["format_version"] = 1;
    j["command"] = command;
    json arr = json::array();
    for (const ManifestEntry& e : files) {
        arr.push_back({{"name", e.name},
                       {"sha256", e.sha256},
                       {"bytes", e.bytes},
                       {"volatile", e.volatile_timing}});
    }
    j["files"] = std::move(arr);
    write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

// ---- commands ---------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_path) {
    Rng rng = Rng(cfg.seed).split(kStreamData);
    const Dataset ds = generate(cfg.task, cfg.data.n_sets, rng);
    const std::filesystem::path path =
        out_path.empty() ? std::filesystem::path(cfg.data.path) : std::filesystem::path(out_path);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    save(ds, path.string());
    write_file_atomic(path.string() + ".stats.csv", element_stats_csv(ds));

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> files;
    ManifestEntry data_entry;
    data_entry.name = path.string();
    data_entry.sha256 = sha256_file(path);
    data_entry.bytes = std::filesystem::file_size(path);
    files.push_back(data_entry);
    ManifestEntry stats_entry;
    stats_entry.name = path.string() + ".stats.csv";
    stats_entry.sha256 = sha256_file(path.string() + ".stats.csv");
    stats_entry.bytes = std::filesystem::file_size(path.string() + ".stats.csv");
    files.push_back(stats_entry);
    write_manifest(out_dir, "gen-data", files);

    std::cout << "gen-data: sets=" << ds.batch.num_sets() << " path=" << path.string()
              << " sha256=" << data_entry.sha256 << "\n";
    return 0;
}

namespace {

SetModel build_model(const ExperimentConfig& cfg) {
    Rng init = Rng(cfg.seed).split(kStreamInit);
    return init_model(cfg.model.phi, cfg.model.aggregator, cfg.model.rho, init);
}

std::array<Dataset, 3> load_and_split(const ExperimentConfig& cfg) {
    const Dataset ds = load(cfg.data.path);
    if (ds.task.element_dim != cfg.model.phi.input_width()) {
        throw ConfigError("train: dataset dim " + std::to_string(ds.task.element_dim) +
                          " != phi input width " + std::to_string(cfg.model.phi.input_width()));
    }
    Rng split_rng = Rng(cfg.seed).split(kStreamSplit);
    return split_dataset(ds, cfg.data.split, split_rng);
}

json epochs_to_json(const TrainReport& report) {
    json arr = json::array();
    for (const EpochRecord& rec : report.epochs) {
        arr.push_back({{"epoch", rec.epoch},
                       {"train", metrics_to_json(rec.train)},
                       {"val", metrics_to_json(rec.val)},
                       {"p", rec.p}});
    }
    return arr;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
    const auto parts = load_and_split(cfg);

    SetModel model;
    std::size_t start_epoch = 0;
    if (!cfg.resume.empty()) {
        std::ifstream in(cfg.resume);
        if (!in) throw ConfigError("train: cannot open checkpoint '" + cfg.resume + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError("train: checkpoint: " + std::string(e.what()));
        }
        model = model_from_json(j);
        start_epoch = j.value("epochs_trained", std::size_t{0});
    } else {
        model = build_model(cfg);
    }

    const TrainReport report =
        train(model, parts[0].batch, parts[1].batch, cfg.train_cfg, start_epoch);

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);

    json checkpoint = model_to_json(model);
    checkpoint["epochs_trained"] = cfg.train_cfg.epochs;
    write_file_atomic(out_dir / "checkpoint.json", checkpoint.dump() + "\n");
    write_file_atomic(out_dir / "metrics.csv", report_to_csv(report));

    json rj;
    rj["format_version"] = 1;
    rj["config"] = cfg.to_json();
    rj["epochs"] = epochs_to_json(report);
    if (!report.epochs.empty()) {
        rj["final"] = {{"train", metrics_to_json(report.epochs.back().train)},
                       {"val", metrics_to_json(report.epochs.back().val)},
                       {"p", report.epochs.back().p}};
    }
    rj["p_trajectory"] = report.p_trajectory;
    write_file_atomic(out_dir / "report.json", rj.dump(2) + "\n");

    write_manifest(out_dir, "train",
                   {manifest_entry(out_dir, "checkpoint.json"),
                    manifest_entry(out_dir, "metrics.csv"),
                    manifest_entry(out_dir, "report.json")});

    if (!report.epochs.empty()) {
        const EpochRecord& last = report.epochs.back();
        std::cout << "train: epochs=" << cfg.train_cfg.epochs
                  << " train_loss=" << last.train.loss << " val_rmse=" << last.val.rmse
                  << " val_accuracy=" << last.val.accuracy << " p=" << last.p << "\n";
    }
    return 0;
}

int cmd_search_p(const ExperimentConfig& cfg, const std::string& strategy) {
    if (cfg.model.aggregator.kind != AggKind::PowerMean) {
        throw ConfigError("search-p: aggregator must be power_mean, got '" +
                          agg_kind_name(cfg.model.aggregator.kind) + "'");
    }
    SearchConfig search = cfg.search;
    if (!strategy.empty()) search.strategy = strategy_from_string(strategy);

    const auto parts = load_and_split(cfg);
    const SetBatch& train_split = parts[0].batch;
    const SetBatch& val_split = parts[1].batch;

    SearchResult result;
    if (search.strategy == SearchConfig::Strategy::GradientJoint) {
        GradientSearchInputs inputs;
        inputs.phi = cfg.model.phi;
        inputs.agg = cfg.model.aggregator;
        inputs.agg.learnable = true;  // joint optimization trains p
        inputs.rho = cfg.model.rho;
        inputs.train_cfg = cfg.train_cfg;
        inputs.train_set = &train_split;
        inputs.val_set = &val_split;
        inputs.init_seed = Rng(cfg.seed).split(kStreamTrialInit).seed();
        result = gradient_search(inputs, search);
    } else {
        // Fixed evaluation seed per trial: the objective is a deterministic
        // function of p.
        const PObjective objective = [&](double p) {
            Rng init = Rng(cfg.seed).split(kStreamTrialInit);
            SetModel model = init_model(cfg.model.phi, AggregatorSpec::power_mean(p, false),
                                        cfg.model.rho, init);
            SetBatch no_val;
            TrainConfig tc = cfg.train_cfg;
            train(model, train_split, no_val, tc);
            const Metrics m = evaluate(model, val_split, tc.loss);
            return tc.loss == LossKind::CrossEntropy ? m.accuracy : m.rmse;
        };
        result = search.strategy == SearchConfig::Strategy::Grid
                     ? grid_search(objective, search)
                     : bayes_search(objective, search);
    }

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    json rj = search_result_to_json(result);
    rj["strategy"] = strategy_name(search.strategy);
    write_file_atomic(out_dir / "search_result.json", rj.dump(2) + "\n");
    write_file_atomic(out_dir / "search_history.csv", search_result_to_csv(result));
    write_manifest(out_dir, "search-p",
                   {manifest_entry(out_dir, "search_result.json", /*volatile_timing=*/true),
                    manifest_entry(out_dir, "search_history.csv", /*volatile_timing=*/true)});

    std::cout << "search-p: strategy=" << strategy_name(search.strategy)
              << " best_p=" << result.best_p << " best_objective=" << result.best_objective
              << " trials=" << result.history.size() << (result.aborted ? " ABORTED" : "")
              << "\n";
    return result.aborted ? 3 : 0;
}

int cmd_check(const ExperimentConfig& cfg) {
    Rng rng = Rng(cfg.seed).split(kStreamCheck);
    const std::size_t d = cfg.model.phi.input_width();

    // Probe sets drawn from the configured task.
    Rng data_rng = rng.split(0);
    const Dataset probe = generate(cfg.task, cfg.check.n_sets, data_rng);
    std::vector<Matrix> sets;
    for (std::size_t s = 0; s < probe.batch.num_sets(); ++s) {
        sets.push_back(
            probe.batch.elements.slice_rows(probe.batch.offsets[s], probe.batch.offsets[s + 1]));
    }

    std::vector<CheckReport> reports;

    // 1. Permutation invariance of the configured model (or of the injected
    //    order-sensitive probe, which must fail).
    {
        Rng check_rng = rng.split(1);
        const SetModel model = build_model(cfg);
        if (cfg.check.inject_order_sensitive) {
            const SetVectorFn probe_fn = [](const Matrix& set) {
                return std::vector<double>(set.row(0), set.row(0) + set.cols());
            };
            reports.push_back(check_permutation_invariance_fn(
                probe_fn, sets, cfg.check.n_perms, cfg.check.tolerance, check_rng));
            reports.back().name = "permutation_invariance(injected_probe)";
        } else {
            reports.push_back(check_permutation_invariance(model, sets, cfg.check.n_perms,
                                                           cfg.check.tolerance, check_rng));
        }
    }

    // 2. Deep-Sets form: sum aggregation + identity ρ is modular.
    {
        Rng init = rng.split(2);
        MlpSpec phi;
        phi.widths = {d, 8, 1};
        phi.activation = Act::Tanh;
        MlpSpec rho;
        rho.widths = {1};
        const SetModel model = init_model(phi, AggregatorSpec::sum(), rho, init);
        Matrix ground(cfg.check.ground_size, d);
        Rng ground_rng = rng.split(3);
        for (double& v : ground.data()) v = ground_rng.uniform(-1.0, 1.0);
        reports.push_back(
            check_modularity(powerset_function(model, ground), cfg.check.ground_size, 1e-9));
    }

    // 3. Max-decomposition form: max aggregation + identity ρ, scalar
    //    latent, positive φ is submodular.
    {
        Rng init = rng.split(4);
        MlpSpec phi;
        phi.widths = {d, 8, 1};
        phi.activation = Act::Tanh;
        phi.positive_output = true;
        MlpSpec rho;
        rho.widths = {1};
        const SetModel model = init_model(phi, AggregatorSpec::max(), rho, init);
        Matrix ground(cfg.check.ground_size, d);
        Rng ground_rng = rng.split(5);
        for (double& v : ground.data()) v = ground_rng.uniform(-1.0, 1.0);
        reports.push_back(
            check_submodularity(powerset_function(model, ground), cfg.check.ground_size, 1e-9));
    }

    // 4. Gradient correctness of the configured model on a small batch.
    {
        const SetModel model = build_model(cfg);
        std::vector<std::size_t> idx;
        for (std::size_t s = 0; s < std::min<std::size_t>(5, probe.batch.num_sets()); ++s)
            idx.push_back(s);
        const SetBatch small = probe.batch.gather(idx);
        reports.push_back(grad_check(model, small, 1e-5, 1e-5));
    }

    // 5. Sum isomorphism for each monotone map.
    for (const auto& g : {MonotoneMapId::identity(), MonotoneMapId::ln(), MonotoneMapId::exp(),
                          MonotoneMapId::power(2.0)}) {
        Rng sample_rng = rng.split(6 + static_cast<std::uint64_t>(g.kind));
        std::vector<std::vector<double>> samples;
        for (int i = 0; i < 20; ++i) {
            std::vector<double> v(3 + sample_rng.below(5));
            for (auto& x : v) {
                x = g.kind == MonotoneMapId::Kind::Ln ? sample_rng.uniform(-3.0, 3.0)
                                                      : sample_rng.uniform(0.1, 3.0);
            }
            samples.push_back(std::move(v));
        }
        Rng check_rng = sample_rng.split(99);
        reports.push_back(check_sum_isomorphism(g, samples, 1e-10, check_rng));
    }

    bool all_passed = true;
    json arr = json::array();
    for (const CheckReport& r : reports) {
        all_passed &= r.passed;
        arr.push_back(r.to_json());
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
                  << " worst_violation=" << r.worst_violation << " tolerance=" << r.tolerance
                  << "\n";
    }

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    json doc;
    doc["format_version"] = 1;
    doc["checks"] = std::move(arr);
    doc["all_passed"] = all_passed;
    write_file_atomic(out_dir / "checks.json", doc.dump(2) + "\n");
    write_manifest(out_dir, "check", {manifest_entry(out_dir, "checks.json")});

    return all_passed ? 0 : 1;
}

int cmd_latent_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& dims) {
    if (cfg.task.is_classification()) {
        throw ConfigError("latent-sweep: needs a regression task");
    }
    if (dims.empty()) throw ConfigError("latent-sweep: no latent dimensions given");
    const auto parts = load_and_split(cfg);

    std::ostringstream csv;
    csv << "latent_dim,rmse\n";
    for (std::size_t n : dims) {
        MlpSpec phi = cfg.model.phi;
        phi.widths.back() = n;
        MlpSpec rho = cfg.model.rho;
        rho.widths.front() = n;

        Rng init = Rng(cfg.seed).split(kStreamLatentBase + n);
        SetModel model = init_model(phi, cfg.model.aggregator, rho, init);
        SetBatch no_val;
        train(model, parts[0].batch, no_val, cfg.train_cfg);
        const Metrics m = evaluate(model, parts[2].batch, cfg.train_cfg.loss);
        csv << n << ',' << json(m.rmse).dump() << '\n';
        std::cout << "latent-sweep: N=" << n << " rmse=" << m.rmse << "\n";
    }

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    write_file_atomic(out_dir / "latent_sweep.csv", csv.str());
    write_manifest(out_dir, "latent-sweep", {manifest_entry(out_dir, "latent_sweep.csv")});
    return 0;
}

}  // namespace setfunc
