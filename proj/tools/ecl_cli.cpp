// ecl: train / verify / metrics / gendata command-line driver.
//
// Exit codes: 0 success, 1 property violation, 2 config or input error,
// 3 numerical abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecl/config.hpp"
#include "ecl/csv.hpp"
#include "ecl/data.hpp"
#include "ecl/errors.hpp"
#include "ecl/losses.hpp"
#include "ecl/metrics.hpp"
#include "ecl/model.hpp"
#include "ecl/trainer.hpp"
#include "ecl/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ecl::RunConfig resolve_config(const CommonOpts& opts) {
    ecl::RunConfig cfg = ecl::load_run_config(opts.config_path);
    for (const auto& ov : opts.overrides) ecl::apply_override(cfg, ov);
    if (opts.seed_set) {
        cfg.seed = opts.seed;
        ecl::derive_seeds(cfg);
    }
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ecl::ConfigError("cannot write " + path.string());
    out << text;
}

std::pair<ecl::Dataset, ecl::Dataset> obtain_data(const ecl::TrainConfig& t) {
    if (!t.data_path.empty()) {
        fs::path dir(t.data_path);
        auto train = ecl::load_dataset_csv((dir / "train.csv").string(), "train");
        auto test = ecl::load_dataset_csv((dir / "test.csv").string(), "test");
        return {std::move(train), std::move(test)};
    }
    return ecl::make_longtailed(t.data);
}

int run_one_training(const ecl::RunConfig& cfg, const fs::path& out,
                     bool export_embeddings) {
    fs::create_directories(out);
    write_text(out / "config_resolved.json", cfg.resolved_json());
    auto [train_set, test_set] = obtain_data(cfg.trainer);
    ecl::TrainResult res = ecl::train(cfg.trainer, train_set, test_set);
    ecl::write_history_csv((out / "history.csv").string(), res.history,
                           cfg.trainer.net.num_classes);
    ecl::save_checkpoint((out / "checkpoint.json").string(), res.params,
                         cfg.trainer.epochs);
    if (!res.history.records.empty()) {
        const auto& geo = res.history.records.back().geometry;
        if (geo.pca_coords.rows() > 0)
            ecl::write_pca_csv((out / "pca.csv").string(), geo.pca_coords,
                               test_set.labels);
    }
    if (export_embeddings) {
        ecl::Evaluation ev = ecl::evaluate(res.params, test_set, train_set.priors,
                                           cfg.trainer.compensated_inference);
        ecl::write_embeddings_csv((out / "embeddings.csv").string(), ev.z,
                                  test_set.labels);
    }
    const auto& last = res.history.records.back();
    std::cout << "trained " << cfg.trainer.epochs << " epochs in "
              << res.wall_seconds << " s; final acc " << last.acc_overall
              << " fc " << last.geometry.fc << " ms " << last.geometry.ms
              << " sd " << last.geometry.sd << "\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& opts, bool ablate, bool export_embeddings) {
    ecl::RunConfig cfg = resolve_config(opts);
    if (!ablate) return run_one_training(cfg, cfg.out_dir, export_embeddings);

    // Table-IV style sweep: the four mask rows, same seed.
    struct Row {
        const char* name;
        std::array<bool, 3> mask;
    };
    const Row rows[] = {{"lc_only", {false, false, true}},
                        {"ccge_lc", {false, true, true}},
                        {"bcecl_lc", {true, false, true}},
                        {"full", {true, true, true}}};
    for (const Row& r : rows) {
        ecl::RunConfig sub = cfg;
        sub.trainer.mask = r.mask;
        const int rc = run_one_training(sub, fs::path(cfg.out_dir) / r.name,
                                        export_embeddings);
        if (rc != kExitOk) return rc;
    }
    return kExitOk;
}

int cmd_verify(const std::string& suite, int instances, std::uint64_t seed) {
    std::vector<ecl::SuiteReport> reports;
    if (suite == "bounds" || suite == "all")
        reports.push_back(ecl::run_bounds_suite(instances, seed));
    if (suite == "gradients" || suite == "all")
        reports.push_back(ecl::run_gradients_suite(
            std::max(1, instances / 20), seed));
    if (suite == "trivials" || suite == "all")
        reports.push_back(ecl::run_trivials_suite());
    if (reports.empty()) {
        std::cerr << "unknown suite: " << suite
                  << " (expected gradients|bounds|trivials|all)\n";
        return kExitConfig;
    }
    bool ok = true;
    for (const auto& rep : reports) {
        std::cout << rep.name << ": instances=" << rep.instances
                  << " violations=" << rep.violations
                  << " max_violation=" << ecl::format_double(rep.max_violation)
                  << "\n";
        if (!rep.passed()) {
            ok = false;
            if (!rep.failing_instance_json.empty())
                std::cerr << "failing instance (replay): "
                          << rep.failing_instance_json << "\n";
        }
    }
    return ok ? kExitOk : kExitViolation;
}

int cmd_metrics(const std::string& embeddings_path,
                const std::string& checkpoint_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    ecl::EmbeddingsFile emb = ecl::read_embeddings_csv(embeddings_path);
    const double fc = ecl::fc_metric(emb.features, emb.labels, emb.num_classes);
    const double ms = ecl::ms_metric(emb.features, emb.labels, emb.num_classes);
    double sd = 0.0;
    bool have_sd = false;
    if (!checkpoint_path.empty()) {
        ecl::ModelParams params = ecl::load_checkpoint(checkpoint_path);
        sd = ecl::sd_metric(params.clf_w, emb.features, emb.labels,
                            emb.num_classes);
        have_sd = true;
    }
    ecl::write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), fc, ms,
                           have_sd ? &sd : nullptr);
    ecl::Pca2 p = ecl::pca2(emb.features);
    ecl::write_pca_csv((fs::path(out_dir) / "pca.csv").string(), p.coords,
                       emb.labels);
    std::cout << "fc " << fc << " ms " << ms;
    if (have_sd) std::cout << " sd " << sd;
    std::cout << "\n";
    return kExitOk;
}

int cmd_gendata(const CommonOpts& opts) {
    ecl::RunConfig cfg = resolve_config(opts);
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    auto [train_set, test_set] = ecl::make_longtailed(cfg.trainer.data);
    ecl::save_dataset_csv((out / "train.csv").string(), train_set);
    ecl::save_dataset_csv((out / "test.csv").string(), test_set);
    ecl::save_priors_csv((out / "priors.csv").string(), train_set);
    write_text(out / "config_resolved.json", cfg.resolved_json());
    std::cout << "wrote " << train_set.size() << " train / " << test_set.size()
              << " test samples to " << out.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"equilibrium contrastive learning engine"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--set", opts.overrides,
                        "dotted-key override, e.g. loss.lambda_cc_ge=0");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "master seed (derives all streams)")
            ->each([&](const std::string&) { opts.seed_set = true; });
    };

    bool ablate = false;
    bool export_embeddings = false;
    CLI::App* train = app.add_subcommand("train", "run the training loop");
    add_common(train);
    train->add_flag("--ablate", ablate, "run the four ablation-mask rows");
    train->add_flag("--export-embeddings", export_embeddings,
                    "write test-set embeddings.csv");

    std::string suite = "all";
    int instances = 1000;
    std::uint64_t vseed = 2024;
    CLI::App* verify = app.add_subcommand("verify", "run property suites");
    verify->add_option("--suite", suite, "gradients|bounds|trivials|all");
    verify->add_option("--instances", instances, "instance count for bounds");
    verify->add_option("--seed", vseed, "suite seed");

    std::string embeddings_path, checkpoint_path, metrics_out = ".";
    CLI::App* metrics = app.add_subcommand("metrics", "metrics on embeddings CSV");
    metrics->add_option("--embeddings", embeddings_path, "id,label,dim1.. CSV")
        ->required();
    metrics->add_option("--checkpoint", checkpoint_path,
                        "checkpoint for the SD metric (optional)");
    metrics->add_option("--out", metrics_out, "output directory");

    CLI::App* gendata = app.add_subcommand("gendata", "write synthetic dataset");
    add_common(gendata);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(opts, ablate, export_embeddings);
        if (verify->parsed()) return cmd_verify(suite, instances, vseed);
        if (metrics->parsed())
            return cmd_metrics(embeddings_path, checkpoint_path, metrics_out);
        if (gendata->parsed()) return cmd_gendata(opts);
    } catch (const ecl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ecl::NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
