// pih - kinematic peg-in-hole insertion simulator and benchmark CLI.
//
// Verbs: collect, train, eval, perturb-eval, adapt, ablate, replay, stats.
// Exit codes: 0 success, 1 usage/config/IO error, 2 replay divergence.

#include <cstdio>
#include <exception>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pih/harness.hpp"

namespace {

using namespace pih;

FileConfig resolve_config(const std::string& config_path) {
    return config_path.empty() ? default_config() : load_config(config_path);
}

void print_report(const EvalReport& report) {
    auto line = [](const SceneAggregate& a) {
        std::printf("%-16s episodes %4d  success %6.1f%%  <1cm %6.1f%%  <5mm %6.1f%%  "
                    "mean-steps %6.1f  surface %d  wall %d\n",
                    a.scene.c_str(), a.episodes, 100.0 * a.success_rate, 100.0 * a.frac_1cm,
                    100.0 * a.frac_5mm, a.mean_steps_to_success, a.surface_episodes,
                    a.wall_episodes);
    };
    for (const SceneAggregate& a : report.per_scene) line(a);
    line(report.aggregate);
    if (report.perturb_applied || report.perturb_skipped) {
        std::printf("perturbations applied %d, skipped %d\n", report.perturb_applied,
                    report.perturb_skipped);
    }
}

int scene_index_by_name(const std::vector<SceneConfig>& scenes, const std::string& name) {
    if (name.empty()) return 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].name == name) return static_cast<int>(i);
    }
    throw std::runtime_error("unknown scene name: " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pih - kinematic peg-in-hole insertion simulator and benchmark suite"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (units cm/degrees)")
        ->envname("PIH_CONFIG");

    // collect ---------------------------------------------------------------
    auto* collect = app.add_subcommand("collect", "generate a labeled dataset on one scene");
    std::string collect_out = "dataset.pihd";
    std::string collect_scene;
    std::uint64_t collect_seed = 0;
    int free_records = -1, contact_records = -1;
    collect->add_option("--out", collect_out, "output dataset path");
    collect->add_option("--scene", collect_scene, "scene name from the suite");
    collect->add_option("--seed", collect_seed, "override master seed");
    collect->add_option("--free", free_records, "free-space record count");
    collect->add_option("--contact", contact_records, "close-contact record count");

    // train -----------------------------------------------------------------
    auto* train = app.add_subcommand("train", "fit a predictor on a dataset");
    std::string train_data, train_out = "model.pihm", train_kind = "knn";
    int train_k = 8;
    std::string train_weighting = "inverse";
    double train_lambda = 1e-6;
    train->add_option("--data", train_data, "dataset path")->required();
    train->add_option("--out", train_out, "output model path");
    train->add_option("--kind", train_kind, "knn | ridge");
    train->add_option("--k", train_k, "k-NN neighbor count");
    train->add_option("--weighting", train_weighting, "uniform | inverse");
    train->add_option("--lambda", train_lambda, "ridge regularization");

    // eval / perturb-eval ----------------------------------------------------
    auto add_eval_options = [&](CLI::App* sub, std::string& report_path, std::string& format,
                                std::string& traces, std::uint64_t& seed, int& episodes,
                                int& max_steps, std::string& executor, std::string& model) {
        sub->add_option("--report", report_path, "report output path");
        sub->add_option("--format", format, "csv | json");
        sub->add_option("--traces", traces, "directory for per-episode traces");
        sub->add_option("--seed", seed, "override master seed");
        sub->add_option("--episodes", episodes, "episodes per scene");
        sub->add_option("--max-steps", max_steps, "step budget per episode");
        sub->add_option("--executor", executor, "coarse_to_fine | direct");
        sub->add_option("--model", model, "model file (switches predictor to it)");
    };
    auto* eval = app.add_subcommand("eval", "run an evaluation campaign");
    std::string eval_report, eval_format = "json", eval_traces, eval_executor, eval_model;
    std::uint64_t eval_seed = 0;
    int eval_episodes = 0, eval_max_steps = 0;
    bool eval_extreme = false;
    add_eval_options(eval, eval_report, eval_format, eval_traces, eval_seed, eval_episodes,
                     eval_max_steps, eval_executor, eval_model);
    eval->add_flag("--extreme-ood", eval_extreme,
                   "10 cm initial offsets (reported, no pass threshold)");

    auto* peval = app.add_subcommand("perturb-eval", "evaluation with scheduled socket shifts");
    std::string p_report, p_format = "json", p_traces, p_executor, p_model;
    std::uint64_t p_seed = 0;
    int p_episodes = 0, p_max_steps = 0;
    std::vector<int> p_steps;
    double p_shift_cm = -1.0, p_rot_deg = -1.0;
    add_eval_options(peval, p_report, p_format, p_traces, p_seed, p_episodes, p_max_steps,
                     p_executor, p_model);
    peval->add_option("--perturb-step", p_steps, "control steps at which the socket moves");
    peval->add_option("--max-shift-cm", p_shift_cm, "max socket shift (cm)");
    peval->add_option("--max-rot-deg", p_rot_deg, "max socket rotation (degrees)");

    // adapt -------------------------------------------------------------------
    auto* adapt_cmd = app.add_subcommand("adapt", "collect on a target scene and refit a model");
    std::string adapt_model, adapt_out = "adapted.pihm", adapt_scene;
    int adapt_samples = 3000;
    std::uint64_t adapt_seed = 0;
    bool adapt_tight = false;
    adapt_cmd->add_option("--model", adapt_model, "base model path")->required();
    adapt_cmd->add_option("--out", adapt_out, "adapted model path");
    adapt_cmd->add_option("--scene", adapt_scene, "target scene name from the suite");
    adapt_cmd->add_flag("--tight", adapt_tight, "use the built-in tight-clearance scene");
    adapt_cmd->add_option("--samples", adapt_samples, "free-space records to collect");
    adapt_cmd->add_option("--seed", adapt_seed, "override master seed");

    // ablate -------------------------------------------------------------------
    auto* ablate = app.add_subcommand("ablate", "data-amount ablation over a dataset");
    std::string ablate_data;
    std::vector<double> ablate_fractions{1.0, 0.5, 0.12};
    std::uint64_t ablate_seed = 0;
    int ablate_episodes = 0, ablate_max_steps = 0;
    ablate->add_option("--data", ablate_data, "dataset path")->required();
    ablate->add_option("--fractions", ablate_fractions, "dataset fractions in (0, 1]");
    ablate->add_option("--seed", ablate_seed, "override master seed");
    ablate->add_option("--episodes", ablate_episodes, "episodes per scene");
    ablate->add_option("--max-steps", ablate_max_steps, "step budget per episode");

    // replay -------------------------------------------------------------------
    auto* replay_cmd = app.add_subcommand("replay", "verify and print an episode trace");
    std::string replay_path;
    replay_cmd->add_option("trace", replay_path, "trace file")->required();

    // stats --------------------------------------------------------------------
    auto* stats_cmd = app.add_subcommand("stats", "print dataset statistics");
    std::string stats_data;
    stats_cmd->add_option("data", stats_data, "dataset path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        FileConfig cfg = resolve_config(config_path);

        if (collect->parsed()) {
            if (collect_seed != 0) cfg.eval.master_seed = collect_seed;
            if (free_records >= 0) cfg.collect.free_records = free_records;
            if (contact_records >= 0) cfg.collect.contact_records = contact_records;
            const int idx = scene_index_by_name(cfg.eval.scenes, collect_scene);
            Rng scene_rng(derive_seed(cfg.eval.master_seed, 1000));
            const SceneState scene = make_scene(cfg.eval.scenes[idx], scene_rng);
            Dataset data;
            data.width = cfg.collect.raster_width;
            data.fov_side = cfg.collect.fov_side;
            Rng free_rng(derive_seed(cfg.eval.master_seed, 1001));
            data.records = collect_free_space(scene, cfg.collect, 0, free_rng);
            Rng contact_rng(derive_seed(cfg.eval.master_seed, 1002));
            std::vector<DatasetRecord> manual =
                collect_close_contact(scene, cfg.collect, 1, contact_rng);
            data.records.insert(data.records.end(), manual.begin(), manual.end());
            write_dataset(data, collect_out);
            std::cout << format_stats(dataset_stats(data.records));
            std::cout << "wrote " << data.records.size() << " records to " << collect_out
                      << "\n";
            return 0;
        }

        if (train->parsed()) {
            const Dataset data = read_dataset(train_data);
            PredictionModel model;
            if (train_kind == "knn") {
                const KnnWeighting w = train_weighting == "uniform"
                                           ? KnnWeighting::uniform
                                           : KnnWeighting::inverse_distance;
                model = fit_knn(data.records, train_k, w);
            } else if (train_kind == "ridge") {
                model = fit_ridge(data.records, train_lambda);
            } else {
                throw std::runtime_error("train: unknown kind " + train_kind);
            }
            save_model(model, train_out);
            std::cout << "fitted " << train_kind << " on " << model.record_count
                      << " records -> " << train_out << "\n";
            return 0;
        }

        if (eval->parsed() || peval->parsed()) {
            const bool perturbed = peval->parsed();
            std::string report_path = perturbed ? p_report : eval_report;
            const std::string format = perturbed ? p_format : eval_format;
            const std::string traces = perturbed ? p_traces : eval_traces;
            const std::uint64_t seed = perturbed ? p_seed : eval_seed;
            const int episodes = perturbed ? p_episodes : eval_episodes;
            const int max_steps = perturbed ? p_max_steps : eval_max_steps;
            const std::string executor = perturbed ? p_executor : eval_executor;
            const std::string model_path = perturbed ? p_model : eval_model;

            if (seed != 0) cfg.eval.master_seed = seed;
            if (episodes > 0) cfg.eval.episodes_per_scene = episodes;
            if (max_steps > 0) cfg.eval.max_steps = max_steps;
            if (!traces.empty()) cfg.eval.trace_dir = traces;
            if (!executor.empty()) {
                if (executor == "coarse_to_fine") {
                    cfg.eval.executor = Executor::coarse_to_fine;
                } else if (executor == "direct") {
                    cfg.eval.executor = Executor::direct;
                } else {
                    throw std::runtime_error("unknown executor " + executor);
                }
            }
            if (!model_path.empty()) {
                cfg.predictor_kind = "knn";
                cfg.model_path = model_path;
            }
            if (eval->parsed() && eval_extreme) {
                cfg.eval.offset_xy = Range{0.10, 0.10};
            }
            if (perturbed) {
                if (!p_steps.empty()) cfg.eval.perturb.steps = p_steps;
                if (p_shift_cm >= 0.0) cfg.eval.perturb.max_shift = p_shift_cm / 100.0;
                if (p_rot_deg >= 0.0) cfg.eval.perturb.max_rot = p_rot_deg * kPi / 180.0;
                if (cfg.eval.perturb.steps.empty()) cfg.eval.perturb.steps = {10};
            }

            const std::unique_ptr<Predictor> predictor = make_predictor(cfg);
            const EvalReport report = perturbed ? run_perturbation_eval(cfg.eval, *predictor)
                                                : run_eval(cfg.eval, *predictor);
            print_report(report);
            if (!report_path.empty()) {
                const ReportFormat rf =
                    format == "csv" ? ReportFormat::csv : ReportFormat::json;
                emit_report(report, rf, report_path);
                std::cout << "report written to " << report_path << "\n";
            }
            return 0;
        }

        if (adapt_cmd->parsed()) {
            if (adapt_seed != 0) cfg.eval.master_seed = adapt_seed;
            SceneConfig target;
            if (adapt_tight) {
                target = tight_adapt_scene();
            } else {
                target = cfg.eval.scenes[scene_index_by_name(cfg.eval.scenes, adapt_scene)];
            }
            Rng scene_rng(derive_seed(cfg.eval.master_seed, 2000));
            const SceneState scene = make_scene(target, scene_rng);
            const PredictionModel base = load_model(adapt_model);
            Rng rng(derive_seed(cfg.eval.master_seed, 2001));
            const PredictionModel adapted = adapt(scene, base, adapt_samples, rng, cfg.collect);
            save_model(adapted, adapt_out);
            std::cout << "adapted model on scene " << target.name << " with " << adapt_samples
                      << " records -> " << adapt_out << "\n";
            return 0;
        }

        if (ablate->parsed()) {
            if (ablate_seed != 0) cfg.eval.master_seed = ablate_seed;
            if (ablate_episodes > 0) cfg.eval.episodes_per_scene = ablate_episodes;
            if (ablate_max_steps > 0) cfg.eval.max_steps = ablate_max_steps;
            const Dataset data = read_dataset(ablate_data);
            const std::vector<AblationRow> rows =
                ablation_data_amount(cfg.eval, data, cfg.knn_k, cfg.knn_weighting,
                                     ablate_fractions, derive_seed(cfg.eval.master_seed, 3000));
            std::printf("%10s %10s %10s %10s %10s\n", "fraction", "records", "success",
                        "<1cm", "<5mm");
            for (const AblationRow& r : rows) {
                std::printf("%10.3f %10zu %9.1f%% %9.1f%% %9.1f%%\n", r.fraction, r.records,
                            100.0 * r.success_rate, 100.0 * r.frac_1cm, 100.0 * r.frac_5mm);
            }
            return 0;
        }

        if (replay_cmd->parsed()) {
            const ReplayResult result = replay(replay_path);
            std::cout << result.table;
            if (!result.consistent) {
                std::cerr << "trace diverges at step " << result.divergent_step << "\n";
                return 2;
            }
            std::cout << "trace is self-consistent\n";
            return 0;
        }

        if (stats_cmd->parsed()) {
            const Dataset data = read_dataset(stats_data);
            std::cout << format_stats(dataset_stats(data.records));
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
