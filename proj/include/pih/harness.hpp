#pragma once

// Experiment orchestration: seeded evaluation campaigns over scene
// suites, perturbation runs, the data-amount ablation, rapid adaptation,
// report emission and trace replay. Campaigns are deterministic: every
// episode derives its seed from the master seed by a documented counter
// split, so ablation arms can be paired exactly.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pih/collector.hpp"
#include "pih/controller.hpp"
#include "pih/predictor.hpp"
#include "pih/world.hpp"

namespace pih {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct EvalConfig {
    std::vector<SceneConfig> scenes;
    int episodes_per_scene = 40;
    Range offset_xy{0.03, 0.06};                                // meters, radial
    Range offset_yaw{15.0 * kPi / 180.0, 40.0 * kPi / 180.0};   // radians, magnitude
    Range start_height{0.005, 0.015};                             // above block_top
    ControllerParams controller;
    Executor executor = Executor::coarse_to_fine;
    int max_steps = 400;
    std::uint64_t master_seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    PerturbSchedule perturb;
    std::string trace_dir;  // write one trace per episode when non-empty

    void validate() const;
};

struct EpisodeRow {
    int scene_index = 0;
    std::string scene;
    int episode = 0;
    std::uint64_t seed = 0;
    bool success = false;
    int steps = -1;  // steps to success, -1 on timeout
    double min_proximity = 0.0;
    bool reached_1cm = false;
    bool reached_5mm = false;
    bool surface_contact = false;
    bool wall_contact = false;
    int perturb_applied = 0;
    int perturb_skipped = 0;
};

struct SceneAggregate {
    std::string scene;
    int episodes = 0;
    int successes = 0;
    int reached_1cm = 0;
    int reached_5mm = 0;
    double success_rate = 0.0;
    double frac_1cm = 0.0;
    double frac_5mm = 0.0;
    double mean_steps_to_success = 0.0;  // over successful episodes
    int surface_episodes = 0;
    int wall_episodes = 0;
};

struct EvalReport {
    std::vector<SceneAggregate> per_scene;
    SceneAggregate aggregate;
    std::vector<EpisodeRow> rows;
    int perturb_applied = 0;
    int perturb_skipped = 0;
};

EvalReport run_eval(const EvalConfig& config, const Predictor& predictor);

// As run_eval, with the perturbation schedule armed. Requires a non-empty
// schedule.
EvalReport run_perturbation_eval(const EvalConfig& config, const Predictor& predictor);

// Registers the target scene's goal and autonomously collects n_samples
// free-space records there, then merges them into the model (k-NN:
// append; ridge: refit on the union). Roughly 4 minutes of emulated
// capture at the default cadence is n_samples = 3000.
PredictionModel adapt(const SceneState& scene, const PredictionModel& base_model,
                      int n_samples, Rng& rng,
                      const CollectionConfig& collect = CollectionConfig{});

struct AblationRow {
    double fraction = 0.0;
    std::size_t records = 0;
    double success_rate = 0.0;
    double frac_1cm = 0.0;
    double frac_5mm = 0.0;
};

// Uniformly subsamples the dataset at each fraction (seeded; original
// record order is preserved so fraction 1.0 reproduces the base model
// exactly), refits the k-NN predictor, and evaluates with paired episode
// seeds.
std::vector<AblationRow> ablation_data_amount(const EvalConfig& config, const Dataset& base,
                                              int k, KnnWeighting weighting,
                                              const std::vector<double>& fractions,
                                              std::uint64_t subsample_seed);

// Report emission. CSV and JSON carry the same numbers; rates are rounded
// to 6 decimals in both.
enum class ReportFormat { csv, json };
void emit_report(const EvalReport& report, ReportFormat format, const std::string& path);
EvalReport parse_report_json(const std::string& path);

// Replays a trace file: re-executes every commanded motion and compares
// the achieved poses bit-exactly. Returns the rendered step table;
// `consistent` reports divergence.
struct ReplayResult {
    bool consistent = true;
    int divergent_step = -1;
    std::string table;
};
ReplayResult replay(const std::string& trace_path);

// Built-in scene suite (five plug/hole families) and the held-out
// tight-clearance scene used for adaptation studies.
std::vector<SceneConfig> default_suite();
SceneConfig tight_adapt_scene();

// Episode seed split, shared by campaigns and documented in the README:
//   episode_seed = derive_seed(master, scene_index * 100003 + episode)
//   scene rng    = derive_seed(episode_seed, 0)
//   control rng  = derive_seed(episode_seed, 1)
//   perturb rng  = derive_seed(episode_seed, 2)
std::uint64_t episode_seed(std::uint64_t master, int scene_index, int episode);

// Structured JSON config file (units cm/degrees); any omitted key keeps
// its default. See README for the schema.
struct FileConfig {
    EvalConfig eval;
    CollectionConfig collect;
    NoiseSpec noise;
    std::string predictor_kind = "oracle";  // oracle | knn | ridge
    std::string model_path;
    int knn_k = 8;
    KnnWeighting knn_weighting = KnnWeighting::inverse_distance;
    double ridge_lambda = 1e-6;
};

FileConfig load_config(const std::string& path);
FileConfig default_config();

std::unique_ptr<Predictor> make_predictor(const FileConfig& config);

}  // namespace pih
