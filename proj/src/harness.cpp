#include "pih/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "pih/textio.hpp"

namespace pih {

namespace {

using json = nlohmann::ordered_json;

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string fmt6(double v) { return format_double(round6(v)); }

Pose4 sample_initial_pose(const SceneState& scene, const EvalConfig& cfg, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double radius = rng.uniform(cfg.offset_xy.lo, cfg.offset_xy.hi);
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        const double yaw_mag = rng.uniform(cfg.offset_yaw.lo, cfg.offset_yaw.hi);
        const double yaw_sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        const double height = rng.uniform(cfg.start_height.lo, cfg.start_height.hi);
        const Pose4 start(scene.goal.x + radius * std::cos(angle),
                          scene.goal.y + radius * std::sin(angle),
                          scene.spec.block_top + height,
                          wrap_angle(scene.goal.psi + yaw_sign * yaw_mag));
        if (!is_penetrating(scene, start)) return start;
    }
    throw std::runtime_error("run_eval: could not sample a feasible initial pose");
}

SceneAggregate aggregate_rows(const std::string& name, const std::vector<EpisodeRow>& rows,
                              int scene_index) {
    SceneAggregate agg;
    agg.scene = name;
    long step_sum = 0;
    for (const EpisodeRow& r : rows) {
        if (scene_index >= 0 && r.scene_index != scene_index) continue;
        ++agg.episodes;
        if (r.success) {
            ++agg.successes;
            step_sum += r.steps;
        }
        if (r.reached_1cm) ++agg.reached_1cm;
        if (r.reached_5mm) ++agg.reached_5mm;
        if (r.surface_contact) ++agg.surface_episodes;
        if (r.wall_contact) ++agg.wall_episodes;
    }
    if (agg.episodes > 0) {
        agg.success_rate = static_cast<double>(agg.successes) / agg.episodes;
        agg.frac_1cm = static_cast<double>(agg.reached_1cm) / agg.episodes;
        agg.frac_5mm = static_cast<double>(agg.reached_5mm) / agg.episodes;
    }
    if (agg.successes > 0) {
        agg.mean_steps_to_success = static_cast<double>(step_sum) / agg.successes;
    }
    return agg;
}

EvalReport run_campaign(const EvalConfig& config, const Predictor& predictor,
                        bool use_schedule) {
    config.validate();
    const int scenes = static_cast<int>(config.scenes.size());
    const int eps = config.episodes_per_scene;
    const int total = scenes * eps;
    std::vector<EpisodeRow> rows(static_cast<std::size_t>(total));

    if (!config.trace_dir.empty()) {
        std::filesystem::create_directories(config.trace_dir);
    }

    std::atomic<int> cursor{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const int idx = cursor.fetch_add(1);
            if (idx >= total || failed.load()) break;
            try {
                const int s = idx / eps;
                const int e = idx % eps;
                const std::uint64_t es = episode_seed(config.master_seed, s, e);
                Rng scene_rng(derive_seed(es, 0));
                const SceneState scene = make_scene(config.scenes[s], scene_rng);
                const Pose4 start = sample_initial_pose(scene, config, scene_rng);
                Rng ctrl_rng(derive_seed(es, 1));
                Rng pert_rng(derive_seed(es, 2));
                const PerturbSchedule* sched =
                    use_schedule && !config.perturb.empty() ? &config.perturb : nullptr;
                const EpisodeTrace trace =
                    run_episode(scene, predictor, config.executor, config.controller,
                                config.max_steps, start, ctrl_rng, &pert_rng, sched);
                EpisodeRow& row = rows[static_cast<std::size_t>(idx)];
                row.scene_index = s;
                row.scene = config.scenes[s].name;
                row.episode = e;
                row.seed = es;
                row.success = trace.outcome == Outcome::success;
                row.steps = trace.steps_to_success;
                row.min_proximity = trace.min_proximity;
                row.reached_1cm = trace.reached_1cm;
                row.reached_5mm = trace.reached_5mm;
                row.surface_contact = trace.any_surface_contact;
                row.wall_contact = trace.any_wall_contact;
                row.perturb_applied = trace.perturb_applied;
                row.perturb_skipped = trace.perturb_skipped;
                if (!config.trace_dir.empty()) {
                    write_trace(trace, config.trace_dir + "/" + config.scenes[s].name +
                                           "_ep" + std::to_string(e) + ".piht");
                }
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(error_mutex);
                error_message = ex.what();
                failed.store(true);
                break;
            }
        }
    };

    int threads = config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, total));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (failed.load()) throw std::runtime_error("run_eval: " + error_message);

    EvalReport report;
    report.rows = std::move(rows);
    for (int s = 0; s < scenes; ++s) {
        report.per_scene.push_back(aggregate_rows(config.scenes[s].name, report.rows, s));
    }
    report.aggregate = aggregate_rows("ALL", report.rows, -1);
    for (const EpisodeRow& r : report.rows) {
        report.perturb_applied += r.perturb_applied;
        report.perturb_skipped += r.perturb_skipped;
    }
    return report;
}

json cross_section_json(const CrossSection& c) {
    json j;
    if (c.kind == CrossSection::Kind::circle) {
        j["kind"] = "circle";
        j["radius_cm"] = c.radius * 100.0;
    } else {
        j["kind"] = "rect";
        j["width_cm"] = c.width * 100.0;
        j["height_cm"] = c.height * 100.0;
    }
    return j;
}

CrossSection cross_section_from_json(const json& j, const char* what) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "circle") {
        return CrossSection::circle(j.at("radius_cm").get<double>() / 100.0);
    }
    if (kind == "rect") {
        return CrossSection::rectangle(j.at("width_cm").get<double>() / 100.0,
                                       j.at("height_cm").get<double>() / 100.0);
    }
    throw std::runtime_error(std::string("config: unknown cross section kind in ") + what);
}

}  // namespace

void EvalConfig::validate() const {
    if (scenes.empty()) throw std::invalid_argument("eval config: no scenes");
    if (episodes_per_scene < 1) {
        throw std::invalid_argument("eval config: episodes_per_scene must be >= 1");
    }
    if (offset_xy.lo > offset_xy.hi || offset_yaw.lo > offset_yaw.hi ||
        start_height.lo > start_height.hi || !(start_height.lo >= 0.0)) {
        throw std::invalid_argument("eval config: bad initial pose ranges");
    }
    if (max_steps < 1) throw std::invalid_argument("eval config: max_steps must be >= 1");
    controller.validate();
    for (const SceneConfig& s : scenes) s.validate();
}

std::uint64_t episode_seed(std::uint64_t master, int scene_index, int episode) {
    return derive_seed(master, static_cast<std::uint64_t>(scene_index) * 100003ULL +
                                   static_cast<std::uint64_t>(episode));
}

EvalReport run_eval(const EvalConfig& config, const Predictor& predictor) {
    return run_campaign(config, predictor, false);
}

EvalReport run_perturbation_eval(const EvalConfig& config, const Predictor& predictor) {
    if (config.perturb.empty()) {
        throw std::invalid_argument("run_perturbation_eval: empty perturbation schedule");
    }
    return run_campaign(config, predictor, true);
}

PredictionModel adapt(const SceneState& scene, const PredictionModel& base_model,
                      int n_samples, Rng& rng, const CollectionConfig& collect) {
    if (n_samples < 1) throw std::invalid_argument("adapt: n_samples must be >= 1");
    if (base_model.record_count == 0) throw std::invalid_argument("adapt: model not fitted");
    CollectionConfig cfg = collect;
    cfg.free_records = n_samples;
    const int width = static_cast<int>(std::lround(
        std::sqrt((static_cast<double>(base_model.feature_len) - 1.0) / 2.0)));
    cfg.raster_width = width;
    const std::vector<DatasetRecord> records = collect_free_space(scene, cfg, 0, rng);
    return extend_model(base_model, records);
}

std::vector<AblationRow> ablation_data_amount(const EvalConfig& config, const Dataset& base,
                                              int k, KnnWeighting weighting,
                                              const std::vector<double>& fractions,
                                              std::uint64_t subsample_seed) {
    if (base.records.empty()) throw std::invalid_argument("ablation: empty dataset");
    for (double f : fractions) {
        if (!(f > 0.0) || f > 1.0) {
            throw std::invalid_argument("ablation: fractions must lie in (0, 1]");
        }
    }
    const std::size_t n = base.records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(subsample_seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(order[i - 1], order[j]);
    }

    std::vector<AblationRow> rows;
    for (double f : fractions) {
        const std::size_t m = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
        if (m < static_cast<std::size_t>(k)) {
            throw std::invalid_argument("ablation: fraction leaves fewer records than k");
        }
        std::vector<std::size_t> pick(order.begin(), order.begin() + m);
        std::sort(pick.begin(), pick.end());
        std::vector<DatasetRecord> subset;
        subset.reserve(m);
        for (std::size_t idx : pick) subset.push_back(base.records[idx]);
        const PredictionModel model = fit_knn(subset, k, weighting);
        const ModelPredictor predictor(std::make_shared<PredictionModel>(model), base.width,
                                       base.fov_side);
        const EvalReport report = run_eval(config, predictor);
        AblationRow row;
        row.fraction = f;
        row.records = m;
        row.success_rate = report.aggregate.success_rate;
        row.frac_1cm = report.aggregate.frac_1cm;
        row.frac_5mm = report.aggregate.frac_5mm;
        rows.push_back(row);
    }
    return rows;
}

void emit_report(const EvalReport& report, ReportFormat format, const std::string& path) {
    if (report.rows.empty()) throw std::invalid_argument("emit_report: empty report");
    auto agg_json = [](const SceneAggregate& a) {
        json j;
        j["scene"] = a.scene;
        j["episodes"] = a.episodes;
        j["successes"] = a.successes;
        j["success_rate"] = round6(a.success_rate);
        j["reached_1cm"] = a.reached_1cm;
        j["frac_1cm"] = round6(a.frac_1cm);
        j["reached_5mm"] = a.reached_5mm;
        j["frac_5mm"] = round6(a.frac_5mm);
        j["mean_steps_to_success"] = round6(a.mean_steps_to_success);
        j["surface_episodes"] = a.surface_episodes;
        j["wall_episodes"] = a.wall_episodes;
        return j;
    };

    if (format == ReportFormat::json) {
        json j;
        j["aggregate"] = agg_json(report.aggregate);
        j["per_scene"] = json::array();
        for (const SceneAggregate& a : report.per_scene) j["per_scene"].push_back(agg_json(a));
        j["perturb_applied"] = report.perturb_applied;
        j["perturb_skipped"] = report.perturb_skipped;
        j["episodes"] = json::array();
        for (const EpisodeRow& r : report.rows) {
            json e;
            e["scene"] = r.scene;
            e["episode"] = r.episode;
            e["seed"] = r.seed;
            e["success"] = r.success;
            e["steps"] = r.steps;
            e["min_proximity"] = round6(r.min_proximity);
            e["reached_1cm"] = r.reached_1cm;
            e["reached_5mm"] = r.reached_5mm;
            e["surface_contact"] = r.surface_contact;
            e["wall_contact"] = r.wall_contact;
            e["perturb_applied"] = r.perturb_applied;
            e["perturb_skipped"] = r.perturb_skipped;
            j["episodes"].push_back(e);
        }
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("emit_report: cannot open " + path);
        f << j.dump(2) << "\n";
        if (!f) throw std::runtime_error("emit_report: write failed for " + path);
        return;
    }

    std::string buf;
    buf += "section,scene,episodes,successes,success_rate,reached_1cm,frac_1cm,reached_5mm,"
           "frac_5mm,mean_steps_to_success,surface_episodes,wall_episodes\n";
    auto agg_csv = [&](const SceneAggregate& a, const char* section) {
        buf += section;
        buf.push_back(',');
        buf += a.scene;
        buf.push_back(',');
        buf += std::to_string(a.episodes);
        buf.push_back(',');
        buf += std::to_string(a.successes);
        buf.push_back(',');
        buf += fmt6(a.success_rate);
        buf.push_back(',');
        buf += std::to_string(a.reached_1cm);
        buf.push_back(',');
        buf += fmt6(a.frac_1cm);
        buf.push_back(',');
        buf += std::to_string(a.reached_5mm);
        buf.push_back(',');
        buf += fmt6(a.frac_5mm);
        buf.push_back(',');
        buf += fmt6(a.mean_steps_to_success);
        buf.push_back(',');
        buf += std::to_string(a.surface_episodes);
        buf.push_back(',');
        buf += std::to_string(a.wall_episodes);
        buf.push_back('\n');
    };
    agg_csv(report.aggregate, "aggregate");
    for (const SceneAggregate& a : report.per_scene) agg_csv(a, "scene");
    buf += "perturb,applied=" + std::to_string(report.perturb_applied) +
           ",skipped=" + std::to_string(report.perturb_skipped) + "\n";
    buf += "scene,episode,seed,success,steps,min_proximity,reached_1cm,reached_5mm,"
           "surface_contact,wall_contact,perturb_applied,perturb_skipped\n";
    for (const EpisodeRow& r : report.rows) {
        buf += r.scene;
        buf.push_back(',');
        buf += std::to_string(r.episode);
        buf.push_back(',');
        buf += std::to_string(r.seed);
        buf.push_back(',');
        buf += r.success ? "1" : "0";
        buf.push_back(',');
        buf += std::to_string(r.steps);
        buf.push_back(',');
        buf += fmt6(r.min_proximity);
        buf.push_back(',');
        buf += r.reached_1cm ? "1" : "0";
        buf.push_back(',');
        buf += r.reached_5mm ? "1" : "0";
        buf.push_back(',');
        buf += r.surface_contact ? "1" : "0";
        buf.push_back(',');
        buf += r.wall_contact ? "1" : "0";
        buf.push_back(',');
        buf += std::to_string(r.perturb_applied);
        buf.push_back(',');
        buf += std::to_string(r.perturb_skipped);
        buf.push_back('\n');
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("emit_report: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("emit_report: write failed for " + path);
}

EvalReport parse_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_report_json: cannot open " + path);
    json j;
    f >> j;
    EvalReport report;
    auto agg_from = [](const json& a) {
        SceneAggregate s;
        s.scene = a.at("scene").get<std::string>();
        s.episodes = a.at("episodes").get<int>();
        s.successes = a.at("successes").get<int>();
        s.success_rate = a.at("success_rate").get<double>();
        s.reached_1cm = a.at("reached_1cm").get<int>();
        s.frac_1cm = a.at("frac_1cm").get<double>();
        s.reached_5mm = a.at("reached_5mm").get<int>();
        s.frac_5mm = a.at("frac_5mm").get<double>();
        s.mean_steps_to_success = a.at("mean_steps_to_success").get<double>();
        s.surface_episodes = a.at("surface_episodes").get<int>();
        s.wall_episodes = a.at("wall_episodes").get<int>();
        return s;
    };
    report.aggregate = agg_from(j.at("aggregate"));
    for (const json& a : j.at("per_scene")) report.per_scene.push_back(agg_from(a));
    report.perturb_applied = j.at("perturb_applied").get<int>();
    report.perturb_skipped = j.at("perturb_skipped").get<int>();
    for (const json& e : j.at("episodes")) {
        EpisodeRow r;
        r.scene = e.at("scene").get<std::string>();
        r.episode = e.at("episode").get<int>();
        r.seed = e.at("seed").get<std::uint64_t>();
        r.success = e.at("success").get<bool>();
        r.steps = e.at("steps").get<int>();
        r.min_proximity = e.at("min_proximity").get<double>();
        r.reached_1cm = e.at("reached_1cm").get<bool>();
        r.reached_5mm = e.at("reached_5mm").get<bool>();
        r.surface_contact = e.at("surface_contact").get<bool>();
        r.wall_contact = e.at("wall_contact").get<bool>();
        r.perturb_applied = e.at("perturb_applied").get<int>();
        r.perturb_skipped = e.at("perturb_skipped").get<int>();
        report.rows.push_back(r);
    }
    return report;
}

ReplayResult replay(const std::string& trace_path) {
    const EpisodeTrace t = read_trace(trace_path);
    ReplayResult result;
    std::ostringstream table;

    SceneState scene;
    scene.spec = t.spec;
    scene.plug = t.plug;
    scene.socket_x = t.socket_x;
    scene.socket_y = t.socket_y;
    scene.socket_psi = t.socket_psi;
    scene.goal = t.goal;

    auto pose_str = [](const Pose4& p) {
        std::string s = "(";
        s += format_double(p.x) + ", " + format_double(p.y) + ", " + format_double(p.z) +
             ", " + format_double(p.psi) + ")";
        return s;
    };

    Pose4 pose = t.start;
    table << "executor: " << (t.executor == Executor::coarse_to_fine ? "coarse_to_fine" : "direct")
          << "  start: " << pose_str(t.start) << "\n";
    int idx = 0;
    for (const TraceStep& ts : t.steps) {
        ++idx;
        scene.socket_x = ts.socket_x;
        scene.socket_y = ts.socket_y;
        scene.socket_psi = ts.socket_psi;
        scene.goal = Pose4(ts.socket_x, ts.socket_y,
                           scene.spec.block_top - scene.spec.insertion_depth, ts.socket_psi);
        bool match = false;
        std::string failure;
        Pose4 reexecuted = ts.achieved;
        try {
            const MotionResult res = resolve_motion(scene, pose, ts.commanded);
            reexecuted = res.achieved;
            match = res.achieved.x == ts.achieved.x && res.achieved.y == ts.achieved.y &&
                    res.achieved.z == ts.achieved.z && res.achieved.psi == ts.achieved.psi;
        } catch (const std::exception& ex) {
            failure = ex.what();
        }
        table << "step " << idx;
        if (ts.perturb_applied) table << " [perturb]";
        if (ts.perturb_skipped) table << " [perturb skipped]";
        table << " phase=" << (ts.phase ? phase_name(*ts.phase) : "-");
        table << " pred=(" << format_double(ts.predicted.dx) << ", "
              << format_double(ts.predicted.dy) << ", " << format_double(ts.predicted.dz)
              << ", " << format_double(ts.predicted.dpsi) << ")";
        table << " cmd=" << pose_str(ts.commanded) << " achieved=" << pose_str(ts.achieved);
        table << " events="
              << (ts.events.surface_contact ? "S" : "-")
              << (ts.events.wall_contact ? "W" : "-");
        if (!match) {
            if (failure.empty()) {
                table << "  << DIVERGENCE: re-executed " << pose_str(reexecuted);
            } else {
                table << "  << DIVERGENCE: re-execution failed (" << failure << ")";
            }
            if (result.consistent) {
                result.consistent = false;
                result.divergent_step = idx;
            }
        }
        table << "\n";
        pose = ts.achieved;
    }
    table << "outcome: " << (t.outcome == Outcome::success ? "success" : "timeout")
          << "  steps_to_success: " << t.steps_to_success
          << "  min_proximity: " << format_double(t.min_proximity) << "\n";
    result.table = table.str();
    return result;
}

std::vector<SceneConfig> default_suite() {
    std::vector<SceneConfig> suite(5);

    suite[0].name = "round_small";
    suite[0].hole = CrossSection::circle(0.004);
    suite[0].plug = CrossSection::circle(0.004);

    suite[1].name = "round_large";
    suite[1].hole = CrossSection::circle(0.009);
    suite[1].plug = CrossSection::circle(0.009);

    suite[2].name = "rect_wide";
    suite[2].hole = CrossSection::rectangle(0.016, 0.008);
    suite[2].plug = CrossSection::rectangle(0.016, 0.008);

    suite[3].name = "rect_square";
    suite[3].hole = CrossSection::rectangle(0.010, 0.010);
    suite[3].plug = CrossSection::rectangle(0.010, 0.010);

    suite[4].name = "rect_narrow";
    suite[4].hole = CrossSection::rectangle(0.012, 0.005);
    suite[4].plug = CrossSection::rectangle(0.012, 0.005);

    return suite;
}

SceneConfig tight_adapt_scene() {
    SceneConfig s;
    s.name = "round_tight";
    s.hole = CrossSection::circle(0.007);
    s.plug = CrossSection::circle(0.007);
    s.clearance = 3e-4;
    // A different socket housing than the training suite uses, on a clean
    // bench (no clutter).
    s.block_half_extent = 0.015;
    s.distractor_min = 0;
    s.distractor_max = 0;
    s.distractor_ring_min = 0.045;
    return s;
}

FileConfig default_config() {
    FileConfig cfg;
    cfg.eval.scenes = default_suite();
    cfg.noise.sigma_xy_near = 0.0015;
    cfg.noise.sigma_xy_far = 0.005;
    cfg.noise.sigma_z = 0.002;
    cfg.noise.sigma_psi = 2.0 * kPi / 180.0;
    return cfg;
}

namespace {

Range range_from_json(const json& j, double scale) {
    if (!j.is_array() || j.size() != 2) {
        throw std::runtime_error("config: ranges must be [lo, hi] arrays");
    }
    return Range{j[0].get<double>() * scale, j[1].get<double>() * scale};
}

SceneConfig scene_from_json(const json& j) {
    SceneConfig s;
    s.name = j.value("name", std::string("scene"));
    if (j.contains("hole")) s.hole = cross_section_from_json(j.at("hole"), "hole");
    if (j.contains("plug")) s.plug = cross_section_from_json(j.at("plug"), "plug");
    if (j.contains("clearance_mm")) s.clearance = j.at("clearance_mm").get<double>() / 1000.0;
    if (j.contains("psi_tol_deg")) s.psi_tol = j.at("psi_tol_deg").get<double>() * kPi / 180.0;
    if (j.contains("block_half_extent_cm")) {
        s.block_half_extent = j.at("block_half_extent_cm").get<double>() / 100.0;
    }
    if (j.contains("block_top_cm")) s.block_top = j.at("block_top_cm").get<double>() / 100.0;
    if (j.contains("hole_depth_cm")) s.hole_depth = j.at("hole_depth_cm").get<double>() / 100.0;
    if (j.contains("insertion_depth_cm")) {
        s.insertion_depth = j.at("insertion_depth_cm").get<double>() / 100.0;
    }
    if (j.contains("workspace_xy_cm")) s.range_xy = j.at("workspace_xy_cm").get<double>() / 100.0;
    if (j.contains("workspace_yaw_deg")) {
        s.range_psi = j.at("workspace_yaw_deg").get<double>() * kPi / 180.0;
    }
    if (j.contains("distractors")) {
        const json& d = j.at("distractors");
        s.distractor_min = d.value("count_min", s.distractor_min);
        s.distractor_max = d.value("count_max", s.distractor_max);
        if (d.contains("half_cm")) {
            const Range r = range_from_json(d.at("half_cm"), 0.01);
            s.distractor_half_min = r.lo;
            s.distractor_half_max = r.hi;
        }
        if (d.contains("top_cm")) {
            const Range r = range_from_json(d.at("top_cm"), 0.01);
            s.distractor_top_min = r.lo;
            s.distractor_top_max = r.hi;
        }
        if (d.contains("ring_cm")) {
            const Range r = range_from_json(d.at("ring_cm"), 0.01);
            s.distractor_ring_min = r.lo;
            s.distractor_ring_max = r.hi;
        }
    }
    return s;
}

}  // namespace

FileConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& ex) {
        throw std::runtime_error("load_config: " + path + ": " + ex.what());
    }

    FileConfig cfg = default_config();
    if (j.contains("seed")) cfg.eval.master_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scenes")) {
        cfg.eval.scenes.clear();
        for (const json& s : j.at("scenes")) cfg.eval.scenes.push_back(scene_from_json(s));
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        cfg.eval.episodes_per_scene = e.value("episodes_per_scene", cfg.eval.episodes_per_scene);
        if (e.contains("offset_xy_cm")) {
            cfg.eval.offset_xy = range_from_json(e.at("offset_xy_cm"), 0.01);
        }
        if (e.contains("offset_yaw_deg")) {
            cfg.eval.offset_yaw = range_from_json(e.at("offset_yaw_deg"), kPi / 180.0);
        }
        if (e.contains("start_height_cm")) {
            cfg.eval.start_height = range_from_json(e.at("start_height_cm"), 0.01);
        }
        cfg.eval.max_steps = e.value("max_steps", cfg.eval.max_steps);
        cfg.eval.threads = e.value("threads", cfg.eval.threads);
        cfg.eval.trace_dir = e.value("trace_dir", cfg.eval.trace_dir);
        if (e.contains("executor")) {
            const std::string ex = e.at("executor").get<std::string>();
            if (ex == "coarse_to_fine") {
                cfg.eval.executor = Executor::coarse_to_fine;
            } else if (ex == "direct") {
                cfg.eval.executor = Executor::direct;
            } else {
                throw std::runtime_error("config: unknown executor " + ex);
            }
        }
    }
    if (j.contains("controller")) {
        const json& c = j.at("controller");
        ControllerParams& p = cfg.eval.controller;
        if (c.contains("safety_offset_cm")) {
            p.safety_offset = c.at("safety_offset_cm").get<double>() / 100.0;
        }
        if (c.contains("descend_step_mm")) {
            p.descend_step = c.at("descend_step_mm").get<double>() / 1000.0;
        }
        if (c.contains("xy_thresh_cm")) p.xy_thresh = c.at("xy_thresh_cm").get<double>() / 100.0;
        if (c.contains("psi_thresh_deg")) {
            p.psi_thresh = c.at("psi_thresh_deg").get<double>() * kPi / 180.0;
        }
        if (c.contains("dz_thresh_cm")) p.dz_thresh = c.at("dz_thresh_cm").get<double>() / 100.0;
        if (c.contains("phase2_margin_cm")) {
            p.phase2_margin = c.at("phase2_margin_cm").get<double>() / 100.0;
        }
        if (c.contains("noise_bound_mm")) {
            p.noise_bound = c.at("noise_bound_mm").get<double>() / 1000.0;
        }
    }
    if (j.contains("perturb")) {
        const json& p = j.at("perturb");
        if (p.contains("steps")) {
            cfg.eval.perturb.steps.clear();
            for (const json& s : p.at("steps")) cfg.eval.perturb.steps.push_back(s.get<int>());
        }
        if (p.contains("max_shift_cm")) {
            cfg.eval.perturb.max_shift = p.at("max_shift_cm").get<double>() / 100.0;
        }
        if (p.contains("max_rot_deg")) {
            cfg.eval.perturb.max_rot = p.at("max_rot_deg").get<double>() * kPi / 180.0;
        }
    }
    if (j.contains("collect")) {
        const json& c = j.at("collect");
        cfg.collect.free_records = c.value("free_records", cfg.collect.free_records);
        cfg.collect.contact_records = c.value("contact_records", cfg.collect.contact_records);
        if (c.contains("free_half_xy_cm")) {
            cfg.collect.free_half_xy = c.at("free_half_xy_cm").get<double>() / 100.0;
        }
        if (c.contains("free_half_psi_deg")) {
            cfg.collect.free_half_psi = c.at("free_half_psi_deg").get<double>() * kPi / 180.0;
        }
        if (c.contains("free_z_cm")) {
            const Range r = range_from_json(c.at("free_z_cm"), 0.01);
            cfg.collect.free_z_low = r.lo;
            cfg.collect.free_z_high = r.hi;
        }
        if (c.contains("contact_half_xy_cm")) {
            cfg.collect.contact_half_xy = c.at("contact_half_xy_cm").get<double>() / 100.0;
        }
        if (c.contains("wiggle_step_mm")) {
            cfg.collect.wiggle_step = c.at("wiggle_step_mm").get<double>() / 1000.0;
        }
        cfg.collect.capture_thin = c.value("capture_thin", cfg.collect.capture_thin);
        cfg.collect.rejitter_every = c.value("rejitter_every", cfg.collect.rejitter_every);
        cfg.collect.raster_width = c.value("raster_width", cfg.collect.raster_width);
        if (c.contains("fov_side_cm")) {
            cfg.collect.fov_side = c.at("fov_side_cm").get<double>() / 100.0;
        }
    }
    if (j.contains("predictor")) {
        const json& p = j.at("predictor");
        cfg.predictor_kind = p.value("kind", cfg.predictor_kind);
        cfg.model_path = p.value("model", cfg.model_path);
        cfg.knn_k = p.value("k", cfg.knn_k);
        if (p.contains("weighting")) {
            const std::string w = p.at("weighting").get<std::string>();
            if (w == "uniform") {
                cfg.knn_weighting = KnnWeighting::uniform;
            } else if (w == "inverse") {
                cfg.knn_weighting = KnnWeighting::inverse_distance;
            } else {
                throw std::runtime_error("config: unknown weighting " + w);
            }
        }
        cfg.ridge_lambda = p.value("lambda", cfg.ridge_lambda);
        if (p.contains("noise")) {
            const json& n = p.at("noise");
            if (n.contains("sigma_xy_near_mm")) {
                cfg.noise.sigma_xy_near = n.at("sigma_xy_near_mm").get<double>() / 1000.0;
            }
            if (n.contains("sigma_xy_far_mm")) {
                cfg.noise.sigma_xy_far = n.at("sigma_xy_far_mm").get<double>() / 1000.0;
            }
            if (n.contains("sigma_z_mm")) {
                cfg.noise.sigma_z = n.at("sigma_z_mm").get<double>() / 1000.0;
            }
            if (n.contains("sigma_psi_deg")) {
                cfg.noise.sigma_psi = n.at("sigma_psi_deg").get<double>() * kPi / 180.0;
            }
            if (n.contains("near_radius_cm")) {
                cfg.noise.near_radius = n.at("near_radius_cm").get<double>() / 100.0;
            }
        }
    }
    return cfg;
}

std::unique_ptr<Predictor> make_predictor(const FileConfig& config) {
    if (config.predictor_kind == "oracle") {
        return std::make_unique<OraclePredictor>(config.noise);
    }
    if (config.predictor_kind == "knn" || config.predictor_kind == "ridge") {
        if (config.model_path.empty()) {
            throw std::runtime_error("config: predictor kind '" + config.predictor_kind +
                                     "' requires a model path");
        }
        auto model = std::make_shared<PredictionModel>(load_model(config.model_path));
        const int width = static_cast<int>(std::lround(
            std::sqrt((static_cast<double>(model->feature_len) - 1.0) / 2.0)));
        return std::make_unique<ModelPredictor>(std::move(model), width,
                                                config.collect.fov_side);
    }
    throw std::runtime_error("config: unknown predictor kind " + config.predictor_kind);
}

}  // namespace pih
