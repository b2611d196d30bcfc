#pragma once

// The coarse-to-fine execution loop. Each control step re-predicts the
// relative pose, picks a phase, synthesizes one absolute waypoint, and
// executes it through the contact-clamped world:
//   phase 1 aligns laterally and in yaw at a safety height above the
//   goal; phase 2 descends in fixed increments; phase 3 keeps pressing
//   down while jittering laterally a few millimeters so residual
//   misalignment gets absorbed.
// A direct executor that moves straight to the predicted goal serves as
// the motion-planner baseline.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pih/geometry.hpp"
#include "pih/predictor.hpp"
#include "pih/rng.hpp"
#include "pih/world.hpp"

namespace pih {

struct ControllerParams {
    double safety_offset = 0.06;                 // H
    double descend_step = 0.005;                 // d_z
    double xy_thresh = 0.02;
    double psi_thresh = 20.0 * kPi / 180.0;
    double dz_thresh = 0.01;
    double phase2_margin = 0.01;
    double noise_bound = 0.003;

    void validate() const;
};

enum class Phase { coarse_alignment, fine_vertical, close_contact };

const char* phase_name(Phase p);

Phase select_phase(const DeltaPose& dp, const Pose4& p, const Pose4& g,
                   const ControllerParams& params);

Pose4 next_waypoint(const Pose4& p, const DeltaPose& dp, Phase phase, Rng& rng,
                    const ControllerParams& params);

// Baseline: go straight to the predicted goal, no phases, no offsets.
Pose4 next_waypoint_direct(const Pose4& p, const DeltaPose& dp);

enum class Executor { coarse_to_fine, direct };

// Shared predictor contract for episodes.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual DeltaPose predict(const SceneState& scene, const Pose4& gripper, Rng& rng) const = 0;
};

class OraclePredictor : public Predictor {
public:
    explicit OraclePredictor(const NoiseSpec& noise) : noise_(noise) { noise_.validate(); }
    DeltaPose predict(const SceneState& scene, const Pose4& gripper, Rng& rng) const override {
        PredictionContext ctx;
        ctx.true_delta = delta(goal_pose(scene), gripper);
        return predict_oracle(ctx, noise_, rng);
    }

private:
    NoiseSpec noise_;
};

class ModelPredictor : public Predictor {
public:
    ModelPredictor(std::shared_ptr<const PredictionModel> model, int raster_width,
                   double fov_side)
        : model_(std::move(model)), width_(raster_width), fov_(fov_side) {}
    DeltaPose predict(const SceneState& scene, const Pose4& gripper, Rng&) const override {
        return predict_model(*model_, render(scene, gripper, width_, fov_));
    }
    const PredictionModel& model() const { return *model_; }

private:
    std::shared_ptr<const PredictionModel> model_;
    int width_;
    double fov_;
};

struct PerturbSchedule {
    std::vector<int> steps;  // 1-based control steps, fired before prediction
    double max_shift = 0.0;
    double max_rot = 0.0;

    bool empty() const { return steps.empty(); }
};

struct TraceStep {
    Pose4 pose;  // before the step
    DeltaPose predicted;
    std::optional<Phase> phase;  // empty for the direct executor
    Pose4 commanded;
    Pose4 achieved;
    ContactEvents events;
    bool perturb_applied = false;
    bool perturb_skipped = false;
    double socket_x = 0.0, socket_y = 0.0, socket_psi = 0.0;  // after any perturb
};

enum class Outcome { success, timeout };

struct EpisodeTrace {
    SocketSpec spec;
    CrossSection plug;
    double socket_x = 0.0, socket_y = 0.0, socket_psi = 0.0;  // initial
    Pose4 goal;                                               // initial
    Executor executor = Executor::coarse_to_fine;
    ControllerParams params;
    int max_steps = 0;
    Pose4 start;
    std::vector<TraceStep> steps;
    Outcome outcome = Outcome::timeout;
    int steps_to_success = -1;
    double min_proximity = 0.0;  // min over steps of max(planar, |dz|) to goal
    bool reached_1cm = false;
    bool reached_5mm = false;
    int perturb_applied = 0;
    int perturb_skipped = 0;
    bool any_surface_contact = false;
    bool any_wall_contact = false;
};

inline constexpr double kProximity1cm = 0.01;
inline constexpr double kProximity5mm = 0.005;

// Runs one closed-loop episode. `rng` drives the predictor and the
// phase-3 jitter; `perturb_rng` (optional) drives the perturbation
// schedule so a null schedule leaves the control stream untouched.
EpisodeTrace run_episode(const SceneState& scene, const Predictor& predictor,
                         Executor executor, const ControllerParams& params, int max_steps,
                         const Pose4& start, Rng& rng, Rng* perturb_rng = nullptr,
                         const PerturbSchedule* schedule = nullptr);

void write_trace(const EpisodeTrace& trace, const std::string& path);
EpisodeTrace read_trace(const std::string& path);

}  // namespace pih
