#pragma once

// Kinematic scene: a socket block with a vertical hole, a plug cross
// section carried by the gripper, and height-only distractors. Motions
// are straight-line interpolations clamped quasi-statically against the
// block: no forces, no friction, no dynamics.
//
// Conventions:
//   - z is the height of the plug bottom above the table (table = 0).
//   - The socket block occupies |x_s|,|y_s| <= block_half_extent in the
//     socket frame, from the table up to block_top.
//   - The hole opening is the hole cross section inflated by `clearance`
//     per side; it runs from block_top down to block_top - hole_depth.
//   - Distractors never collide with the plug; they exist for the
//     observation model only.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pih/geometry.hpp"
#include "pih/rng.hpp"

namespace pih {

struct CrossSection {
    enum class Kind { circle, rectangle };
    Kind kind = Kind::circle;
    double radius = 0.0;         // circle
    double width = 0.0;          // rectangle, full extent along local x
    double height = 0.0;         // rectangle, full extent along local y

    static CrossSection circle(double r) {
        CrossSection c;
        c.kind = Kind::circle;
        c.radius = r;
        return c;
    }
    static CrossSection rectangle(double w, double h) {
        CrossSection c;
        c.kind = Kind::rectangle;
        c.width = w;
        c.height = h;
        return c;
    }
    // Radius of the smallest origin-centered disc containing the shape.
    double bounding_radius() const;
    void validate(const char* what) const;
};

struct SocketSpec {
    CrossSection hole;
    double clearance = 5e-4;        // per-side lateral slack
    double psi_tol = 3.0 * kPi / 180.0;  // angular slack, rectangle-in-rectangle only
    double block_half_extent = 0.012;
    double block_top = 0.02;        // block height above the table
    double hole_depth = 0.012;
    double insertion_depth = 0.008; // depth below block_top that counts as seated

    void validate() const;
};

struct Distractor {
    double cx = 0.0;
    double cy = 0.0;
    double half_x = 0.0;
    double half_y = 0.0;
    double top = 0.0;  // height above the table
};

// Ranges used by make_scene. All half-ranges; zero collapses the draw to
// the nominal value.
struct SceneConfig {
    std::string name = "scene";
    CrossSection hole;
    CrossSection plug;
    double clearance = 5e-4;
    double psi_tol = 3.0 * kPi / 180.0;
    double block_half_extent = 0.012;
    double block_top = 0.02;
    double hole_depth = 0.012;
    double insertion_depth = 0.008;

    double nominal_x = 0.0;
    double nominal_y = 0.0;
    double nominal_psi = 0.0;
    double range_xy = 0.05;        // socket center uniform in nominal +- range
    double range_psi = kPi / 4.0;  // socket yaw uniform in nominal +- range

    int distractor_min = 2;
    int distractor_max = 4;
    double distractor_half_min = 0.005;
    double distractor_half_max = 0.01;
    double distractor_top_min = 0.005;
    double distractor_top_max = 0.012;
    double distractor_ring_min = 0.035;  // distance from socket center
    double distractor_ring_max = 0.09;

    void validate() const;
    SocketSpec socket_spec() const;
};

struct SceneState {
    SceneConfig config;   // generator ranges, kept for re-jitter and replay
    SocketSpec spec;
    double socket_x = 0.0;
    double socket_y = 0.0;
    double socket_psi = 0.0;
    CrossSection plug;
    std::vector<Distractor> distractors;
    Pose4 goal;  // gripper pose with the plug fully seated
};

struct ContactEvents {
    bool surface_contact = false;
    bool wall_contact = false;
    bool clamped_x = false;
    bool clamped_y = false;
    bool clamped_z = false;
    bool clamped_psi = false;

    bool any_clamped() const { return clamped_x || clamped_y || clamped_z || clamped_psi; }
    bool any_contact() const { return surface_contact || wall_contact; }
    void merge(const ContactEvents& o) {
        surface_contact |= o.surface_contact;
        wall_contact |= o.wall_contact;
        clamped_x |= o.clamped_x;
        clamped_y |= o.clamped_y;
        clamped_z |= o.clamped_z;
        clamped_psi |= o.clamped_psi;
    }
};

// Scene construction ------------------------------------------------------

SceneState make_scene(const SceneConfig& config, Rng& rng);

Pose4 goal_pose(const SceneState& scene);

// Re-draws the distractor layout in place. Used by the collector to
// emulate rearranging clutter between samples.
void rejitter_distractors(SceneState& scene, Rng& rng);

// Geometry predicates -----------------------------------------------------

// True iff the plug cross section placed at plug_pose (xy, psi) lies
// within the hole cross section inflated by the clearance. For a
// rectangular plug in a rectangular hole the relative yaw must also stay
// within psi_tol; any pairing involving a circle ignores yaw.
bool footprint_inside(const CrossSection& plug, const Pose4& plug_pose,
                      const SceneState& scene);

// True iff the plug cross section overlaps the socket block footprint.
bool footprint_intersects_block(const CrossSection& plug, const Pose4& plug_pose,
                                const SceneState& scene);

bool is_penetrating(const SceneState& scene, const Pose4& p);

bool is_success(const SceneState& scene, const Pose4& p);

// Motion ------------------------------------------------------------------

struct MotionStep {
    Pose4 pose;
    ContactEvents events;  // events of this substep only
};

using StepSink = std::function<void(const MotionStep&)>;

struct MotionResult {
    Pose4 achieved;
    ContactEvents events;  // union over all substeps
};

// Executes a straight-line 4-DoF motion in substeps (<= 1 mm translation,
// <= 1 degree rotation each), clamping against the block:
//   - at or above block_top the plug moves freely;
//   - descending below block_top requires the footprint to be inside the
//     hole opening; over the block the plug rides the surface (sliding),
//     off the block it may descend to the table;
//   - below block_top, lateral/yaw components are clamped per axis in the
//     socket frame (order x, y, yaw) against the hole walls or the block
//     exterior;
//   - z never passes block_top - hole_depth inside the hole, nor 0.
// Pressed slides across the opening are scanned at 0.1 mm so hole entry
// is not stepped over. Throws if `from` is already penetrating.
MotionResult resolve_motion(const SceneState& scene, const Pose4& from,
                            const Pose4& to, const StepSink& sink = nullptr);

// Perturbation ------------------------------------------------------------

struct PerturbOutcome {
    bool applied = false;
    double shift_x = 0.0;
    double shift_y = 0.0;
    double rot = 0.0;
};

// Shifts the socket (and re-jitters distractors) under the plug, as in a
// dynamic-scene robustness experiment. Skipped (reported via the return
// value) if the plug bottom is below block_top: the plug would be inside
// the hole or against the block, and moving the block through it is
// meaningless. Above the block the plug column cannot intersect the
// relocated block solid, so the move is always safe.
PerturbOutcome perturb_socket(SceneState& scene, Rng& rng, double max_shift,
                              double max_rot, const Pose4& current_plug);

}  // namespace pih
