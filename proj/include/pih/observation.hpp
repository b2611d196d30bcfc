#pragma once

// Synthetic stand-in for a pair of wrist cameras: two orthographic height
// rasters locked to the gripper frame, plus the gripper height as a
// scalar (the raster itself carries no altitude cue). The second raster
// is offset 3 cm along the gripper x axis to break the single-view
// ambiguity.

#include <vector>

#include "pih/geometry.hpp"
#include "pih/world.hpp"

namespace pih {

inline constexpr int kRasterWidthDefault = 32;
inline constexpr double kFovSideDefault = 0.16;
inline constexpr double kCameraBOffset = 0.03;       // along gripper x
inline constexpr double kFeatureHeightScale = 0.05;  // heights divided by this

struct Observation {
    std::vector<double> raster_a;  // W*W, row major
    std::vector<double> raster_b;
    double gripper_height = 0.0;
    int width = kRasterWidthDefault;
    double fov_side = kFovSideDefault;
};

// Samples the scene height field at the raster cell centers. Cells are
// point samples (no area averaging), so rasters are exactly equivariant
// under rigid moves of scene plus gripper. Heights: table 0, block top,
// hole opening 0, distractor tops.
Observation render(const SceneState& scene, const Pose4& gripper,
                   int width = kRasterWidthDefault, double fov_side = kFovSideDefault);

// Flattens to raster_a cells, raster_b cells, gripper height, each divided
// by kFeatureHeightScale. Length 2*W*W + 1.
std::vector<double> features(const Observation& obs);

inline int feature_length(int width) { return 2 * width * width + 1; }

// Inverse of features(); used to verify the flattening is lossless.
Observation observation_from_features(const std::vector<double>& f, int width,
                                      double fov_side);

}  // namespace pih
