#pragma once

// Spatially decoupled data generation. Free-space collection samples
// random poses over a wide box around the goal and records along the
// motion between them; close-contact collection is a clamped random walk
// within +-1 cm of the goal, standing in for an operator wiggling the
// plug by hand. Every record is labeled with the exact relative pose to
// the registered goal, so trajectory quality never matters.

#include <cstdint>
#include <string>
#include <vector>

#include "pih/geometry.hpp"
#include "pih/observation.hpp"
#include "pih/world.hpp"

namespace pih {

enum class Provenance { free_space, close_contact };

struct DatasetRecord {
    int episode_id = 0;
    int step = 0;
    Observation observation;
    Pose4 current;
    Pose4 goal;
    DeltaPose label;       // always delta(goal, current), exactly
    Provenance provenance = Provenance::free_space;
    bool contact = false;  // any contact event at capture time
};

struct Dataset {
    int width = kRasterWidthDefault;
    double fov_side = kFovSideDefault;
    std::vector<DatasetRecord> records;
};

struct CollectionConfig {
    // Free-space box, relative to the goal pose.
    double free_half_xy = 0.08;
    double free_half_psi = 40.0 * kPi / 180.0;
    double free_z_low = 0.01;   // z band above goal z
    double free_z_high = 0.12;
    int free_records = 16000;

    // Close-contact walk.
    double contact_half_xy = 0.01;
    double wiggle_step = 0.002;                    // per linear axis, per move
    double wiggle_step_psi = 2.0 * kPi / 180.0;    // per move
    double contact_psi_clip = 10.0 * kPi / 180.0;  // walk stays within goal +- this
    double contact_z_above_top = 0.01;             // z band top, above block_top
    int contact_records = 4000;

    // Captures happen every Nth motion substep: 1 mm substeps at a nominal
    // 5 cm/s gives 50 substeps/s, so N=4 is 12.5 Hz.
    int capture_thin = 4;
    int rejitter_every = 25;  // free-space target draws between clutter changes

    int raster_width = kRasterWidthDefault;
    double fov_side = kFovSideDefault;

    void validate() const;
};

// Both collectors take the scene by value: re-jittering clutter mutates
// the local copy only.
std::vector<DatasetRecord> collect_free_space(SceneState scene, const CollectionConfig& config,
                                              int episode_id, Rng& rng);

std::vector<DatasetRecord> collect_close_contact(SceneState scene,
                                                 const CollectionConfig& config,
                                                 int episode_id, Rng& rng);

// Line-delimited text, one record per line, exact decimal round-trip.
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

struct DatasetStats {
    static constexpr int kBins = 16;
    std::size_t total = 0;
    std::size_t free_count = 0;
    std::size_t contact_count = 0;
    double free_fraction = 0.0;
    double contact_flag_fraction = 0.0;
    // Histogram ranges: dx, dy over +-0.08 m; dz over +-0.12 m; dpsi over
    // +-40 degrees. Mass outside the range is tallied separately.
    long hist[4][kBins] = {};
    long outside[4] = {};
};

DatasetStats dataset_stats(const std::vector<DatasetRecord>& records);

std::string format_stats(const DatasetStats& stats);

}  // namespace pih
