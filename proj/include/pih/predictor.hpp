#pragma once

// The relative-pose regression family. A noise-profiled oracle stands in
// for a trained visual policy at configurable accuracy; k-NN and ridge
// regressors are fit on collected raster datasets. All predictors share
// one contract: observation in, relative pose out.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pih/collector.hpp"
#include "pih/geometry.hpp"
#include "pih/observation.hpp"
#include "pih/rng.hpp"

namespace pih {

struct PredictionContext {
    Observation observation;
    DeltaPose true_delta;  // consumed only by oracle predictors
};

struct NoiseSpec {
    double sigma_xy_near = 0.0;  // lateral noise at zero distance
    double sigma_xy_far = 0.0;   // lateral noise at/beyond near_radius
    double sigma_z = 0.0;
    double sigma_psi = 0.0;
    double near_radius = 0.02;   // lateral sigma interpolation range

    void validate() const;
};

// True relative pose plus independent Gaussian noise per component; the
// lateral sigma interpolates linearly from sigma_xy_far down to
// sigma_xy_near as the true planar distance falls to zero.
DeltaPose predict_oracle(const PredictionContext& ctx, const NoiseSpec& noise, Rng& rng);

enum class KnnWeighting { uniform, inverse_distance };

struct PredictionModel {
    enum class Kind { knn, ridge };
    Kind kind = Kind::knn;
    int feature_len = 0;

    // Training payload. k-NN predicts from it directly; ridge keeps it so
    // the model can be refit when new records are merged in.
    std::size_t record_count = 0;
    std::vector<float> feat;  // record_count x feature_len, row major
    std::vector<DeltaPose> labels;

    int k = 8;
    KnnWeighting weighting = KnnWeighting::inverse_distance;

    double lambda = 1e-6;
    // Ridge solution: rows dx, dy, dz, sin(psi), cos(psi).
    std::vector<double> ridge_w;  // 5 x feature_len
    std::array<double, 5> ridge_b{};
};

PredictionModel fit_knn(const std::vector<DatasetRecord>& records, int k,
                        KnnWeighting weighting);

// Regularized least squares per output component; yaw is fit through
// sin/cos targets and recovered by arctangent. A singular system at
// lambda = 0 is reported with a hint to raise lambda.
PredictionModel fit_ridge(const std::vector<DatasetRecord>& records, double lambda);

DeltaPose predict_model(const PredictionModel& model, const Observation& obs);

// Appends records to the model's training set; ridge models are refit on
// the union.
PredictionModel extend_model(const PredictionModel& base,
                             const std::vector<DatasetRecord>& more);

void save_model(const PredictionModel& model, const std::string& path);
PredictionModel load_model(const std::string& path);

// Converts an observation to the model's query vector (features cast to
// the model's float storage so identical observations match stored rows
// exactly).
std::vector<float> model_query(const PredictionModel& model, const Observation& obs);

}  // namespace pih
