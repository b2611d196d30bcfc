#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pih/predictor.hpp"
#include "support/oracles.hpp"

using namespace pih;

namespace {

// Tiny hand-built observations (W = 2, feature length 9) for regressor
// unit tests.
Observation tiny_obs(std::initializer_list<double> cells_a, double gz) {
    Observation o;
    o.width = 2;
    o.fov_side = 0.16;
    o.raster_a.assign(cells_a);
    o.raster_b.assign(4, 0.0);
    o.gripper_height = gz;
    return o;
}

DatasetRecord tiny_record(const Observation& obs, const DeltaPose& label) {
    DatasetRecord r;
    r.observation = obs;
    r.current = Pose4(0, 0, obs.gripper_height, 0);
    r.goal = apply(r.current, label);
    r.label = label;
    return r;
}

std::vector<DatasetRecord> random_tiny_dataset(int n, Rng& rng) {
    std::vector<DatasetRecord> out;
    for (int i = 0; i < n; ++i) {
        const Observation o = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                        rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                       rng.uniform(0, 0.1));
        out.push_back(tiny_record(o, DeltaPose(rng.uniform(-0.05, 0.05),
                                               rng.uniform(-0.05, 0.05),
                                               rng.uniform(-0.05, 0.05),
                                               rng.uniform(-0.6, 0.6))));
    }
    return out;
}

}  // namespace

TEST_CASE("oracle with zero noise returns the exact delta") {
    PredictionContext ctx;
    ctx.true_delta = DeltaPose(0.012, -0.03, 0.004, 0.5);
    Rng rng(1);
    const DeltaPose p = predict_oracle(ctx, NoiseSpec{}, rng);
    CHECK(p.dx == ctx.true_delta.dx);
    CHECK(p.dy == ctx.true_delta.dy);
    CHECK(p.dz == ctx.true_delta.dz);
    CHECK(p.dpsi == ctx.true_delta.dpsi);
}

TEST_CASE("oracle noise magnitude matches the configured sigma") {
    NoiseSpec noise;
    noise.sigma_xy_near = 0.002;
    noise.sigma_xy_far = 0.002;
    PredictionContext ctx;
    ctx.true_delta = DeltaPose(0.05, 0.0, -0.02, 0.0);
    Rng rng(12);
    double sq = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const DeltaPose p = predict_oracle(ctx, noise, rng);
        const double e = p.dx - ctx.true_delta.dx;
        sq += e * e;
    }
    const double std_hat = std::sqrt(sq / n);
    CHECK(std_hat == doctest::Approx(0.002).epsilon(0.05));
}

TEST_CASE("coarse profile keeps its near sigma at zero distance") {
    NoiseSpec noise;
    noise.sigma_xy_near = 0.004;
    noise.sigma_xy_far = 0.008;
    PredictionContext ctx;
    ctx.true_delta = DeltaPose(0.0, 0.0, -0.01, 0.0);  // planar distance 0
    Rng rng(13);
    double sq = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const DeltaPose p = predict_oracle(ctx, noise, rng);
        sq += p.dx * p.dx;
    }
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.004).epsilon(0.05));

    // At/beyond near_radius the far sigma applies.
    ctx.true_delta = DeltaPose(0.05, 0.0, -0.01, 0.0);
    sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const DeltaPose p = predict_oracle(ctx, noise, rng);
        const double e = p.dx - 0.05;
        sq += e * e;
    }
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.008).epsilon(0.05));
}

TEST_CASE("knn with a single record predicts its label everywhere") {
    const auto rec = tiny_record(tiny_obs({0.01, 0.02, 0.0, 0.0}, 0.05),
                                 DeltaPose(0.01, -0.02, 0.003, 0.2));
    const PredictionModel m = fit_knn({rec}, 1, KnnWeighting::uniform);
    const DeltaPose p = predict_model(m, tiny_obs({0.04, 0.0, 0.01, 0.02}, 0.09));
    CHECK(p.dx == rec.label.dx);
    CHECK(p.dy == rec.label.dy);
    CHECK(p.dz == rec.label.dz);
    CHECK(p.dpsi == rec.label.dpsi);
}

TEST_CASE("knn exact query returns the stored label verbatim") {
    Rng rng(3);
    auto data = random_tiny_dataset(40, rng);
    const PredictionModel m = fit_knn(data, 1, KnnWeighting::inverse_distance);
    const DeltaPose p = predict_model(m, data[17].observation);
    CHECK(p.dx == data[17].label.dx);
    CHECK(p.dpsi == data[17].label.dpsi);
}

TEST_CASE("knn inverse-distance hand-computed case") {
    // Labels (1,0,0,0) and (0,0,0,0) at distances 1 and 3: dx = 0.75.
    // Feature scale: cells divide by 0.05, so cell = 0.05 gives feature 1.
    const auto a = tiny_record(tiny_obs({0.05, 0, 0, 0}, 0.0), DeltaPose(1, 0, 0, 0));
    const auto b = tiny_record(tiny_obs({0.15, 0, 0, 0}, 0.0), DeltaPose(0, 0, 0, 0));
    const PredictionModel m = fit_knn({a, b}, 2, KnnWeighting::inverse_distance);
    const DeltaPose p = predict_model(m, tiny_obs({0.0, 0, 0, 0}, 0.0));
    CHECK(p.dx == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("knn prediction is invariant to record order without ties") {
    Rng rng(5);
    auto data = random_tiny_dataset(60, rng);
    const PredictionModel m1 = fit_knn(data, 5, KnnWeighting::inverse_distance);
    auto shuffled = data;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    }
    const PredictionModel m2 = fit_knn(shuffled, 5, KnnWeighting::inverse_distance);
    for (int i = 0; i < 30; ++i) {
        const Observation probe = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                            rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                           rng.uniform(0, 0.1));
        const DeltaPose p1 = predict_model(m1, probe);
        const DeltaPose p2 = predict_model(m2, probe);
        CHECK(p1.dx == doctest::Approx(p2.dx).epsilon(1e-12));
        CHECK(p1.dpsi == doctest::Approx(p2.dpsi).epsilon(1e-12));
    }
}

TEST_CASE("knn rejects bad arguments") {
    Rng rng(6);
    auto data = random_tiny_dataset(3, rng);
    CHECK_THROWS_AS(fit_knn({}, 1, KnnWeighting::uniform), std::invalid_argument);
    CHECK_THROWS_AS(fit_knn(data, 4, KnnWeighting::uniform), std::invalid_argument);
    CHECK_THROWS_AS(fit_knn(data, 0, KnnWeighting::uniform), std::invalid_argument);
    const PredictionModel m = fit_knn(data, 2, KnnWeighting::uniform);
    Observation wrong;
    wrong.width = 3;
    wrong.raster_a.assign(9, 0.0);
    wrong.raster_b.assign(9, 0.0);
    CHECK_THROWS_AS(predict_model(m, wrong), std::invalid_argument);
}

TEST_CASE("predicted yaw is always wrapped") {
    Rng rng(21);
    auto data = random_tiny_dataset(30, rng);
    for (auto& r : data) r.label = DeltaPose(0, 0, 0, rng.uniform(2.9, 3.1));
    const PredictionModel m = fit_knn(data, 7, KnnWeighting::inverse_distance);
    for (int i = 0; i < 20; ++i) {
        const Observation probe = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                            rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                           rng.uniform(0, 0.1));
        const DeltaPose p = predict_model(m, probe);
        CHECK(p.dpsi > -kPi);
        CHECK(p.dpsi <= kPi);
    }
}

TEST_CASE("ridge recovers an exact linear relation") {
    Rng rng(31);
    std::vector<DatasetRecord> data;
    for (int i = 0; i < 50; ++i) {
        const Observation o = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                        rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                       rng.uniform(0, 0.1));
        const double f0 = o.raster_a[0] / kFeatureHeightScale;
        data.push_back(tiny_record(o, DeltaPose(f0, 0, 0, 0)));
    }
    const PredictionModel m = fit_ridge(data, 1e-9);
    for (int i = 0; i < 10; ++i) {
        const Observation probe = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                            rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                           rng.uniform(0, 0.1));
        const double expect = probe.raster_a[0] / kFeatureHeightScale;
        CHECK(std::abs(predict_model(m, probe).dx - expect) < 1e-6);
    }
}

TEST_CASE("ridge collapses to the label mean as lambda grows") {
    Rng rng(32);
    auto data = random_tiny_dataset(40, rng);
    double mean_dx = 0.0;
    for (const auto& r : data) mean_dx += r.label.dx;
    mean_dx /= static_cast<double>(data.size());
    const PredictionModel m = fit_ridge(data, 1e9);
    const Observation probe = tiny_obs({0.01, 0.02, 0.03, 0.04}, 0.05);
    CHECK(predict_model(m, probe).dx == doctest::Approx(mean_dx).epsilon(1e-4));
}

TEST_CASE("ridge matches the normal-equations oracle") {
    Rng rng(33);
    auto data = random_tiny_dataset(50, rng);
    const double lambda = 1e-4;
    const PredictionModel m = fit_ridge(data, lambda);

    std::vector<std::vector<double>> rows;
    std::vector<double> ys_dx, ys_dz;
    for (const auto& r : data) {
        rows.push_back(features(r.observation));
        ys_dx.push_back(r.label.dx);
        ys_dz.push_back(r.label.dz);
    }
    const testing::RidgeOracle odx(rows, ys_dx, lambda);
    const testing::RidgeOracle odz(rows, ys_dz, lambda);
    for (int i = 0; i < 20; ++i) {
        const Observation probe = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                            rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                           rng.uniform(0, 0.1));
        const DeltaPose p = predict_model(m, probe);
        const std::vector<double> f = features(probe);
        CHECK(std::abs(p.dx - odx.predict(f)) < 1e-8);
        CHECK(std::abs(p.dz - odz.predict(f)) < 1e-8);
    }
}

TEST_CASE("ridge training objective does not increase with more data at fixed lambda") {
    Rng rng(34);
    auto data = random_tiny_dataset(60, rng);
    // correlated labels so the fit is meaningful
    for (auto& r : data) {
        r.label = DeltaPose(0.3 * r.observation.raster_a[1] / kFeatureHeightScale +
                                0.01 * rng.normal(),
                            0, 0, 0);
    }
    const double lambda = 1e-3;
    auto sq_resid_mean = [&](const PredictionModel& m, std::size_t n) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = predict_model(m, data[i].observation).dx - data[i].label.dx;
            s += e * e;
        }
        return s / static_cast<double>(n);
    };
    const std::vector<DatasetRecord> small(data.begin(), data.begin() + 30);
    const PredictionModel m_small = fit_ridge(small, lambda);
    const PredictionModel m_big = fit_ridge(data, lambda);
    // The small model fits its own 30 samples at least as well as the big
    // model fits them (least-squares optimality on the subset).
    CHECK(sq_resid_mean(m_small, 30) <= sq_resid_mean(m_big, 30) + 1e-12);
}

TEST_CASE("ridge rejects a singular system at lambda zero") {
    // Duplicate feature rows with conflicting intercept-only structure make
    // the normal equations singular.
    std::vector<DatasetRecord> data;
    for (int i = 0; i < 12; ++i) {
        data.push_back(tiny_record(tiny_obs({0.01, 0.01, 0.01, 0.01}, 0.05),
                                   DeltaPose(0.001 * i, 0, 0, 0)));
    }
    CHECK_THROWS_WITH_AS(fit_ridge(data, 0.0),
                         doctest::Contains("lambda"), std::runtime_error);
    CHECK_NOTHROW(fit_ridge(data, 1e-6));
}

TEST_CASE("model save/load round trip predicts identically") {
    Rng rng(41);
    auto data = random_tiny_dataset(100, rng);
    const PredictionModel m = fit_knn(data, 6, KnnWeighting::inverse_distance);
    const std::string path = "test_model_roundtrip.pihm";
    save_model(m, path);
    const PredictionModel loaded = load_model(path);
    for (int i = 0; i < 50; ++i) {
        const Observation probe = tiny_obs({rng.uniform(0, 0.05), rng.uniform(0, 0.05),
                                            rng.uniform(0, 0.05), rng.uniform(0, 0.05)},
                                           rng.uniform(0, 0.1));
        const DeltaPose a = predict_model(m, probe);
        const DeltaPose b = predict_model(loaded, probe);
        CHECK(a.dx == b.dx);
        CHECK(a.dy == b.dy);
        CHECK(a.dz == b.dz);
        CHECK(a.dpsi == b.dpsi);
    }
    std::remove(path.c_str());
}

TEST_CASE("ridge save/load refits to identical predictions") {
    Rng rng(42);
    auto data = random_tiny_dataset(40, rng);
    const PredictionModel m = fit_ridge(data, 1e-5);
    const std::string path = "test_ridge_roundtrip.pihm";
    save_model(m, path);
    const PredictionModel loaded = load_model(path);
    const Observation probe = tiny_obs({0.02, 0.01, 0.0, 0.03}, 0.04);
    CHECK(predict_model(m, probe).dx == predict_model(loaded, probe).dx);
    CHECK(predict_model(m, probe).dpsi == predict_model(loaded, probe).dpsi);
    std::remove(path.c_str());
}

TEST_CASE("model file errors are descriptive") {
    const std::string path = "test_model_bad.pihm";
    {
        std::ofstream f(path);  // empty file
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("byte"), std::runtime_error);
    {
        std::ofstream f(path);
        f << "pih-model 99\n";
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("version"), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model("no_such_file.pihm"), std::runtime_error);
}

TEST_CASE("extend_model appends records and keeps feature length") {
    Rng rng(51);
    auto data = random_tiny_dataset(20, rng);
    const PredictionModel base = fit_knn(data, 3, KnnWeighting::uniform);
    auto more = random_tiny_dataset(10, rng);
    const PredictionModel bigger = extend_model(base, more);
    CHECK(bigger.record_count == 30);
    CHECK(bigger.feature_len == base.feature_len);
}
