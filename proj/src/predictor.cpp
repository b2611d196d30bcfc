#include "pih/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pih/textio.hpp"

namespace pih {

namespace {

constexpr int kModelVersion = 1;

void append_float(std::string& out, float v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

// Lower-triangular Cholesky, in place. Returns false on a non-positive
// pivot (singular or indefinite system).
bool cholesky(std::vector<double>& a, int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            const double v = a[static_cast<std::size_t>(j) * n + k];
            d -= v * v;
        }
        if (!(d > 0.0)) return false;
        d = std::sqrt(d);
        a[static_cast<std::size_t>(j) * n + j] = d;
        for (int i = j + 1; i < n; ++i) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k) {
                s -= a[static_cast<std::size_t>(i) * n + k] *
                     a[static_cast<std::size_t>(j) * n + k];
            }
            a[static_cast<std::size_t>(i) * n + j] = s / d;
        }
    }
    return true;
}

void chol_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i) * n + k] * b[k];
        b[i] = s / l[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * b[k];
        b[i] = s / l[static_cast<std::size_t>(i) * n + i];
    }
}

struct Neighbor {
    double dist2;
    std::size_t index;
};

// k smallest distances, ties broken toward the lower record index. The
// scan visits records in index order, so a candidate only displaces a
// strictly worse one.
void knn_search(const PredictionModel& m, const std::vector<float>& query,
                std::vector<Neighbor>& best) {
    const int k = m.k;
    best.clear();
    best.reserve(k);
    const int d = m.feature_len;
    const float* q = query.data();
    double worst = 0.0;

    for (std::size_t i = 0; i < m.record_count; ++i) {
        const float* row = m.feat.data() + i * static_cast<std::size_t>(d);
        double acc = 0.0;
        if (static_cast<int>(best.size()) == k) {
            // Early abandonment once the partial sum exceeds the current
            // k-th best.
            int j = 0;
            bool abandoned = false;
            while (j < d) {
                const int stop = std::min(j + 128, d);
                for (; j < stop; ++j) {
                    const double diff = static_cast<double>(q[j]) - static_cast<double>(row[j]);
                    acc += diff * diff;
                }
                if (acc >= worst) {
                    abandoned = true;
                    break;
                }
            }
            if (abandoned) continue;
        } else {
            for (int j = 0; j < d; ++j) {
                const double diff = static_cast<double>(q[j]) - static_cast<double>(row[j]);
                acc += diff * diff;
            }
        }
        if (static_cast<int>(best.size()) < k) {
            best.push_back({acc, i});
            std::push_heap(best.begin(), best.end(),
                           [](const Neighbor& a, const Neighbor& b) { return a.dist2 < b.dist2; });
            if (static_cast<int>(best.size()) == k) worst = best.front().dist2;
        } else if (acc < worst) {
            std::pop_heap(best.begin(), best.end(),
                          [](const Neighbor& a, const Neighbor& b) { return a.dist2 < b.dist2; });
            best.back() = {acc, i};
            std::push_heap(best.begin(), best.end(),
                           [](const Neighbor& a, const Neighbor& b) { return a.dist2 < b.dist2; });
            worst = best.front().dist2;
        }
    }
    std::sort(best.begin(), best.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return a.index < b.index;
    });
}

std::vector<float> to_float_features(const Observation& obs) {
    const std::vector<double> f = features(obs);
    std::vector<float> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = static_cast<float>(f[i]);
    return out;
}

void load_training_payload(PredictionModel& m, const std::vector<DatasetRecord>& records) {
    if (records.empty()) throw std::invalid_argument("fit: empty dataset");
    const int width = records.front().observation.width;
    m.feature_len = feature_length(width);
    m.record_count = records.size();
    m.feat.resize(m.record_count * static_cast<std::size_t>(m.feature_len));
    m.labels.resize(m.record_count);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::vector<float> f = to_float_features(records[i].observation);
        if (static_cast<int>(f.size()) != m.feature_len) {
            throw std::invalid_argument("fit: inconsistent raster widths in dataset");
        }
        std::copy(f.begin(), f.end(),
                  m.feat.begin() + static_cast<std::size_t>(i) * m.feature_len);
        m.labels[i] = records[i].label;
    }
}

void solve_ridge(PredictionModel& m) {
    const std::size_t n = m.record_count;
    const int d = m.feature_len;
    constexpr int T = 5;

    std::vector<double> xmean(d, 0.0);
    std::array<double, T> ymean{};
    std::vector<std::array<double, T>> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = m.feat.data() + i * static_cast<std::size_t>(d);
        for (int j = 0; j < d; ++j) xmean[j] += row[j];
        y[i] = {m.labels[i].dx, m.labels[i].dy, m.labels[i].dz, std::sin(m.labels[i].dpsi),
                std::cos(m.labels[i].dpsi)};
        for (int t = 0; t < T; ++t) ymean[t] += y[i][t];
    }
    for (int j = 0; j < d; ++j) xmean[j] /= static_cast<double>(n);
    for (int t = 0; t < T; ++t) ymean[t] /= static_cast<double>(n);

    m.ridge_w.assign(static_cast<std::size_t>(T) * d, 0.0);

    const char* singular_msg =
        "fit_ridge: singular system; use lambda > 0 to regularize";

    if (n >= static_cast<std::size_t>(d)) {
        // Primal normal equations on centered data.
        std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
        std::vector<std::array<double, T>> rhs(d, std::array<double, T>{});
        std::vector<double> xc(d);
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = m.feat.data() + i * static_cast<std::size_t>(d);
            for (int j = 0; j < d; ++j) xc[j] = row[j] - xmean[j];
            for (int a = 0; a < d; ++a) {
                const double va = xc[a];
                if (va == 0.0) continue;
                double* g = gram.data() + static_cast<std::size_t>(a) * d;
                for (int b = a; b < d; ++b) g[b] += va * xc[b];
                for (int t = 0; t < T; ++t) rhs[a][t] += va * (y[i][t] - ymean[t]);
            }
        }
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < a; ++b) {
                gram[static_cast<std::size_t>(a) * d + b] =
                    gram[static_cast<std::size_t>(b) * d + a];
            }
            gram[static_cast<std::size_t>(a) * d + a] += m.lambda;
        }
        if (!cholesky(gram, d)) throw std::runtime_error(singular_msg);
        std::vector<double> col(d);
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < d; ++j) col[j] = rhs[j][t];
            chol_solve(gram, d, col);
            for (int j = 0; j < d; ++j) m.ridge_w[static_cast<std::size_t>(t) * d + j] = col[j];
        }
    } else {
        // Dual form: (Xc Xc^T + lambda I) alpha = Yc, W = Xc^T alpha.
        const int ni = static_cast<int>(n);
        std::vector<double> kmat(static_cast<std::size_t>(ni) * ni, 0.0);
        std::vector<std::vector<double>> xc(n, std::vector<double>(d));
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = m.feat.data() + i * static_cast<std::size_t>(d);
            for (int j = 0; j < d; ++j) xc[i][j] = row[j] - xmean[j];
        }
        for (int a = 0; a < ni; ++a) {
            for (int b = a; b < ni; ++b) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += xc[a][j] * xc[b][j];
                kmat[static_cast<std::size_t>(a) * ni + b] = s;
                kmat[static_cast<std::size_t>(b) * ni + a] = s;
            }
            kmat[static_cast<std::size_t>(a) * ni + a] += m.lambda;
        }
        if (!cholesky(kmat, ni)) throw std::runtime_error(singular_msg);
        std::vector<double> alpha(ni);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < ni; ++i) alpha[i] = y[i][t] - ymean[t];
            chol_solve(kmat, ni, alpha);
            double* w = m.ridge_w.data() + static_cast<std::size_t>(t) * d;
            for (int i = 0; i < ni; ++i) {
                const double a = alpha[i];
                if (a == 0.0) continue;
                for (int j = 0; j < d; ++j) w[j] += a * xc[i][j];
            }
        }
    }

    for (int t = 0; t < T; ++t) {
        double dot = 0.0;
        const double* w = m.ridge_w.data() + static_cast<std::size_t>(t) * d;
        for (int j = 0; j < d; ++j) dot += w[j] * xmean[j];
        m.ridge_b[t] = ymean[t] - dot;
    }
}

}  // namespace

void NoiseSpec::validate() const {
    if (sigma_xy_near < 0.0 || sigma_xy_far < 0.0 || sigma_z < 0.0 || sigma_psi < 0.0) {
        throw std::invalid_argument("noise spec: sigmas must be >= 0");
    }
    if (!(near_radius > 0.0)) {
        throw std::invalid_argument("noise spec: near_radius must be > 0");
    }
}

DeltaPose predict_oracle(const PredictionContext& ctx, const NoiseSpec& noise, Rng& rng) {
    noise.validate();
    const DeltaPose& d = ctx.true_delta;
    const double dist = planar_distance(d);
    const double sxy = dist >= noise.near_radius
                           ? noise.sigma_xy_far
                           : noise.sigma_xy_near + (noise.sigma_xy_far - noise.sigma_xy_near) *
                                                       (dist / noise.near_radius);
    // Draw order: x, y, z, psi. Draws happen even at sigma 0 so noise
    // profiles stay stream-aligned under paired seeds.
    const double nx = rng.normal() * sxy;
    const double ny = rng.normal() * sxy;
    const double nz = rng.normal() * noise.sigma_z;
    const double npsi = rng.normal() * noise.sigma_psi;
    return DeltaPose(d.dx + nx, d.dy + ny, d.dz + nz, wrap_angle(d.dpsi + npsi));
}

PredictionModel fit_knn(const std::vector<DatasetRecord>& records, int k,
                        KnnWeighting weighting) {
    if (k < 1) throw std::invalid_argument("fit_knn: k must be >= 1");
    if (records.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("fit_knn: dataset smaller than k");
    }
    PredictionModel m;
    m.kind = PredictionModel::Kind::knn;
    m.k = k;
    m.weighting = weighting;
    load_training_payload(m, records);
    return m;
}

PredictionModel fit_ridge(const std::vector<DatasetRecord>& records, double lambda) {
    if (records.empty()) throw std::invalid_argument("fit_ridge: empty dataset");
    if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
    PredictionModel m;
    m.kind = PredictionModel::Kind::ridge;
    m.lambda = lambda;
    load_training_payload(m, records);
    solve_ridge(m);
    return m;
}

std::vector<float> model_query(const PredictionModel& model, const Observation& obs) {
    std::vector<float> q = to_float_features(obs);
    if (static_cast<int>(q.size()) != model.feature_len) {
        throw std::invalid_argument("predict: feature length mismatch (model " +
                                    std::to_string(model.feature_len) + ", observation " +
                                    std::to_string(q.size()) + ")");
    }
    return q;
}

DeltaPose predict_model(const PredictionModel& model, const Observation& obs) {
    const std::vector<float> q = model_query(model, obs);
    if (model.kind == PredictionModel::Kind::ridge) {
        const int d = model.feature_len;
        std::array<double, 5> out = model.ridge_b;
        for (int t = 0; t < 5; ++t) {
            const double* w = model.ridge_w.data() + static_cast<std::size_t>(t) * d;
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += w[j] * static_cast<double>(q[j]);
            out[t] += s;
        }
        const double norm = std::hypot(out[3], out[4]);
        const double psi = norm < 1e-12 ? 0.0 : std::atan2(out[3], out[4]);
        return DeltaPose(out[0], out[1], out[2], wrap_angle(psi));
    }

    std::vector<Neighbor> best;
    knn_search(model, q, best);
    if (best.size() == 1) return model.labels[best[0].index];

    // Weights: uniform, or inverse Euclidean distance. Any exact match
    // takes all the weight; a single effective neighbor is returned
    // verbatim.
    std::vector<double> w(best.size(), 1.0);
    if (model.weighting == KnnWeighting::inverse_distance) {
        if (best[0].dist2 == 0.0) {
            for (std::size_t i = 0; i < best.size(); ++i) {
                w[i] = best[i].dist2 == 0.0 ? 1.0 : 0.0;
            }
        } else {
            for (std::size_t i = 0; i < best.size(); ++i) {
                w[i] = 1.0 / std::sqrt(best[i].dist2);
            }
        }
    }
    std::size_t effective = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < best.size(); ++i) {
        if (w[i] > 0.0) {
            ++effective;
            last = i;
        }
    }
    if (effective == 1) return model.labels[best[last].index];

    double wsum = 0.0, dx = 0.0, dy = 0.0, dz = 0.0, sp = 0.0, cp = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) {
        const DeltaPose& l = model.labels[best[i].index];
        wsum += w[i];
        dx += w[i] * l.dx;
        dy += w[i] * l.dy;
        dz += w[i] * l.dz;
        sp += w[i] * std::sin(l.dpsi);
        cp += w[i] * std::cos(l.dpsi);
    }
    dx /= wsum;
    dy /= wsum;
    dz /= wsum;
    const double norm = std::hypot(sp, cp);
    const double psi = norm < 1e-12 ? 0.0 : std::atan2(sp, cp);
    return DeltaPose(dx, dy, dz, wrap_angle(psi));
}

PredictionModel extend_model(const PredictionModel& base,
                             const std::vector<DatasetRecord>& more) {
    PredictionModel m = base;
    for (const DatasetRecord& r : more) {
        const std::vector<float> f = to_float_features(r.observation);
        if (static_cast<int>(f.size()) != m.feature_len) {
            throw std::invalid_argument("extend_model: feature length mismatch");
        }
        m.feat.insert(m.feat.end(), f.begin(), f.end());
        m.labels.push_back(r.label);
        ++m.record_count;
    }
    if (m.kind == PredictionModel::Kind::ridge) solve_ridge(m);
    return m;
}

void save_model(const PredictionModel& model, const std::string& path) {
    std::string buf;
    buf.reserve(1 << 20);
    buf += "pih-model ";
    buf += std::to_string(kModelVersion);
    buf.push_back('\n');
    buf += "kind ";
    buf += model.kind == PredictionModel::Kind::knn ? "knn" : "ridge";
    buf += "\nfeature_len ";
    buf += std::to_string(model.feature_len);
    buf += "\nrecords ";
    buf += std::to_string(model.record_count);
    buf += "\nk ";
    buf += std::to_string(model.k);
    buf += "\nweighting ";
    buf += model.weighting == KnnWeighting::uniform ? "uniform" : "inverse";
    buf += "\nlambda ";
    append_double(buf, model.lambda);
    buf += "\ndata\n";
    for (std::size_t i = 0; i < model.record_count; ++i) {
        const float* row = model.feat.data() + i * static_cast<std::size_t>(model.feature_len);
        for (int j = 0; j < model.feature_len; ++j) {
            if (j > 0) buf.push_back(' ');
            append_float(buf, row[j]);
        }
        buf.push_back(' ');
        append_double(buf, model.labels[i].dx);
        buf.push_back(' ');
        append_double(buf, model.labels[i].dy);
        buf.push_back(' ');
        append_double(buf, model.labels[i].dz);
        buf.push_back(' ');
        append_double(buf, model.labels[i].dpsi);
        buf.push_back('\n');
    }
    buf += "end\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

PredictionModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t offset = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(f, line)) {
            throw std::runtime_error("parse error at line " + std::to_string(line_no + 1) +
                                     ", byte " + std::to_string(offset) + " (" + what +
                                     "): unexpected end of file");
        }
        ++line_no;
        return TokenCursor(line, line_no, offset);
    };
    auto advance = [&]() { offset += line.size() + 1; };

    PredictionModel m;
    {
        TokenCursor cur = next_line("header");
        cur.expect("pih-model", "header magic");
        const long version = cur.integer("version");
        if (version != kModelVersion) {
            cur.fail("version", "unsupported version " + std::to_string(version));
        }
        advance();
    }
    {
        TokenCursor cur = next_line("kind");
        cur.expect("kind", "kind");
        const std::string_view kind = cur.token("kind value");
        if (kind == "knn") {
            m.kind = PredictionModel::Kind::knn;
        } else if (kind == "ridge") {
            m.kind = PredictionModel::Kind::ridge;
        } else {
            cur.fail("kind value", "expected knn or ridge");
        }
        advance();
    }
    long records = 0;
    {
        TokenCursor cur = next_line("feature_len");
        cur.expect("feature_len", "feature_len");
        m.feature_len = static_cast<int>(cur.integer("feature_len value"));
        if (m.feature_len <= 0) cur.fail("feature_len value", "must be positive");
        advance();
        cur = next_line("records");
        cur.expect("records", "records");
        records = cur.integer("records value");
        if (records < 0) cur.fail("records value", "must be >= 0");
        advance();
        cur = next_line("k");
        cur.expect("k", "k");
        m.k = static_cast<int>(cur.integer("k value"));
        advance();
        cur = next_line("weighting");
        cur.expect("weighting", "weighting");
        const std::string_view w = cur.token("weighting value");
        if (w == "uniform") {
            m.weighting = KnnWeighting::uniform;
        } else if (w == "inverse") {
            m.weighting = KnnWeighting::inverse_distance;
        } else {
            cur.fail("weighting value", "expected uniform or inverse");
        }
        advance();
        cur = next_line("lambda");
        cur.expect("lambda", "lambda");
        m.lambda = cur.number("lambda value");
        advance();
        cur = next_line("data");
        cur.expect("data", "data marker");
        advance();
    }

    m.record_count = static_cast<std::size_t>(records);
    m.feat.resize(m.record_count * static_cast<std::size_t>(m.feature_len));
    m.labels.resize(m.record_count);
    for (long i = 0; i < records; ++i) {
        TokenCursor cur = next_line("data row");
        float* row = m.feat.data() + static_cast<std::size_t>(i) * m.feature_len;
        for (int j = 0; j < m.feature_len; ++j) {
            const double v = cur.number("feature");
            if (!std::isfinite(v)) cur.fail("feature", "non-finite");
            row[j] = static_cast<float>(v);
        }
        const double dx = cur.number("label dx");
        const double dy = cur.number("label dy");
        const double dz = cur.number("label dz");
        const double dpsi = cur.number("label dpsi");
        if (!std::isfinite(dx) || !std::isfinite(dy) || !std::isfinite(dz) ||
            !std::isfinite(dpsi)) {
            cur.fail("label", "non-finite");
        }
        if (!cur.done()) cur.fail("data row", "trailing tokens");
        m.labels[static_cast<std::size_t>(i)] = DeltaPose(dx, dy, dz, dpsi);
        advance();
    }
    {
        TokenCursor cur = next_line("trailer");
        cur.expect("end", "trailer");
    }
    if (m.kind == PredictionModel::Kind::knn) {
        if (m.k < 1 || m.record_count < static_cast<std::size_t>(m.k)) {
            throw std::runtime_error("load_model: k exceeds stored record count");
        }
    } else {
        if (m.record_count == 0) throw std::runtime_error("load_model: ridge with no records");
        solve_ridge(m);
    }
    return m;
}

}  // namespace pih
