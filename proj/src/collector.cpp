#include "pih/collector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pih/textio.hpp"

namespace pih {

namespace {

constexpr int kDatasetVersion = 1;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void append_pose(std::string& out, const Pose4& p) {
    append_double(out, p.x);
    out.push_back(' ');
    append_double(out, p.y);
    out.push_back(' ');
    append_double(out, p.z);
    out.push_back(' ');
    append_double(out, p.psi);
}

void append_delta(std::string& out, const DeltaPose& d) {
    append_double(out, d.dx);
    out.push_back(' ');
    append_double(out, d.dy);
    out.push_back(' ');
    append_double(out, d.dz);
    out.push_back(' ');
    append_double(out, d.dpsi);
}

Pose4 read_pose(TokenCursor& cur, const char* what) {
    const double x = cur.number(what);
    const double y = cur.number(what);
    const double z = cur.number(what);
    const double psi = cur.number(what);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(psi)) {
        cur.fail(what, "non-finite pose");
    }
    return Pose4(x, y, z, psi);
}

DeltaPose read_delta(TokenCursor& cur, const char* what) {
    const double dx = cur.number(what);
    const double dy = cur.number(what);
    const double dz = cur.number(what);
    const double dpsi = cur.number(what);
    if (!std::isfinite(dx) || !std::isfinite(dy) || !std::isfinite(dz) || !std::isfinite(dpsi)) {
        cur.fail(what, "non-finite delta");
    }
    return DeltaPose(dx, dy, dz, dpsi);
}

// Capture shared by both collectors: render, label via the goal delta,
// append.
struct Capture {
    std::vector<DatasetRecord>& out;
    const SceneState& scene;
    const CollectionConfig& cfg;
    int episode_id;
    Provenance provenance;
    int step = 0;

    void operator()(const Pose4& raw_pose, bool contact) {
        // Recorded poses are grid-quantized readings; with the registered
        // goal on the same grid, every label is an exact difference.
        const Pose4 pose = quantize_pose(raw_pose);
        DatasetRecord rec;
        rec.episode_id = episode_id;
        rec.step = step++;
        rec.observation = render(scene, pose, cfg.raster_width, cfg.fov_side);
        rec.current = pose;
        rec.goal = scene.goal;
        rec.label = delta(scene.goal, pose);
        rec.provenance = provenance;
        rec.contact = contact;
        out.push_back(std::move(rec));
    }
};

}  // namespace

void CollectionConfig::validate() const {
    if (!(free_half_xy > 0.0) || !(free_half_psi > 0.0) || !(contact_half_xy > 0.0)) {
        throw std::invalid_argument("collection config: boxes must be positive");
    }
    if (!(free_z_low > 0.0) || free_z_low >= free_z_high) {
        throw std::invalid_argument("collection config: bad free-space z band");
    }
    if (!(wiggle_step > 0.0) || !(wiggle_step_psi > 0.0)) {
        throw std::invalid_argument("collection config: wiggle steps must be positive");
    }
    if (capture_thin < 1 || rejitter_every < 1) {
        throw std::invalid_argument("collection config: thinning factors must be >= 1");
    }
    if (raster_width <= 0 || !(fov_side > 0.0)) {
        throw std::invalid_argument("collection config: bad raster parameters");
    }
}

std::vector<DatasetRecord> collect_free_space(SceneState scene, const CollectionConfig& config,
                                              int episode_id, Rng& rng) {
    config.validate();
    std::vector<DatasetRecord> out;
    out.reserve(config.free_records);
    Capture capture{out, scene, config, episode_id, Provenance::free_space};

    const Pose4 goal = scene.goal;
    Pose4 pose(goal.x, goal.y, goal.z + 0.5 * (config.free_z_low + config.free_z_high),
               goal.psi);
    int substep_counter = 0;
    int draws = 0;
    while (static_cast<int>(out.size()) < config.free_records) {
        if (draws > 0 && draws % config.rejitter_every == 0) {
            rejitter_distractors(scene, rng);
        }
        ++draws;
        const Pose4 target(goal.x + rng.uniform(-config.free_half_xy, config.free_half_xy),
                           goal.y + rng.uniform(-config.free_half_xy, config.free_half_xy),
                           goal.z + rng.uniform(config.free_z_low, config.free_z_high),
                           wrap_angle(goal.psi +
                                      rng.uniform(-config.free_half_psi, config.free_half_psi)));
        const MotionResult res = resolve_motion(
            scene, pose, target, [&](const MotionStep& s) {
                if (++substep_counter % config.capture_thin == 0 &&
                    static_cast<int>(out.size()) < config.free_records) {
                    capture(s.pose, s.events.any_contact());
                }
            });
        pose = res.achieved;
    }
    return out;
}

std::vector<DatasetRecord> collect_close_contact(SceneState scene,
                                                 const CollectionConfig& config,
                                                 int episode_id, Rng& rng) {
    config.validate();
    std::vector<DatasetRecord> out;
    out.reserve(config.contact_records);
    Capture capture{out, scene, config, episode_id, Provenance::close_contact};

    const Pose4 goal = scene.goal;
    const double top = scene.spec.block_top;
    const double z_hi = top + config.contact_z_above_top;
    Pose4 pose(goal.x, goal.y, top + 0.005, goal.psi);

    while (static_cast<int>(out.size()) < config.contact_records) {
        const Pose4 target(
            clip(pose.x + rng.uniform(-config.wiggle_step, config.wiggle_step),
                 goal.x - config.contact_half_xy, goal.x + config.contact_half_xy),
            clip(pose.y + rng.uniform(-config.wiggle_step, config.wiggle_step),
                 goal.y - config.contact_half_xy, goal.y + config.contact_half_xy),
            clip(pose.z + rng.uniform(-config.wiggle_step, config.wiggle_step), goal.z, z_hi),
            wrap_angle(goal.psi +
                       clip(wrap_angle(pose.psi - goal.psi) +
                                rng.uniform(-config.wiggle_step_psi, config.wiggle_step_psi),
                            -config.contact_psi_clip, config.contact_psi_clip)));
        const MotionResult res = resolve_motion(
            scene, pose, target, [&](const MotionStep& s) {
                if (static_cast<int>(out.size()) < config.contact_records) {
                    capture(s.pose, s.events.any_contact());
                }
            });
        pose = res.achieved;
    }
    return out;
}

void write_dataset(const Dataset& data, const std::string& path) {
    std::string buf;
    buf.reserve(1 << 20);
    buf += "pih-dataset ";
    buf += std::to_string(kDatasetVersion);
    buf += " W ";
    buf += std::to_string(data.width);
    buf += " fov ";
    append_double(buf, data.fov_side);
    buf += " records ";
    buf += std::to_string(data.records.size());
    buf.push_back('\n');

    const std::size_t cells = static_cast<std::size_t>(data.width) * data.width;
    for (const DatasetRecord& r : data.records) {
        if (r.observation.raster_a.size() != cells || r.observation.raster_b.size() != cells) {
            throw std::invalid_argument("write_dataset: record raster size mismatch");
        }
        buf += std::to_string(r.episode_id);
        buf.push_back(' ');
        buf += std::to_string(r.step);
        buf.push_back(' ');
        buf.push_back(r.provenance == Provenance::free_space ? 'f' : 'c');
        buf.push_back(' ');
        buf.push_back(r.contact ? '1' : '0');
        buf.push_back(' ');
        append_pose(buf, r.current);
        buf.push_back(' ');
        append_pose(buf, r.goal);
        buf.push_back(' ');
        append_delta(buf, r.label);
        buf.push_back(' ');
        append_double(buf, r.observation.gripper_height);
        for (double v : r.observation.raster_a) {
            buf.push_back(' ');
            append_double(buf, v);
        }
        for (double v : r.observation.raster_b) {
            buf.push_back(' ');
            append_double(buf, v);
        }
        buf.push_back('\n');
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_dataset: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_dataset: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t offset = 0;

    if (!std::getline(f, line)) {
        throw std::runtime_error("parse error at line 1, byte 0 (header): empty file");
    }
    ++line_no;
    TokenCursor head(line, line_no, offset);
    head.expect("pih-dataset", "header magic");
    const long version = head.integer("header version");
    if (version != kDatasetVersion) {
        head.fail("header version", "unsupported version " + std::to_string(version));
    }
    head.expect("W", "header");
    const long width = head.integer("raster width");
    head.expect("fov", "header");
    const double fov = head.number("fov side");
    head.expect("records", "header");
    const long count = head.integer("record count");
    if (width <= 0 || !(fov > 0.0) || count < 0) head.fail("header", "bad header values");
    offset += line.size() + 1;

    Dataset data;
    data.width = static_cast<int>(width);
    data.fov_side = fov;
    data.records.reserve(static_cast<std::size_t>(count));
    const std::size_t cells = static_cast<std::size_t>(width) * width;

    for (long i = 0; i < count; ++i) {
        if (!std::getline(f, line)) {
            throw std::runtime_error("parse error at line " + std::to_string(line_no + 1) +
                                     ", byte " + std::to_string(offset) +
                                     " (record): file truncated, expected " +
                                     std::to_string(count) + " records");
        }
        ++line_no;
        TokenCursor cur(line, line_no, offset);
        DatasetRecord r;
        r.episode_id = static_cast<int>(cur.integer("episode id"));
        r.step = static_cast<int>(cur.integer("step"));
        const std::string_view prov = cur.token("provenance");
        if (prov == "f") {
            r.provenance = Provenance::free_space;
        } else if (prov == "c") {
            r.provenance = Provenance::close_contact;
        } else {
            cur.fail("provenance", "expected 'f' or 'c'");
        }
        const long contact = cur.integer("contact flag");
        if (contact != 0 && contact != 1) cur.fail("contact flag", "expected 0 or 1");
        r.contact = contact == 1;
        r.current = read_pose(cur, "current pose");
        r.goal = read_pose(cur, "goal pose");
        r.label = read_delta(cur, "label");
        const double gh = cur.number("gripper height");
        if (!std::isfinite(gh)) cur.fail("gripper height", "non-finite");
        r.observation.gripper_height = gh;
        r.observation.width = data.width;
        r.observation.fov_side = data.fov_side;
        r.observation.raster_a.resize(cells);
        r.observation.raster_b.resize(cells);
        for (std::size_t cidx = 0; cidx < cells; ++cidx) {
            const double v = cur.number("raster a cell");
            if (!std::isfinite(v)) cur.fail("raster a cell", "non-finite");
            r.observation.raster_a[cidx] = v;
        }
        for (std::size_t cidx = 0; cidx < cells; ++cidx) {
            const double v = cur.number("raster b cell");
            if (!std::isfinite(v)) cur.fail("raster b cell", "non-finite");
            r.observation.raster_b[cidx] = v;
        }
        if (!cur.done()) cur.fail("record", "trailing tokens");
        data.records.push_back(std::move(r));
        offset += line.size() + 1;
    }
    if (std::getline(f, line) && !line.empty()) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no + 1) +
                                 ", byte " + std::to_string(offset) +
                                 " (trailer): more lines than declared records");
    }
    return data;
}

DatasetStats dataset_stats(const std::vector<DatasetRecord>& records) {
    DatasetStats st;
    st.total = records.size();
    const double ranges[4] = {0.08, 0.08, 0.12, 40.0 * kPi / 180.0};
    std::size_t contact_flagged = 0;
    for (const DatasetRecord& r : records) {
        if (r.provenance == Provenance::free_space) {
            ++st.free_count;
        } else {
            ++st.contact_count;
        }
        if (r.contact) ++contact_flagged;
        const double vals[4] = {r.label.dx, r.label.dy, r.label.dz, r.label.dpsi};
        for (int axis = 0; axis < 4; ++axis) {
            const double v = vals[axis];
            const double range = ranges[axis];
            if (v < -range || v > range) {
                ++st.outside[axis];
                continue;
            }
            int bin = static_cast<int>((v + range) / (2.0 * range) * DatasetStats::kBins);
            bin = std::min(std::max(bin, 0), DatasetStats::kBins - 1);
            ++st.hist[axis][bin];
        }
    }
    if (st.total > 0) {
        st.free_fraction = static_cast<double>(st.free_count) / static_cast<double>(st.total);
        st.contact_flag_fraction =
            static_cast<double>(contact_flagged) / static_cast<double>(st.total);
    }
    return st;
}

std::string format_stats(const DatasetStats& st) {
    std::ostringstream os;
    os << "records: " << st.total << "  free_space: " << st.free_count << " ("
       << 100.0 * st.free_fraction << "%)  close_contact: " << st.contact_count
       << "\ncontact-flagged fraction: " << st.contact_flag_fraction << "\n";
    const char* names[4] = {"dx", "dy", "dz", "dpsi"};
    for (int axis = 0; axis < 4; ++axis) {
        os << names[axis] << " hist:";
        for (int b = 0; b < DatasetStats::kBins; ++b) os << ' ' << st.hist[axis][b];
        os << "  outside: " << st.outside[axis] << "\n";
    }
    return os.str();
}

}  // namespace pih
