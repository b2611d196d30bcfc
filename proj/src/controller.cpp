#include "pih/controller.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pih/textio.hpp"

namespace pih {

namespace {

constexpr int kTraceVersion = 1;

double proximity(const Pose4& p, const Pose4& goal) {
    const DeltaPose d = delta(goal, p);
    return std::max(planar_distance(d), std::abs(d.dz));
}

void append_pose(std::string& out, const Pose4& p) {
    append_double(out, p.x);
    out.push_back(' ');
    append_double(out, p.y);
    out.push_back(' ');
    append_double(out, p.z);
    out.push_back(' ');
    append_double(out, p.psi);
}

void append_cross_section(std::string& out, const CrossSection& c) {
    if (c.kind == CrossSection::Kind::circle) {
        out += "circle ";
        append_double(out, c.radius);
    } else {
        out += "rect ";
        append_double(out, c.width);
        out.push_back(' ');
        append_double(out, c.height);
    }
}

Pose4 read_pose(TokenCursor& cur, const char* what) {
    const double x = cur.number(what);
    const double y = cur.number(what);
    const double z = cur.number(what);
    const double psi = cur.number(what);
    return Pose4(x, y, z, psi);
}

CrossSection read_cross_section(TokenCursor& cur, const char* what) {
    const std::string_view kind = cur.token(what);
    if (kind == "circle") return CrossSection::circle(cur.number(what));
    if (kind == "rect") {
        const double w = cur.number(what);
        const double h = cur.number(what);
        return CrossSection::rectangle(w, h);
    }
    cur.fail(what, "expected circle or rect");
}

}  // namespace

void ControllerParams::validate() const {
    if (!(safety_offset > 0.0) || !(descend_step > 0.0) || !(xy_thresh > 0.0) ||
        !(psi_thresh > 0.0) || !(dz_thresh > 0.0) || !(phase2_margin > 0.0) ||
        !(noise_bound > 0.0)) {
        throw std::invalid_argument("controller params: all fields must be positive");
    }
    if (noise_bound >= xy_thresh) {
        throw std::invalid_argument("controller params: noise_bound must be < xy_thresh");
    }
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::coarse_alignment: return "coarse_alignment";
        case Phase::fine_vertical: return "fine_vertical";
        case Phase::close_contact: return "close_contact";
    }
    return "?";
}

Phase select_phase(const DeltaPose& dp, const Pose4& p, const Pose4& g,
                   const ControllerParams& params) {
    if (planar_distance(dp) > params.xy_thresh || std::abs(dp.dpsi) > params.psi_thresh ||
        dp.dz > params.dz_thresh) {
        return Phase::coarse_alignment;
    }
    if (g.z + params.phase2_margin < p.z) {
        return Phase::fine_vertical;
    }
    return Phase::close_contact;
}

Pose4 next_waypoint(const Pose4& p, const DeltaPose& dp, Phase phase, Rng& rng,
                    const ControllerParams& params) {
    const Pose4 g = apply(p, dp);
    switch (phase) {
        case Phase::coarse_alignment:
            return Pose4(g.x, g.y, g.z + params.safety_offset, g.psi);
        case Phase::fine_vertical:
            return Pose4(g.x, g.y, p.z - params.descend_step, g.psi);
        case Phase::close_contact: {
            const double n1 = rng.uniform(-params.noise_bound, params.noise_bound);
            const double n2 = rng.uniform(-params.noise_bound, params.noise_bound);
            return Pose4(g.x + n1, g.y + n2, p.z - params.descend_step, g.psi);
        }
    }
    throw std::logic_error("next_waypoint: bad phase");
}

Pose4 next_waypoint_direct(const Pose4& p, const DeltaPose& dp) { return apply(p, dp); }

EpisodeTrace run_episode(const SceneState& scene_in, const Predictor& predictor,
                         Executor executor, const ControllerParams& params, int max_steps,
                         const Pose4& start, Rng& rng, Rng* perturb_rng,
                         const PerturbSchedule* schedule) {
    params.validate();
    if (max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");
    SceneState scene = scene_in;
    if (is_penetrating(scene, start)) {
        throw std::invalid_argument("run_episode: starting pose penetrates the scene");
    }

    EpisodeTrace trace;
    trace.spec = scene.spec;
    trace.plug = scene.plug;
    trace.socket_x = scene.socket_x;
    trace.socket_y = scene.socket_y;
    trace.socket_psi = scene.socket_psi;
    trace.goal = scene.goal;
    trace.executor = executor;
    trace.params = params;
    trace.max_steps = max_steps;
    trace.start = start;

    Pose4 pose = start;
    double min_prox = proximity(pose, scene.goal);
    bool r1 = min_prox < kProximity1cm;
    bool r5 = min_prox < kProximity5mm;

    if (is_success(scene, pose)) {
        trace.outcome = Outcome::success;
        trace.steps_to_success = 0;
        trace.min_proximity = min_prox;
        trace.reached_1cm = r1;
        trace.reached_5mm = r5;
        return trace;
    }

    for (int step = 1; step <= max_steps; ++step) {
        TraceStep ts;
        ts.pose = pose;

        if (schedule && !schedule->empty()) {
            for (int s : schedule->steps) {
                if (s == step) {
                    Rng& prng = perturb_rng ? *perturb_rng : rng;
                    const PerturbOutcome out = perturb_socket(scene, prng, schedule->max_shift,
                                                              schedule->max_rot, pose);
                    ts.perturb_applied = out.applied;
                    ts.perturb_skipped = !out.applied;
                    if (out.applied) {
                        ++trace.perturb_applied;
                    } else {
                        ++trace.perturb_skipped;
                    }
                }
            }
        }
        ts.socket_x = scene.socket_x;
        ts.socket_y = scene.socket_y;
        ts.socket_psi = scene.socket_psi;

        const DeltaPose dp = predictor.predict(scene, pose, rng);
        ts.predicted = dp;
        Pose4 cmd;
        if (executor == Executor::coarse_to_fine) {
            const Pose4 g = apply(pose, dp);
            const Phase phase = select_phase(dp, pose, g, params);
            ts.phase = phase;
            cmd = next_waypoint(pose, dp, phase, rng, params);
        } else {
            cmd = next_waypoint_direct(pose, dp);
        }
        ts.commanded = cmd;

        const MotionResult res = resolve_motion(scene, pose, cmd);
        pose = res.achieved;
        ts.achieved = pose;
        ts.events = res.events;
        trace.any_surface_contact |= res.events.surface_contact;
        trace.any_wall_contact |= res.events.wall_contact;

        const double prox = proximity(pose, scene.goal);
        min_prox = std::min(min_prox, prox);
        r1 |= prox < kProximity1cm;
        r5 |= prox < kProximity5mm;

        trace.steps.push_back(ts);

        if (is_success(scene, pose)) {
            trace.outcome = Outcome::success;
            trace.steps_to_success = step;
            break;
        }
    }

    trace.min_proximity = min_prox;
    trace.reached_1cm = r1;
    trace.reached_5mm = r5;
    return trace;
}

void write_trace(const EpisodeTrace& trace, const std::string& path) {
    std::string buf;
    buf.reserve(1 << 16);
    buf += "pih-trace ";
    buf += std::to_string(kTraceVersion);
    buf.push_back('\n');

    buf += "socket ";
    append_cross_section(buf, trace.spec.hole);
    buf.push_back(' ');
    append_double(buf, trace.spec.clearance);
    buf.push_back(' ');
    append_double(buf, trace.spec.psi_tol);
    buf.push_back(' ');
    append_double(buf, trace.spec.block_half_extent);
    buf.push_back(' ');
    append_double(buf, trace.spec.block_top);
    buf.push_back(' ');
    append_double(buf, trace.spec.hole_depth);
    buf.push_back(' ');
    append_double(buf, trace.spec.insertion_depth);
    buf.push_back('\n');

    buf += "plug ";
    append_cross_section(buf, trace.plug);
    buf.push_back('\n');

    buf += "pose ";
    append_double(buf, trace.socket_x);
    buf.push_back(' ');
    append_double(buf, trace.socket_y);
    buf.push_back(' ');
    append_double(buf, trace.socket_psi);
    buf += "\ngoal ";
    append_pose(buf, trace.goal);
    buf += "\nexecutor ";
    buf += trace.executor == Executor::coarse_to_fine ? "coarse_to_fine" : "direct";
    buf += "\nparams ";
    append_double(buf, trace.params.safety_offset);
    buf.push_back(' ');
    append_double(buf, trace.params.descend_step);
    buf.push_back(' ');
    append_double(buf, trace.params.xy_thresh);
    buf.push_back(' ');
    append_double(buf, trace.params.psi_thresh);
    buf.push_back(' ');
    append_double(buf, trace.params.dz_thresh);
    buf.push_back(' ');
    append_double(buf, trace.params.phase2_margin);
    buf.push_back(' ');
    append_double(buf, trace.params.noise_bound);
    buf += "\nmax_steps ";
    buf += std::to_string(trace.max_steps);
    buf += "\nstart ";
    append_pose(buf, trace.start);
    buf.push_back('\n');

    int idx = 0;
    for (const TraceStep& ts : trace.steps) {
        buf += "step ";
        buf += std::to_string(++idx);
        buf.push_back(' ');
        buf += ts.perturb_applied ? "P" : (ts.perturb_skipped ? "S" : "-");
        buf.push_back(' ');
        append_double(buf, ts.socket_x);
        buf.push_back(' ');
        append_double(buf, ts.socket_y);
        buf.push_back(' ');
        append_double(buf, ts.socket_psi);
        buf.push_back(' ');
        if (ts.phase.has_value()) {
            buf += std::to_string(static_cast<int>(*ts.phase));
        } else {
            buf.push_back('-');
        }
        buf.push_back(' ');
        append_double(buf, ts.predicted.dx);
        buf.push_back(' ');
        append_double(buf, ts.predicted.dy);
        buf.push_back(' ');
        append_double(buf, ts.predicted.dz);
        buf.push_back(' ');
        append_double(buf, ts.predicted.dpsi);
        buf.push_back(' ');
        append_pose(buf, ts.commanded);
        buf.push_back(' ');
        append_pose(buf, ts.achieved);
        buf.push_back(' ');
        buf.push_back(ts.events.surface_contact ? '1' : '0');
        buf.push_back(ts.events.wall_contact ? '1' : '0');
        buf.push_back(ts.events.clamped_x ? '1' : '0');
        buf.push_back(ts.events.clamped_y ? '1' : '0');
        buf.push_back(ts.events.clamped_z ? '1' : '0');
        buf.push_back(ts.events.clamped_psi ? '1' : '0');
        buf.push_back('\n');
    }

    buf += "outcome ";
    buf += trace.outcome == Outcome::success ? "success" : "timeout";
    buf.push_back(' ');
    buf += std::to_string(trace.steps_to_success);
    buf.push_back(' ');
    append_double(buf, trace.min_proximity);
    buf.push_back(' ');
    buf.push_back(trace.reached_1cm ? '1' : '0');
    buf.push_back(' ');
    buf.push_back(trace.reached_5mm ? '1' : '0');
    buf.push_back(' ');
    buf += std::to_string(trace.perturb_applied);
    buf.push_back(' ');
    buf += std::to_string(trace.perturb_skipped);
    buf.push_back('\n');

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_trace: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_trace: write failed for " + path);
}

EpisodeTrace read_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_trace: cannot open " + path);
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

    EpisodeTrace t;
    {
        TokenCursor cur = next_line("header");
        cur.expect("pih-trace", "header magic");
        const long version = cur.integer("version");
        if (version != kTraceVersion) {
            cur.fail("version", "unsupported version " + std::to_string(version));
        }
        advance();
    }
    {
        TokenCursor cur = next_line("socket");
        cur.expect("socket", "socket");
        t.spec.hole = read_cross_section(cur, "hole");
        t.spec.clearance = cur.number("clearance");
        t.spec.psi_tol = cur.number("psi_tol");
        t.spec.block_half_extent = cur.number("block_half_extent");
        t.spec.block_top = cur.number("block_top");
        t.spec.hole_depth = cur.number("hole_depth");
        t.spec.insertion_depth = cur.number("insertion_depth");
        advance();
        cur = next_line("plug");
        cur.expect("plug", "plug");
        t.plug = read_cross_section(cur, "plug");
        advance();
        cur = next_line("pose");
        cur.expect("pose", "pose");
        t.socket_x = cur.number("socket x");
        t.socket_y = cur.number("socket y");
        t.socket_psi = cur.number("socket psi");
        advance();
        cur = next_line("goal");
        cur.expect("goal", "goal");
        t.goal = read_pose(cur, "goal");
        advance();
        cur = next_line("executor");
        cur.expect("executor", "executor");
        const std::string_view ex = cur.token("executor value");
        if (ex == "coarse_to_fine") {
            t.executor = Executor::coarse_to_fine;
        } else if (ex == "direct") {
            t.executor = Executor::direct;
        } else {
            cur.fail("executor value", "unknown executor");
        }
        advance();
        cur = next_line("params");
        cur.expect("params", "params");
        t.params.safety_offset = cur.number("H");
        t.params.descend_step = cur.number("d_z");
        t.params.xy_thresh = cur.number("xy_thresh");
        t.params.psi_thresh = cur.number("psi_thresh");
        t.params.dz_thresh = cur.number("dz_thresh");
        t.params.phase2_margin = cur.number("phase2_margin");
        t.params.noise_bound = cur.number("noise_bound");
        advance();
        cur = next_line("max_steps");
        cur.expect("max_steps", "max_steps");
        t.max_steps = static_cast<int>(cur.integer("max_steps value"));
        advance();
        cur = next_line("start");
        cur.expect("start", "start");
        t.start = read_pose(cur, "start");
        advance();
    }

    while (true) {
        TokenCursor cur = next_line("step or outcome");
        const std::string_view tag = cur.token("line tag");
        if (tag == "outcome") {
            const std::string_view oc = cur.token("outcome value");
            if (oc == "success") {
                t.outcome = Outcome::success;
            } else if (oc == "timeout") {
                t.outcome = Outcome::timeout;
            } else {
                cur.fail("outcome value", "unknown outcome");
            }
            t.steps_to_success = static_cast<int>(cur.integer("steps_to_success"));
            t.min_proximity = cur.number("min_proximity");
            t.reached_1cm = cur.integer("reached_1cm") == 1;
            t.reached_5mm = cur.integer("reached_5mm") == 1;
            t.perturb_applied = static_cast<int>(cur.integer("perturb_applied"));
            t.perturb_skipped = static_cast<int>(cur.integer("perturb_skipped"));
            break;
        }
        if (tag != "step") cur.fail("line tag", "expected step or outcome");
        const long idx = cur.integer("step index");
        if (idx != static_cast<long>(t.steps.size()) + 1) {
            cur.fail("step index", "out of order");
        }
        TraceStep ts;
        const std::string_view pflag = cur.token("perturb flag");
        ts.perturb_applied = pflag == "P";
        ts.perturb_skipped = pflag == "S";
        if (ts.perturb_applied) ++t.perturb_applied;
        if (ts.perturb_skipped) ++t.perturb_skipped;
        ts.socket_x = cur.number("socket x");
        ts.socket_y = cur.number("socket y");
        ts.socket_psi = cur.number("socket psi");
        const std::string_view ph = cur.token("phase");
        if (ph == "-") {
            ts.phase = std::nullopt;
        } else if (ph == "0" || ph == "1" || ph == "2") {
            ts.phase = static_cast<Phase>(ph[0] - '0');
        } else {
            cur.fail("phase", "expected 0, 1, 2 or -");
        }
        const double pdx = cur.number("pred dx");
        const double pdy = cur.number("pred dy");
        const double pdz = cur.number("pred dz");
        const double pdpsi = cur.number("pred dpsi");
        ts.predicted = DeltaPose(pdx, pdy, pdz, pdpsi);
        ts.commanded = read_pose(cur, "commanded");
        ts.achieved = read_pose(cur, "achieved");
        const std::string_view ev = cur.token("events");
        if (ev.size() != 6) cur.fail("events", "expected 6 flags");
        ts.events.surface_contact = ev[0] == '1';
        ts.events.wall_contact = ev[1] == '1';
        ts.events.clamped_x = ev[2] == '1';
        ts.events.clamped_y = ev[3] == '1';
        ts.events.clamped_z = ev[4] == '1';
        ts.events.clamped_psi = ev[5] == '1';
        t.any_surface_contact |= ts.events.surface_contact;
        t.any_wall_contact |= ts.events.wall_contact;
        ts.pose = t.steps.empty() ? t.start : t.steps.back().achieved;
        t.steps.push_back(ts);
        advance();
    }
    return t;
}

}  // namespace pih
