#include "pih/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pih {

namespace {

constexpr double kSubstepLinear = 1e-3;          // 1 mm
constexpr double kSubstepAngular = kPi / 180.0;  // 1 degree
constexpr double kScanLinear = 2e-5;             // entry scan pitch
constexpr double kScanAngular = 0.02 * kPi / 180.0;
constexpr double kMarchLinear = 2e-5;            // wall-march hop
constexpr double kMarchAngular = 0.02 * kPi / 180.0;
constexpr int kBisectIters = 45;
// Clamped coordinates stay this far inside the free region, so converting
// between the socket frame and world coordinates across substeps cannot
// drift a pinned pose over the boundary.
constexpr double kClampBackoff = 1e-12;

struct SocketFrame {
    double cx, cy, c, s;  // center and cos/sin of the socket yaw

    explicit SocketFrame(const SceneState& scene)
        : cx(scene.socket_x),
          cy(scene.socket_y),
          c(std::cos(scene.socket_psi)),
          s(std::sin(scene.socket_psi)) {}

    void to_local(double wx, double wy, double& lx, double& ly) const {
        const double dx = wx - cx;
        const double dy = wy - cy;
        lx = c * dx + s * dy;
        ly = -s * dx + c * dy;
    }
    void to_world(double lx, double ly, double& wx, double& wy) const {
        wx = cx + c * lx - s * ly;
        wy = cy + s * lx + c * ly;
    }
};

// Lateral state of the plug in the socket frame: position plus relative yaw.
struct Lateral {
    double x = 0.0;
    double y = 0.0;
    double phi = 0.0;
};

void plug_corners(const CrossSection& plug, const Lateral& l, double cx[4], double cy[4]) {
    const double hw = plug.width / 2.0;
    const double hh = plug.height / 2.0;
    const double c = std::cos(l.phi);
    const double s = std::sin(l.phi);
    const double sx[4] = {hw, hw, -hw, -hw};
    const double sy[4] = {hh, -hh, hh, -hh};
    for (int i = 0; i < 4; ++i) {
        cx[i] = l.x + c * sx[i] - s * sy[i];
        cy[i] = l.y + s * sx[i] + c * sy[i];
    }
}

bool inside_rel(const CrossSection& plug, const SocketSpec& spec, const Lateral& l) {
    const CrossSection& hole = spec.hole;
    if (hole.kind == CrossSection::Kind::circle) {
        const double r = hole.radius + spec.clearance;
        if (plug.kind == CrossSection::Kind::circle) {
            return std::sqrt(l.x * l.x + l.y * l.y) + plug.radius <= r;
        }
        double cx[4], cy[4];
        plug_corners(plug, l, cx, cy);
        for (int i = 0; i < 4; ++i) {
            if (cx[i] * cx[i] + cy[i] * cy[i] > r * r) return false;
        }
        return true;
    }
    const double hw = hole.width / 2.0 + spec.clearance;
    const double hh = hole.height / 2.0 + spec.clearance;
    if (plug.kind == CrossSection::Kind::circle) {
        return std::abs(l.x) + plug.radius <= hw && std::abs(l.y) + plug.radius <= hh;
    }
    if (std::abs(wrap_angle(l.phi)) > spec.psi_tol) return false;
    double cx[4], cy[4];
    plug_corners(plug, l, cx, cy);
    for (int i = 0; i < 4; ++i) {
        if (std::abs(cx[i]) > hw || std::abs(cy[i]) > hh) return false;
    }
    return true;
}

bool intersects_rel(const CrossSection& plug, const SocketSpec& spec, const Lateral& l) {
    const double b = spec.block_half_extent;
    if (plug.kind == CrossSection::Kind::circle) {
        const double dx = std::max(std::abs(l.x) - b, 0.0);
        const double dy = std::max(std::abs(l.y) - b, 0.0);
        return dx * dx + dy * dy <= plug.radius * plug.radius;
    }
    // Separating axes: the block's axes and the plug's axes.
    const double hw = plug.width / 2.0;
    const double hh = plug.height / 2.0;
    const double c = std::cos(l.phi);
    const double s = std::sin(l.phi);
    const double axes[4][2] = {{1.0, 0.0}, {0.0, 1.0}, {c, s}, {-s, c}};
    for (const auto& a : axes) {
        const double block_ext = b * (std::abs(a[0]) + std::abs(a[1]));
        const double plug_ext = hw * std::abs(a[0] * c + a[1] * s) +
                                hh * std::abs(-a[0] * s + a[1] * c);
        const double center = l.x * a[0] + l.y * a[1];
        if (std::abs(center) > block_ext + plug_ext) return false;
    }
    return true;
}

// Free for lateral motion at a height below block_top: either fully inside
// the hole opening or fully clear of the block.
bool lateral_free(const CrossSection& plug, const SocketSpec& spec, const Lateral& l) {
    return inside_rel(plug, spec, l) || !intersects_rel(plug, spec, l);
}

// Marching accepts positions against a margin-tightened copy of the
// socket, so an accepted pose never sits exactly on a boundary where a
// world/socket frame round trip could flip its classification.
SocketSpec strict_spec(const SocketSpec& spec) {
    SocketSpec s = spec;
    s.clearance -= kClampBackoff;
    s.psi_tol -= kClampBackoff;
    s.block_half_extent += kClampBackoff;
    return s;
}

double floor_at(const CrossSection& plug, const SocketSpec& spec, const Lateral& l) {
    if (inside_rel(plug, spec, l)) return spec.block_top - spec.hole_depth;
    if (intersects_rel(plug, spec, l)) return spec.block_top;
    return 0.0;
}

// Penetration deeper than tol. The exact is_penetrating test is too sharp
// for the motion invariant: a clamped pose sits kClampBackoff inside the
// boundary, and frame conversions wobble it by a few ulps.
bool penetrates_beyond(const SceneState& scene, const Pose4& p, double tol) {
    if (p.z < -tol) return true;
    if (p.z >= scene.spec.block_top - tol) return false;
    SocketSpec spec = scene.spec;
    spec.clearance += tol;
    spec.psi_tol += tol;
    spec.block_half_extent = std::max(spec.block_half_extent - tol, 0.0);
    const SocketFrame f(scene);
    Lateral l;
    f.to_local(p.x, p.y, l.x, l.y);
    l.phi = wrap_angle(p.psi - scene.socket_psi);
    if (inside_rel(scene.plug, spec, l)) {
        return p.z < scene.spec.block_top - scene.spec.hole_depth - tol;
    }
    return intersects_rel(scene.plug, spec, l);
}

// Advances one axis by at most one hop toward its target. A blocked hop
// is bisected to the boundary (then backed off), so no motion tunnels
// through a wall. Returns the progress made.
double advance_axis(const CrossSection& plug, const SocketSpec& strict, Lateral& l,
                    double Lateral::*axis, double tgt, double hop, bool& blocked_now) {
    const double cur = l.*axis;
    blocked_now = false;
    const double remaining = tgt - cur;
    if (remaining == 0.0) return 0.0;
    const double dir = remaining > 0.0 ? 1.0 : -1.0;
    const double step = std::min(std::abs(remaining), hop);
    const double cand = (step == std::abs(remaining)) ? tgt : cur + dir * step;
    Lateral probe = l;
    probe.*axis = cand;
    if (lateral_free(plug, strict, probe)) {
        l.*axis = cand;
        return step;
    }
    blocked_now = true;
    double ok = cur;
    double blocked = cand;
    for (int it = 0; it < kBisectIters; ++it) {
        const double mid = 0.5 * (ok + blocked);
        probe.*axis = mid;
        if (lateral_free(plug, strict, probe)) {
            ok = mid;
        } else {
            blocked = mid;
        }
    }
    const double backed = ok - dir * kClampBackoff;
    if ((dir > 0.0 && backed <= cur) || (dir < 0.0 && backed >= cur)) return 0.0;
    l.*axis = backed;
    return std::abs(backed - cur);
}

// Applies a clamped lateral/yaw move below block_top: the axes advance in
// interleaved hops (order x, y, yaw per round) so sliding along a curved
// wall tracks the continuous path instead of exhausting one axis first.
Lateral clamped_lateral_move(const CrossSection& plug, const SocketSpec& spec,
                             const Lateral& from, const Lateral& to, ContactEvents& ev) {
    const SocketSpec strict = strict_spec(spec);
    Lateral l = from;
    bool bx = false, by = false, bphi = false;
    while (true) {
        bool hit = false;
        double progress = 0.0;
        progress += advance_axis(plug, strict, l, &Lateral::x, to.x, kMarchLinear, hit);
        bx |= hit;
        progress += advance_axis(plug, strict, l, &Lateral::y, to.y, kMarchLinear, hit);
        by |= hit;
        progress += advance_axis(plug, strict, l, &Lateral::phi, to.phi, kMarchAngular, hit);
        bphi |= hit;
        if (progress < 1e-12) break;
    }
    if (bx || std::abs(l.x - to.x) > 1e-9) { ev.wall_contact = true; ev.clamped_x = true; }
    if (by || std::abs(l.y - to.y) > 1e-9) { ev.wall_contact = true; ev.clamped_y = true; }
    if (bphi || std::abs(l.phi - to.phi) > 1e-9) {
        ev.wall_contact = true;
        ev.clamped_psi = true;
    }
    return l;
}

// Clamped lateral motion along a moving reference: the segment is walked
// in fine interpolant targets so a slide along a curved wall comes to
// rest where the continuous follower would, independent of the outer
// substep size.
Lateral clamped_lateral_follow(const CrossSection& plug, const SocketSpec& spec,
                               const Lateral& from, const Lateral& to, ContactEvents& ev) {
    const double len = std::hypot(to.x - from.x, to.y - from.y);
    const double ang = std::abs(to.phi - from.phi);
    const int m = std::max(1, static_cast<int>(std::ceil(
                                  std::max(len / 1e-4, ang / (0.1 * kPi / 180.0)))));
    Lateral cur = from;
    for (int j = 1; j <= m; ++j) {
        const double u = static_cast<double>(j) / m;
        const Lateral target{from.x + (to.x - from.x) * u, from.y + (to.y - from.y) * u,
                             from.phi + (to.phi - from.phi) * u};
        cur = clamped_lateral_move(plug, spec, cur, target, ev);
    }
    return cur;
}

int jitter_count(const SceneConfig& cfg, Rng& rng) {
    if (cfg.distractor_max <= 0) return 0;
    return rng.uniform_int(cfg.distractor_min, cfg.distractor_max);
}

std::vector<Distractor> draw_distractors(const SceneConfig& cfg, double sx, double sy,
                                         double spsi, Rng& rng) {
    std::vector<Distractor> out;
    const int n = jitter_count(cfg, rng);
    const double block_aabb =
        cfg.block_half_extent * (std::abs(std::cos(spsi)) + std::abs(std::sin(spsi)));
    for (int i = 0; i < n; ++i) {
        Distractor d;
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const double ring = rng.uniform(cfg.distractor_ring_min, cfg.distractor_ring_max);
            const double ang = rng.uniform(0.0, 2.0 * kPi);
            d.cx = sx + ring * std::cos(ang);
            d.cy = sy + ring * std::sin(ang);
            d.half_x = rng.uniform(cfg.distractor_half_min, cfg.distractor_half_max);
            d.half_y = rng.uniform(cfg.distractor_half_min, cfg.distractor_half_max);
            d.top = rng.uniform(cfg.distractor_top_min, cfg.distractor_top_max);
            placed = std::abs(d.cx - sx) > d.half_x + block_aabb ||
                     std::abs(d.cy - sy) > d.half_y + block_aabb;
        }
        if (!placed) {
            throw std::invalid_argument("scene config: cannot place distractors off the block");
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace

double CrossSection::bounding_radius() const {
    if (kind == Kind::circle) return radius;
    return std::sqrt(width * width + height * height) / 2.0;
}

void CrossSection::validate(const char* what) const {
    if (kind == Kind::circle) {
        if (!(radius > 0.0)) {
            throw std::invalid_argument(std::string(what) + ": circle radius must be > 0");
        }
    } else {
        if (!(width > 0.0) || !(height > 0.0)) {
            throw std::invalid_argument(std::string(what) + ": rectangle sides must be > 0");
        }
    }
}

void SocketSpec::validate() const {
    hole.validate("socket hole");
    if (!(clearance > 0.0)) throw std::invalid_argument("socket: clearance must be > 0");
    if (!(hole_depth > 0.0)) throw std::invalid_argument("socket: hole_depth must be > 0");
    if (!(block_top > 0.0)) throw std::invalid_argument("socket: block_top must be > 0");
    if (!(insertion_depth > 0.0) || insertion_depth > hole_depth) {
        throw std::invalid_argument("socket: insertion_depth must be in (0, hole_depth]");
    }
    if (hole.bounding_radius() + clearance > block_half_extent) {
        throw std::invalid_argument("socket: hole does not fit inside the block footprint");
    }
}

SocketSpec SceneConfig::socket_spec() const {
    SocketSpec s;
    s.hole = hole;
    s.clearance = clearance;
    s.psi_tol = psi_tol;
    s.block_half_extent = block_half_extent;
    s.block_top = block_top;
    s.hole_depth = hole_depth;
    s.insertion_depth = insertion_depth;
    return s;
}

void SceneConfig::validate() const {
    socket_spec().validate();
    plug.validate("plug");
    if (range_xy < 0.0 || range_psi < 0.0) {
        throw std::invalid_argument("scene config: randomization ranges must be >= 0");
    }
    if (distractor_max > 0) {
        if (distractor_min < 0 || distractor_min > distractor_max) {
            throw std::invalid_argument("scene config: bad distractor count range");
        }
        if (!(distractor_half_min > 0.0) || distractor_half_min > distractor_half_max ||
            !(distractor_top_min > 0.0) || distractor_top_min > distractor_top_max) {
            throw std::invalid_argument("scene config: bad distractor size range");
        }
        const double margin = distractor_ring_min -
                              (block_half_extent + distractor_half_max) * std::sqrt(2.0);
        if (margin <= 0.0) {
            throw std::invalid_argument(
                "scene config: distractor ring overlaps the socket block; "
                "increase distractor_ring_min");
        }
        if (distractor_ring_min > distractor_ring_max) {
            throw std::invalid_argument("scene config: bad distractor ring range");
        }
    }
    // The plug must actually fit the hole when centered.
    Lateral centered{0.0, 0.0, 0.0};
    if (!inside_rel(plug, socket_spec(), centered)) {
        throw std::invalid_argument("scene config: plug does not fit the hole opening");
    }
}

SceneState make_scene(const SceneConfig& config, Rng& rng) {
    config.validate();
    SceneState scene;
    scene.config = config;
    scene.spec = config.socket_spec();
    scene.plug = config.plug;
    // Socket pose and goal are grid-quantized so goal-relative labels are
    // exact (see quantize_coord).
    scene.socket_x = quantize_coord(config.range_xy == 0.0
                                        ? config.nominal_x
                                        : rng.uniform(config.nominal_x - config.range_xy,
                                                      config.nominal_x + config.range_xy));
    scene.socket_y = quantize_coord(config.range_xy == 0.0
                                        ? config.nominal_y
                                        : rng.uniform(config.nominal_y - config.range_xy,
                                                      config.nominal_y + config.range_xy));
    scene.socket_psi = wrap_angle(quantize_coord(
        wrap_angle(config.range_psi == 0.0
                       ? config.nominal_psi
                       : rng.uniform(config.nominal_psi - config.range_psi,
                                     config.nominal_psi + config.range_psi))));
    scene.distractors =
        draw_distractors(config, scene.socket_x, scene.socket_y, scene.socket_psi, rng);
    scene.goal = Pose4(scene.socket_x, scene.socket_y,
                       quantize_coord_floor(scene.spec.block_top - scene.spec.insertion_depth),
                       scene.socket_psi);
    if (!is_success(scene, scene.goal)) {
        throw std::invalid_argument("scene config: goal pose is not a successful insertion");
    }
    return scene;
}

Pose4 goal_pose(const SceneState& scene) { return scene.goal; }

void rejitter_distractors(SceneState& scene, Rng& rng) {
    scene.distractors = draw_distractors(scene.config, scene.socket_x, scene.socket_y,
                                         scene.socket_psi, rng);
}

bool footprint_inside(const CrossSection& plug, const Pose4& plug_pose,
                      const SceneState& scene) {
    const SocketFrame f(scene);
    Lateral l;
    f.to_local(plug_pose.x, plug_pose.y, l.x, l.y);
    l.phi = wrap_angle(plug_pose.psi - scene.socket_psi);
    return inside_rel(plug, scene.spec, l);
}

bool footprint_intersects_block(const CrossSection& plug, const Pose4& plug_pose,
                                const SceneState& scene) {
    const SocketFrame f(scene);
    Lateral l;
    f.to_local(plug_pose.x, plug_pose.y, l.x, l.y);
    l.phi = wrap_angle(plug_pose.psi - scene.socket_psi);
    return intersects_rel(plug, scene.spec, l);
}

bool is_penetrating(const SceneState& scene, const Pose4& p) {
    if (p.z < 0.0) return true;
    if (p.z >= scene.spec.block_top) return false;
    const SocketFrame f(scene);
    Lateral l;
    f.to_local(p.x, p.y, l.x, l.y);
    l.phi = wrap_angle(p.psi - scene.socket_psi);
    if (inside_rel(scene.plug, scene.spec, l)) {
        return p.z < scene.spec.block_top - scene.spec.hole_depth;
    }
    return intersects_rel(scene.plug, scene.spec, l);
}

bool is_success(const SceneState& scene, const Pose4& p) {
    return footprint_inside(scene.plug, p, scene) &&
           p.z <= scene.spec.block_top - scene.spec.insertion_depth;
}

MotionResult resolve_motion(const SceneState& scene, const Pose4& from, const Pose4& to,
                            const StepSink& sink) {
    if (penetrates_beyond(scene, from, 1e-9)) {
        throw std::invalid_argument("resolve_motion: starting pose penetrates the scene");
    }
    const SocketFrame frame(scene);
    const SocketSpec& spec = scene.spec;
    const CrossSection& plug = scene.plug;
    const double top = spec.block_top;

    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    const double dz = to.z - from.z;
    const double dpsi = wrap_angle(to.psi - from.psi);
    const double lin = std::sqrt(dx * dx + dy * dy + dz * dz);
    const int n = std::max(1, static_cast<int>(std::ceil(
                                  std::max(lin / kSubstepLinear, std::abs(dpsi) / kSubstepAngular))));

    Pose4 a = from;
    ContactEvents total;

    for (int k = 1; k <= n; ++k) {
        const double t = static_cast<double>(k) / n;
        Pose4 T = (k == n) ? Pose4(to.x, to.y, to.z, wrap_angle(from.psi + dpsi))
                           : Pose4(from.x + dx * t, from.y + dy * t, from.z + dz * t,
                                   wrap_angle(from.psi + dpsi * t));
        ContactEvents ev;
        Pose4 next = a;

        if (a.z < top) {
            // Below the surface: lateral and yaw clamp against the hole walls
            // or the block exterior, then z follows (ascending freely, or
            // descending onto whatever floor the new lateral sits over).
            // A substep that rises through the surface stays clamped; the
            // next substep is free.
            Lateral cur, tgt;
            frame.to_local(a.x, a.y, cur.x, cur.y);
            cur.phi = wrap_angle(a.psi - scene.socket_psi);
            frame.to_local(T.x, T.y, tgt.x, tgt.y);
            tgt.phi = cur.phi + wrap_angle(T.psi - a.psi);

            Lateral l = clamped_lateral_follow(plug, spec, cur, tgt, ev);
            double wx, wy;
            frame.to_world(l.x, l.y, wx, wy);
            double nz = T.z;
            if (nz < a.z) {
                const double fl = floor_at(plug, spec, l);
                if (nz < fl) {
                    // A floor clamp may hold the plug, never lift it.
                    nz = std::min(fl, std::max(a.z, T.z));
                    ev.surface_contact = true;
                    ev.clamped_z = true;
                }
            }
            next = Pose4(wx, wy, nz, wrap_angle(scene.socket_psi + l.phi));
        } else {
            // At or above the surface: lateral and yaw are free.
            if (T.z >= top) {
                next = T;
            } else {
                // The substep presses below the surface. Scan the pressed part
                // of the lateral path for the hole opening.
                Lateral cur, tgt;
                frame.to_local(a.x, a.y, cur.x, cur.y);
                cur.phi = wrap_angle(a.psi - scene.socket_psi);
                frame.to_local(T.x, T.y, tgt.x, tgt.y);
                tgt.phi = cur.phi + wrap_angle(T.psi - a.psi);

                const SocketSpec strict = strict_spec(spec);
                const double fz = (a.z > top) ? (a.z - top) / (a.z - T.z) : 0.0;
                const double seg_lin =
                    std::hypot(tgt.x - cur.x, tgt.y - cur.y) * (1.0 - fz);
                const double seg_ang = std::abs(tgt.phi - cur.phi) * (1.0 - fz);
                const int pts = std::max(
                    1, static_cast<int>(std::ceil(std::max(seg_lin / kScanLinear,
                                                           seg_ang / kScanAngular))));
                int entry = -1;
                bool pressed_on_block = false;
                for (int i = 0; i <= pts; ++i) {
                    const double u = fz + (1.0 - fz) * (static_cast<double>(i) / pts);
                    Lateral l{cur.x + (tgt.x - cur.x) * u, cur.y + (tgt.y - cur.y) * u,
                              cur.phi + (tgt.phi - cur.phi) * u};
                    if (inside_rel(plug, strict, l)) {
                        entry = i;
                        break;
                    }
                    if (u > fz && intersects_rel(plug, spec, l)) pressed_on_block = true;
                }
                if (entry >= 0) {
                    const double u =
                        fz + (1.0 - fz) * (static_cast<double>(entry) / pts);
                    Lateral l{cur.x + (tgt.x - cur.x) * u, cur.y + (tgt.y - cur.y) * u,
                              cur.phi + (tgt.phi - cur.phi) * u};
                    double nz = T.z;
                    const double fl = top - spec.hole_depth;
                    if (nz < fl) {
                        nz = fl;
                        ev.surface_contact = true;
                        ev.clamped_z = true;
                    }
                    // Remaining lateral motion happens inside the hole.
                    Lateral done = clamped_lateral_follow(plug, spec, l, tgt, ev);
                    double wx, wy;
                    frame.to_world(done.x, done.y, wx, wy);
                    next = Pose4(wx, wy, nz, wrap_angle(scene.socket_psi + done.phi));
                } else {
                    const bool over_block = intersects_rel(plug, spec, tgt);
                    if (over_block) {
                        next = Pose4(T.x, T.y, top, T.psi);
                        ev.surface_contact = true;
                        ev.clamped_z = true;
                    } else {
                        double nz = T.z;
                        if (nz < 0.0) {
                            nz = 0.0;
                            ev.surface_contact = true;
                            ev.clamped_z = true;
                        }
                        if (pressed_on_block) {
                            // Rode the surface partway before sliding off.
                            ev.surface_contact = true;
                            ev.clamped_z = true;
                        }
                        next = Pose4(T.x, T.y, nz, T.psi);
                    }
                }
            }
        }

        a = next;
        total.merge(ev);
        if (sink) sink(MotionStep{a, ev});
    }

    if (penetrates_beyond(scene, a, 1e-9)) {
        throw std::logic_error("resolve_motion: clamping produced a penetrating pose");
    }
    return MotionResult{a, total};
}

PerturbOutcome perturb_socket(SceneState& scene, Rng& rng, double max_shift, double max_rot,
                              const Pose4& current_plug) {
    PerturbOutcome out;
    if (current_plug.z < scene.spec.block_top) {
        return out;  // skipped: the plug is inside or against the block
    }
    out.applied = true;
    const double draw_x = max_shift == 0.0 ? 0.0 : rng.uniform(-max_shift, max_shift);
    const double draw_y = max_shift == 0.0 ? 0.0 : rng.uniform(-max_shift, max_shift);
    const double draw_rot = max_rot == 0.0 ? 0.0 : rng.uniform(-max_rot, max_rot);
    // Applied shifts are the exact on-grid differences.
    const double nx = quantize_coord(scene.socket_x + draw_x);
    const double ny = quantize_coord(scene.socket_y + draw_y);
    const double npsi = wrap_angle(quantize_coord(wrap_angle(scene.socket_psi + draw_rot)));
    out.shift_x = nx - scene.socket_x;
    out.shift_y = ny - scene.socket_y;
    out.rot = npsi - scene.socket_psi;
    scene.socket_x = nx;
    scene.socket_y = ny;
    scene.socket_psi = npsi;
    scene.goal = Pose4(scene.socket_x, scene.socket_y, scene.goal.z, scene.socket_psi);
    rejitter_distractors(scene, rng);
    return out;
}

}  // namespace pih
