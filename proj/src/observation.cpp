#include "pih/observation.hpp"

#include <cmath>
#include <stdexcept>

namespace pih {

namespace {

// Height sampling works relative-first: the cell offset is composed with
// the gripper-to-socket transform before touching world coordinates, so
// rasters depend only on the relative layout. Block and hole membership
// are evaluated in the socket frame; distractor boxes are axis aligned in
// the world, so those need the world point.
struct RenderFrame {
    double sock_c, sock_s;        // cos/sin socket yaw
    double rel_c, rel_s;          // cos/sin (gripper yaw - socket yaw)
    double og_x, og_y;            // gripper position in the socket frame
    double sx, sy;                // socket center (world)

    RenderFrame(const SceneState& scene, const Pose4& gripper) {
        sock_c = std::cos(scene.socket_psi);
        sock_s = std::sin(scene.socket_psi);
        const double phi = gripper.psi - scene.socket_psi;
        rel_c = std::cos(phi);
        rel_s = std::sin(phi);
        const double dx = gripper.x - scene.socket_x;
        const double dy = gripper.y - scene.socket_y;
        og_x = sock_c * dx + sock_s * dy;
        og_y = -sock_s * dx + sock_c * dy;
        sx = scene.socket_x;
        sy = scene.socket_y;
    }
};

double height_at(const SceneState& scene, const RenderFrame& f, double ux, double uy) {
    // Cell offset (gripper frame) -> socket frame.
    const double qx = f.og_x + f.rel_c * ux - f.rel_s * uy;
    const double qy = f.og_y + f.rel_s * ux + f.rel_c * uy;

    const SocketSpec& spec = scene.spec;
    const double b = spec.block_half_extent;
    if (std::abs(qx) <= b && std::abs(qy) <= b) {
        // Inside the block footprint: the opening reads 0, the deck reads
        // block_top.
        if (spec.hole.kind == CrossSection::Kind::circle) {
            const double r = spec.hole.radius + spec.clearance;
            if (qx * qx + qy * qy <= r * r) return 0.0;
        } else {
            const double hw = spec.hole.width / 2.0 + spec.clearance;
            const double hh = spec.hole.height / 2.0 + spec.clearance;
            if (std::abs(qx) <= hw && std::abs(qy) <= hh) return 0.0;
        }
        return spec.block_top;
    }

    if (scene.distractors.empty()) return 0.0;
    const double wx = f.sx + f.sock_c * qx - f.sock_s * qy;
    const double wy = f.sy + f.sock_s * qx + f.sock_c * qy;
    double h = 0.0;
    for (const Distractor& d : scene.distractors) {
        if (std::abs(wx - d.cx) <= d.half_x && std::abs(wy - d.cy) <= d.half_y) {
            h = std::max(h, d.top);
        }
    }
    return h;
}

void fill_raster(std::vector<double>& raster, const SceneState& scene, const RenderFrame& f,
                 double cam_x, double cam_y, int width, double fov_side) {
    raster.resize(static_cast<std::size_t>(width) * width);
    std::size_t idx = 0;
    for (int row = 0; row < width; ++row) {
        const double uy = fov_side * ((row + 0.5) / width - 0.5);
        for (int col = 0; col < width; ++col, ++idx) {
            const double ux = fov_side * ((col + 0.5) / width - 0.5);
            raster[idx] = height_at(scene, f, cam_x + ux, cam_y + uy);
        }
    }
}

}  // namespace

Observation render(const SceneState& scene, const Pose4& gripper, int width, double fov_side) {
    if (width <= 0 || !(fov_side > 0.0)) {
        throw std::invalid_argument("render: bad raster parameters");
    }
    Observation obs;
    obs.width = width;
    obs.fov_side = fov_side;
    obs.gripper_height = gripper.z;
    const RenderFrame f(scene, gripper);
    fill_raster(obs.raster_a, scene, f, 0.0, 0.0, width, fov_side);
    fill_raster(obs.raster_b, scene, f, kCameraBOffset, 0.0, width, fov_side);
    return obs;
}

std::vector<double> features(const Observation& obs) {
    const std::size_t cells = static_cast<std::size_t>(obs.width) * obs.width;
    if (obs.raster_a.size() != cells || obs.raster_b.size() != cells) {
        throw std::invalid_argument("features: raster size does not match width");
    }
    std::vector<double> f;
    f.reserve(2 * cells + 1);
    for (double v : obs.raster_a) f.push_back(v / kFeatureHeightScale);
    for (double v : obs.raster_b) f.push_back(v / kFeatureHeightScale);
    f.push_back(obs.gripper_height / kFeatureHeightScale);
    return f;
}

Observation observation_from_features(const std::vector<double>& f, int width,
                                      double fov_side) {
    const std::size_t cells = static_cast<std::size_t>(width) * width;
    if (f.size() != 2 * cells + 1) {
        throw std::invalid_argument("observation_from_features: bad length");
    }
    Observation obs;
    obs.width = width;
    obs.fov_side = fov_side;
    obs.raster_a.resize(cells);
    obs.raster_b.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) obs.raster_a[i] = f[i] * kFeatureHeightScale;
    for (std::size_t i = 0; i < cells; ++i) obs.raster_b[i] = f[cells + i] * kFeatureHeightScale;
    obs.gripper_height = f[2 * cells] * kFeatureHeightScale;
    return obs;
}

}  // namespace pih
