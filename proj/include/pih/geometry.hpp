#pragma once

// 4-DoF rigid pose algebra: (x, y, z, yaw) with yaw kept in (-pi, pi].
// Pitch and roll are mechanically constrained out of the problem, so no
// full SO(3) machinery is needed.

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pih {

inline constexpr double kPi = std::numbers::pi;

// Wraps an angle into (-pi, pi]. The boundary maps to +pi so the result
// is unique.
inline double wrap_angle(double a) {
    if (!std::isfinite(a)) {
        throw std::invalid_argument("wrap_angle: non-finite angle");
    }
    double r = std::fmod(a, 2.0 * kPi);
    if (r <= -kPi) {
        r += 2.0 * kPi;
    } else if (r > kPi) {
        r -= 2.0 * kPi;
    }
    return r;
}

struct Pose4 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double psi = 0.0;

    Pose4() = default;
    Pose4(double x_, double y_, double z_, double psi_)
        : x(x_), y(y_), z(z_), psi(wrap_angle(psi_)) {
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
            throw std::invalid_argument("Pose4: non-finite component");
        }
    }
};

struct DeltaPose {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;
    double dpsi = 0.0;

    DeltaPose() = default;
    DeltaPose(double dx_, double dy_, double dz_, double dpsi_)
        : dx(dx_), dy(dy_), dz(dz_), dpsi(wrap_angle(dpsi_)) {
        if (!std::isfinite(dx) || !std::isfinite(dy) || !std::isfinite(dz)) {
            throw std::invalid_argument("DeltaPose: non-finite component");
        }
    }
};

// Relative pose from `current` to `goal`: component-wise difference in the
// base frame with the yaw difference wrapped. apply(current, delta(goal,
// current)) recovers `goal` (yaw modulo 2*pi).
inline DeltaPose delta(const Pose4& goal, const Pose4& current) {
    return DeltaPose(goal.x - current.x, goal.y - current.y,
                     goal.z - current.z, wrap_angle(goal.psi - current.psi));
}

// Component-wise sum with the yaw re-wrapped.
inline Pose4 apply(const Pose4& current, const DeltaPose& d) {
    return Pose4(current.x + d.dx, current.y + d.dy, current.z + d.dz,
                 wrap_angle(current.psi + d.dpsi));
}

inline double planar_distance(const DeltaPose& d) {
    return std::sqrt(d.dx * d.dx + d.dy * d.dy);
}

// Snaps a coordinate to a 2^-40 m grid (independent sub-picometer
// resolution). Registered goals and recorded poses live on this grid, so
// their component-wise differences and sums are exact in double
// arithmetic: apply(current, delta(goal, current)) reproduces the goal
// bit for bit.
inline double quantize_coord(double v) {
    return std::ldexp(std::nearbyint(std::ldexp(v, 40)), -40);
}

// Snaps downward; used where the quantized value must not exceed the
// input (the goal depth against the success threshold).
inline double quantize_coord_floor(double v) {
    return std::ldexp(std::floor(std::ldexp(v, 40)), -40);
}

inline Pose4 quantize_pose(const Pose4& p) {
    return Pose4(quantize_coord(p.x), quantize_coord(p.y), quantize_coord(p.z),
                 quantize_coord(p.psi));
}

}  // namespace pih
