#pragma once

#include <array>
#include <cmath>

namespace csvl {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    bool operator==(const Vec2&) const = default;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Wraps t into [-p/2, p/2).
inline double wrap_centered(double t, double p) {
    double r = std::remainder(t, p);
    if (r >= p / 2) r -= p; // remainder may return exactly p/2
    return r;
}

// Wraps t into [0, p).
inline double wrap_positive(double t, double p) {
    double r = std::fmod(t, p);
    if (r < 0) r += p;
    return r;
}

} // namespace csvl
