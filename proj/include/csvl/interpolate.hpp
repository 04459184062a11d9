#pragma once

#include "csvl/spectral_torus.hpp"

namespace csvl {

// Periodic bicubic (Catmull-Rom) interpolation of a grid field at an
// arbitrary torus point. Fourth-order accurate on smooth data.
double interp_bicubic(const Field& f, Vec2 p);

} // namespace csvl
