#pragma once

namespace bcplink {

inline constexpr double pi = 3.14159265358979323846;

// vacuum permittivity, F/m (CODATA 2018)
inline constexpr double eps0 = 8.8541878128e-12;

}  // namespace bcplink
