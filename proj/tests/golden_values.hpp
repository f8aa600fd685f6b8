#pragma once

// Frozen output of tests/oracles/golden.py (mpmath, 50 digits), loam parameters.

namespace soilrem::golden {

inline constexpr double kConductivityAtMinusOne = 3.9277277162605174845e-9;
inline constexpr double kMoistureAtMinusOne = 2.4213178471815216097e-1;
inline constexpr double kCapacityAtMinusOne = 8.0940572287630743892e-2;
inline constexpr double kHeadAtMoisture025 = -9.086093817096488419e-1;

// 3 nodes over 0.3 m, one 1 s Euler step, sink off.
inline constexpr double kUniformStep[3] = {-1.0000004852606801819, -1.0, -1.0};
// h = (-0.5, -1, -2), q_T = 1e-7 m/s.
inline constexpr double kGradedStep[3] = {-5.0000007313761493251e-1, -9.9999043909855630896e-1,
                                          -1.9999923424887659764};

}  // namespace soilrem::golden
