#pragma once

#include <vector>

#include "vsi/netmodel.hpp"

namespace vsi {

struct TheveninEstimate {
    Complex e_th;
    Complex z_th;
    int window = 0;
    double conditioning = 0.0;  // condition number of the regression matrix
};

struct RankDeficientWindowError : std::runtime_error {
    double conditioning;
    explicit RankDeficientWindowError(double cond)
        : std::runtime_error("rank-deficient Thevenin window (conditioning " +
                             std::to_string(cond) + ")"),
          conditioning(cond) {}
};

// Least-squares fit of E = V + Z I over the sample window (V, I complex
// pairs). Throws RankDeficientWindowError when the operating points in the
// window are numerically identical.
TheveninEstimate estimate_thevenin(const std::vector<std::pair<Complex, Complex>>& samples);

// Impedance-match index (|Z_app| - |Z_th|) / |Z_app| with Z_app = V / I.
// Reaches 0 at maximum power transfer; reported as 1 at zero current.
double lti_index(const TheveninEstimate& est, Complex v, Complex i);

}  // namespace vsi
