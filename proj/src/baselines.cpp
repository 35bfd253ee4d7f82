#include "vsi/baselines.hpp"

#include <Eigen/Dense>

namespace vsi {

TheveninEstimate estimate_thevenin(const std::vector<std::pair<Complex, Complex>>& samples) {
    const int w = static_cast<int>(samples.size());
    if (w < 2) throw CaseError("Thevenin window needs at least 2 samples");
    // unknowns x = (Er, Ei, Zr, Zi); rows: Er - Zr*Ir + Zi*Ii = Vr,
    //                                      Ei - Zr*Ii - Zi*Ir = Vi
    Eigen::MatrixXd A(2 * w, 4);
    Eigen::VectorXd b(2 * w);
    for (int k = 0; k < w; ++k) {
        const Complex V = samples[k].first;
        const Complex I = samples[k].second;
        A.row(2 * k) << 1, 0, -I.real(), I.imag();
        b[2 * k] = V.real();
        A.row(2 * k + 1) << 0, 1, -I.imag(), -I.real();
        b[2 * k + 1] = V.imag();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv[0] / std::max(sv[sv.size() - 1], 1e-300);
    if (cond > 1e14) throw RankDeficientWindowError(cond);
    const Eigen::Vector4d x = svd.solve(b);
    TheveninEstimate est;
    est.e_th = Complex(x[0], x[1]);
    est.z_th = Complex(x[2], x[3]);
    est.window = w;
    est.conditioning = cond;
    return est;
}

double lti_index(const TheveninEstimate& est, Complex v, Complex i) {
    const double imag = std::abs(i);
    if (imag == 0.0) return 1.0;
    const double z_app = std::abs(v) / imag;
    return (z_app - std::abs(est.z_th)) / z_app;
}

}  // namespace vsi
