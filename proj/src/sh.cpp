#include "splatstyle/sh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splatstyle {

namespace {

constexpr double kC0 = 0.28209479177387814;   // 1/(2*sqrt(pi))
constexpr double kC1 = 0.4886025119029199;    // sqrt(3/(4*pi))
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

} // namespace

void sh_eval_into(double x, double y, double z, int degree, double* out) {
    out[0] = kC0;
    if (degree < 1) return;
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, yz = y * z, xz = x * z;
    out[4] = kC2[0] * xy;
    out[5] = kC2[1] * yz;
    out[6] = kC2[2] * (2.0 * zz - xx - yy);
    out[7] = kC2[3] * xz;
    out[8] = kC2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kC3[0] * y * (3.0 * xx - yy);
    out[10] = kC3[1] * xy * z;
    out[11] = kC3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kC3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kC3[5] * z * (xx - yy);
    out[15] = kC3[6] * x * (xx - 3.0 * yy);
}

std::vector<double> sh_eval(const std::array<double, 3>& direction, int degree) {
    if (degree < 0 || degree > 3)
        throw std::invalid_argument("sh_eval: degree must be in {0,1,2,3}, got " +
                                    std::to_string(degree));
    const double norm2 = direction[0] * direction[0] + direction[1] * direction[1] +
                         direction[2] * direction[2];
    if (std::abs(norm2 - 1.0) > 2e-9)
        throw std::invalid_argument("sh_eval: direction must be unit length, |d|^2 = " +
                                    std::to_string(norm2));
    std::vector<double> out(static_cast<std::size_t>(sh_basis_size(degree)));
    sh_eval_into(direction[0], direction[1], direction[2], degree, out.data());
    return out;
}

} // namespace splatstyle
