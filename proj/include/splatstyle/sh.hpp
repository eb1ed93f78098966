#pragma once

#include <array>
#include <vector>

namespace splatstyle {

inline int sh_basis_size(int degree) { return (degree + 1) * (degree + 1); }

// Real spherical harmonics basis values in standard orthonormal
// normalization, band-major order (l^2 + l + m), degrees 0..3.
// direction must be unit length within 1e-9.
std::vector<double> sh_eval(const std::array<double, 3>& direction, int degree);

// Writes (degree+1)^2 values to out without allocation; no validation.
void sh_eval_into(double x, double y, double z, int degree, double* out);

} // namespace splatstyle
