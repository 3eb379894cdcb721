#pragma once

#include "stegcost/image.hpp"

namespace stegcost {

/// Reflect-without-repeat index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-2 ...
/// Offsets larger than the image fold repeatedly.
int mirror_index(int i, int n);

/// Mirror-padded 2-D convolution. The kernel is flipped; its anchor sits at
/// (rows/2, cols/2) so odd kernels are centered. Output has the shape of src.
/// Zero taps contribute nothing, so +inf entries under a zero tap stay inert.
RealMap conv2_mirror(const RealMap& src, const Kernel& k);

/// Mirror-padded correlation, defined as conv2_mirror(src, k.flipped()).
RealMap corr2_mirror(const RealMap& src, const Kernel& k);

/// |conv2_mirror(src, k)| with entries below the rounding floor
/// kResidualFloor * max|src| * sum|k| set to exactly zero. Filters whose taps
/// sum to zero only up to rounding (the DB-8 bank) then give exact zeros on
/// flat regions instead of ~1e-14 noise.
RealMap abs_conv2_mirror(const RealMap& src, const Kernel& k);

inline constexpr double kResidualFloor = 1e-12;

/// Serial builds of the same kernels, kept as the reference the parallel
/// versions are checked and benchmarked against.
namespace reference {
RealMap conv2_mirror(const RealMap& src, const Kernel& k);
RealMap corr2_mirror(const RealMap& src, const Kernel& k);
}  // namespace reference

// Kernel constructors.

/// Square Gaussian of side 2*ceil(L*sigma - 0.5) + 1, renormalized to unit sum.
Kernel gaussian_kernel(double sigma, double L = 4.0);

/// size x size box filter, taps 1/size^2. size must be odd.
Kernel avg_kernel(int size);

/// 3x3 Ker-Bohme high-pass filter.
Kernel kb_kernel();

}  // namespace stegcost
