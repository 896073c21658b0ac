#pragma once

#include <cstddef>

#include "naxray/linalg.hpp"

namespace naxray::fourier {

/// In-place strided DFTs of length n over `howmany` interleaved sequences.
/// sign = -1 gives sum_j u_j e^{-2 pi i jk/n} (unnormalized), sign = +1 the
/// inverse sum. Thread-safe; plans are cached.
void transform(cd* data, int n, int stride, int howmany, int dist, int sign);

/// Storage index of integer mode k in an n-point transform.
inline int mode_index(int k, int n) { return ((k % n) + n) % n; }

/// Integer mode stored at index idx, in [-n/2, n/2).
inline int index_mode(int idx, int n) { return idx < n / 2 ? idx : idx - n; }

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace naxray::fourier
