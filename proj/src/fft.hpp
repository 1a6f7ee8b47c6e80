#pragma once

#include "vkstab/core.hpp"

namespace vkstab::fft {

// Unnormalized forward/backward transforms of length v.size(). Plans are
// cached per size; execution is thread-safe.
CVec forward(const CVec& v);
CVec backward(const CVec& v);

// ifft(symbol .* fft(v)).
CVec apply_symbol(const CVec& v, const Vec& symbol);
CVec apply_symbol(const CVec& v, const CVec& symbol);

}  // namespace vkstab::fft
