#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace vkstab::fft {
namespace {

std::mutex plan_mutex;

// Planning is not thread-safe in FFTW; fftw_execute_dft on an existing plan is.
fftw_plan plan_for(int n, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_pair(n, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  auto* a = fftw_alloc_complex(n);
  auto* b = fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_dft_1d(n, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(a);
  fftw_free(b);
  plans.emplace(key, p);
  return p;
}

CVec run(const CVec& v, int sign) {
  const int n = static_cast<int>(v.size());
  CVec out(n);
  CVec in = v;  // fftw may not preserve input for all plans
  fftw_execute_dft(plan_for(n, sign), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

CVec forward(const CVec& v) { return run(v, FFTW_FORWARD); }
CVec backward(const CVec& v) { return run(v, FFTW_BACKWARD); }

CVec apply_symbol(const CVec& v, const Vec& symbol) {
  CVec h = forward(v);
  h.array() *= symbol.array();
  return backward(h) / static_cast<double>(v.size());
}

CVec apply_symbol(const CVec& v, const CVec& symbol) {
  CVec h = forward(v);
  h.array() *= symbol.array();
  return backward(h) / static_cast<double>(v.size());
}

}  // namespace vkstab::fft
