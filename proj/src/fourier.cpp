#include "naxray/fourier.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace naxray::fourier {

namespace {

using PlanKey = std::tuple<int, int, int, int, int>;

struct PlanCache {
  std::mutex mutex;
  std::map<PlanKey, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan plan_for(cd* data, int n, int stride, int howmany, int dist, int sign) {
  auto& c = cache();
  std::lock_guard<std::mutex> lock(c.mutex);
  const PlanKey key{n, stride, howmany, dist, sign};
  auto it = c.plans.find(key);
  if (it != c.plans.end()) return it->second;
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan plan = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, stride, dist, buf, nullptr,
                                      stride, dist, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  c.plans.emplace(key, plan);
  return plan;
}

}  // namespace

void transform(cd* data, int n, int stride, int howmany, int dist, int sign) {
  if (n <= 1) return;
  fftw_plan plan = plan_for(data, n, stride, howmany, dist, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace naxray::fourier
