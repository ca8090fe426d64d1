#include "lmf/tensor.hpp"

#include <cmath>

#include "lmf/rng.hpp"

namespace lmf {

// Fan-in-scaled uniform init: U(-b, b) with b = sqrt(1 / fan_in).
void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

}  // namespace lmf
