#include "adgnn/rng.hpp"

#include <numeric>

namespace adgnn {

std::vector<std::size_t> rng_sample_without_replacement(std::mt19937_64& rng,
                                                        std::size_t n,
                                                        std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (k >= n) return pool;
  // partial Fisher-Yates: first k slots become the sample
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace adgnn
