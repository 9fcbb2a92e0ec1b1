#include "rpca/rng.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace rpca {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  // Largest multiple of `bound` representable; values above it are rejected.
  const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t population,
                                                         std::size_t count) {
  if (count > population) {
    throw std::invalid_argument("sample larger than population");
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count * 4 >= population) {
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t j = i + below(population - i);
      std::swap(all[i], all[j]);
      out.push_back(all[i]);
    }
    return out;
  }
  // Sparse partial Fisher-Yates: same draw sequence as the dense branch.
  std::unordered_map<std::size_t, std::size_t> moved;
  auto value_at = [&](std::size_t k) {
    auto it = moved.find(k);
    return it == moved.end() ? k : it->second;
  };
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + below(population - i);
    std::size_t vi = value_at(i);
    std::size_t vj = value_at(j);
    moved[j] = vi;
    moved[i] = vj;
    out.push_back(vj);
  }
  return out;
}

}  // namespace rpca
