#ifndef GM_RNG_HPP
#define GM_RNG_HPP

#include <cstdint>
#include <random>

#include "gm/types.hpp"

namespace gm {

// Seeded generator with the distribution transforms the samplers need.
// Streams are split deterministically with split(), so per-chain streams
// derived from (seed, chain) never overlap by construction of the mix.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_mark_(mix(seed)), engine_(seed_mark_) {}

  // Derived stream for a labelled substream (chain index, restart index, ...).
  Rng split(std::uint64_t label) const {
    return Rng(seed_mark_ ^ mix(label + 0x632be59bd9b4e019ull));
  }

  double uniform() {
    // 53-bit mantissa uniform in [0,1)
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform_pos() {
    double u;
    do u = uniform();
    while (u <= 0.0);
    return u;
  }

  std::uint64_t bits() { return engine_(); }

  int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang, shape > 0, rate parameterization.
  double gamma(double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0) throw NumericError("gamma draw needs shape, rate > 0");
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    return x / (x + y);
  }

  VectorXd dirichlet(const VectorXd& alpha) {
    VectorXd g(alpha.size());
    for (int i = 0; i < alpha.size(); ++i) g[i] = gamma(alpha[i], 1.0);
    double s = g.sum();
    if (s <= 0.0) throw NumericError("degenerate Dirichlet draw");
    return g / s;
  }

  // Draw from an unnormalized discrete mass vector.
  int categorical(const VectorXd& weights) {
    double total = weights.sum();
    if (!(total > 0.0) || !std::isfinite(total))
      throw NumericError("categorical draw over non-positive total mass");
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_mark_ = 0;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gm

#endif
