#ifndef BEAMTRACK_MATHCORE_RNG_H_
#define BEAMTRACK_MATHCORE_RNG_H_

#include <cstdint>
#include <random>

namespace beamtrack::math {

// Mixes a base seed with a tag into an independent stream seed (splitmix64
// finalizer). Used to give every sequence, frame and worker its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

// Seeded pseudo-random source. Identical seed and call sequence give an
// identical output stream on the same build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  int uniform_int(int lo, int hi);         // inclusive range
  double normal();                         // N(0, 1)
  double normal(double mean, double stddev);
  bool bernoulli(double p);

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace beamtrack::math

#endif  // BEAMTRACK_MATHCORE_RNG_H_
