#ifndef LRBOPT_RNG_HPP
#define LRBOPT_RNG_HPP

#include <cstdint>
#include <random>

namespace lrbopt {

// Deterministic uniform sampling. std::uniform_real_distribution is
// implementation-defined, so the mapping from raw engine output to [0,1)
// is done by hand; identical seeds give bit-identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 gen_;
};

} // namespace lrbopt

#endif
