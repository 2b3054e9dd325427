#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace optreward {

// Named sub-streams so that independent draws never share an engine state.
enum class Stream : std::uint64_t {
    kInstance = 0x9d5c,
    kContexts = 0x1f3a,
    kNoise = 0x7b21,
    kComponents = 0x04c9,
    kTrueOpt = 0xe19d,
    kGaussianMax = 0x52f7,
    kRepetition = 0xa3d1,
    kProjection = 0x6c85,
    kFeaturize = 0x38e4,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic seed derivation: one root seed fans out into independent
// per-(stream, index) seeds, so parallel chunks reproduce bit-identically
// regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state);
    state ^= static_cast<std::uint64_t>(stream) * 0xda942042e4dd58b5ull;
    std::uint64_t b = splitmix64(state);
    state ^= index * 0x2545f4914f6cdd1dull + 0x9e6c63d0876a9a47ull;
    return splitmix64(state) ^ (a + (b << 1));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    // Index in [0, weights.size()) with the given probabilities.
    int categorical(const Eigen::VectorXd& weights) {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
        double acc = 0.0;
        for (int i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return static_cast<int>(weights.size()) - 1;
    }

    template <typename Derived>
    void fill_normal(Eigen::DenseBase<Derived>& out) {
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal();
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace optreward
