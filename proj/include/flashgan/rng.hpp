#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flashgan/error.hpp"
#include "flashgan/matrix.hpp"

namespace flashgan {

// SplitMix64 step; used only to derive substream seeds.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled variate transforms. The engine's bit stream is
// fixed by the standard; std::uniform_real_distribution and friends are not,
// so every transform lives here to keep runs bit-identical across platforms.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : eng_(seed) {}

    // Substream addressed by a path of indices, e.g. {seed; epoch, slot}.
    static RngStream derive(uint64_t seed, std::initializer_list<uint64_t> path) {
        uint64_t h = splitmix64(seed);
        for (uint64_t p : path) h = splitmix64(h ^ p);
        return RngStream(h);
    }

    uint64_t next_u64() { return eng_(); }

    // [0, 1), 53-bit mantissa.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // (0, 1]; safe under log().
    double uniform_open01() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    // Box-Muller, cosine branch only (no cached second variate).
    double normal() {
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // [0, n) by rejection; unbiased.
    int uniform_int(int n) {
        if (n <= 0) throw ContractError("uniform_int: n must be positive");
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t bound = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= bound);
        return static_cast<int>(x % un);
    }

    // Knuth's product method; fine for the small rates used here.
    int poisson(double lambda) {
        if (!(lambda >= 0.0)) throw ContractError("poisson: lambda must be >= 0");
        if (lambda == 0.0) return 0;
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Fisher-Yates; std::shuffle's draw pattern is unspecified.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    Matrix normal_matrix(int rows, int cols, double stddev = 1.0, double mean = 0.0) {
        Matrix m(rows, cols);
        for (double& v : m.a) v = mean + stddev * normal();
        return m;
    }

    // Engine state round-trips exactly through the standard's text format.
    std::string save_state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (is.fail()) throw ParseError("rng state: malformed engine text");
    }

private:
    std::mt19937_64 eng_;
};

} // namespace flashgan
