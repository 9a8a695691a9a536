#pragma once

#include <algorithm>
#include <vector>

#include "flashgan/error.hpp"

namespace flashgan {

struct ThresholdConfig {
    double initial = 0.49;
    double increment = 0.04;  // applied once per collection round
    double decrement = 0.005; // applied on every fail_threshold-th failure
    double lower = 0.49;
    double upper = 0.95;
    int fail_threshold = 10;

    void validate() const {
        if (!(lower <= initial && initial <= upper)) throw ConfigError("threshold: initial outside bounds");
        if (!(lower <= upper)) throw ConfigError("threshold: lower > upper");
        if (increment < 0.0 || decrement < 0.0) throw ConfigError("threshold: negative step");
        if (fail_threshold < 1) throw ConfigError("threshold: fail_threshold must be >= 1");
    }
};

// Adaptive edge-dropping thresholds. All scored edge types move together and
// share the failure counter; a success never resets the counter, only the
// decrement branch does.
struct ThresholdState {
    std::vector<double> eta; // per scored edge type
    int failures = 0;
    ThresholdConfig cfg;

    static ThresholdState init(const ThresholdConfig& cfg, size_t n_types) {
        cfg.validate();
        ThresholdState s;
        s.cfg = cfg;
        s.eta.assign(n_types, cfg.initial);
        return s;
    }
};

inline void round_begin(ThresholdState& s) {
    for (double& e : s.eta) e = std::min(e + s.cfg.increment, s.cfg.upper);
    s.failures = 0;
}

inline void record_failure(ThresholdState& s) {
    ++s.failures;
    if (s.failures >= s.cfg.fail_threshold) {
        for (double& e : s.eta) e = std::max(e - s.cfg.decrement, s.cfg.lower);
        s.failures = 0;
    }
}

inline void record_success(ThresholdState&) {}

} // namespace flashgan
