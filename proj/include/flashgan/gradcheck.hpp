#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "flashgan/rng.hpp"
#include "flashgan/tape.hpp"

namespace flashgan {

// Loss under current params. When `grads` is non-null the builder must also
// run a taped backward into it; with null it evaluates the value only.
using LossBuilder = std::function<double(ParamStore&, GradStore*)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_fd = 0.0;
    int coords_checked = 0;
};

// Central differences against the taped gradient. Relative error is
// |analytic - fd| / max(1, |analytic|), maximized over sampled coordinates.
// The builder must be deterministic for fixed params; the finite-difference
// path re-evaluates values only and never reuses the taped pass.
inline GradCheckReport grad_check(const LossBuilder& builder, ParamStore& params,
                                  const std::vector<std::string>& names, RngStream& rng,
                                  int max_coords_per_tensor = 8, double h = 1e-5) {
    GradStore analytic;
    builder(params, &analytic);

    GradCheckReport rep;
    for (const auto& name : names) {
        Matrix& p = params.get(name);
        const auto git = analytic.find(name);
        std::vector<size_t> coords;
        if (static_cast<int>(p.a.size()) <= max_coords_per_tensor) {
            for (size_t i = 0; i < p.a.size(); ++i) coords.push_back(i);
        } else {
            for (int i = 0; i < max_coords_per_tensor; ++i)
                coords.push_back(static_cast<size_t>(rng.uniform_int(static_cast<int>(p.a.size()))));
        }
        for (size_t c : coords) {
            const double orig = p.a[c];
            p.a[c] = orig + h;
            const double fp = builder(params, nullptr);
            p.a[c] = orig - h;
            const double fm = builder(params, nullptr);
            p.a[c] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = git != analytic.end() ? git->second.a[c] : 0.0;
            const double rel = std::abs(an - fd) / std::max(1.0, std::abs(an));
            ++rep.coords_checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = name;
                rep.worst_index = c;
                rep.worst_analytic = an;
                rep.worst_fd = fd;
            }
        }
    }
    return rep;
}

} // namespace flashgan
