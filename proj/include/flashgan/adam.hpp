#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "flashgan/error.hpp"
#include "flashgan/matrix.hpp"
#include "flashgan/tape.hpp"

namespace flashgan {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction over a fixed name subset of a ParamStore.
// A name missing from the grad map counts as zero gradient.
class AdamState {
public:
    AdamState() = default;

    AdamState(AdamConfig cfg, const ParamStore& ps, std::vector<std::string> names)
        : cfg_(cfg), names_(std::move(names)) {
        for (const auto& n : names_) {
            const Matrix& p = ps.get(n);
            m_[n] = Matrix::zeros_like(p);
            v_[n] = Matrix::zeros_like(p);
        }
    }

    // grad_scale = -1 turns a descent direction into ascent.
    void step(ParamStore& ps, const GradStore& grads, double grad_scale = 1.0) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (const auto& name : names_) {
            Matrix& p = ps.get(name);
            Matrix& m = m_[name];
            Matrix& v = v_[name];
            const auto git = grads.find(name);
            const Matrix* g = git != grads.end() ? &git->second : nullptr;
            if (g && !g->same_shape(p))
                throw DimensionError("adam: gradient shape " + shape_str(*g) + " != param '" + name + "' " +
                                     shape_str(p));
            for (size_t i = 0; i < p.a.size(); ++i) {
                const double gi = g ? g->a[i] * grad_scale : 0.0;
                if (!std::isfinite(gi))
                    throw ContractError("adam: non-finite gradient in '" + name + "' at flat index " +
                                        std::to_string(i));
                m.a[i] = cfg_.beta1 * m.a[i] + (1.0 - cfg_.beta1) * gi;
                v.a[i] = cfg_.beta2 * v.a[i] + (1.0 - cfg_.beta2) * gi * gi;
                p.a[i] -= cfg_.lr * (m.a[i] / bc1) / (std::sqrt(v.a[i] / bc2) + cfg_.eps);
            }
        }
    }

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<std::string>& names() const { return names_; }

    // Checkpoint access.
    std::map<std::string, Matrix>& moments1() { return m_; }
    std::map<std::string, Matrix>& moments2() { return v_; }
    const std::map<std::string, Matrix>& moments1() const { return m_; }
    const std::map<std::string, Matrix>& moments2() const { return v_; }
    void restore_step_count(long t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<std::string> names_;
    std::map<std::string, Matrix> m_, v_;
    long t_ = 0;
};

} // namespace flashgan
