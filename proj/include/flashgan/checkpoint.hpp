#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/adam.hpp"
#include "flashgan/error.hpp"
#include "flashgan/matrix.hpp"
#include "flashgan/threshold.hpp"

namespace flashgan {

// Versioned binary checkpoint: named tensors, optional Adam blocks, optional
// threshold state, optional RNG cursor, free-form JSON metadata. All integers
// and doubles are encoded little-endian byte by byte, so files round-trip
// bit-exactly regardless of host conventions.
struct Checkpoint {
    std::string meta_json;
    std::vector<std::pair<std::string, Matrix>> tensors;

    struct AdamBlock {
        std::string name; // optimizer label, e.g. "gen" / "disc"
        long t = 0;
        AdamConfig cfg;
        std::vector<std::pair<std::string, Matrix>> m, v;
    };
    std::vector<AdamBlock> adam;

    bool has_thresholds = false;
    std::vector<double> eta;
    int threshold_failures = 0;
    ThresholdConfig threshold_cfg;

    std::string rng_state; // empty = absent
};

namespace detail {

inline void put_u8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

inline void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.append(s);
}

inline void put_matrix(std::string& out, const Matrix& m) {
    put_u32(out, static_cast<uint32_t>(m.rows));
    put_u32(out, static_cast<uint32_t>(m.cols));
    for (double v : m.a) put_f64(out, v);
}

inline void put_named(std::string& out, const std::vector<std::pair<std::string, Matrix>>& ts) {
    put_u32(out, static_cast<uint32_t>(ts.size()));
    for (const auto& [name, m] : ts) {
        put_str(out, name);
        put_matrix(out, m);
    }
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string where;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw ParseError(where + ": truncated at byte " + std::to_string(pos));
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(buf[pos++]);
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    Matrix matrix() {
        const int r = static_cast<int>(u32());
        const int c = static_cast<int>(u32());
        Matrix m(r, c);
        for (double& v : m.a) v = f64();
        return m;
    }
    std::vector<std::pair<std::string, Matrix>> named() {
        const uint32_t n = u32();
        std::vector<std::pair<std::string, Matrix>> out;
        out.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            std::string name = str();
            out.emplace_back(std::move(name), matrix());
        }
        return out;
    }
};

} // namespace detail

inline constexpr char kCheckpointMagic[4] = {'F', 'G', 'C', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    using namespace detail;
    std::string out;
    out.append(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_str(out, ck.meta_json);
    put_named(out, ck.tensors);
    put_u32(out, static_cast<uint32_t>(ck.adam.size()));
    for (const auto& ab : ck.adam) {
        put_str(out, ab.name);
        put_u64(out, static_cast<uint64_t>(ab.t));
        put_f64(out, ab.cfg.lr);
        put_f64(out, ab.cfg.beta1);
        put_f64(out, ab.cfg.beta2);
        put_f64(out, ab.cfg.eps);
        put_named(out, ab.m);
        put_named(out, ab.v);
    }
    put_u8(out, ck.has_thresholds ? 1 : 0);
    if (ck.has_thresholds) {
        put_u32(out, static_cast<uint32_t>(ck.eta.size()));
        for (double e : ck.eta) put_f64(out, e);
        put_u32(out, static_cast<uint32_t>(ck.threshold_failures));
        put_f64(out, ck.threshold_cfg.initial);
        put_f64(out, ck.threshold_cfg.increment);
        put_f64(out, ck.threshold_cfg.decrement);
        put_f64(out, ck.threshold_cfg.lower);
        put_f64(out, ck.threshold_cfg.upper);
        put_u32(out, static_cast<uint32_t>(ck.threshold_cfg.fail_threshold));
    }
    put_str(out, ck.rng_state);

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write checkpoint " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ParseError("checkpoint write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    using namespace detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path.string()};

    r.need(4);
    if (buf.compare(0, 4, kCheckpointMagic, 4) != 0) throw ParseError(path.string() + ": bad magic");
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw ParseError(path.string() + ": unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.meta_json = r.str();
    ck.tensors = r.named();
    const uint32_t n_adam = r.u32();
    for (uint32_t i = 0; i < n_adam; ++i) {
        Checkpoint::AdamBlock ab;
        ab.name = r.str();
        ab.t = static_cast<long>(r.u64());
        ab.cfg.lr = r.f64();
        ab.cfg.beta1 = r.f64();
        ab.cfg.beta2 = r.f64();
        ab.cfg.eps = r.f64();
        ab.m = r.named();
        ab.v = r.named();
        ck.adam.push_back(std::move(ab));
    }
    ck.has_thresholds = r.u8() != 0;
    if (ck.has_thresholds) {
        const uint32_t n = r.u32();
        ck.eta.resize(n);
        for (double& e : ck.eta) e = r.f64();
        ck.threshold_failures = static_cast<int>(r.u32());
        ck.threshold_cfg.initial = r.f64();
        ck.threshold_cfg.increment = r.f64();
        ck.threshold_cfg.decrement = r.f64();
        ck.threshold_cfg.lower = r.f64();
        ck.threshold_cfg.upper = r.f64();
        ck.threshold_cfg.fail_threshold = static_cast<int>(r.u32());
    }
    ck.rng_state = r.str();
    if (r.pos != buf.size()) throw ParseError(path.string() + ": trailing bytes after checkpoint payload");
    return ck;
}

// Helpers bridging ParamStore/AdamState to checkpoint blocks.

inline std::vector<std::pair<std::string, Matrix>> snapshot_params(const ParamStore& ps) {
    std::vector<std::pair<std::string, Matrix>> out;
    for (const auto& n : ps.names()) out.emplace_back(n, ps.get(n));
    return out;
}

inline std::vector<std::pair<std::string, Matrix>> snapshot_params(const ParamStore& ps,
                                                                   const std::vector<std::string>& names) {
    std::vector<std::pair<std::string, Matrix>> out;
    for (const auto& n : names) out.emplace_back(n, ps.get(n));
    return out;
}

// Overwrites matching names; every checkpoint tensor must exist with the same
// shape. Missing registry names are left at their current values.
inline void restore_params(ParamStore& ps, const std::vector<std::pair<std::string, Matrix>>& tensors) {
    for (const auto& [name, m] : tensors) {
        if (!ps.has(name)) throw SchemaError("checkpoint tensor '" + name + "' not in parameter registry");
        Matrix& dst = ps.get(name);
        if (!dst.same_shape(m))
            throw DimensionError("checkpoint tensor '" + name + "' shape " + shape_str(m) +
                                 " != registered " + shape_str(dst));
        dst = m;
    }
}

inline Checkpoint::AdamBlock snapshot_adam(const std::string& label, const AdamState& st) {
    Checkpoint::AdamBlock ab;
    ab.name = label;
    ab.t = st.step_count();
    ab.cfg = st.config();
    for (const auto& n : st.names()) {
        ab.m.emplace_back(n, st.moments1().at(n));
        ab.v.emplace_back(n, st.moments2().at(n));
    }
    return ab;
}

inline void restore_adam(AdamState& st, const Checkpoint::AdamBlock& ab) {
    st.restore_step_count(ab.t);
    for (const auto& [n, m] : ab.m) {
        auto it = st.moments1().find(n);
        if (it == st.moments1().end()) throw SchemaError("adam moment '" + n + "' not in optimizer");
        it->second = m;
    }
    for (const auto& [n, m] : ab.v) {
        auto it = st.moments2().find(n);
        if (it == st.moments2().end()) throw SchemaError("adam moment '" + n + "' not in optimizer");
        it->second = m;
    }
}

} // namespace flashgan
