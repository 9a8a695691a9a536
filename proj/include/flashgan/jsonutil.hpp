#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "flashgan/adam.hpp"
#include "flashgan/error.hpp"
#include "flashgan/gan.hpp"
#include "flashgan/hetgraph.hpp"
#include "flashgan/textio.hpp"
#include "flashgan/threshold.hpp"

namespace flashgan {

using nlohmann::json;

// Typed accessors over a JSON object that track which keys were read;
// done() rejects leftovers so config typos fail loudly instead of silently
// falling back to defaults.
class JsonCursor {
public:
    JsonCursor(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    double num(const char* key, double def) {
        if (!j_.contains(key)) return def;
        mark(key);
        if (!j_[key].is_number()) throw ConfigError(ctx_ + "." + key + ": expected a number");
        return j_[key].get<double>();
    }

    long integer(const char* key, long def) {
        if (!j_.contains(key)) return def;
        mark(key);
        if (!j_[key].is_number_integer()) throw ConfigError(ctx_ + "." + key + ": expected an integer");
        return j_[key].get<long>();
    }

    uint64_t u64(const char* key, uint64_t def) {
        if (!j_.contains(key)) return def;
        mark(key);
        const auto& v = j_[key];
        if (v.is_number_unsigned()) return v.get<uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0)
            return static_cast<uint64_t>(v.get<long long>());
        throw ConfigError(ctx_ + "." + key + ": expected a non-negative integer");
    }

    bool flag(const char* key, bool def) {
        if (!j_.contains(key)) return def;
        mark(key);
        if (!j_[key].is_boolean()) throw ConfigError(ctx_ + "." + key + ": expected true/false");
        return j_[key].get<bool>();
    }

    std::string str(const char* key, const std::string& def) {
        if (!j_.contains(key)) return def;
        mark(key);
        if (!j_[key].is_string()) throw ConfigError(ctx_ + "." + key + ": expected a string");
        return j_[key].get<std::string>();
    }

    // Nested object (empty object when absent); the key counts as consumed.
    json sub(const char* key) {
        if (!j_.contains(key)) return json::object();
        mark(key);
        if (!j_[key].is_object()) throw ConfigError(ctx_ + "." + key + ": expected an object");
        return j_[key];
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::set<std::string> used_;
    std::string ctx_;

    void mark(const char* key) { used_.insert(key); }
};

inline json schema_to_json(const Schema& s) {
    json nts = json::array();
    for (const auto& nt : s.node_types)
        nts.push_back({{"name", nt.name}, {"feature_dim", nt.feature_dim}, {"labeled", nt.labeled}});
    json ets = json::array();
    for (const auto& et : s.edge_types)
        ets.push_back({{"name", et.name},
                       {"src", s.node_types[static_cast<size_t>(et.src_type)].name},
                       {"dst", s.node_types[static_cast<size_t>(et.dst_type)].name},
                       {"undirected", et.undirected}});
    return json{{"node_types", nts}, {"edge_types", ets}};
}

inline Schema schema_from_json(const json& j, const std::string& ctx) {
    Schema s;
    if (!j.is_object() || !j.contains("node_types") || !j.contains("edge_types"))
        throw ParseError(ctx + ": schema needs node_types and edge_types");
    for (const auto& nt : j["node_types"]) {
        JsonCursor c(nt, ctx + ".node_types[]");
        NodeTypeSpec spec;
        spec.name = c.str("name", "");
        spec.feature_dim = static_cast<int>(c.integer("feature_dim", 0));
        spec.labeled = c.flag("labeled", false);
        c.done();
        if (spec.name.empty()) throw ParseError(ctx + ": node type missing name");
        s.node_types.push_back(spec);
    }
    for (const auto& et : j["edge_types"]) {
        JsonCursor c(et, ctx + ".edge_types[]");
        EdgeTypeSpec spec;
        spec.name = c.str("name", "");
        const std::string src = c.str("src", "");
        const std::string dst = c.str("dst", "");
        spec.undirected = c.flag("undirected", false);
        c.done();
        spec.src_type = s.node_type_index(src);
        spec.dst_type = s.node_type_index(dst);
        if (spec.name.empty()) throw ParseError(ctx + ": edge type missing name");
        s.edge_types.push_back(spec);
    }
    s.validate();
    return s;
}

inline json adam_to_json(const AdamConfig& a) {
    return json{{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

inline AdamConfig adam_from_json(const json& j, const std::string& ctx, AdamConfig def = {}) {
    JsonCursor c(j, ctx);
    AdamConfig a;
    a.lr = c.num("lr", def.lr);
    a.beta1 = c.num("beta1", def.beta1);
    a.beta2 = c.num("beta2", def.beta2);
    a.eps = c.num("eps", def.eps);
    c.done();
    return a;
}

inline json threshold_to_json(const ThresholdConfig& t) {
    return json{{"initial", t.initial}, {"increment", t.increment}, {"decrement", t.decrement},
                {"lower", t.lower},     {"upper", t.upper},         {"fail_threshold", t.fail_threshold}};
}

inline ThresholdConfig threshold_from_json(const json& j, const std::string& ctx) {
    JsonCursor c(j, ctx);
    ThresholdConfig t;
    t.initial = c.num("initial", t.initial);
    t.increment = c.num("increment", t.increment);
    t.decrement = c.num("decrement", t.decrement);
    t.lower = c.num("lower", t.lower);
    t.upper = c.num("upper", t.upper);
    t.fail_threshold = static_cast<int>(c.integer("fail_threshold", t.fail_threshold));
    c.done();
    t.validate();
    return t;
}

inline json dims_to_json(const GanDims& d) {
    return json{{"noise_dim", d.noise_dim},
                {"gen_hidden", d.gen_hidden},
                {"gen_layers", d.gen_layers},
                {"gen_out", d.gen_out},
                {"mixer_hidden", d.mixer_hidden},
                {"mixer_out", d.mixer_out},
                {"mixer_layers", d.mixer_layers},
                {"dropper_hidden", d.dropper_hidden},
                {"dropper_layers", d.dropper_layers},
                {"disc_hidden", d.disc_hidden},
                {"disc_layers", d.disc_layers}};
}

inline GanDims dims_from_json(const json& j, const std::string& ctx) {
    JsonCursor c(j, ctx);
    GanDims d;
    d.noise_dim = static_cast<int>(c.integer("noise_dim", d.noise_dim));
    d.gen_hidden = static_cast<int>(c.integer("gen_hidden", d.gen_hidden));
    d.gen_layers = static_cast<int>(c.integer("gen_layers", d.gen_layers));
    d.gen_out = static_cast<int>(c.integer("gen_out", d.gen_out));
    d.mixer_hidden = static_cast<int>(c.integer("mixer_hidden", d.mixer_hidden));
    d.mixer_out = static_cast<int>(c.integer("mixer_out", d.mixer_out));
    d.mixer_layers = static_cast<int>(c.integer("mixer_layers", d.mixer_layers));
    d.dropper_hidden = static_cast<int>(c.integer("dropper_hidden", d.dropper_hidden));
    d.dropper_layers = static_cast<int>(c.integer("dropper_layers", d.dropper_layers));
    d.disc_hidden = static_cast<int>(c.integer("disc_hidden", d.disc_hidden));
    d.disc_layers = static_cast<int>(c.integer("disc_layers", d.disc_layers));
    c.done();
    return d;
}

inline json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(path.string() + ": invalid JSON");
    return j;
}

} // namespace flashgan
