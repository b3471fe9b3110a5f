#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "supergen/cache.hpp"
#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/parallel.hpp"
#include "supergen/predictor.hpp"
#include "supergen/scene.hpp"
#include "supergen/schedule.hpp"
#include "supergen/tiling.hpp"

namespace supergen {

enum class PredictorKind { Oracle, Drift, Replay };

struct RunConfig {
    SceneParams scene;
    std::vector<Blob> blobs;  // explicit blobs; seeded from scene.seed when empty

    // Latent dims. Pixel dims are latent dims times the codec factor.
    std::size_t low_height = 72, low_width = 128;
    std::size_t height = 144, width = 256;
    Codec codec;

    ScheduleKind schedule = ScheduleKind::Linear;
    int train_steps = 1000;
    double beta_start = 1e-4, beta_end = 0.02;
    int steps = 50;
    double eta = 0.0;
    int renoise_steps = 45;

    std::size_t tile_height = 48, tile_width = 64;
    std::size_t loop_step = 16;
    std::size_t shift_every = 1;
    ShiftMode shift_mode = ShiftMode::Wrap;

    CacheConfig cache;

    PredictorKind predictor = PredictorKind::Oracle;
    CostModel cost;
    DriftParams drift;

    ExecutorOptions executor;
    std::uint64_t seed = 0;
    std::string trace_record;
    std::string trace_replay;

    std::size_t frames() const noexcept { return scene.frames; }
    std::size_t channels() const noexcept { return scene.channels; }
    Shape low_shape() const noexcept { return {scene.frames, scene.channels, low_height, low_width}; }
    Shape high_shape() const noexcept { return {scene.frames, scene.channels, height, width}; }
    std::size_t scale() const noexcept { return low_height ? height / low_height : 0; }

    TileGrid grid() const { return make_grid(height, width, tile_height, tile_width, loop_step, shift_mode, shift_every); }

    void validate() const {
        if (scene.frames < 1 || scene.channels < 1) throw ConfigError("frames and channels must be >= 1");
        if (low_height < 1 || low_width < 1) throw ConfigError("low-resolution dims must be >= 1");
        if (height % low_height != 0 || width % low_width != 0 || height / low_height != width / low_width)
            throw ConfigError("target " + std::to_string(height) + "x" + std::to_string(width) +
                              " is not an integer multiple of " + std::to_string(low_height) + "x" +
                              std::to_string(low_width) + " with equal scale on both axes");
        codec.validate();
        if (train_steps < 1) throw ConfigError("schedule.T must be >= 1");
        if (steps < 1 || steps > train_steps) throw ConfigError("steps must be in [1, schedule.T]");
        if (renoise_steps < 1 || renoise_steps > steps) throw ConfigError("renoise_steps must be in [1, steps]");
        if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must be in [0, 1]");
        (void)grid();
        cache.validate();
        if (executor.workers < 1) throw ConfigError("workers must be >= 1");
        if (cost.units_per_tile_call < 0.0 || cost.stall_ms < 0.0) throw ConfigError("predictor costs must be >= 0");
        if (predictor == PredictorKind::Replay && trace_replay.empty())
            throw ConfigError("predictor.kind=replay needs trace.replay");
        for (const auto& b : blobs)
            if (b.radius <= 0.0) throw ConfigError("blob radius must be > 0");
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

inline std::string format_double(double d) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, p);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

// Blobs as "cy:cx:vy:vx:radius:amplitude" separated by ';'.
inline std::vector<Blob> parse_blobs(const std::string& key, const std::string& v) {
    std::vector<Blob> out;
    if (v.empty() || v == "none") return out;
    for (const auto& item : split(v, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 6) throw ConfigError(key + ": blob needs 6 ':'-separated fields, got '" + item + "'");
        Blob b;
        b.center_y = parse_number<double>(key, f[0]);
        b.center_x = parse_number<double>(key, f[1]);
        b.velocity_y = parse_number<double>(key, f[2]);
        b.velocity_x = parse_number<double>(key, f[3]);
        b.radius = parse_number<double>(key, f[4]);
        b.amplitude = parse_number<double>(key, f[5]);
        out.push_back(b);
    }
    return out;
}

inline std::string format_blobs(const std::vector<Blob>& blobs) {
    if (blobs.empty()) return "none";
    std::string s;
    for (const auto& b : blobs) {
        if (!s.empty()) s += ";";
        s += format_double(b.center_y) + ":" + format_double(b.center_x) + ":" + format_double(b.velocity_y) + ":" +
             format_double(b.velocity_x) + ":" + format_double(b.radius) + ":" + format_double(b.amplitude);
    }
    return s;
}

}  // namespace detail

struct ConfigKey {
    std::string name;
    bool execution_only = false;  // excluded from the config digest
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
    using detail::format_double;
    using detail::parse_bool;
    using detail::parse_number;
    auto size_key = [](std::string name, std::size_t RunConfig::*field, bool exec = false) {
        return ConfigKey{name, exec, [name, field](RunConfig& c, const std::string& v) {
                             c.*field = parse_number<std::size_t>(name, v);
                         },
                         [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto int_key = [](std::string name, int RunConfig::*field) {
        return ConfigKey{name, false, [name, field](RunConfig& c, const std::string& v) {
                             c.*field = parse_number<int>(name, v);
                         },
                         [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto real_key = [](std::string name, auto getter) {
        return ConfigKey{name, false, [name, getter](RunConfig& c, const std::string& v) {
                             getter(c) = parse_number<double>(name, v);
                         },
                         [getter](const RunConfig& c) { return format_double(getter(const_cast<RunConfig&>(c))); }};
    };
    auto bool_key = [](std::string name, auto getter, bool exec = false) {
        return ConfigKey{name, exec, [name, getter](RunConfig& c, const std::string& v) {
                             getter(c) = parse_bool(name, v);
                         },
                         [getter](const RunConfig& c) { return getter(const_cast<RunConfig&>(c)) ? "true" : "false"; }};
    };

    static const std::vector<ConfigKey> keys = [&] {
        std::vector<ConfigKey> k;
        k.push_back({"scene.id", false, [](RunConfig& c, const std::string& v) { c.scene.id = v; },
                     [](const RunConfig& c) { return c.scene.id; }});
        k.push_back({"scene.seed", false,
                     [](RunConfig& c, const std::string& v) { c.scene.seed = parse_number<std::uint64_t>("scene.seed", v); },
                     [](const RunConfig& c) { return std::to_string(c.scene.seed); }});
        k.push_back({"scene.blob_count", false,
                     [](RunConfig& c, const std::string& v) {
                         c.scene.blob_count = parse_number<std::size_t>("scene.blob_count", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.scene.blob_count); }});
        k.push_back(real_key("scene.blob_radius", [](RunConfig& c) -> double& { return c.scene.blob_radius; }));
        k.push_back(real_key("scene.blob_amplitude", [](RunConfig& c) -> double& { return c.scene.blob_amplitude; }));
        k.push_back(real_key("scene.blob_speed", [](RunConfig& c) -> double& { return c.scene.blob_speed; }));
        k.push_back(real_key("scene.background_amplitude",
                             [](RunConfig& c) -> double& { return c.scene.background_amplitude; }));
        k.push_back({"scene.blobs", false,
                     [](RunConfig& c, const std::string& v) { c.blobs = detail::parse_blobs("scene.blobs", v); },
                     [](const RunConfig& c) { return detail::format_blobs(c.blobs); }});
        k.push_back({"frames", false,
                     [](RunConfig& c, const std::string& v) { c.scene.frames = parse_number<std::size_t>("frames", v); },
                     [](const RunConfig& c) { return std::to_string(c.scene.frames); }});
        k.push_back({"channels", false,
                     [](RunConfig& c, const std::string& v) {
                         c.scene.channels = parse_number<std::size_t>("channels", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.scene.channels); }});
        k.push_back(size_key("low_height", &RunConfig::low_height));
        k.push_back(size_key("low_width", &RunConfig::low_width));
        k.push_back(size_key("height", &RunConfig::height));
        k.push_back(size_key("width", &RunConfig::width));
        k.push_back({"codec.kind", false,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "identity") c.codec.kind = CodecKind::Identity;
                         else if (v == "avgpool") c.codec.kind = CodecKind::AvgPool;
                         else throw ConfigError("codec.kind must be identity or avgpool, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return c.codec.kind == CodecKind::Identity ? "identity" : "avgpool"; }});
        k.push_back({"codec.factor", false,
                     [](RunConfig& c, const std::string& v) { c.codec.factor = parse_number<std::size_t>("codec.factor", v); },
                     [](const RunConfig& c) { return std::to_string(c.codec.factor); }});
        k.push_back({"schedule.kind", false,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "linear") c.schedule = ScheduleKind::Linear;
                         else if (v == "cosine") c.schedule = ScheduleKind::Cosine;
                         else throw ConfigError("schedule.kind must be linear or cosine, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return c.schedule == ScheduleKind::Linear ? "linear" : "cosine"; }});
        k.push_back(int_key("schedule.T", &RunConfig::train_steps));
        k.push_back(real_key("schedule.beta_start", [](RunConfig& c) -> double& { return c.beta_start; }));
        k.push_back(real_key("schedule.beta_end", [](RunConfig& c) -> double& { return c.beta_end; }));
        k.push_back(int_key("steps", &RunConfig::steps));
        k.push_back(real_key("eta", [](RunConfig& c) -> double& { return c.eta; }));
        k.push_back(int_key("renoise_steps", &RunConfig::renoise_steps));
        k.push_back(size_key("tile_height", &RunConfig::tile_height));
        k.push_back(size_key("tile_width", &RunConfig::tile_width));
        k.push_back(size_key("loop_step", &RunConfig::loop_step));
        k.push_back(size_key("shift_every", &RunConfig::shift_every));
        k.push_back({"shift_mode", false,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "wrap") c.shift_mode = ShiftMode::Wrap;
                         else if (v == "clamp") c.shift_mode = ShiftMode::Clamp;
                         else throw ConfigError("shift_mode must be wrap or clamp, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return c.shift_mode == ShiftMode::Wrap ? "wrap" : "clamp"; }});
        k.push_back(bool_key("cache.enabled", [](RunConfig& c) -> bool& { return c.cache.enabled; }));
        k.push_back(real_key("cache.tau", [](RunConfig& c) -> double& { return c.cache.tau; }));
        k.push_back(real_key("cache.scale", [](RunConfig& c) -> double& { return c.cache.scale_factor; }));
        k.push_back({"cache.warmup", false,
                     [](RunConfig& c, const std::string& v) { c.cache.warmup_skip = parse_number<std::size_t>("cache.warmup", v); },
                     [](const RunConfig& c) { return std::to_string(c.cache.warmup_skip); }});
        k.push_back({"cache.tail", false,
                     [](RunConfig& c, const std::string& v) { c.cache.tail_skip = parse_number<std::size_t>("cache.tail", v); },
                     [](const RunConfig& c) { return std::to_string(c.cache.tail_skip); }});
        k.push_back({"cache.norm", false,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "l1") c.cache.norm = NormKind::L1;
                         else if (v == "l2") c.cache.norm = NormKind::L2;
                         else throw ConfigError("cache.norm must be l1 or l2, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return c.cache.norm == NormKind::L1 ? "l1" : "l2"; }});
        k.push_back(real_key("cache.tau_min_mult", [](RunConfig& c) -> double& { return c.cache.tau_min_mult; }));
        k.push_back(real_key("cache.tau_max_mult", [](RunConfig& c) -> double& { return c.cache.tau_max_mult; }));
        k.push_back(bool_key("cache.adaptive", [](RunConfig& c) -> bool& { return c.cache.region_aware; }));
        k.push_back({"predictor.kind", false,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "oracle") c.predictor = PredictorKind::Oracle;
                         else if (v == "drift") c.predictor = PredictorKind::Drift;
                         else if (v == "replay") c.predictor = PredictorKind::Replay;
                         else throw ConfigError("predictor.kind must be oracle, drift or replay, got '" + v + "'");
                     },
                     [](const RunConfig& c) {
                         return c.predictor == PredictorKind::Oracle  ? "oracle"
                                : c.predictor == PredictorKind::Drift ? "drift"
                                                                      : "replay";
                     }});
        k.push_back(real_key("predictor.cost_units", [](RunConfig& c) -> double& { return c.cost.units_per_tile_call; }));
        k.push_back(real_key("predictor.stall_ms", [](RunConfig& c) -> double& { return c.cost.stall_ms; }));
        k.back().execution_only = true;
        k.push_back(real_key("drift.amplitude", [](RunConfig& c) -> double& { return c.drift.amplitude; }));
        k.push_back(real_key("drift.ratio", [](RunConfig& c) -> double& { return c.drift.ratio; }));
        k.push_back(real_key("drift.cycles", [](RunConfig& c) -> double& { return c.drift.cycles; }));
        k.push_back(real_key("drift.fg_amplitude", [](RunConfig& c) -> double& { return c.drift.foreground_amplitude; }));
        k.push_back({"workers", true,
                     [](RunConfig& c, const std::string& v) { c.executor.workers = parse_number<std::size_t>("workers", v); },
                     [](const RunConfig& c) { return std::to_string(c.executor.workers); }});
        k.push_back(bool_key("rebalance", [](RunConfig& c) -> bool& { return c.executor.rebalance; }, true));
        k.push_back(bool_key("exchange", [](RunConfig& c) -> bool& { return c.executor.exchange; }, true));
        k.push_back({"executor", true,
                     [](RunConfig& c, const std::string& v) {
                         if (v == "virtual") c.executor.mode = ExecutorMode::Virtual;
                         else if (v == "threaded") c.executor.mode = ExecutorMode::Threaded;
                         else throw ConfigError("executor must be virtual or threaded, got '" + v + "'");
                     },
                     [](const RunConfig& c) { return c.executor.mode == ExecutorMode::Virtual ? "virtual" : "threaded"; }});
        k.push_back(real_key("gather_cost", [](RunConfig& c) -> double& { return c.executor.gather_cost; }));
        k.back().execution_only = true;
        k.push_back({"seed", false, [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        k.push_back({"trace.record", true, [](RunConfig& c, const std::string& v) { c.trace_record = v; },
                     [](const RunConfig& c) { return c.trace_record; }});
        k.push_back({"trace.replay", true, [](RunConfig& c, const std::string& v) { c.trace_replay = v; },
                     [](const RunConfig& c) { return c.trace_replay; }});
        return k;
    }();
    return keys;
}

inline const ConfigKey& find_config_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw ConfigError("unknown config key '" + name + "'");
}

inline bool is_config_key(const std::string& name) {
    const auto& keys = config_keys();
    return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    find_config_key(key).set(c, value);
}

inline std::string get_config_value(const RunConfig& c, const std::string& key) { return find_config_key(key).get(c); }

// Applies "key=value".
inline void apply_override(RunConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set_config_value(c, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

// Flat "key = value" text; '#' starts a comment.
inline RunConfig parse_config(std::istream& is, const std::string& origin = "<config>") {
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        try {
            apply_override(c, text);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    return parse_config(is, path.string());
}

// Every key in canonical form, one "key = value" per line.
inline std::string dump_config(const RunConfig& c, bool include_execution = true) {
    std::string out;
    for (const auto& k : config_keys())
        if (include_execution || !k.execution_only) out += k.name + " = " + k.get(c) + "\n";
    return out;
}

// Digest of the result-defining keys; execution-only keys are left out.
inline std::uint64_t config_digest(const RunConfig& c) {
    const auto text = dump_config(c, false);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace supergen
