#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/predictor.hpp"
#include "supergen/tensor_io.hpp"

namespace supergen {

// Trace file: "SGTR", u32 version, u64 config digest, then records
//   [u32 step, u32 tile, u32 timestep, SGTN input, SGTN output, f64 cost]
// ordered by (step, tile).
inline constexpr char kTraceMagic[4] = {'S', 'G', 'T', 'R'};
inline constexpr std::uint32_t kTraceVersion = 1;

struct TraceRecord {
    std::uint32_t step = 0;
    std::uint32_t tile = 0;
    std::uint32_t timestep = 0;
    Canvas input;
    Canvas output;
    double cost_units = 0.0;
};

inline void write_trace_header(std::ostream& os, std::uint64_t digest) {
    os.write(kTraceMagic, 4);
    le::write<std::uint32_t>(os, kTraceVersion);
    le::write<std::uint64_t>(os, digest);
}

inline void write_trace_record(std::ostream& os, const TraceRecord& r) {
    le::write<std::uint32_t>(os, r.step);
    le::write<std::uint32_t>(os, r.tile);
    le::write<std::uint32_t>(os, r.timestep);
    write_sgtn(os, r.input);
    write_sgtn(os, r.output);
    le::write<double>(os, r.cost_units);
}

// Returns nullopt at clean end of file; throws ReplayError on truncation.
inline std::optional<TraceRecord> read_trace_record(std::istream& is) {
    TraceRecord r;
    if (!le::read(is, r.step)) {
        if (is.eof() && is.gcount() == 0) return std::nullopt;
        throw ReplayError("truncated record header");
    }
    if (!le::read(is, r.tile) || !le::read(is, r.timestep)) throw ReplayError("truncated record header", r.step);
    try {
        r.input = read_sgtn(is);
        r.output = read_sgtn(is);
    } catch (const IoError& e) {
        throw ReplayError(std::string("corrupt tensor: ") + e.what(), r.step, r.tile);
    }
    if (!le::read(is, r.cost_units)) throw ReplayError("truncated cost stamp", r.step, r.tile);
    return r;
}

inline std::uint64_t read_trace_header(std::istream& is) {
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t digest = 0;
    if (!is.read(magic, 4) || std::memcmp(magic, kTraceMagic, 4) != 0) throw ReplayError("not a trace file");
    if (!le::read(is, version) || !le::read(is, digest)) throw ReplayError("truncated trace header");
    if (version != kTraceVersion) throw ReplayError("unsupported trace version " + std::to_string(version));
    return digest;
}

struct TraceFile {
    std::uint64_t digest = 0;
    std::vector<TraceRecord> records;
};

inline TraceFile read_trace(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ReplayError("cannot open trace " + path.string());
    TraceFile tf;
    tf.digest = read_trace_header(is);
    while (auto r = read_trace_record(is)) tf.records.push_back(std::move(*r));
    return tf;
}

// Wraps a backend and appends every call to a trace file. Calls are
// buffered per step and flushed in (step, tile) order.
class TraceRecorder : public NoisePredictor {
public:
    TraceRecorder(const NoisePredictor& inner, const std::filesystem::path& path, std::uint64_t digest)
        : inner_(inner), os_(path, std::ios::binary) {
        if (!os_) throw IoError("cannot open trace " + path.string() + " for writing");
        write_trace_header(os_, digest);
    }

    ~TraceRecorder() override {
        try {
            finish();
        } catch (...) {
        }
    }

    Prediction predict(const PredictRequest& req) const override {
        Prediction p = inner_.predict(req);
        std::lock_guard lock(mu_);
        if (!pending_.empty() && req.sequence > pending_.rbegin()->first.first) flush_locked();
        TraceRecord r;
        r.step = req.sequence;
        r.tile = static_cast<std::uint32_t>(req.tile.index);
        r.timestep = static_cast<std::uint32_t>(req.timestep);
        r.input = req.latent();
        r.output = p.noise;
        r.cost_units = p.cost_units;
        pending_.emplace(std::make_pair(r.step, r.tile), std::move(r));
        ++records_;
        return p;
    }

    void finish() {
        std::lock_guard lock(mu_);
        flush_locked();
        os_.flush();
    }

    std::size_t records() const noexcept { return records_; }

private:
    void flush_locked() const {
        for (const auto& [key, r] : pending_) write_trace_record(os_, r);
        pending_.clear();
        if (!os_) throw IoError("trace write failed");
    }

    const NoisePredictor& inner_;
    mutable std::mutex mu_;
    mutable std::ofstream os_;
    mutable std::map<std::pair<std::uint32_t, std::uint32_t>, TraceRecord> pending_;
    mutable std::size_t records_ = 0;
};

// Serves predictions from a trace. Requests must match the recorded
// inputs bit-exactly.
class TraceReplayer : public NoisePredictor {
public:
    explicit TraceReplayer(const std::filesystem::path& path, std::optional<std::uint64_t> expected_digest = {})
        : is_(path, std::ios::binary) {
        if (!is_) throw ReplayError("cannot open trace " + path.string());
        digest_ = read_trace_header(is_);
        if (expected_digest && *expected_digest != digest_)
            throw ReplayError("config digest " + digest_hex(*expected_digest) + " does not match trace digest " +
                              digest_hex(digest_));
        // Index record offsets; payloads are re-read on demand.
        for (;;) {
            const auto offset = is_.tellg();
            auto r = read_trace_record(is_);
            if (!r) break;
            index_.emplace(std::make_pair(r->step, r->tile), offset);
        }
        is_.clear();
    }

    std::uint64_t digest() const noexcept { return digest_; }
    std::size_t size() const noexcept { return index_.size(); }

    Prediction predict(const PredictRequest& req) const override {
        const auto step = static_cast<long>(req.sequence);
        const auto tile = static_cast<long>(req.tile.index);
        auto it = index_.find({req.sequence, static_cast<std::uint32_t>(req.tile.index)});
        if (it == index_.end()) throw ReplayError("no record", step, tile);
        TraceRecord r;
        {
            std::lock_guard lock(mu_);
            is_.clear();
            is_.seekg(it->second);
            auto rec = read_trace_record(is_);
            if (!rec) throw ReplayError("record vanished", step, tile);
            r = std::move(*rec);
        }
        if (r.timestep != static_cast<std::uint32_t>(req.timestep)) throw ReplayError("timestep mismatch", step, tile);
        if (r.input.shape() != req.latent().shape()) throw ReplayError("tile shape mismatch", step, tile);
        if (std::memcmp(r.input.data().data(), req.latent().data().data(), r.input.size() * sizeof(float)) != 0)
            throw ReplayError("input latent differs from recording", step, tile);
        return {std::move(r.output), r.cost_units};
    }

private:
    mutable std::mutex mu_;
    mutable std::ifstream is_;
    std::uint64_t digest_ = 0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::streampos> index_;
};

}  // namespace supergen
