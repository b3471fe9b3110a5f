#pragma once

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "supergen/cache.hpp"
#include "supergen/canvas.hpp"
#include "supergen/error.hpp"
#include "supergen/predictor.hpp"
#include "supergen/report.hpp"
#include "supergen/tiling.hpp"

namespace supergen {

// Contiguous blocks by tile index; the first (n mod w) workers take one
// extra tile.
inline WorkerAssignment static_partition(std::size_t n_tiles, std::size_t n_workers) {
    if (n_workers < 1) throw ConfigError("need at least one worker");
    WorkerAssignment a;
    a.tiles.resize(n_workers);
    a.cost.assign(n_workers, 0.0);
    const std::size_t base = n_tiles / n_workers, extra = n_tiles % n_workers;
    std::size_t next = 0;
    for (std::size_t w = 0; w < n_workers; ++w) {
        const std::size_t count = base + (w < extra ? 1 : 0);
        for (std::size_t k = 0; k < count; ++k) a.tiles[w].push_back(next++);
        a.cost[w] = static_cast<double>(count);
    }
    return a;
}

inline std::vector<std::size_t> home_workers(std::size_t n_tiles, std::size_t n_workers) {
    std::vector<std::size_t> home(n_tiles, 0);
    const auto a = static_partition(n_tiles, n_workers);
    for (std::size_t w = 0; w < a.tiles.size(); ++w)
        for (auto t : a.tiles[w]) home[t] = w;
    return home;
}

// Longest-processing-time greedy. Tiles sorted by cost descending then
// index ascending; each goes to the least-loaded worker (lowest id on
// ties). Every rank computes the same result from the same inputs.
inline WorkerAssignment lpt_assign(const std::vector<std::size_t>& active, const std::vector<double>& costs,
                                   std::size_t n_workers) {
    if (n_workers < 1) throw ConfigError("need at least one worker");
    if (costs.size() != active.size()) throw ConfigError("rebalance: one cost per active tile required");
    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (costs[a] != costs[b]) return costs[a] > costs[b];
        return active[a] < active[b];
    });
    WorkerAssignment out;
    out.tiles.resize(n_workers);
    out.cost.assign(n_workers, 0.0);
    for (auto k : order) {
        const auto w = static_cast<std::size_t>(std::min_element(out.cost.begin(), out.cost.end()) - out.cost.begin());
        out.tiles[w].push_back(active[k]);
        out.cost[w] += costs[k];
    }
    for (auto& list : out.tiles) std::sort(list.begin(), list.end());
    return out;
}

// Static partition restricted to the active tiles (skipped tiles cost 0).
inline WorkerAssignment static_active(std::size_t n_tiles, const std::vector<std::size_t>& active,
                                      const std::vector<double>& costs, std::size_t n_workers) {
    const auto home = home_workers(n_tiles, n_workers);
    WorkerAssignment out;
    out.tiles.resize(n_workers);
    out.cost.assign(n_workers, 0.0);
    for (std::size_t k = 0; k < active.size(); ++k) {
        if (active[k] >= n_tiles) throw ConfigError("active tile index out of range");
        out.tiles[home[active[k]]].push_back(active[k]);
        out.cost[home[active[k]]] += costs[k];
    }
    for (auto& list : out.tiles) std::sort(list.begin(), list.end());
    return out;
}

// Cache-guided rebalance of the active (non-skipped) tiles. LPT is used
// unless the static split of the same tiles is strictly better.
inline WorkerAssignment rebalance(std::size_t n_tiles, const std::vector<std::size_t>& active,
                                  const std::vector<double>& costs, std::size_t n_workers) {
    auto lpt = lpt_assign(active, costs, n_workers);
    auto fixed = static_active(n_tiles, active, costs, n_workers);
    return fixed.makespan() < lpt.makespan() ? fixed : lpt;
}

inline WorkerAssignment rebalance(std::size_t n_tiles, const std::vector<std::size_t>& active, std::size_t n_workers) {
    return rebalance(n_tiles, active, std::vector<double>(active.size(), 1.0), n_workers);
}

// ---------------------------------------------------------------------------
// Gather contract.

struct TileGatherEntry {
    std::size_t tile = 0;
    std::size_t worker = 0;
    bool skipped = false;
    bool has_anchor = false;
    std::size_t anchor_step = 0;
    double rate = 0.0;
    double path_len = 0.0;
    double sigma = 0.0;
    bool has_sigma = false;
    double tau = 0.0;
};

// Merges the per-worker packets of one step into a tile-indexed view.
// Every tile must be reported by exactly one worker.
inline std::vector<TileGatherEntry> exchange_cache_info(const std::vector<std::vector<TileGatherEntry>>& per_worker,
                                                        std::size_t n_tiles) {
    std::vector<TileGatherEntry> global(n_tiles);
    std::vector<bool> seen(n_tiles, false);
    for (const auto& packet : per_worker)
        for (const auto& e : packet) {
            if (e.tile >= n_tiles) throw OwnershipError("gather: tile index out of range");
            if (seen[e.tile]) throw OwnershipError("gather: tile " + std::to_string(e.tile) + " reported twice");
            seen[e.tile] = true;
            global[e.tile] = e;
        }
    for (std::size_t t = 0; t < n_tiles; ++t)
        if (!seen[t]) throw OwnershipError("gather: tile " + std::to_string(t) + " missing");
    return global;
}

// ---------------------------------------------------------------------------

enum class ExecutorMode { Virtual, Threaded };

struct ExecutorOptions {
    std::size_t workers = 1;
    bool rebalance = false;
    bool exchange = true;  // share cache metadata at the step gather
    ExecutorMode mode = ExecutorMode::Virtual;
    double gather_cost = 0.0;
#ifdef NDEBUG
    bool check_ownership = false;
#else
    bool check_ownership = true;
#endif
};

struct StepInput {
    const Canvas* latent = nullptr;  // z_t, full canvas
    std::size_t step = 0;            // stage-2 step index
    std::size_t total_steps = 0;
    int timestep = 0;
    std::vector<TileRef> tiles;
    std::uint32_t sequence = 0;
};

struct StepOutput {
    Canvas noise;
    StepReport report;
};

// Tile-parallel step executor. Workers own disjoint tile sets and canvas
// regions within a step; one gather at the end of each step publishes the
// fused noise, the latents, and the tile cache metadata.
//
// The cache compares every tile against the previous step's gathered
// latents and noise at the tile's current region, and residuals live in
// a canvas-sized field.
class TileExecutor {
public:
    TileExecutor(ExecutorOptions opts, CacheConfig cache, const NoisePredictor& predictor, std::string conditioning_id = {})
        : opts_(opts), cache_(cache), predictor_(predictor), conditioning_(std::move(conditioning_id)) {
        if (opts_.workers < 1) throw ConfigError("workers must be >= 1");
        cache_.validate();
    }

    std::size_t gathers() const noexcept { return gathers_; }
    const std::vector<TileCacheState>& states() const noexcept { return states_; }
    const std::vector<TileGatherEntry>& global_view() const noexcept { return view_; }
    const ExecutorOptions& options() const noexcept { return opts_; }

    StepOutput execute_step(const StepInput& in) {
        const Canvas& z = *in.latent;
        const std::size_t n = in.tiles.size();
        if (n == 0) throw ConfigError("step without tiles");
        if (!has_prev_) {
            residual_ = Canvas(z.shape(), Space::Latent);
        } else if (prev_input_.shape() != z.shape()) {
            throw DimensionError("executor: canvas changed shape between steps");
        }
        if (states_.size() < n) {
            states_.resize(n);
            holder_.resize(n, std::numeric_limits<std::size_t>::max());
        }

        // Decisions: a pure function of the gathered state, identical on every rank.
        double sigma_sum = 0.0;
        std::size_t sigma_n = 0;
        for (const auto& s : states_)
            if (s.has_sigma) {
                sigma_sum += s.sigma;
                ++sigma_n;
            }
        const double sigma_mean = sigma_n ? sigma_sum / static_cast<double>(sigma_n) : 0.0;
        const auto home = home_workers(n, opts_.workers);

        std::vector<Canvas> inputs(n);
        std::vector<Decision> decision(n, Decision::Recompute);
        std::vector<bool> forced(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& ref = in.tiles[i];
            inputs[i] = extract_tile(z, ref);
            if (!cache_.enabled) continue;
            auto& st = states_[i];
            if (st.has_anchor && (st.anchor_height != ref.height || st.anchor_width != ref.width))
                st.has_anchor = false;
            if (st.has_anchor && has_prev_)
                st.path_len = accumulate_path(st.path_len, inputs[i], extract_tile(prev_input_, ref), cache_.norm);
            st.tau = (cache_.region_aware && st.has_sigma) ? adapt_threshold(st.sigma, sigma_mean, cache_) : cache_.tau;
            decision[i] = decide(st, in.step, in.total_steps, cache_);
            if (decision[i] == Decision::Reuse && !opts_.exchange && holder_[i] != home[i]) {
                decision[i] = Decision::Recompute;
                forced[i] = true;
            }
        }

        // Assignment: active tiles balanced or kept home; reused tiles stay home.
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < n; ++i)
            if (decision[i] == Decision::Recompute) active.push_back(i);
        const std::vector<double> unit(active.size(), 1.0);
        WorkerAssignment assignment = opts_.rebalance ? rebalance(n, active, unit, opts_.workers)
                                                      : static_active(n, active, unit, opts_.workers);
        assignment.step = in.step;
        for (std::size_t i = 0; i < n; ++i)
            if (decision[i] == Decision::Reuse) assignment.tiles[home[i]].push_back(i);
        for (auto& list : assignment.tiles) std::sort(list.begin(), list.end());

        Canvas fused(z.shape(), Space::Latent);
        std::vector<TileStepRecord> records(n);
        std::vector<std::vector<TileGatherEntry>> packets(opts_.workers);
        std::vector<double> worker_cost(opts_.workers, 0.0);
        std::vector<std::exception_ptr> errors(opts_.workers);

        auto run_worker = [&](std::size_t w) {
            try {
                for (auto i : assignment.tiles[w]) {
                    records[i] = process_tile(in, i, inputs[i], decision[i], w, fused);
                    records[i].forced = forced[i];
                    worker_cost[w] += records[i].cost;
                    packets[w].push_back(gather_entry(i, w, decision[i]));
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        if (opts_.mode == ExecutorMode::Threaded && opts_.workers > 1) {
            std::vector<std::thread> pool;
            pool.reserve(opts_.workers);
            for (std::size_t w = 0; w < opts_.workers; ++w) pool.emplace_back(run_worker, w);
            for (auto& t : pool) t.join();  // step barrier
        } else {
            for (std::size_t w = 0; w < opts_.workers; ++w) run_worker(w);
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);

        // Gather.
        view_ = exchange_cache_info(packets, n);
        ++gathers_;
        for (std::size_t i = 0; i < n; ++i) holder_[i] = view_[i].worker;
        if (opts_.check_ownership) verify_coverage(in.tiles, z.shape());
        prev_input_ = z;
        prev_output_ = fused;
        has_prev_ = true;

        StepOutput out;
        out.report.step = in.step;
        out.report.timestep = in.timestep;
        out.report.tiles = std::move(records);
        out.report.assignment = std::move(assignment);
        out.report.worker_cost = worker_cost;
        out.report.makespan = *std::max_element(worker_cost.begin(), worker_cost.end()) + opts_.gather_cost;
        out.report.gathers = 1;
        for (const auto& r : out.report.tiles) {
            if (r.decision == Decision::Reuse) ++out.report.skipped;
            else ++out.report.predictor_calls;
            if (r.forced) ++out.report.forced;
        }
        out.noise = std::move(fused);
        return out;
    }

private:
    TileStepRecord process_tile(const StepInput& in, std::size_t i, const Canvas& input, Decision decision,
                                std::size_t worker, Canvas& fused) {
        const auto& ref = in.tiles[i];
        auto& st = states_[i];
        TileStepRecord rec;
        rec.tile = i;
        rec.ref = ref;
        rec.decision = decision;
        rec.worker = worker;
        Canvas output;
        if (decision == Decision::Reuse) {
            output = approximate_output(input, extract_tile(residual_, ref));
        } else {
            PredictRequest req;
            req.tile_latent = &input;
            req.timestep = in.timestep;
            req.tile = ref;
            req.canvas = in.latent->shape();
            req.stage = Stage::Refine;
            req.sequence = in.sequence;
            req.conditioning_id = conditioning_;
            Prediction p = predictor_.predict(req);
            if (p.noise.shape() != input.shape())
                throw DimensionError("predictor returned " + p.noise.shape().str() + " for tile " + input.shape().str());
            rec.cost = p.cost_units;
            output = std::move(p.noise);
            if (cache_.enabled) {
                if (has_prev_) {
                    const Canvas in_prev = extract_tile(prev_input_, ref);
                    const Canvas out_prev = extract_tile(prev_output_, ref);
                    refresh(st, in.step, input, output, cache_.norm, &in_prev, &out_prev);
                } else {
                    st.prev_input = Canvas();
                    refresh(st, in.step, input, output, cache_.norm);
                }
                place_tile(residual_, st.delta, ref);
            }
        }
        rec.rate = st.rate;
        rec.path_len = st.path_len;
        rec.sigma = st.sigma;
        rec.tau = st.tau;
        place_tile(fused, output, ref);
        return rec;
    }

    TileGatherEntry gather_entry(std::size_t i, std::size_t w, Decision d) const {
        const auto& st = states_[i];
        TileGatherEntry e;
        e.tile = i;
        e.worker = w;
        e.skipped = d == Decision::Reuse;
        e.has_anchor = st.has_anchor;
        e.anchor_step = st.anchor_step;
        e.rate = st.rate;
        e.path_len = st.path_len;
        e.sigma = st.sigma;
        e.has_sigma = st.has_sigma;
        e.tau = st.tau;
        return e;
    }

    static void verify_coverage(const std::vector<TileRef>& tiles, const Shape& shape) {
        std::vector<int> mask(shape.plane(), 0);
        for (const auto& r : tiles)
            for (std::size_t y = 0; y < r.height; ++y)
                for (std::size_t x = 0; x < r.width; ++x)
                    ++mask[((static_cast<std::size_t>(r.origin_y) + y) % shape.height) * shape.width +
                           (static_cast<std::size_t>(r.origin_x) + x) % shape.width];
        for (int m : mask)
            if (m != 1) throw OwnershipError(m == 0 ? "canvas region not written by any tile"
                                                    : "canvas region written by more than one tile");
    }

    ExecutorOptions opts_;
    CacheConfig cache_;
    const NoisePredictor& predictor_;
    std::string conditioning_;

    std::vector<TileCacheState> states_;
    std::vector<std::size_t> holder_;
    std::vector<TileGatherEntry> view_;
    Canvas prev_input_;
    Canvas prev_output_;
    Canvas residual_;
    bool has_prev_ = false;
    std::size_t gathers_ = 0;
};

}  // namespace supergen
