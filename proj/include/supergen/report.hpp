#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "supergen/cache.hpp"
#include "supergen/tiling.hpp"

namespace supergen {

struct WorkerAssignment {
    std::size_t step = 0;
    std::vector<std::vector<std::size_t>> tiles;  // per worker
    std::vector<double> cost;                      // estimated units per worker

    std::size_t workers() const noexcept { return tiles.size(); }
    double makespan() const noexcept {
        double m = 0.0;
        for (double c : cost) m = std::max(m, c);
        return m;
    }
};

struct TileStepRecord {
    std::size_t tile = 0;
    TileRef ref;
    Decision decision = Decision::Recompute;
    bool forced = false;  // reuse was possible but the executing worker lacked the cache state
    double rate = 0.0;
    double path_len = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
    std::size_t worker = 0;
    double cost = 0.0;
};

struct StepReport {
    std::size_t step = 0;
    int timestep = 0;
    ShiftOffset shift;
    std::vector<TileStepRecord> tiles;
    WorkerAssignment assignment;
    std::vector<double> worker_cost;
    double makespan = 0.0;
    std::size_t gathers = 0;
    std::size_t predictor_calls = 0;
    std::size_t skipped = 0;
    std::size_t forced = 0;
};

struct Fidelity {
    double psnr = 0.0;
    double ssim = 0.0;
    double rel_l1 = 0.0;
    double cos = 0.0;
    bool bit_exact = false;
};

struct RunTotals {
    std::size_t predictor_calls = 0;
    std::size_t skipped_tiles = 0;
    std::size_t forced_recomputes = 0;
    double cost_units = 0.0;
    double makespan_units = 0.0;
    std::size_t gathers = 0;
};

struct RunReport {
    static constexpr int kSchemaVersion = 1;
    std::string config_digest;
    std::string output_digest;
    std::size_t n_tiles = 0;
    std::size_t stage1_steps = 0;
    std::size_t stage1_calls = 0;
    double stage1_cost = 0.0;
    std::vector<StepReport> steps;
    RunTotals totals;
    std::optional<Fidelity> fidelity;
    double wall_seconds = 0.0;

    void add_step(StepReport s) {
        totals.predictor_calls += s.predictor_calls;
        totals.skipped_tiles += s.skipped;
        totals.forced_recomputes += s.forced;
        totals.makespan_units += s.makespan;
        totals.gathers += s.gathers;
        for (double c : s.worker_cost) totals.cost_units += c;
        steps.push_back(std::move(s));
    }

    std::vector<Decision> decision_sequence() const {
        std::vector<Decision> seq;
        for (const auto& s : steps)
            for (const auto& t : s.tiles) seq.push_back(t.decision);
        return seq;
    }
};

namespace detail {

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace detail

inline nlohmann::json to_json(const TileStepRecord& t) {
    return {{"tile", t.tile},
            {"origin", {t.ref.origin_y, t.ref.origin_x}},
            {"size", {t.ref.height, t.ref.width}},
            {"decision", to_string(t.decision)},
            {"forced", t.forced},
            {"k_c", detail::finite_or_null(t.rate)},
            {"L_acc", t.path_len},
            {"sigma", t.sigma},
            {"tau_i", t.tau},
            {"worker", t.worker},
            {"cost", t.cost}};
}

inline nlohmann::json to_json(const StepReport& s) {
    nlohmann::json tiles = nlohmann::json::array();
    for (const auto& t : s.tiles) tiles.push_back(to_json(t));
    return {{"step", s.step},
            {"timestep", s.timestep},
            {"shift", {s.shift.dy, s.shift.dx}},
            {"tiles", tiles},
            {"assignment", s.assignment.tiles},
            {"worker_cost", s.worker_cost},
            {"makespan", s.makespan},
            {"gathers", s.gathers},
            {"predictor_calls", s.predictor_calls},
            {"skipped", s.skipped},
            {"forced", s.forced}};
}

inline nlohmann::json to_json(const Fidelity& f) {
    return {{"psnr", f.psnr}, {"ssim", f.ssim}, {"rel_l1", f.rel_l1}, {"cos", f.cos}, {"bit_exact", f.bit_exact}};
}

// Wall time is kept under "timing".
inline nlohmann::json to_json(const RunReport& r, bool include_timing = true) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps) steps.push_back(to_json(s));
    nlohmann::json j = {{"schema_version", RunReport::kSchemaVersion},
                        {"config_digest", r.config_digest},
                        {"output_digest", r.output_digest},
                        {"n_tiles", r.n_tiles},
                        {"stage1", {{"steps", r.stage1_steps}, {"predictor_calls", r.stage1_calls}, {"cost_units", r.stage1_cost}}},
                        {"totals",
                         {{"predictor_calls", r.totals.predictor_calls},
                          {"skipped_tiles", r.totals.skipped_tiles},
                          {"forced_recomputes", r.totals.forced_recomputes},
                          {"cost_units", r.totals.cost_units},
                          {"makespan_units", r.totals.makespan_units},
                          {"gathers", r.totals.gathers}}},
                        {"steps", steps}};
    if (r.fidelity) j["fidelity"] = to_json(*r.fidelity);
    if (include_timing) j["timing"] = {{"wall_seconds", r.wall_seconds}};
    return j;
}

// One line per (step, tile).
inline void write_cache_log(std::ostream& os, const RunReport& r) {
    for (const auto& s : r.steps)
        for (const auto& t : s.tiles)
            os << nlohmann::json{{"step", s.step},
                                 {"tile", t.tile},
                                 {"decision", to_string(t.decision)},
                                 {"k_c", detail::finite_or_null(t.rate)},
                                 {"L_acc", t.path_len},
                                 {"sigma", t.sigma},
                                 {"tau_i", t.tau}}
                      .dump()
               << "\n";
}

// One line per step.
inline void write_schedule_log(std::ostream& os, const RunReport& r) {
    for (const auto& s : r.steps) {
        std::vector<bool> skip;
        for (const auto& t : s.tiles) skip.push_back(t.decision == Decision::Reuse);
        os << nlohmann::json{{"step", s.step},
                             {"assignment", s.assignment.tiles},
                             {"skip", skip},
                             {"worker_cost", s.worker_cost},
                             {"makespan", s.makespan}}
                  .dump()
           << "\n";
    }
}

}  // namespace supergen
