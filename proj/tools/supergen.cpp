#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "supergen/supergen.hpp"

namespace fs = std::filesystem;
using namespace supergen;

namespace {

fs::path output_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("SUPERGEN_OUT"); env && *env) return env;
    return "supergen_out";
}

RunConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
    RunConfig c = load_config(path);
    for (const auto& s : sets) apply_override(c, s);
    c.validate();
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

struct RunOptions {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::string reference;
    bool pgm = false;
    bool no_dump = false;
    bool no_timing = false;
};

void emit_artifacts(const RunOptions& o, const RunConfig& cfg, GenerateResult& res) {
    const fs::path root = output_root(o.out);
    fs::create_directories(root);
    if (!o.reference.empty()) res.report.fidelity = compare_canvases(res.latent, load_sgtn(o.reference));
    write_text(root / "report.json", to_json(res.report, !o.no_timing).dump(2) + "\n");
    {
        std::ofstream os(root / "cache_log.jsonl");
        write_cache_log(os, res.report);
    }
    {
        std::ofstream os(root / "schedule.jsonl");
        write_schedule_log(os, res.report);
    }
    write_text(root / "config.cfg", dump_config(cfg));
    if (!o.no_dump) {
        save_sgtn(root / "latent.sgtn", res.latent);
        save_sgtn(root / "pixels.sgtn", res.pixels);
    }
    if (o.pgm) export_pgm_frames(res.pixels, root / "frames", "frame");
    const auto& t = res.report.totals;
    std::cout << "digest " << res.report.output_digest << "\n"
              << "steps " << res.report.steps.size() << "  calls " << t.predictor_calls << "  skipped "
              << t.skipped_tiles << "  makespan " << t.makespan_units << "\n"
              << "wrote " << root.string() << "\n";
}

int cmd_run(RunOptions o, const std::string& trace) {
    RunConfig cfg = load_with_overrides(o.config, o.sets);
    if (!trace.empty()) cfg.trace_record = trace;
    auto res = generate(cfg);
    emit_artifacts(o, cfg, res);
    return 0;
}

int cmd_replay(RunOptions o, const std::string& trace) {
    RunConfig cfg = load_with_overrides(o.config, o.sets);
    cfg.predictor = PredictorKind::Replay;
    cfg.trace_replay = trace;
    cfg.trace_record.clear();
    cfg.validate();
    auto res = generate(cfg);
    emit_artifacts(o, cfg, res);
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
    const Canvas ca = load_sgtn(a), cb = load_sgtn(b);
    const Fidelity f = compare_canvases(ca, cb);
    const std::string text = to_json(f).dump(2) + "\n";
    if (!out.empty()) write_text(out, text);
    std::cout << text;
    return 0;
}

int cmd_profile(const RunOptions& o, const std::string& trace, const std::string& out) {
    std::vector<ProfileStep> steps;
    if (!trace.empty()) {
        steps = profile_steps_from_trace(read_trace(trace));
    } else {
        RunConfig cfg = load_with_overrides(o.config, o.sets);
        cfg.cache.enabled = false;
        generate(cfg, [&](std::size_t step, int t, const Canvas& z, const Canvas& noise) {
            ProfileStep ps;
            ps.step = step;
            ps.timestep = t;
            ps.input = z.values();
            ps.output = noise.values();
            steps.push_back(std::move(ps));
        });
    }
    const auto rows = similarity_profile(steps);
    if (out.empty()) {
        write_profile_csv(std::cout, rows);
    } else {
        std::ofstream os(out);
        if (!os) throw IoError("cannot write " + out);
        write_profile_csv(os, rows);
    }
    return 0;
}

std::string csv_number(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

int cmd_sweep(const RunOptions& o, const std::string& axis, const std::vector<std::string>& values,
              const std::string& out) {
    RunConfig base = load_with_overrides(o.config, o.sets);
    if (!is_config_key(axis)) throw ConfigError("unknown sweep axis '" + axis + "'");
    std::ostringstream csv;
    csv << "axis,value,output_digest,predictor_calls,skipped_tiles,cost_units,makespan_units,psnr,ssim,rel_l1,cos,"
           "bit_exact\n";
    for (const auto& v : values) {
        RunConfig cfg = base;
        set_config_value(cfg, axis, v);
        cfg.trace_record.clear();
        cfg.validate();
        auto res = generate(cfg);
        Canvas reference = res.latent;
        if (cfg.cache.enabled) {
            RunConfig plain = cfg;
            plain.cache.enabled = false;
            reference = generate(plain).latent;
        }
        const Fidelity f = compare_canvases(res.latent, reference);
        const auto& t = res.report.totals;
        csv << axis << "," << v << "," << res.report.output_digest << "," << t.predictor_calls << ","
            << t.skipped_tiles << "," << csv_number(t.cost_units) << "," << csv_number(t.makespan_units) << ","
            << csv_number(f.psnr) << "," << csv_number(f.ssim) << "," << csv_number(f.rel_l1) << ","
            << csv_number(f.cos) << "," << (f.bit_exact ? "true" : "false") << "\n";
    }
    if (!out.empty()) write_text(out, csv.str());
    std::cout << csv.str();
    return 0;
}

void add_config_flags(CLI::App* cmd, RunOptions& o, bool required = true) {
    auto* c = cmd->add_option("-c,--config", o.config, "Config file");
    if (required) c->required();
    cmd->add_option("-s,--set", o.sets, "Override key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tiled two-stage diffusion sampling engine"};
    app.require_subcommand(1);

    RunOptions o;
    std::string trace, out, axis, a, b;
    std::vector<std::string> values;

    auto* run = app.add_subcommand("run", "Generate and write the report and dumps");
    add_config_flags(run, o);
    run->add_option("-o,--out", o.out, "Output directory (default $SUPERGEN_OUT or ./supergen_out)");
    run->add_option("--trace", trace, "Record predictor calls to this trace file");
    run->add_option("--reference", o.reference, "SGTN latent to compare the output against");
    run->add_flag("--pgm", o.pgm, "Export decoded frames as PGM");
    run->add_flag("--no-dump", o.no_dump, "Skip SGTN dumps");
    run->add_flag("--no-timing", o.no_timing, "Omit wall-clock timing from the report");

    auto* replay = app.add_subcommand("replay", "Re-run a config against a recorded trace");
    add_config_flags(replay, o);
    replay->add_option("-t,--trace", trace, "Trace file")->required();
    replay->add_option("-o,--out", o.out, "Output directory");
    replay->add_flag("--pgm", o.pgm, "Export decoded frames as PGM");
    replay->add_flag("--no-dump", o.no_dump, "Skip SGTN dumps");
    replay->add_flag("--no-timing", o.no_timing, "Omit wall-clock timing from the report");

    auto* compare = app.add_subcommand("compare", "Fidelity of one SGTN dump against another");
    compare->add_option("a", a, "Candidate dump")->required();
    compare->add_option("b", b, "Reference dump")->required();
    compare->add_option("-o,--out", out, "Write the JSON here as well");

    auto* profile = app.add_subcommand("profile", "Adjacent-step similarity profile as CSV");
    add_config_flags(profile, o, false);
    profile->add_option("-t,--trace", trace, "Profile a recorded trace instead of a live run");
    profile->add_option("-o,--out", out, "CSV path (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Run one config across values of a key");
    add_config_flags(sweep, o);
    sweep->add_option("-a,--axis", axis, "Config key to vary")->required();
    sweep->add_option("-v,--values", values, "Values, comma separated")->required()->delimiter(',');
    sweep->add_option("-o,--out", out, "CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(o, trace);
        if (*replay) return cmd_replay(o, trace);
        if (*compare) return cmd_compare(a, b, out);
        if (*profile) {
            if (trace.empty() && o.config.empty()) throw ConfigError("profile needs --config or --trace");
            return cmd_profile(o, trace, out);
        }
        if (*sweep) return cmd_sweep(o, axis, values, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
