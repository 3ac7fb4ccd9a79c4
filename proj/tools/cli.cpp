// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lemon/checkpoint.hpp"
#include "lemon/config.hpp"
#include "lemon/expander.hpp"
#include "lemon/schedule.hpp"
#include "lemon/verify.hpp"

namespace lemon {

namespace {

std::string fmt_g(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

struct ExpandArgs {
    std::string in, out, plan_path, policy = "lemon", depth_mode = "type1";
    std::size_t width = 0, depth = 0;
    std::uint64_t seed = 0;
    double noise = 0.02;
};

struct VerifyArgs {
    std::string small, big;
    std::size_t samples = 32;
    std::uint64_t seed = 0;
    double tol = 1e-10;
};

struct ScheduleArgs {
    std::string preset, config, out;
    double max_lr = 0, min_lr = 0;
    std::size_t total = 0, warmup = 0;
};

struct InitArgs {
    std::string config, out;
    std::uint64_t seed = 0;
};

int cmd_expand(const ExpandArgs& a, const CLI::App& sub, std::ostream& out) {
    ExpansionPlan plan;
    if (!a.plan_path.empty()) {
        plan = plan_from_json(read_json_file(a.plan_path));
    } else if (sub.count("--target-width") == 0 || sub.count("--target-depth") == 0) {
        throw PlanError("expand needs --target-width and --target-depth (or --plan)");
    }
    if (sub.count("--target-width")) plan.target_width = a.width;
    if (sub.count("--target-depth")) plan.target_depth = a.depth;
    if (sub.count("--policy")) plan.policy = parse_policy(a.policy);
    if (sub.count("--depth-mode")) plan.depth_mode = parse_depth_mode(a.depth_mode);
    if (sub.count("--seed")) plan.seed = a.seed;
    if (sub.count("--noise-scale")) plan.noise_scale = a.noise;

    const Checkpoint src = read_checkpoint(a.in);
    ExpandedModel big = expand_model(src.weights, src.spec, plan);
    round_to_storage(big.weights, big.spec);
    write_checkpoint(Checkpoint{big.spec, std::move(big.weights), std::move(big.duplicate_map)}, a.out);
    out << "expanded " << a.in << " (depth " << src.spec.depth << ", width " << src.spec.width << ") -> " << a.out
        << " (depth " << plan.target_depth << ", width " << plan.target_width << ")\n"
        << "plan: " << plan_to_json(plan).dump() << "\n";
    return kExitOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const VerifyReport r = verify_lossless(a.small, a.big, a.samples, a.seed, a.tol);
    for (const auto& s : r.samples) {
        out << "sample " << s.sample << ": max_abs_diff " << fmt_g(s.max_abs_diff, 6) << " at logit (" << s.row
            << ", " << s.col << ")\n";
    }
    out << "max_abs_diff " << fmt_g(r.max_abs_diff, 6) << " (sample " << r.worst_sample << "), tol "
        << fmt_g(r.tol, 3) << ": " << (r.pass ? "PASS" : "FAIL") << "\n";
    return r.pass ? kExitOk : kExitVerifyFailed;
}

int cmd_schedule(const ScheduleArgs& a, const CLI::App& sub, std::ostream& out) {
    ScheduleSpec spec;
    bool have_base = false;
    if (!a.preset.empty()) {
        spec = schedule_preset(a.preset);
        have_base = true;
    }
    if (!a.config.empty()) {
        spec = schedule_from_json(read_json_file(a.config));
        have_base = true;
    }
    if (!have_base && (sub.count("--max-lr") == 0 || sub.count("--total") == 0)) {
        throw PlanError("schedule needs --max-lr and --total (or --preset / --config)");
    }
    if (sub.count("--max-lr")) spec.eta_max = a.max_lr;
    if (sub.count("--min-lr")) spec.eta_min = a.min_lr;
    if (sub.count("--total")) spec.T_total = a.total;
    if (sub.count("--warmup")) spec.t_warm = a.warmup;
    spec.validate();
    if (a.out.empty() || a.out == "-") {
        write_schedule_csv(spec, out);
        return kExitOk;
    }
    std::ofstream f(a.out);
    if (!f) {
        throw IoError("cannot open '" + a.out + "' for writing");
    }
    write_schedule_csv(spec, f);
    if (!f) {
        throw IoError("write to '" + a.out + "' failed");
    }
    out << "wrote " << spec.T_total + 1 << " rows to " << a.out << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    const auto bytes = read_file_bytes(path);
    const auto diags = validate_header(bytes);
    if (!diags.empty()) {
        for (const auto& d : diags) {
            out << "error [" << container_errc_name(d.code) << "] " << d.message << "\n";
        }
        return kExitIo;
    }
    const ContainerHeader h = parse_header(bytes);
    out << "file: " << path << " (" << bytes.size() << " bytes)\n"
        << "version: " << h.version << ", header: " << h.header_len << " bytes, payload at " << h.payload_base
        << "\n"
        << "spec: " << spec_to_json(h.spec).dump() << "\n"
        << "tensors: " << h.tensors.size() << "\n";
    for (const auto& t : h.tensors) {
        out << "  " << std::left << std::setw(28) << t.name << " " << dtype_name(t.dtype) << " "
            << std::setw(10) << shape_string(t.shape) << " offset " << t.byte_offset << " length " << t.byte_length
            << "\n";
    }
    if (h.duplicate_map) {
        out << "duplicate map: " << h.duplicate_map->size() << " groups\n";
    } else {
        out << "duplicate map: none\n";
    }
    return kExitOk;
}

int cmd_symmetry(const std::string& path, std::ostream& out) {
    const auto report = symmetry_report(read_checkpoint(path));
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& g : report) {
        out << g.group.tensor << " axis " << g.group.axis << " members [" << join(g.group.members)
            << "] min_linf " << fmt_g(g.min_distance, 6) << "\n";
        lo = std::min(lo, g.min_distance);
    }
    if (report.empty()) {
        out << "no duplicate groups\n";
    } else {
        out << report.size() << " groups, smallest distance " << fmt_g(lo, 6) << "\n";
    }
    return kExitOk;
}

int cmd_init_random(const InitArgs& a, std::ostream& out) {
    const ModelSpec spec = spec_from_json(read_json_file(a.config));
    Checkpoint ckpt{spec, init_random_weights(spec, a.seed), DuplicateMap{}};
    write_checkpoint(ckpt, a.out);
    out << "wrote random " << norm_style_name(spec.norm_style) << " model (depth " << spec.depth << ", width "
        << spec.width << ") to " << a.out << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lossless width/depth expansion of Transformer checkpoints", "lemon"};
    app.require_subcommand(1);

    ExpandArgs ea;
    auto* expand = app.add_subcommand("expand", "Expand a checkpoint to a larger width and depth");
    expand->add_option("--in", ea.in, "Source checkpoint")->required();
    expand->add_option("--out", ea.out, "Destination checkpoint")->required();
    expand->add_option("--plan", ea.plan_path, "JSON plan; explicit flags override its fields");
    expand->add_option("--target-width", ea.width, "Target hidden width");
    expand->add_option("--target-depth", ea.depth, "Target number of blocks");
    expand->add_option("--policy", ea.policy, "lemon | net2net-equal | zero-tail");
    expand->add_option("--depth-mode", ea.depth_mode, "type1 | type2 | type1-aki");
    expand->add_option("--seed", ea.seed, "Seed for splits and tails");
    expand->add_option("--noise-scale", ea.noise, "Std of split noise and random tails");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Compare two checkpoints on random inputs");
    verify->add_option("--small", va.small, "Source checkpoint")->required();
    verify->add_option("--big", va.big, "Expanded checkpoint")->required();
    verify->add_option("--samples", va.samples, "Number of random inputs");
    verify->add_option("--seed", va.seed, "Input seed");
    verify->add_option("--tol", va.tol, "Maximum allowed |logit difference|");

    ScheduleArgs sa;
    auto* schedule = app.add_subcommand("schedule", "Emit a cosine learning-rate schedule as CSV");
    schedule->add_option("--preset", sa.preset, "vit | lemon-vit | bert | lemon-bert-384 | lemon-bert-512");
    schedule->add_option("--config", sa.config, "JSON with eta_max, eta_min, t_warm, T_total");
    schedule->add_option("--max-lr", sa.max_lr, "eta_max");
    schedule->add_option("--min-lr", sa.min_lr, "eta_min");
    schedule->add_option("--total", sa.total, "T_total");
    schedule->add_option("--warmup", sa.warmup, "t_warm");
    schedule->add_option("--out", sa.out, "CSV path (stdout if omitted)");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "Print a checkpoint header and tensor table");
    inspect->add_option("file", inspect_path, "Checkpoint")->required();

    std::string sym_path;
    auto* symmetry = app.add_subcommand("symmetry", "Report fan-out distances of replicated units");
    symmetry->add_option("--ckpt", sym_path, "Expanded checkpoint")->required();

    InitArgs ia;
    auto* init = app.add_subcommand("init-random", "Write a random model for a JSON spec");
    init->add_option("--config", ia.config, "Model spec JSON")->required();
    init->add_option("--out", ia.out, "Destination checkpoint")->required();
    init->add_option("--seed", ia.seed, "Weight seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*expand) return cmd_expand(ea, *expand, out);
        if (*verify) return cmd_verify(va, out);
        if (*schedule) return cmd_schedule(sa, *schedule, out);
        if (*inspect) return cmd_inspect(inspect_path, out);
        if (*symmetry) return cmd_symmetry(sym_path, out);
        if (*init) return cmd_init_random(ia, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace lemon
