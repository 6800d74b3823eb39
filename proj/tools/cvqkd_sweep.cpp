// cvqkd_sweep: distance sweeps of CV-QKD secret key rates.
//
// Emits one row per distance grid point with kappa, Holevo/MI terms, herald
// probabilities and the PLOB bound, as CSV (config in '#' header lines) or a
// JSON document. Exit codes: 0 success, 2 config error, 3 numeric failure,
// 4 I/O failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "cvqkd/sweep.hpp"

namespace {

bool parse_distance_arg(const std::string& arg, cvqkd::SweepConfig& cfg) {
    const auto c1 = arg.find(':'), c2 = arg.rfind(':');
    if (c1 == std::string::npos || c2 == c1) return false;
    try {
        cfg.distance_start_km = std::stod(arg.substr(0, c1));
        cfg.distance_end_km = std::stod(arg.substr(c1 + 1, c2 - c1 - 1));
        cfg.n_points = std::stoi(arg.substr(c2 + 1));
    } catch (...) {
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace cvqkd;
    CLI::App app{"CV-QKD secret-key-rate distance sweeps"};

    std::string protocol = "baseline", distance = "10:300:30", scissor_t = "auto";
    std::string output, format = "csv";
    SweepConfig cfg;
    ProtocolSpec& s = cfg.spec;
    bool optimize_r = false;
    double r_flag = -1.0;

    app.add_option("--protocol", protocol, "baseline|phase|ua|nla|ua-nla")
        ->check(CLI::IsMember({"baseline", "phase", "ua", "nla", "ua-nla"}));
    app.add_option("--sigma", s.sigma, "phase-noise std-dev (rad)")->check(CLI::NonNegativeNumber);
    app.add_option("--epsilon", s.epsilon, "excess noise (default 0.02)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--beta", s.beta, "reconciliation efficiency (default 0.95)")
        ->check(CLI::Range(0.0, 1.0));
    auto* ropt = app.add_option("--r", r_flag, "fixed squeezing parameter");
    auto* oopt = app.add_flag("--optimize-r", optimize_r, "optimize r per distance over a grid");
    ropt->excludes(oopt);
    app.add_option("--ua-copies", s.ua_copies, "UA copy count (2 or 4)")
        ->check(CLI::IsMember({1, 2, 4}));
    app.add_option("--scissor-t", scissor_t, "scissor transmissivity in (0,1) or 'auto'");
    app.add_option("--relay-position", s.relay_position, "Charlie's position fraction")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--distance", distance, "grid as start:end:points (km)");
    app.add_option("--cutoff", s.cutoff, "Fock cutoff (relay backends)")->check(CLI::Range(2, 16));
    app.add_option("--mc-samples", s.mc_samples, "Monte-Carlo samples for sigma > 0")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", s.seed, "master seed (counter-based streams)");
    app.add_option("--workers", cfg.workers,
                   "worker threads (0 = hardware; env CVQKD_WORKERS overrides the default)");
    app.add_option("--output", output, "output path (default: stdout)");
    app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--loss-db-per-km", s.loss_db_per_km, "fiber loss (default 0.2)")
        ->check(CLI::PositiveNumber);
    app.add_flag("!--no-bob-arm-phase-noise", s.bob_arm_phase_noise,
                 "disable phase noise on Bob's relay arm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (protocol == "baseline") s.variant = Variant::Baseline;
    else if (protocol == "phase") s.variant = Variant::PhaseNoise;
    else if (protocol == "ua") s.variant = Variant::UnitaryAveraging;
    else if (protocol == "nla") s.variant = Variant::NlaRelay;
    else s.variant = Variant::HybridUaNla;

    const bool relay = s.variant == Variant::NlaRelay || s.variant == Variant::HybridUaNla;
    s.bob_kind = relay ? MeasurementKind::Heterodyne : MeasurementKind::Homodyne;
    if (s.variant == Variant::UnitaryAveraging && s.ua_copies == 1) s.ua_copies = 2;

    if (scissor_t == "auto") {
        s.scissor_T = -1.0;
    } else {
        try {
            s.scissor_T = std::stod(scissor_t);
        } catch (...) {
            std::cerr << "error: --scissor-t must be a number in (0,1) or 'auto'\n";
            return 2;
        }
        if (!relay) {
            std::cerr << "error: --scissor-t only applies to relay protocols\n";
            return 2;
        }
    }
    if (!parse_distance_arg(distance, cfg)) {
        std::cerr << "error: --distance must be start:end:points\n";
        return 2;
    }
    if (r_flag >= 0.0) s.r = r_flag;
    cfg.optimize_r = optimize_r;
    cfg.format = format;
    cfg.output_path = output;
    if (cfg.workers == 0) {
        if (const char* env = std::getenv("CVQKD_WORKERS")) cfg.workers = std::atoi(env);
    }

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::vector<SweepRow> rows;
    try {
        rows = run_sweep(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    bool all_failed = !rows.empty();
    for (const auto& r : rows) all_failed = all_failed && r.failed;
    if (all_failed) {
        std::cerr << "error: every grid point failed (" << rows.front().error << ")\n";
        return 3;
    }

    const std::string body = format == "csv" ? to_csv(cfg, rows) : to_json(cfg, rows);
    if (output.empty()) {
        std::cout << body;
    } else {
        try {
            write_atomic(output, body);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 4;
        }
    }
    return 0;
}
