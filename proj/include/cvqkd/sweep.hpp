#pragma once

// Distance sweeps: parallel evaluation of grid points, optional modulation
// optimization, zero-crossing extraction and atomic CSV/JSON emission. Worker
// count never changes numbers: randomness is counter-based and every grid
// point is reduced in a fixed order.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "protocols.hpp"

namespace cvqkd {

struct SweepConfig {
    ProtocolSpec spec;
    double distance_start_km = 10.0;
    double distance_end_km = 300.0;
    int n_points = 30;
    bool optimize_r = false;
    std::vector<double> r_grid = default_r_grid();
    int workers = 0;  // 0 = hardware concurrency
    std::string output_path;
    std::string format = "csv";

    void validate() const {
        spec.validate();
        if (!(distance_start_km < distance_end_km))
            throw std::invalid_argument("distance range: start must be < end");
        if (n_points < 2) throw std::invalid_argument("n_points < 2");
        if (format != "csv" && format != "json") throw std::invalid_argument("format");
    }
};

struct SweepRow {
    double distance_km = 0.0;
    double eta = 1.0;
    double kappa_raw = 0.0;
    double kappa_clamped = 0.0;
    double i_ab = 0.0;
    double chi_be = 0.0;
    double p_ua = 1.0;
    double p_qs = 1.0;
    double plob = 0.0;
    double mc_stderr = 0.0;
    double best_r = 0.0;
    bool failed = false;
    std::string error;
};

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::PhaseNoise: return "phase";
        case Variant::UnitaryAveraging: return "ua";
        case Variant::NlaRelay: return "nla";
        case Variant::HybridUaNla: return "ua-nla";
    }
    return "?";
}

inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<double> grid(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i)
        grid[i] = cfg.distance_start_km + (cfg.distance_end_km - cfg.distance_start_km) * i /
                                              (cfg.n_points - 1);
    std::vector<SweepRow> rows(cfg.n_points);
    const int workers = cfg.workers > 0
                            ? cfg.workers
                            : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<int> next{0};
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_points) return;
            SweepRow& row = rows[i];
            row.distance_km = grid[i];
            row.eta = transmissivity_from_distance(grid[i], cfg.spec.loss_db_per_km);
            row.plob = row.eta < 1.0 ? plob_bound(row.eta) : 0.0;
            try {
                ProtocolResult res;
                if (cfg.optimize_r) {
                    auto [r, best] = optimize_modulation(cfg.spec, grid[i], cfg.r_grid);
                    row.best_r = r;
                    res = best;
                } else {
                    row.best_r = cfg.spec.r;
                    res = run_protocol(cfg.spec, grid[i]);
                }
                row.kappa_raw = res.kappa;
                row.kappa_clamped = std::max(res.kappa, 0.0);
                row.i_ab = res.i_ab;
                row.chi_be = res.chi_be;
                row.p_ua = res.p_ua;
                row.p_qs = res.p_qs;
                row.mc_stderr = res.mc_stderr;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return rows;
}

// Refine the last positive-to-nonpositive transition of kappa(d) by bisection
// (threshold 1e-9 rather than 0: kappa decays through floating-point noise at
// extreme distance instead of crossing cleanly). 1 km tolerance.
inline std::optional<double> find_zero_crossing(const SweepConfig& cfg,
                                                const std::vector<SweepRow>& rows,
                                                double threshold = 1e-9) {
    auto kappa_at = [&](double d) {
        if (cfg.optimize_r) return optimize_modulation(cfg.spec, d, cfg.r_grid).second.kappa;
        return run_protocol(cfg.spec, d).kappa;
    };
    for (size_t i = rows.size(); i-- > 1;) {
        if (rows[i - 1].failed || rows[i].failed) continue;
        if (rows[i - 1].kappa_raw > threshold && rows[i].kappa_raw <= threshold) {
            double lo = rows[i - 1].distance_km, hi = rows[i].distance_km;
            while (hi - lo > 1.0) {
                const double mid = 0.5 * (lo + hi);
                (kappa_at(mid) > threshold ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return std::nullopt;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::vector<std::pair<std::string, std::string>> config_kv(const SweepConfig& cfg) {
    const auto& s = cfg.spec;
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("protocol", variant_name(s.variant));
    kv.emplace_back("r", fmt_double(s.r));
    kv.emplace_back("optimize_r", cfg.optimize_r ? "true" : "false");
    kv.emplace_back("beta", fmt_double(s.beta));
    kv.emplace_back("epsilon", fmt_double(s.epsilon));
    kv.emplace_back("sigma", fmt_double(s.sigma));
    kv.emplace_back("ua_copies", std::to_string(s.ua_copies));
    kv.emplace_back("scissor_t", s.scissor_T > 0.0 ? fmt_double(s.scissor_T) : "auto");
    kv.emplace_back("relay_position", fmt_double(s.relay_position));
    kv.emplace_back("bob_kind",
                    s.bob_kind == MeasurementKind::Homodyne ? "homodyne" : "heterodyne");
    kv.emplace_back("mc_samples", std::to_string(s.mc_samples));
    kv.emplace_back("seed", std::to_string(s.seed));
    kv.emplace_back("cutoff", std::to_string(s.cutoff));
    kv.emplace_back("loss_db_per_km", fmt_double(s.loss_db_per_km));
    kv.emplace_back("distance_start_km", fmt_double(cfg.distance_start_km));
    kv.emplace_back("distance_end_km", fmt_double(cfg.distance_end_km));
    kv.emplace_back("n_points", std::to_string(cfg.n_points));
    return kv;
}

constexpr const char* kColumns =
    "distance_km,eta,kappa_raw,kappa_clamped,i_ab,chi_be,p_ua,p_qs,plob,mc_stderr,best_r,error";

}  // namespace detail

inline std::string to_csv(const SweepConfig& cfg, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    for (const auto& [k, v] : detail::config_kv(cfg)) os << "# " << k << "=" << v << "\n";
    os << detail::kColumns << "\n";
    for (const auto& r : rows) {
        os << detail::fmt_double(r.distance_km) << "," << detail::fmt_double(r.eta) << ","
           << detail::fmt_double(r.kappa_raw) << "," << detail::fmt_double(r.kappa_clamped) << ","
           << detail::fmt_double(r.i_ab) << "," << detail::fmt_double(r.chi_be) << ","
           << detail::fmt_double(r.p_ua) << "," << detail::fmt_double(r.p_qs) << ","
           << detail::fmt_double(r.plob) << "," << detail::fmt_double(r.mc_stderr) << ","
           << detail::fmt_double(r.best_r) << "," << (r.failed ? r.error : "") << "\n";
    }
    return os.str();
}

inline std::string to_json(const SweepConfig& cfg, const std::vector<SweepRow>& rows);

// Write-to-temp-then-rename so a partial file is never left behind.
inline void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
        f << content;
        if (!f.good()) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("rename to " + path + " failed");
    }
}

}  // namespace cvqkd

#include <nlohmann/json.hpp>

namespace cvqkd {

inline std::string to_json(const SweepConfig& cfg, const std::vector<SweepRow>& rows) {
    nlohmann::ordered_json doc;
    for (const auto& [k, v] : detail::config_kv(cfg)) doc["config"][k] = v;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["distance_km"] = r.distance_km;
        row["eta"] = r.eta;
        row["kappa_raw"] = r.kappa_raw;
        row["kappa_clamped"] = r.kappa_clamped;
        row["i_ab"] = r.i_ab;
        row["chi_be"] = r.chi_be;
        row["p_ua"] = r.p_ua;
        row["p_qs"] = r.p_qs;
        row["plob"] = r.plob;
        row["mc_stderr"] = r.mc_stderr;
        row["best_r"] = r.best_r;
        if (r.failed) row["error"] = r.error;
        doc["rows"].push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
}

}  // namespace cvqkd
