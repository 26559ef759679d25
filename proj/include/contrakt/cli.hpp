#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "contrakt/io.hpp"
#include "contrakt/sim.hpp"
#include "contrakt/systems.hpp"
#include "contrakt/train.hpp"

namespace contrakt {

// sysexits-style codes shared by all subcommands
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int certificate_failed = 1;
inline constexpr int targets_not_reached = 2;
inline constexpr int usage = 64;
inline constexpr int bad_input = 66;
inline constexpr int internal = 70;
} // namespace exit_code

/// Invalid or inconsistent run configuration (exit 64).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing or unparsable input file (exit 66).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- logging, controlled by CONTRAKT_LOG in {error, info, debug} ----

enum class LogLevel { error = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* env = std::getenv("CONTRAKT_LOG");
        if (!env) return LogLevel::error;
        const std::string s(env);
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return lvl;
}

inline void log_error(const std::string& msg) { std::cerr << "[error] " << msg << '\n'; }
inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[info] " << msg << '\n';
}
inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[debug] " << msg << '\n';
}

// ---- run configuration ----

struct RunConfig {
    std::string system;
    std::string controller_path;
    std::string ncm_path;
    bool prestabilize = false;
    double prestab_r = 1.0; // inner LQR: Q = I, R = prestab_r * I
    double lqr_r = 1.0;     // cost weight r for the lqr subcommand

    TrainConfig train;
    std::vector<std::size_t> hidden = {32};
    double mlp_alpha = 0.3;
    std::string ncm_mode = "identity";
    double ncm_epsilon = 0.1;
    std::uint64_t ncm_seed = 7;

    CertifyOptions certify_opts;

    double sim_T = 10.0;
    double sim_dt = 1e-2;
    std::size_t sim_n_init = 20;
    double sim_radius = 1.0;
    std::uint64_t sim_seed = 1;
    double rate_t0 = 0.25;
    double rate_t1 = 2.5;
    std::vector<std::pair<std::string, std::string>> axes = {{"t", "x1"}};

    Vec x_star;
    std::optional<Box> domain; // defaults to the system's box
    std::string output_dir = ".";
};

inline RunConfig parse_run_config(const json& j) {
    RunConfig c;
    try {
        c.system = j.at("system").get<std::string>();
        c.controller_path = j.value("controller_path", std::string{});
        c.ncm_path = j.value("ncm_path", std::string{});
        if (j.contains("prestabilize")) {
            c.prestabilize = true;
            c.prestab_r = j["prestabilize"].value("r", 1.0);
        }
        if (j.contains("lqr")) c.lqr_r = j["lqr"].value("r", 1.0);
        if (j.contains("domain")) {
            Box b;
            b.lo = j["domain"].at("lo").get<Vec>();
            b.hi = j["domain"].at("hi").get<Vec>();
            b.validate();
            c.domain = b;
        }
        if (j.contains("x_star")) c.x_star = j["x_star"].get<Vec>();
        c.output_dir = j.value("output_dir", std::string("."));

        if (j.contains("train")) {
            const json& t = j["train"];
            c.train.rho = t.value("rho", c.train.rho);
            c.train.nu = t.value("nu", c.train.nu);
            c.train.lr = t.value("lr", c.train.lr);
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.seed = t.value("seed", c.train.seed);
            c.train.grid_tau = t.value("grid_tau", c.train.grid_tau);
            c.train.optimizer = t.value("optimizer", c.train.optimizer);
            c.train.target_l1 = t.value("target_l1", c.train.target_l1);
            c.train.log_every = t.value("log_every", c.train.log_every);
            c.train.train_ncm = t.value("train_ncm", c.train.train_ncm);
            if (t.contains("hidden")) c.hidden = t["hidden"].get<std::vector<std::size_t>>();
            c.mlp_alpha = t.value("alpha", c.mlp_alpha);
            c.ncm_mode = t.value("ncm_mode", c.ncm_mode);
            c.ncm_epsilon = t.value("ncm_epsilon", c.ncm_epsilon);
            c.ncm_seed = t.value("ncm_seed", c.ncm_seed);
        }
        if (j.contains("certify")) {
            const json& ct = j["certify"];
            c.certify_opts.rho = ct.value("rho", c.certify_opts.rho);
            c.certify_opts.grid_tau = ct.value("grid_tau", c.certify_opts.grid_tau);
            c.certify_opts.oracle_samples = ct.value("oracle_samples", c.certify_opts.oracle_samples);
            c.certify_opts.equilibrium_threshold =
                ct.value("equilibrium_threshold", c.certify_opts.equilibrium_threshold);
        }
        if (j.contains("simulate")) {
            const json& s = j["simulate"];
            c.sim_T = s.value("T", c.sim_T);
            c.sim_dt = s.value("dt", c.sim_dt);
            c.sim_n_init = s.value("n_init", c.sim_n_init);
            c.sim_radius = s.value("radius", c.sim_radius);
            c.sim_seed = s.value("seed", c.sim_seed);
            if (s.contains("rate_window")) {
                c.rate_t0 = s["rate_window"].at(0).get<double>();
                c.rate_t1 = s["rate_window"].at(1).get<double>();
            }
            if (s.contains("axes")) {
                c.axes.clear();
                for (const json& ax : s["axes"])
                    c.axes.emplace_back(ax.at(0).get<std::string>(), ax.at(1).get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    json j;
    try {
        j = load_json_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_run_config(j);
}

namespace detail {

inline SystemModel build_system(const RunConfig& cfg) {
    SystemModel sys = [&] {
        try {
            return make_system(cfg.system);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    if (cfg.prestabilize) {
        Mat R = cfg.prestab_r * Mat::identity(sys.m);
        LqrController inner = lqr_controller(sys, Vec(sys.n, 0.0), R, Mat::identity(sys.n));
        log_info("prestabilized " + cfg.system + " with inner LQR, residual " +
                 std::to_string(inner.care_residual));
        sys = prestabilize(sys, inner);
    }
    return sys;
}

inline json load_input_json(const std::string& path) {
    try {
        return load_json_file(path);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

inline MlpParams load_mlp(const std::string& path) {
    const json j = load_input_json(path);
    try {
        return mlp_from_json(j);
    } catch (const std::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

/// A controller file is either MLP parameters or a linear gain
/// {"type":"linear","K":[[...]]}.
inline Controller load_controller(const std::string& path) {
    const json j = load_input_json(path);
    try {
        if (j.contains("layers")) {
            MlpParams p = mlp_from_json(j);
            return [p](const Vec& x) { return mlp_forward(p, x); };
        }
        Mat K = mat_from_json(j.at("K"));
        return [K](const Vec& x) { return -1.0 * (K * x); };
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline NcmParams load_or_default_ncm(const RunConfig& cfg, const SystemModel& sys) {
    if (!cfg.ncm_path.empty()) {
        const json j = load_input_json(cfg.ncm_path);
        try {
            NcmParams p = ncm_from_json(j);
            p.validate(sys.g);
            return p;
        } catch (const std::exception& e) {
            throw InputError(cfg.ncm_path + ": " + e.what());
        }
    }
    if (cfg.ncm_mode == "identity") return ncm_identity(sys.n);
    if (cfg.ncm_mode == "log_cosh") return ncm_log_cosh(sys.g, cfg.ncm_epsilon, cfg.ncm_seed);
    if (cfg.ncm_mode == "general") return ncm_general(sys.g, cfg.ncm_epsilon, 4, cfg.ncm_seed);
    throw ConfigError("unknown ncm_mode: " + cfg.ncm_mode);
}

inline void ensure_output_dir(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

} // namespace detail

// ---- subcommands ----

inline int cmd_train(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    SystemModel sys = detail::build_system(cfg);
    if (cfg.x_star.size() != sys.n) throw ConfigError("x_star missing or of wrong dimension");
    cfg.train.x_star = cfg.x_star;
    cfg.train.domain = cfg.domain ? *cfg.domain : sys.domain;

    MlpParams controller = cfg.controller_path.empty()
                               ? mlp_init(sys.n, cfg.hidden, sys.m, cfg.mlp_alpha, cfg.train.seed)
                               : detail::load_mlp(cfg.controller_path);
    NcmParams ncm = detail::load_or_default_ncm(cfg, sys);

    TrainResult res = train(sys, std::move(controller), std::move(ncm), cfg.train);
    log_info("train finished: l1=" + std::to_string(res.final_l1) +
             " l2=" + std::to_string(res.final_l2) +
             (res.reached_targets ? " (targets reached)" : " (epochs exhausted)"));

    detail::ensure_output_dir(cfg);
    save_json_file(mlp_to_json(res.controller), detail::out_path(cfg, "controller.json"));
    if (res.ncm.mode != NcmMode::identity)
        save_json_file(ncm_to_json(res.ncm), detail::out_path(cfg, "ncm.json"));
    save_history_csv(res.history, detail::out_path(cfg, "history.csv"));
    return res.reached_targets ? exit_code::ok : exit_code::targets_not_reached;
}

inline int cmd_certify(const RunConfig& cfg) {
    SystemModel sys = detail::build_system(cfg);
    if (cfg.x_star.size() != sys.n) throw ConfigError("x_star missing or of wrong dimension");
    if (cfg.controller_path.empty()) throw ConfigError("certify needs controller_path");
    MlpParams controller = detail::load_mlp(cfg.controller_path);
    NcmParams ncm = detail::load_or_default_ncm(cfg, sys);
    const Box domain = cfg.domain ? *cfg.domain : sys.domain;

    detail::ensure_output_dir(cfg);
    json rep_json;
    bool pass = false;
    try {
        CertificateReport rep = certify(sys, ncm, controller, cfg.x_star, domain, cfg.certify_opts);
        rep_json = report_to_json(rep);
        pass = rep.pass;
    } catch (const EquilibriumError& e) {
        CertificateReport rep;
        rep.pass = false;
        rep.rho = cfg.certify_opts.rho;
        rep.equilibrium_residual = e.residual;
        rep_json = report_to_json(rep);
        rep_json["precondition"] = "equilibrium residual too large";
        log_error(e.what());
    }
    save_json_file(rep_json, detail::out_path(cfg, "report.json"));
    return pass ? exit_code::ok : exit_code::certificate_failed;
}

inline int cmd_simulate(const RunConfig& cfg) {
    SystemModel sys = detail::build_system(cfg);
    if (cfg.x_star.size() != sys.n) throw ConfigError("x_star missing or of wrong dimension");
    Controller controller;
    if (cfg.controller_path.empty()) {
        log_info("no controller_path: simulating with zero outer input");
        const std::size_t m = sys.m;
        controller = [m](const Vec&) { return Vec(m, 0.0); };
    } else {
        controller = detail::load_controller(cfg.controller_path);
    }

    std::vector<Trajectory> trajs = batch_rollouts(sys, controller, cfg.x_star, cfg.sim_n_init,
                                                   cfg.sim_radius, cfg.sim_seed, cfg.sim_T,
                                                   cfg.sim_dt);
    detail::ensure_output_dir(cfg);
    emit_csv(trajs, detail::out_path(cfg, "trajectories.csv"));
    for (const auto& [ax, ay] : cfg.axes)
        emit_svg(trajs, ax, ay, detail::out_path(cfg, "fig_" + ay + "_vs_" + ax + ".svg"));

    json rates = json::array();
    std::size_t truncated = 0;
    for (const Trajectory& tr : trajs) {
        truncated += tr.truncated ? 1 : 0;
        try {
            rates.push_back(estimate_rate(tr, cfg.x_star, cfg.rate_t0, cfg.rate_t1));
        } catch (const std::invalid_argument&) {
            rates.push_back(nullptr);
        }
    }
    json summary{{"rates", rates},
                 {"rate_window", {cfg.rate_t0, cfg.rate_t1}},
                 {"truncated", truncated},
                 {"n_init", cfg.sim_n_init}};
    save_json_file(summary, detail::out_path(cfg, "rates.json"));
    log_info("simulated " + std::to_string(trajs.size()) + " rollouts, " +
             std::to_string(truncated) + " truncated");
    return exit_code::ok;
}

inline int cmd_bounds(const RunConfig& cfg) {
    if (cfg.controller_path.empty()) throw ConfigError("bounds needs controller_path");
    MlpParams controller = detail::load_mlp(cfg.controller_path);
    MatrixBounds b = jacobian_bounds(controller);
    detail::ensure_output_dir(cfg);
    std::string csv = "i,j,lo,hi\r\n";
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            csv += std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' +
                   detail::fmt_double(b.lo(i, j)) + ',' + detail::fmt_double(b.hi(i, j)) + "\r\n";
    std::cout << csv;
    std::ofstream out(detail::out_path(cfg, "bounds.csv"), std::ios::binary);
    out << csv;
    if (!out) throw std::runtime_error("bounds: write failed");
    return exit_code::ok;
}

inline int cmd_lqr(const RunConfig& cfg) {
    SystemModel sys = [&] {
        try {
            return make_system(cfg.system);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    const Vec x_lin = cfg.x_star.size() == sys.n ? cfg.x_star : Vec(sys.n, 0.0);
    LqrController lqr =
        lqr_controller(sys, x_lin, cfg.lqr_r * Mat::identity(sys.m), Mat::identity(sys.n));
    detail::ensure_output_dir(cfg);
    json j{{"type", "linear"},
           {"K", mat_to_json(lqr.K)},
           {"P", mat_to_json(lqr.P)},
           {"care_residual", lqr.care_residual}};
    save_json_file(j, detail::out_path(cfg, "gain.json"));
    std::cout << "care_residual " << lqr.care_residual << '\n';
    return exit_code::ok;
}

} // namespace contrakt
