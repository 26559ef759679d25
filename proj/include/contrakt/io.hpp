#pragma once

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "contrakt/certify.hpp"
#include "contrakt/mat.hpp"
#include "contrakt/ncm.hpp"
#include "contrakt/nn.hpp"
#include "contrakt/train.hpp"

namespace contrakt {

using nlohmann::json;

// ---- matrices and vectors ----

inline json mat_to_json(const Mat& M) {
    json rows = json::array();
    for (std::size_t i = 0; i < M.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < M.cols; ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat mat_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix JSON must be a 2-d array");
    Mat M(j.size(), j.front().size());
    for (std::size_t i = 0; i < M.rows; ++i) {
        if (j[i].size() != M.cols) throw std::invalid_argument("matrix JSON is ragged");
        for (std::size_t jj = 0; jj < M.cols; ++jj) M(i, jj) = j[i][jj].get<double>();
    }
    return M;
}

// ---- controller parameters ----

inline json mlp_to_json(const MlpParams& p) {
    json layers = json::array();
    for (std::size_t l = 0; l < p.depth(); ++l)
        layers.push_back({{"W", mat_to_json(p.weights[l])}, {"b", p.biases[l]}});
    return {{"alpha", p.alpha}, {"layers", std::move(layers)}, {"Wo", mat_to_json(p.output_weight)}};
}

inline MlpParams mlp_from_json(const json& j) {
    MlpParams p;
    p.alpha = j.at("alpha").get<double>();
    for (const json& layer : j.at("layers")) {
        p.weights.push_back(mat_from_json(layer.at("W")));
        p.biases.push_back(layer.at("b").get<Vec>());
    }
    p.output_weight = mat_from_json(j.at("Wo"));
    p.validate();
    return p;
}

// ---- metric parameters ----

inline json scalar_net_to_json(const ScalarNet& s) {
    return {{"w", s.w}, {"c", s.c}, {"a", s.a}};
}

inline ScalarNet scalar_net_from_json(const json& j) {
    ScalarNet s;
    s.w = j.at("w").get<Vec>();
    s.c = j.at("c").get<Vec>();
    s.a = j.at("a").get<Vec>();
    if (s.w.size() != s.c.size() || s.w.size() != s.a.size())
        throw std::invalid_argument("scalar net JSON: mismatched widths");
    return s;
}

inline json ncm_to_json(const NcmParams& p) {
    json j{{"mode", to_string(p.mode)}, {"epsilon", p.epsilon}, {"n", p.n}};
    json basis = json::array();
    for (const Vec& v : p.kernel_basis) basis.push_back(v);
    j["kernel_basis"] = std::move(basis);
    if (p.mode == NcmMode::log_cosh) {
        j["gamma"] = mat_to_json(p.gamma);
        j["bias"] = mat_to_json(p.bias);
        json alpha = json::array();
        for (const Mat& A : p.alpha) alpha.push_back(mat_to_json(A));
        j["alpha"] = std::move(alpha);
    } else if (p.mode == NcmMode::general) {
        json K = json::array(), beta = json::array();
        for (const ScalarNet& s : p.K) K.push_back(scalar_net_to_json(s));
        for (const ScalarNet& s : p.beta) beta.push_back(scalar_net_to_json(s));
        j["K"] = std::move(K);
        j["beta"] = std::move(beta);
    }
    return j;
}

inline NcmParams ncm_from_json(const json& j) {
    NcmParams p;
    p.mode = ncm_mode_from_string(j.at("mode").get<std::string>());
    p.epsilon = j.at("epsilon").get<double>();
    p.n = j.at("n").get<std::size_t>();
    for (const json& v : j.value("kernel_basis", json::array()))
        p.kernel_basis.push_back(v.get<Vec>());
    if (p.mode == NcmMode::log_cosh) {
        p.gamma = mat_from_json(j.at("gamma"));
        p.bias = mat_from_json(j.at("bias"));
        for (const json& A : j.at("alpha")) p.alpha.push_back(mat_from_json(A));
    } else if (p.mode == NcmMode::general) {
        for (const json& s : j.at("K")) p.K.push_back(scalar_net_from_json(s));
        for (const json& s : j.at("beta")) p.beta.push_back(scalar_net_from_json(s));
    }
    return p;
}

// ---- certificate report ----

inline json report_to_json(const CertificateReport& r) {
    return {{"eta", r.eta},
            {"c1", r.c1},
            {"c2", r.c2},
            {"row_margins", r.row_margins},
            {"pass", r.pass},
            {"oracle_min_margin", r.oracle_min_margin},
            {"grid_tau", r.grid_tau},
            {"rho", r.rho},
            {"equilibrium_residual", r.equilibrium_residual}};
}

inline CertificateReport report_from_json(const json& j) {
    CertificateReport r;
    r.eta = j.at("eta").get<double>();
    r.c1 = j.at("c1").get<double>();
    r.c2 = j.at("c2").get<double>();
    r.row_margins = j.at("row_margins").get<Vec>();
    r.pass = j.at("pass").get<bool>();
    r.oracle_min_margin = j.at("oracle_min_margin").get<double>();
    r.grid_tau = j.at("grid_tau").get<double>();
    r.rho = j.value("rho", 0.0);
    r.equilibrium_residual = j.value("equilibrium_residual", 0.0);
    return r;
}

// ---- files ----

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

/// Training history CSV: epoch, l1, l2, total (shortest round-trip decimals).
inline void save_history_csv(const std::vector<TrainRecord>& hist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "epoch,l1,l2,total\r\n";
    for (const TrainRecord& r : hist) {
        char buf[128];
        auto put = [&](double v) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
            out.write(buf, p - buf);
        };
        out << r.epoch << ',';
        put(r.l1);
        out << ',';
        put(r.l2);
        out << ',';
        put(r.total);
        out << "\r\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

} // namespace contrakt
