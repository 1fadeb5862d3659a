// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsmt/natgrad.hpp"
#include "lsmt_cli/document.hpp"

namespace {

using namespace lsmt;
using namespace lsmt::cli;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::parse, "cannot open file: " + path);
    std::ostringstream data;
    data << in.rdbuf();
    return data.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::parse, "cannot open output file: " + path);
    out << data;
}

ModelDocument load_model(const std::string& path) {
    return parse_model_document(read_file(path));
}

KroneckerStructure parse_structure_arg(const std::string& arg) {
    std::vector<int> nu;
    std::stringstream ss(arg);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            nu.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            fail(ErrorCode::parse, "bad --structure value (expect e.g. \"2,1\")");
        }
    }
    if (nu.empty()) fail(ErrorCode::parse, "empty --structure value");
    return KroneckerStructure(static_cast<int>(nu.size()), nu);
}

struct IdentifyConfig {
    ModelDocument model;  // theta0 and the chart
    FitConfig fit;
};

IdentifyConfig parse_identify_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("model"))
        fail(ErrorCode::parse, "config must be an object with a \"model\" key");

    IdentifyConfig cfg{parse_model_document(j.at("model").dump()),
                       FitConfig{KroneckerStructure(1, {1}), Eigen::VectorXd()}};
    ParamVector theta0 = cfg.model.to_param_vector();
    cfg.fit.structure = theta0.structure();
    cfg.fit.theta0 = theta0.values();
    try {
        if (j.contains("max_iters")) cfg.fit.max_iters = j.at("max_iters").get<int>();
        if (j.contains("grad_tol")) cfg.fit.grad_tol = j.at("grad_tol").get<double>();
        if (j.contains("lambda0")) cfg.fit.lambda0 = j.at("lambda0").get<double>();
        if (j.contains("tol")) cfg.fit.series_tol = j.at("tol").get<double>();
        if (j.contains("grid")) cfg.fit.grid = j.at("grid").get<int>();
        if (j.contains("engine")) {
            auto e = engine_from_name(j.at("engine").get<std::string>());
            if (!e) fail(ErrorCode::parse, "unknown engine in config");
            cfg.fit.engine = *e;
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("bad config value: ") + e.what());
    }
    return cfg;
}

std::string format_trace_csv(const FitTrace& trace) {
    std::ostringstream out;
    out << "iter,cost,grad_inf,lambda,step_norm,rho\n";
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const auto& r = trace.iterations[i];
        out << i << "," << format_double(r.cost) << "," << format_double(r.grad_inf)
            << "," << format_double(r.lambda) << "," << format_double(r.step_norm)
            << "," << format_double(r.rho) << "\n";
    }
    return out.str();
}

int run(int argc, char** argv) {
    CLI::App app{"Metric tensors of stable discrete-time MIMO linear systems and "
                 "natural-gradient identification"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for per-entry tensor work");

    // tensor
    auto* cmd_tensor = app.add_subcommand("tensor", "compute G(theta)");
    std::string t_model, t_engine = "stein", t_out;
    double t_tol = 1e-10;
    int t_grid = 1024;
    cmd_tensor->add_option("--model", t_model)->required();
    cmd_tensor->add_option("--engine", t_engine)
        ->check(CLI::IsMember({"stein", "series", "quadrature", "arma"}));
    cmd_tensor->add_option("--tol", t_tol);
    cmd_tensor->add_option("--grid", t_grid);
    cmd_tensor->add_option("--out", t_out)->required();

    // validate
    auto* cmd_validate = app.add_subcommand("validate", "cross-validate all engines");
    std::string v_model;
    double v_tol = 1e-8;
    cmd_validate->add_option("--model", v_model)->required();
    cmd_validate->add_option("--tol", v_tol);

    // stochastic-tensor
    auto* cmd_stoch = app.add_subcommand("stochastic-tensor",
                                         "tensor from output autocovariances");
    std::string s_model, s_which, s_out;
    double s_tol = 1e-10;
    cmd_stoch->add_option("--model", s_model)->required();
    cmd_stoch->add_option("--which", s_which)->required()
        ->check(CLI::IsMember({"U", "T"}));
    cmd_stoch->add_option("--tol", s_tol);
    cmd_stoch->add_option("--out", s_out)->required();

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "run the model on an input series");
    std::string sim_model, sim_input, sim_out;
    cmd_sim->add_option("--model", sim_model)->required();
    cmd_sim->add_option("--input", sim_input)->required();
    cmd_sim->add_option("--out", sim_out)->required();

    // identify
    auto* cmd_id = app.add_subcommand("identify", "natural-gradient prediction-error fit");
    std::string id_config, id_data, id_trace;
    cmd_id->add_option("--config", id_config)->required();
    cmd_id->add_option("--data", id_data)->required();
    cmd_id->add_option("--out-trace", id_trace)->required();

    // make-example
    auto* cmd_make = app.add_subcommand("make-example", "sample a stable model document");
    std::string mk_structure, mk_out;
    std::uint64_t mk_seed = 0;
    double mk_rho = 0.9;
    cmd_make->add_option("--structure", mk_structure)->required();
    cmd_make->add_option("--seed", mk_seed)->required();
    cmd_make->add_option("--rho-max", mk_rho);
    cmd_make->add_option("--out", mk_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "E_PARSE: " << e.what() << "\n";
        return 2;
    }

    // Input parsing: failures here are usage errors (exit 2).
    try {
        if (cmd_tensor->parsed()) {
            ParamVector theta = load_model(t_model).to_param_vector();
            MetricTensor G;
            if (t_engine == "stein")
                G = metric_stein(build_state_space(theta));
            else if (t_engine == "series")
                G = metric_series(build_state_space(theta), t_tol);
            else if (t_engine == "quadrature")
                G = metric_quadrature(build_state_space(theta), t_grid, threads);
            else
                G = metric_arma(theta, t_grid, threads);
            write_file(t_out, format_matrix_csv(G.G));
        } else if (cmd_validate->parsed()) {
            ParamVector theta = load_model(v_model).to_param_vector();
            CrossValidateReport report = cross_validate(theta, v_tol);
            for (const auto& p : report.pairs)
                std::cout << engine_name(p.a) << "/" << engine_name(p.b) << " "
                          << format_double(p.max_abs_diff) << "\n";
            std::cout << (report.pass ? "PASS" : "FAIL") << "\n";
            if (!report.pass) return 1;
        } else if (cmd_stoch->parsed()) {
            ModelDocument doc = load_model(s_model);
            auto noise = doc.noise();
            if (!noise) fail(ErrorCode::badnoise, "model document has no R");
            StateSpaceModel model = build_state_space(doc.to_param_vector());
            MetricTensor G = (s_which == "U") ? metric_U(model, *noise, s_tol)
                                              : metric_T(model, *noise, s_tol);
            write_file(s_out, format_matrix_csv(G.G));
        } else if (cmd_sim->parsed()) {
            ModelDocument doc = load_model(sim_model);
            StateSpaceModel model = build_state_space(doc.to_param_vector());
            Eigen::MatrixXd u;
            parse_series_csv(read_file(sim_input), model.structure.m(), u, nullptr);
            Eigen::MatrixXd y =
                simulate(model, u, Eigen::VectorXd::Zero(model.structure.n()));
            write_file(sim_out, format_series_csv(u, &y));
        } else if (cmd_id->parsed()) {
            IdentifyConfig cfg = parse_identify_config(read_file(id_config));
            Eigen::MatrixXd u, y;
            parse_series_csv(read_file(id_data), cfg.fit.structure.m(), u, &y);
            FitTrace trace = fit(cfg.fit, u, y);
            write_file(id_trace, format_trace_csv(trace));
        } else if (cmd_make->parsed()) {
            KroneckerStructure st = parse_structure_arg(mk_structure);
            ParamVector theta = sample_stable(st, mk_seed, mk_rho);
            write_file(mk_out, serialize_model_document(document_from_theta(theta)));
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::parse:
            case ErrorCode::dim:
            case ErrorCode::badnoise:
                return 2;
            default:
                return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
