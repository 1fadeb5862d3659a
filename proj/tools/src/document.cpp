// SPDX-License-Identifier: Apache-2.0
#include "lsmt_cli/document.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace lsmt::cli {

using nlohmann::json;

ParamVector ModelDocument::to_param_vector() const {
    KroneckerStructure st(m, nu);
    const int mn = st.m() * st.n();
    if (static_cast<int>(theta_I.size()) != mn)
        fail(ErrorCode::dim, "theta_I must have m*n entries");
    if (static_cast<int>(theta_J.size()) != mn)
        fail(ErrorCode::dim, "theta_J must have m*n entries");
    Eigen::VectorXd v(2 * mn);
    for (int i = 0; i < mn; ++i) v[i] = theta_I[i];
    for (int i = 0; i < mn; ++i) v[mn + i] = theta_J[i];
    return ParamVector(st, std::move(v));
}

std::optional<NoiseModel> ModelDocument::noise() const {
    if (!R) return std::nullopt;
    if (static_cast<int>(R->size()) != m * m)
        fail(ErrorCode::dim, "R must have m*m entries");
    Eigen::MatrixXd Rm(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) Rm(i, j) = (*R)[i * m + j];
    NoiseModel noise{std::move(Rm)};
    validate_noise(noise, m);
    return noise;
}

ModelDocument parse_model_document(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::parse, "document must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "m" && key != "nu" && key != "theta_I" && key != "theta_J" &&
            key != "R")
            fail(ErrorCode::parse, "unknown top-level key: " + key);
    }
    for (const char* key : {"m", "nu", "theta_I", "theta_J"})
        if (!j.contains(key))
            fail(ErrorCode::parse, std::string("missing key: ") + key);

    ModelDocument doc;
    try {
        doc.m = j.at("m").get<int>();
        doc.nu = j.at("nu").get<std::vector<int>>();
        doc.theta_I = j.at("theta_I").get<std::vector<double>>();
        doc.theta_J = j.at("theta_J").get<std::vector<double>>();
        if (j.contains("R")) doc.R = j.at("R").get<std::vector<double>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("bad value type: ") + e.what());
    }

    // Validate shapes and (if present) the noise covariance now, so bad
    // documents are rejected at parse time.
    doc.to_param_vector();
    doc.noise();
    return doc;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string serialize_model_document(const ModelDocument& doc) {
    // Hand-rolled so numbers keep the documented 17-digit format.
    std::ostringstream out;
    auto list = [&](const auto& v, auto fmt) {
        out << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ",";
            out << fmt(v[i]);
        }
        out << "]";
    };
    out << "{\"m\":" << doc.m << ",\"nu\":";
    list(doc.nu, [](int x) { return std::to_string(x); });
    out << ",\"theta_I\":";
    list(doc.theta_I, format_double);
    out << ",\"theta_J\":";
    list(doc.theta_J, format_double);
    if (doc.R) {
        out << ",\"R\":";
        list(*doc.R, format_double);
    }
    out << "}\n";
    return out.str();
}

ModelDocument document_from_theta(const ParamVector& theta,
                                  const std::optional<Eigen::MatrixXd>& R) {
    const auto& st = theta.structure();
    const int mn = st.m() * st.n();
    ModelDocument doc;
    doc.m = st.m();
    doc.nu = st.nu();
    doc.theta_I.assign(theta.values().data(), theta.values().data() + mn);
    doc.theta_J.assign(theta.values().data() + mn, theta.values().data() + 2 * mn);
    if (R) {
        doc.R = std::vector<double>();
        for (int i = 0; i < R->rows(); ++i)
            for (int j = 0; j < R->cols(); ++j) doc.R->push_back((*R)(i, j));
    }
    return doc;
}

std::string format_matrix_csv(const Eigen::MatrixXd& M) {
    std::ostringstream out;
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) {
            if (j) out << ",";
            out << format_double(M(i, j));
        }
        out << "\n";
    }
    return out.str();
}

std::string format_series_csv(const Eigen::MatrixXd& u, const Eigen::MatrixXd* y) {
    const int m = static_cast<int>(u.cols());
    std::ostringstream out;
    out << "t";
    for (int c = 1; c <= m; ++c) out << ",u" << c;
    if (y)
        for (int c = 1; c <= m; ++c) out << ",y" << c;
    out << "\n";
    for (int t = 0; t < u.rows(); ++t) {
        out << t;
        for (int c = 0; c < m; ++c) out << "," << format_double(u(t, c));
        if (y)
            for (int c = 0; c < m; ++c) out << "," << format_double((*y)(t, c));
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void parse_series_csv(const std::string& text, int m, Eigen::MatrixXd& u,
                      Eigen::MatrixXd* y) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::parse, "empty series file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const int want = y ? 1 + 2 * m : 1 + m;
    const auto header = split(line, ',');
    if (static_cast<int>(header.size()) != want || header[0] != "t")
        fail(ErrorCode::parse, "bad series header");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) != want)
            fail(ErrorCode::parse, "bad series row width");
        std::vector<double> row;
        try {
            for (const auto& c : cells) row.push_back(std::stod(c));
        } catch (const std::exception&) {
            fail(ErrorCode::parse, "non-numeric series entry");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorCode::parse, "series file has no data rows");

    const int T = static_cast<int>(rows.size());
    u.resize(T, m);
    if (y) y->resize(T, m);
    for (int t = 0; t < T; ++t) {
        for (int c = 0; c < m; ++c) u(t, c) = rows[t][1 + c];
        if (y)
            for (int c = 0; c < m; ++c) (*y)(t, c) = rows[t][1 + m + c];
    }
}

}  // namespace lsmt::cli
