// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "helpers.hpp"
#include "lsmt_cli/document.hpp"

using namespace lsmt;
using namespace lsmt::cli;

namespace {

const char* kSc1Doc = R"({"m": 1, "nu": [1], "theta_I": [0.5], "theta_J": [1.0]})";

ErrorCode code_of(const std::string& text) {
    try {
        parse_model_document(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::convergence;  // sentinel: did not throw
}

}  // namespace

TEST_CASE("parse_model_document") {
    SUBCASE("well-formed scalar document") {
        ModelDocument doc = parse_model_document(kSc1Doc);
        CHECK(doc.m == 1);
        CHECK(doc.nu == std::vector<int>{1});
        CHECK(doc.theta_I == std::vector<double>{0.5});
        CHECK(doc.theta_J == std::vector<double>{1.0});
        CHECK(!doc.R.has_value());
        ParamVector theta = doc.to_param_vector();
        CHECK(theta.values() == testing::sc1().values());
    }
    SUBCASE("document with noise covariance") {
        ModelDocument doc = parse_model_document(
            R"({"m": 1, "nu": [1], "theta_I": [0.5], "theta_J": [1.0], "R": [2.0]})");
        REQUIRE(doc.R.has_value());
        auto noise = doc.noise();
        REQUIRE(noise.has_value());
        CHECK(noise->R(0, 0) == 2.0);
    }
    SUBCASE("shape and content failures") {
        CHECK(code_of(R"({"m": 1, "nu": [1], "theta_I": [0.5, 0.1, 0.2], "theta_J": [1.0]})") ==
              ErrorCode::dim);
        CHECK(code_of(R"({"m": 2, "nu": [1], "theta_I": [0.5], "theta_J": [1.0]})") ==
              ErrorCode::dim);
        CHECK(code_of(R"({"m": 1, "nu": [0], "theta_I": [], "theta_J": []})") ==
              ErrorCode::dim);
        CHECK(code_of(R"({"m": 1, "nu": [1], "theta_I": [0.5], "theta_J": [1.0], "R": [-1.0]})") ==
              ErrorCode::badnoise);
        CHECK(code_of(R"({"m": 1, "nu": [1], "theta_I": [0.5], "theta_J": [1.0], "extra": 3})") ==
              ErrorCode::parse);
        CHECK(code_of(R"({"m": 1, "nu": [1], "theta_I": [0.5]})") == ErrorCode::parse);
        CHECK(code_of("not json") == ErrorCode::parse);
        CHECK(code_of(R"([1, 2, 3])") == ErrorCode::parse);
    }
    SUBCASE("asymmetric R is rejected") {
        CHECK(code_of(R"({"m": 2, "nu": [1, 1], "theta_I": [0.1, 0.0, 0.0, 0.2],
                          "theta_J": [1.0, 0.0, 0.0, 1.0],
                          "R": [1.0, 0.3, 0.2, 1.0]})") == ErrorCode::badnoise);
    }
}

TEST_CASE("serialization round trip") {
    for (const auto& st : testing::test_structures()) {
        ParamVector theta = sample_stable(st, 5, 0.8);
        Eigen::MatrixXd R = Eigen::MatrixXd::Identity(st.m(), st.m()) * 1.5;
        ModelDocument doc = document_from_theta(theta, R);
        ModelDocument back = parse_model_document(serialize_model_document(doc));
        CHECK(back.m == doc.m);
        CHECK(back.nu == doc.nu);
        CHECK(back.theta_I == doc.theta_I);  // %.17g preserves doubles exactly
        CHECK(back.theta_J == doc.theta_J);
        REQUIRE(back.R.has_value());
        CHECK(*back.R == *doc.R);
    }
}

TEST_CASE("csv formats") {
    SUBCASE("matrix csv is headerless and exact") {
        Eigen::MatrixXd M(2, 2);
        M << 1.0, 0.1, -0.25, 1e-17;
        std::string text = format_matrix_csv(M);
        CHECK(text.substr(0, 2) == "1,");
        CHECK(text.find("t,") == std::string::npos);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    }
    SUBCASE("series csv round trip") {
        Eigen::MatrixXd u(3, 2), y(3, 2);
        u << 1, 2, 3, 4, 5, 6;
        y << 0.5, -0.25, 1e-9, 7, 8, 9.125;
        std::string text = format_series_csv(u, &y);
        CHECK(text.rfind("t,u1,u2,y1,y2\n", 0) == 0);
        Eigen::MatrixXd u2, y2;
        parse_series_csv(text, 2, u2, &y2);
        CHECK(u2 == u);
        CHECK(y2 == y);
        Eigen::MatrixXd u3;
        parse_series_csv(format_series_csv(u, nullptr), 2, u3, nullptr);
        CHECK(u3 == u);
    }
    SUBCASE("malformed series csv is E_PARSE") {
        Eigen::MatrixXd u;
        CHECK_THROWS_AS(parse_series_csv("t,u1\n0,abc\n", 1, u, nullptr), Error);
        CHECK_THROWS_AS(parse_series_csv("wrong,header\n", 1, u, nullptr), Error);
    }
}
