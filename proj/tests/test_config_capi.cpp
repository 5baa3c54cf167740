#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "rotstar/config.hpp"
#include "rotstar/errors.hpp"
#include "rotstar_c.h"

using namespace rotstar;

namespace {

Status status_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.status();
    }
    return Status::ok;
}

}  // namespace

TEST_CASE("config: defaults fill an empty document") {
    const RunConfig c = parse_config("{}");
    CHECK(c.n_in == 65);
    CHECK_FALSE(c.gamma.has_value());
    CHECK_THROWS_AS(c.eos(), Error);
}

TEST_CASE("config: strict schema") {
    CHECK(status_of(R"({"eos": {"gamma": 1.5, "gama": 2}})") == Status::config);
    CHECK(status_of(R"({"solvr": {}})") == Status::config);
    CHECK(status_of(R"({"grid": {"n_in": "65"}})") == Status::config);
    CHECK(status_of(R"({"grid": {"n_in": 64.5}})") == Status::config);
    CHECK(status_of(R"({"eos": {"gamma": 2.5}})") == Status::config);
    CHECK(status_of(R"({"eos": {"gamma": 1.2}})") == Status::config);
    CHECK(status_of(R"({"star": {"u_O": -1e-3}})") == Status::config);
    CHECK(status_of(R"({"star": {"Omega_O": 0.1, "b": 0.001}})") == Status::config);
    CHECK(status_of(R"({"grid": {"n_in": 60}})") == Status::config);
    CHECK(status_of(R"({"verify": {"levels": [33, 97]}})") == Status::config);
    CHECK(status_of(R"({"output": {"formats": ["hdf5"]}})") == Status::config);
    CHECK(status_of(R"({"kerr": {"m_geom": 1, "a_spin": 1.5}})") == Status::config);
    CHECK(status_of(R"({"kerr": {"m_geom": 1, "a_spin": 1.0}})") == Status::ok);
    CHECK(status_of("{not json") == Status::config);
    CHECK(status_of("[1, 2]") == Status::config);
}

TEST_CASE("config: canonical form round-trips and hashes stably") {
    const RunConfig a = parse_config(R"({"eos": {"gamma": 1.5}, "star": {"b": 0.001}})");
    const RunConfig b = parse_config(canonical_json(a));
    CHECK(canonical_json(a) == canonical_json(b));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    const RunConfig c = parse_config(R"({"eos": {"gamma": 1.5}, "star": {"b": 0.002}})");
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("config: grid levels") {
    RunConfig c;
    apply_grid_level(c, 0);
    CHECK(c.n_in == 33);
    CHECK(c.n_ex == 25);
    apply_grid_level(c, 2);
    CHECK(c.n_in == 129);
    CHECK_THROWS_AS(apply_grid_level(c, 5), Error);
}

TEST_CASE("c api: errors carry status and message") {
    char* out = nullptr;
    CHECK(rs_config_canonical(R"({"eos": {"bogus": 1}})", &out) == RS_CONFIG);
    CHECK(out == nullptr);
    CHECK(std::string(rs_last_error()).find("eos.bogus") != std::string::npos);
    CHECK(std::string(rs_last_error_stage()) == "config");
    CHECK(rs_config_canonical(nullptr, &out) == RS_DOMAIN);
    REQUIRE(rs_config_canonical("{}", &out) == RS_OK);
    CHECK(std::string(rs_last_error()).empty());
    rs_free_string(out);
    CHECK(std::strlen(rs_version()) > 0);
}

TEST_CASE("c api: eos handle matches closed forms for gamma = 3/2") {
    rs_eos* e = nullptr;
    REQUIRE(rs_eos_create(1.5, 1.0, 1.0, &e) == RS_OK);
    // rho = u^2 / 9, so P = int_0^u e^{u-s} s^2 / 9 ds = (2 e^u - 2 - 2u - u^2) / 9.
    const double u = 0.3;
    double rho = 0, P = 0, back = 0;
    REQUIRE(rs_eos_density(e, u, &rho) == RS_OK);
    CHECK(rho == doctest::Approx(u * u / 9).epsilon(1e-13));
    REQUIRE(rs_eos_pressure(e, u, &P) == RS_OK);
    CHECK(P == doctest::Approx(2 * (std::expm1(u) - u) / 9 - u * u / 9).epsilon(1e-10));
    REQUIRE(rs_eos_enthalpy_of_density(e, rho, &back) == RS_OK);
    CHECK(back == doctest::Approx(u).epsilon(1e-12));
    rs_eos_free(e);
    CHECK(rs_eos_create(2.5, 1.0, 1.0, &e) == RS_CONFIG);
}

TEST_CASE("c api: solve, query fields and round-trip a dump") {
    const char* cfg = R"({"eos": {"gamma": 1.6666666666666667}, "star": {"u_O": 1e-3, "b": 1e-3},
                          "grid": {"n_in": 33, "n_ex": 25}})";
    rs_solution* s = nullptr;
    REQUIRE(rs_solve(cfg, &s) == RS_OK);
    double M = 0, J = 0;
    REQUIRE(rs_solution_mass(s, &M, &J) == RS_OK);
    CHECK(M > 0);
    CHECK(J > 0);
    rs_field* W = nullptr;
    CHECK(rs_solution_field(s, "nope", &W) == RS_DOMAIN);
    REQUIRE(rs_solution_field(s, "W", &W) == RS_OK);
    double w0 = 0, w1 = 0;
    REQUIRE(rs_field_eval(W, 0.0, 0.0, &w0) == RS_OK);
    const auto path = (std::filesystem::temp_directory_path() / "rotstar_capi_W.bin").string();
    REQUIRE(rs_field_write_binary(W, path.c_str()) == RS_OK);
    rs_field* W2 = nullptr;
    REQUIRE(rs_field_read_binary(path.c_str(), &W2) == RS_OK);
    REQUIRE(rs_field_eval(W2, 0.0, 0.0, &w1) == RS_OK);
    CHECK(w0 == w1);
    char* report = nullptr;
    REQUIRE(rs_solution_report(s, &report) == RS_OK);
    CHECK(std::string(report).find("\"M\"") != std::string::npos);
    rs_free_string(report);
    rs_field_free(W);
    rs_field_free(W2);
    rs_solution_free(s);
    std::filesystem::remove(path);
}

TEST_CASE("c api: rs_run reports failed checks without an error status") {
    const auto dir = (std::filesystem::temp_directory_path() / "rotstar_capi_run").string();
    char* summary = nullptr;
    int passed = -1;
    REQUIRE(rs_run("lane-emden", R"({"lane_emden": {"nu": 1}})", dir.c_str(), 0, nullptr, &summary, &passed) == RS_OK);
    CHECK(passed == 1);
    CHECK(std::string(summary).find("xi1 = 3.14159265359") != std::string::npos);
    rs_free_string(summary);
    CHECK(rs_run("nope", "{}", dir.c_str(), -1, nullptr, nullptr, &passed) == RS_CONFIG);
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
    std::filesystem::remove_all(dir);
}
