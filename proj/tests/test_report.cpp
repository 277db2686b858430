#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "torint/report.hpp"

using namespace torint;

namespace {
std::string sys_path(const char* name) {
    return std::string(TORINT_SYSTEMS_DIR) + "/" + name;
}
} // namespace

TEST_CASE("system files load with expressions and claims") {
    SystemFile f = load_system_file(sys_path("example1.json"));
    CHECK(f.sys.m == 0);
    CHECK(std::abs(f.sys.X.vx.eval({0.0, 0.0, {}}) - std::sqrt(2.0)) <= 1e-15);
    CHECK(f.sys.X.vy.eval({0.3, 0.8, {}}) == 1.0);
    REQUIRE(f.sys.volume.has_value());
    CHECK(f.sys.volume->rho.is_literal(1.0));
    REQUIRE(f.claims.symmetries.size() == 1);

    SystemFile pair = load_system_file(sys_path("construct_integral_pair.json"));
    REQUIRE(pair.claims.Y.has_value());
    REQUIRE(pair.claims.lambda.has_value());
    CHECK(std::abs(pair.claims.lambda->eval({0.0, 0.0, {}}) + 0.5) <= 1e-15);
}

TEST_CASE("system file validation") {
    CHECK_THROWS(load_system_file("/nonexistent/system.json"));
    nlohmann::json j;
    j["m"] = 1;
    j["U"] = nlohmann::json::array();
    j["X"] = {{"dx", "1"}, {"dy", "1"}};
    CHECK_THROWS_AS(load_system(j), std::invalid_argument);  // U/m mismatch

    nlohmann::json bad;
    bad["m"] = 0;
    bad["X"] = {{"dx", "sin(z)"}, {"dy", "1"}};
    CHECK_THROWS_AS(load_system(bad), ParseError);  // undeclared variable

    // fiber variables require a matching m
    nlohmann::json fib;
    fib["m"] = 1;
    fib["U"] = {{0.0, 1.0}};
    fib["X"] = {{"dx", "c_1"}, {"dy", "1"}};
    CHECK_NOTHROW(load_system(fib));
}

TEST_CASE("reports serialize deterministically with ordered keys") {
    FiberedSystem sys;
    sys.X = {parse_expr("sin(y)+sqrt(2)"), parse_expr("1")};
    Certificate cert = check_ej(sys, VolumeForm2{});
    ordered_json a = json_of(cert), b = json_of(cert);
    CHECK(a.dump(2) == b.dump(2));
    auto keys = a.items().begin();
    CHECK(keys.key() == "pass");  // insertion order preserved

    ConstructionOutcome out = volume_from_frame(sys, {parse_expr("1"), parse_expr("0")});
    ordered_json j = json_of(out);
    CHECK(j["ok"].get<bool>());
    CHECK(j["hypotheses"].size() == 1);
    CHECK(j["density_min"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("search results serialize their kernel evidence") {
    SystemFile f = load_system_file(sys_path("example1.json"));
    SearchResult r = find_symmetries(f.sys.X, {});
    ordered_json j = json_of(r);
    CHECK(j["kind"] == "symmetry");
    CHECK(j["kernel"]["dimension"].get<int>() == 2);
    CHECK(j["x_in_kernel"].get<bool>());
    CHECK(!j["candidates"].empty());
    CHECK(j["candidates"][0].contains("independent"));
}
