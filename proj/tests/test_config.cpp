#include <doctest.h>

#include <cctype>
#include <string>

#include "rdyn/config.hpp"

using namespace rdyn;

TEST_CASE("empty text yields the shipped defaults") {
    const auto cfg = parse_config_text("");
    CHECK(cfg.model.sigma == 2.0);
    CHECK(cfg.kernel.kind == KernelKind::Uniform);
    CHECK(cfg.kernel.t0 == 0.05);
    CHECK(cfg.kernel.epsilon == 0.01);
    CHECK(cfg.run.seed == 1);
    CHECK(cfg.run.grid_n == 48);
    CHECK(cfg.output.dir == "out");
    CHECK(validate_params(cfg.model).ok());
}

TEST_CASE("values, comments and whitespace parse") {
    const auto cfg = parse_config_text(
        "# leading comment\n"
        "[model]\n"
        "sigma = 2.5   ; trailing comment\n"
        "A = 0.01 0.02\n"
        "C = 0.1 0.2 0.3 0.4\n"
        "\n"
        "[noise]\n"
        "t0 = 0.04\n"
        "epsilon = 0.002\n"
        "[run]\n"
        "seed = 99\n"
        "x0 = 0.05 1.0 1.0\n"
        "regular_points = 0.09 1 1, 0.091 1 1\n"
        "threads = 4\n"
        "[output]\n"
        "formats = json\n");
    CHECK(cfg.model.sigma == 2.5);
    CHECK(cfg.model.A[1] == 0.02);
    CHECK(cfg.model.C[0][1] == 0.2);
    CHECK(cfg.model.C[1][0] == 0.3);
    CHECK(cfg.kernel.t0 == 0.04);
    CHECK(cfg.run.seed == 99);
    REQUIRE(cfg.run.regular_points.size() == 2);
    CHECK(cfg.run.regular_points[1].z == 0.091);
    CHECK(cfg.run.threads == 4);
    CHECK_FALSE(cfg.output.csv);
    CHECK(cfg.output.json);
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS(parse_config_text("[model]\nsgima = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[extras]\nfoo = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("sigma = 2\n"), ConfigError); // no section
    CHECK_THROWS_AS(parse_config_text("[model]\nsigma = two\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nA = 0.01\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nseed = -3\n"), ConfigError);
}

TEST_CASE("abs-continuous kernels parse with density knots") {
    const auto cfg = parse_config_text(
        "[noise]\n"
        "kind = abscontinuous\n"
        "t0 = 0.05\n"
        "epsilon = 0.01\n"
        "density = 0.04 0.0 0.05 1.0 0.06 0.0\n");
    CHECK(cfg.kernel.kind == KernelKind::AbsContinuous);
    REQUIRE(cfg.kernel.density.size() == 3);
    CHECK(cfg.kernel.density[1].t == 0.05);
    CHECK(cfg.kernel.density[1].value == 1.0);
}

TEST_CASE("shipped default file round-trips through the serializer") {
    const auto cfg = parse_config_file(RDYN_DEFAULT_CONFIG);
    CHECK(validate_params(cfg.model).ok());
    CHECK(cfg.run.regular_points.size() == 3);
    const auto text = serialize_config(cfg);
    const auto again = parse_config_text(text);
    CHECK(serialize_config(again) == text);
    CHECK(config_hash(again) == config_hash(cfg));
}

TEST_CASE("hash is stable, sensitive to values, blind to threads") {
    const auto base = parse_config_text("");
    const auto h = config_hash(base);
    CHECK(h.size() == 16);
    for (char c : h) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
    CHECK(config_hash(base) == h);

    auto changed = base;
    changed.run.seed = 2;
    CHECK(config_hash(changed) != h);

    auto threaded = base;
    threaded.run.threads = 8;
    CHECK(config_hash(threaded) == h);
}

TEST_CASE("serializer keeps full precision") {
    auto cfg = parse_config_text("");
    cfg.model.a = 0.1 + 1e-16;
    const auto again = parse_config_text(serialize_config(cfg));
    CHECK(again.model.a == cfg.model.a);
}
