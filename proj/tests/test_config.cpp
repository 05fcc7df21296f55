#include "doctest.h"
#include "omlab/config.hpp"
#include "omlab/error.hpp"

using namespace omlab;

namespace {

const char* kGrid = R"(
[space]
kind = grid
lower = -1
upper = 1
resolution = 41

[fields]
V = x1^2/2

[schedule]
r_max = 0.2
ratio = 0.7
count = 4

[pairs]
first = 0 | 0.5
)";

}  // namespace

TEST_CASE("configs parse and build") {
    const auto cfg = build_config(parse_raw_config(kGrid));
    CHECK(cfg.space->size() == 41);
    CHECK(cfg.V.has_value());
    CHECK(cfg.tilt);
    CHECK(cfg.pairs.size() == 1);
    CHECK(cfg.pair_names.front() == "first");
    CHECK(cfg.schedule.radii().size() == 4);
    CHECK(cfg.digest.size() == 64);
}

TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK_THROWS_WITH_AS(build_config(parse_raw_config(std::string(kGrid) + "\n[nope]\na = 1\n")),
                         doctest::Contains("nope"), InputError);
    CHECK_THROWS_WITH_AS(parse_raw_config(kGrid, {"schedule.bogus=1"}), doctest::Contains("schedule.bogus"),
                         InputError);
}

TEST_CASE("invalid values name their key") {
    CHECK_THROWS_WITH_AS(build_config(parse_raw_config(kGrid, {"schedule.r_max=-0.1"})),
                         doctest::Contains("schedule.r_max"), InputError);
    CHECK_THROWS_AS(build_config(parse_raw_config(kGrid, {"fields.V=x1 +"})), InputError);
    CHECK_THROWS_AS(build_config(parse_raw_config(kGrid, {"space.kind=torus"})), InputError);
    CHECK_THROWS_AS(parse_raw_config(kGrid, {"no-dot"}), InputError);
}

TEST_CASE("digest is canonical") {
    const auto a = build_config(parse_raw_config(kGrid));
    const auto b = build_config(parse_raw_config(kGrid, {"output.dir=elsewhere", "mc.workers=8"}));
    CHECK(a.digest == b.digest);
    const auto c = build_config(parse_raw_config(kGrid, {"schedule.count=5"}));
    CHECK(a.digest != c.digest);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("overrides replace file values") {
    const auto raw = parse_raw_config(kGrid, {"schedule.ratio=0.5", "verify.tolerance=0.2"});
    CHECK(raw.at("schedule").at("ratio") == "0.5");
    const auto cfg = build_config(raw);
    CHECK(cfg.schedule.ratio == 0.5);
    CHECK(cfg.harness.tolerance == 0.2);
}

TEST_CASE("schema lists every section") {
    const auto& s = config_schema();
    for (const char* sec : {"space", "fields", "schedule", "smallball", "mc", "verify", "output"})
        CHECK(s.count(sec) == 1);
}
