#include "support.hpp"

#include "simharness/error.hpp"
#include "simharness/guest.hpp"

#include <doctest.h>

using namespace simharness;

TEST_CASE("program JSON round trip")
{
    auto j = json::parse(R"({"privilege": "root", "phases": [
        {"op": "exec", "instructions": 10},
        {"op": "hypercall", "num": 4, "arg": 7},
        {"op": "repeat", "count": 3, "body": [{"op": "exec", "instructions": 5}]},
        {"op": "mmio_write", "offset": 40, "value": 0},
        {"op": "fault", "message": "boom"}]})");
    auto p = parse_program(j);
    CHECK(p.privilege == Privilege::Root);
    REQUIRE(p.phases.size() == 5);
    CHECK(count_instructions(p.phases) == 25);
    CHECK(to_json(parse_program(to_json(p))) == to_json(p));
}

TEST_CASE("privilege defaults to user")
{
    CHECK(parse_program(json::parse(R"({"phases": []})")).privilege == Privilege::User);
}

TEST_CASE("hypercall numbers above 255 are rejected at load")
{
    CHECK_THROWS_AS(parse_program(json::parse(R"({"phases": [{"op": "hypercall", "num": 256}]})")), ConfigError);
}

TEST_CASE("negative instruction counts are rejected")
{
    CHECK_THROWS_AS(parse_program(json::parse(R"({"phases": [{"op": "exec", "instructions": -1}]})")), ConfigError);
}

TEST_CASE("nesting deeper than the limit is rejected")
{
    auto body = json::parse(R"([{"op": "exec", "instructions": 1}])");
    auto wrap = [](json inner) {
        json repeat = json::object();
        repeat["op"] = "repeat";
        repeat["count"] = 1;
        repeat["body"] = std::move(inner);
        return json::array({repeat});
    };
    for (std::size_t i = 0; i < kMaxRepeatDepth; ++i)
    {
        body = wrap(body);
    }
    CHECK_NOTHROW(parse_program(json{{"phases", body}}));
    body = wrap(body);
    CHECK_THROWS_AS(parse_program(json{{"phases", body}}), ConfigError);
}

TEST_CASE("unknown op is rejected")
{
    CHECK_THROWS_AS(parse_program(json::parse(R"({"phases": [{"op": "jump"}]})")), ConfigError);
}

TEST_CASE("image JSON")
{
    auto img = parse_image(json::parse(R"({"boot_instructions": 500, "init_instructions": 300,
                                           "bridge_device_present": true})"));
    CHECK(img.boot_instructions == 500);
    CHECK(img.init_instructions == 300);
    CHECK(img.bridge_device_present);
    CHECK_FALSE(img.run_script);
}

TEST_CASE("zero-count repeat contributes nothing")
{
    std::vector<Phase> phases{Phase::repeat(0, {Phase::exec(100)}), Phase::exec(1)};
    CHECK(count_instructions(phases) == 1);
}
