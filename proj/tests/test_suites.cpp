#include "support.hpp"

#include "simharness/suites.hpp"

#include <doctest.h>

#include <fstream>

using namespace simharness;
using namespace simharness::testing;

namespace
{
    ResolvedSuite demo() { return obtain_suite("demo-micro", std::nullopt, bundled_chain(), kFrameworkVersion); }

    ResolvedSuite suite_of(std::vector<std::pair<std::string, std::string>> members)
    {
        std::vector<SuiteMember> ms;
        for (const auto& [id, version] : members)
        {
            ResolvedWorkload w;
            w.resource.descriptor.id = id;
            w.resource.descriptor.resource_version = version;
            ms.push_back({w, {"g"}});
        }
        ResolvedResource r;
        r.descriptor.id = "s";
        r.descriptor.resource_version = "1.0.0";
        return ResolvedSuite(r, "s", ms);
    }
} // namespace

TEST_CASE("iteration keeps declaration order")
{
    auto s = suite_of({{"c", "1.0.0"}, {"a", "1.0.0"}, {"b", "1.0.0"}});
    auto ws = suite_iter(s);
    REQUIRE(ws.size() == 3);
    CHECK(ws[0].id() == "c");
    CHECK(ws[1].id() == "a");
    CHECK(ws[2].id() == "b");
    CHECK(suite_iter(suite_of({})).empty());
}

TEST_CASE("bundled demo suite has 33 workloads")
{
    CHECK(suite_iter(demo()).size() == 33);
}

TEST_CASE("filtering by input group")
{
    auto s = demo();
    std::vector<std::string> warnings;
    auto small = filter_by_input_group(s, {"small"}, warnings);
    CHECK(small.size() == 20);
    CHECK(small.id() == "demo-micro#small");
    CHECK(filter_by_input_group(s, {"large"}, warnings).size() == 13);
    CHECK(warnings.empty());
    CHECK(s.size() == 33);

    auto all = filter_by_input_group(s, {"small", "large"}, warnings);
    CHECK(all.id() == "demo-micro#large,small");
    REQUIRE(all.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        CHECK(all.members()[i].workload.id() == s.members()[i].workload.id());
    }

    auto none = filter_by_input_group(s, {"nonexistent"}, warnings);
    CHECK(none.size() == 0);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("nonexistent") != std::string::npos);
}

TEST_CASE("fingerprints")
{
    CHECK(suite_fingerprint(demo()) == suite_fingerprint(demo()));
    CHECK(suite_fingerprint(suite_of({{"a", "1.0.0"}})) != suite_fingerprint(suite_of({{"a", "1.0.1"}})));
    std::vector<std::string> warnings;
    auto s = demo();
    CHECK(suite_fingerprint(s) != suite_fingerprint(filter_by_input_group(s, {"small", "large"}, warnings)));
}

TEST_CASE("suite listing a workload twice is rejected")
{
    TempDir dir;
    auto catalog = json::parse(slurp(data_dir() / "catalog" / "resources.json"));
    for (auto& e : catalog)
    {
        if (e["id"] == "demo-micro")
        {
            e["workloads"].push_back(e["workloads"][0]);
        }
        else if (e.contains("url") && !e["url"].get<std::string>().empty())
        {
            e["url"] = (data_dir() / "catalog" / e["url"].get<std::string>()).lexically_normal().string();
        }
    }
    std::ofstream(dir / "c.json") << catalog.dump();
    CHECK_THROWS_AS(obtain_suite("demo-micro", std::nullopt, CatalogChain::load({dir / "c.json"}), kFrameworkVersion),
                    Error);
}
