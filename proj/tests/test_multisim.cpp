#include "support.hpp"

#include "simharness/error.hpp"
#include "simharness/multisim.hpp"
#include "simharness/suites.hpp"

#include <doctest.h>

#include <csignal>
#include <fstream>
#include <mutex>
#include <set>

using namespace simharness;
using namespace simharness::testing;

namespace
{
    SimulatorConfig entry(const std::string& id, const std::string& workload)
    {
        auto chain = bundled_chain();
        SimulatorConfig c;
        c.id = id;
        c.board = board();
        c.workload = obtain_workload(workload, std::nullopt, chain, kFrameworkVersion);
        return c;
    }

    struct Recorder : MultiSimObserver
    {
        std::size_t live = 0;
        std::size_t peak = 0;
        std::set<pid_t> pids;
        void on_launch(const std::string&, pid_t pid) override
        {
            pids.insert(pid);
            peak = std::max(peak, ++live);
        }
        void on_exit(const EntryReport&) override { --live; }
    };
} // namespace

TEST_CASE("process bound")
{
    MultiSimPlan plan;
    plan.set_num_processes(33);
    CHECK(plan.num_processes() == 33);
    CHECK_THROWS_AS(plan.set_num_processes(0), ConfigError);
    CHECK_THROWS_AS(plan.set_num_processes(-1), ConfigError);
}

TEST_CASE("suite expands to one entry per workload with patterned ids")
{
    MultiSimPlan plan;
    auto suite = obtain_suite("demo-micro", std::nullopt, bundled_chain(), kFrameworkVersion);
    add_suite(plan, suite, board("riscv-demo-board"));
    REQUIRE(plan.entries().size() == 33);
    CHECK(plan.entries()[0].id == "process_micro-cca");
    CHECK_THROWS_AS(plan.add_simulator(plan.entries()[0]), ConfigError);
}

TEST_CASE("empty plan")
{
    TempDir dir;
    MultiSimPlan plan(dir / "out");
    auto r = run_all(plan);
    CHECK(r.entries.empty());
    CHECK(r.all_completed());
    CHECK(fs::exists(dir / "out" / "report.json"));
}

TEST_CASE("bounded concurrency")
{
    TempDir dir;
    MultiSimPlan plan(dir.path());
    plan.set_num_processes(2);
    for (int i = 0; i < 5; ++i)
    {
        plan.add_simulator(entry("e" + std::to_string(i), "stream-roi"));
    }
    Recorder rec;
    auto r = run_all(plan, &rec);
    CHECK(rec.peak <= 2);
    CHECK(r.peak_concurrency <= 2);
    CHECK(rec.pids.size() == 5);
    CHECK(r.completed == 5);
}

TEST_CASE("a failing entry does not disturb its siblings")
{
    TempDir solo;
    TempDir dir;
    MultiSimPlan plan(dir.path());
    plan.set_num_processes(4);
    for (int i = 0; i < 4; ++i)
    {
        plan.add_simulator(entry("e" + std::to_string(i), i == 2 ? "fault-demo" : "stream-roi"));
    }
    auto r = run_all(plan);
    CHECK(r.completed == 3);
    CHECK(r.failed == 1);
    CHECK(r.entries[2].status == EntryStatus::Failed);
    CHECK(r.entries[2].terminal_cause == "guest_fault");
    run_workload("stream-roi", solo.path(), "e0");
    for (int i : {0, 1, 3})
    {
        auto id = "e" + std::to_string(i);
        CHECK(slurp(dir / id / "events.jsonl") == slurp(solo / "e0" / "events.jsonl"));
    }
    auto report = report_from_json(json::parse(slurp(dir / "report.json")));
    CHECK(report.failed == 1);
    CHECK(report.entries[2].id == "e2");
}

TEST_CASE("timeouts kill the child")
{
    TempDir dir;
    MultiSimPlan plan(dir.path());
    auto c = entry("slow", "long-exec");
    plan.add_simulator(c);
    plan.add_simulator(entry("fast", "boot-exit"));
    SimulationOptions o;
    o.pace_ips = 1e6;
    plan.set_options(o);
    plan.set_num_processes(2);
    plan.set_timeout(std::chrono::milliseconds(300));
    auto r = run_all(plan);
    CHECK(r.entries[0].status == EntryStatus::TimedOut);
    CHECK(r.entries[0].signal == SIGKILL);
    CHECK(r.entries[1].status == EntryStatus::Completed);
}

TEST_CASE("existing output is refused before anything launches")
{
    TempDir dir;
    MultiSimPlan plan(dir.path());
    plan.add_simulator(entry("a", "boot-exit"));
    plan.add_simulator(entry("b", "boot-exit"));
    fs::create_directories(dir / "b");
    Recorder rec;
    CHECK_THROWS_AS(run_all(plan, &rec), ConfigError);
    CHECK(rec.pids.empty());
    CHECK_FALSE(fs::exists(dir / "a"));
    plan.set_overwrite(true);
    CHECK(run_all(plan).completed == 2);
}

TEST_CASE("unwritable output root")
{
    MultiSimPlan plan("/proc/simharness-nope");
    plan.add_simulator(entry("a", "boot-exit"));
    CHECK_THROWS_AS(run_all(plan), IoError);
}

TEST_CASE("plan file with a suite")
{
    auto file = read_plan_file(data_dir() / "plans" / "demo-micro.json");
    auto plan = make_plan(file, bundled_chain(), kFrameworkVersion);
    CHECK(plan.entries().size() == 33);
    CHECK(plan.num_processes() == 8);
    CHECK(plan.entries()[0].board.name == "riscv-demo-board");
}

TEST_CASE("plan file with explicit entries")
{
    TempDir dir;
    std::ofstream(dir / "plan.json") << R"({"num_processes": 2, "entries": [
        {"id": "one", "workload": "boot-exit"},
        {"id": "two", "workload": "stream-roi", "board": "arm-demo-board", "handlers": {"4": "continue"}}]})";
    auto plan = make_plan(read_plan_file(dir / "plan.json"), bundled_chain(), kFrameworkVersion);
    REQUIRE(plan.entries().size() == 2);
    CHECK(plan.entries()[1].board.name == "arm-demo-board");
    CHECK(plan.entries()[1].handlers["4"] == "continue");
}
