#include "support.hpp"

#include "simharness/control.hpp"
#include "simharness/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <thread>

using namespace simharness;
using namespace simharness::testing;
using namespace std::chrono_literals;

namespace
{
    /// A paced 10^7-instruction run served on its default endpoint.
    struct LiveRun
    {
        TempDir dir;
        std::unique_ptr<Simulation> sim;
        std::unique_ptr<ControlServer> server;
        std::thread thread;
        RunResult result;

        explicit LiveRun(double pace_ips = 4e6)
        {
            SimulationOptions o;
            o.poll_interval = 100'000;
            o.pace_ips = pace_ips;
            sim = std::make_unique<Simulation>(
                make_setup("live", base_image(program({Phase::exec(10'000'000)}))), dir.path(), o);
            server = serve(*sim);
            thread = std::thread([this] { result = sim->run(); });
        }

        ~LiveRun()
        {
            if (thread.joinable())
            {
                thread.join();
            }
        }

        void join() { thread.join(); }
        fs::path run_dir() const { return sim->run_dir(); }
    };
} // namespace

TEST_SUITE("framing")
{
    TEST_CASE("length prefix is big-endian")
    {
        auto f = encode_frame("{}");
        REQUIRE(f.size() == 6);
        CHECK(f[0] == 0);
        CHECK(f[1] == 0);
        CHECK(f[2] == 0);
        CHECK(f[3] == 2);
        CHECK(f.substr(4) == "{}");
    }

    TEST_CASE("decoder handles split and coalesced frames")
    {
        FrameDecoder d;
        auto two = encode_frame("abc") + encode_frame("defg");
        d.feed(two.substr(0, 5));
        CHECK_FALSE(d.next());
        d.feed(two.substr(5));
        CHECK(d.next() == "abc");
        CHECK(d.next() == "defg");
        CHECK_FALSE(d.next());
    }

    TEST_CASE("oversized frame is rejected")
    {
        FrameDecoder d;
        d.feed(std::string("\xff\xff\xff\xff", 4));
        CHECK_THROWS_AS(d.next(), Error);
    }
}

TEST_SUITE("messages")
{
    TEST_CASE("parse the three commands")
    {
        auto m = parse_control_message(json{{"type", "get_stats"}, {"request_id", "r1"}});
        CHECK(m.type == ControlMessage::Type::GetStats);
        CHECK(m.request_id == "r1");
        m = parse_control_message(json{{"type", "set_debug_flags"}, {"add", {"Exec"}}, {"remove", json::array()}});
        CHECK(m.add == std::vector<std::string>{"Exec"});
        m = parse_control_message(json{{"type", "hypercall"}, {"num", 3}, {"payload", {{"k", 1}}}});
        CHECK(m.num == 3);
        CHECK(m.payload["k"] == 1);
    }

    TEST_CASE("bad messages")
    {
        CHECK_THROWS_AS(parse_control_message(json{{"type", "reboot"}}), ConfigError);
        CHECK_THROWS_AS(parse_control_message(json{{"type", "hypercall"}}), ConfigError);
        CHECK_THROWS_AS(parse_control_message(json{{"type", "hypercall"}, {"num", 256}}), ConfigError);
        CHECK_THROWS_AS(parse_control_message(json::array()), ConfigError);
    }

    TEST_CASE("handle_command on an idle simulation")
    {
        Simulation sim(make_setup("h", base_image()), {});
        auto r = handle_command(sim, parse_control_message(json{{"type", "get_stats"}, {"request_id", "x"}}));
        REQUIRE(r.response);
        CHECK(r.response->ok);
        CHECK(r.response->body["stats"]["total_instructions"] == 0);
        CHECK(r.response->body["phase"] == "boot");
        auto bad = handle_command(sim, parse_control_message(json{{"type", "set_debug_flags"}, {"add", {"Nope"}}}));
        REQUIRE(bad.response);
        CHECK_FALSE(bad.response->ok);
    }

    TEST_CASE("get_stats after 1000 executed instructions")
    {
        GuestImage img;
        img.run_script = program({Phase::exec(1000), Phase::hypercall(9)});
        img.bridge_device_present = true;
        Simulation sim(make_setup("h", img), {});
        for (int i = 0; i < 3; ++i)
        {
            sim.step_until_exit_event();
        }
        auto r = handle_command(sim, parse_control_message(json{{"type", "get_stats"}}));
        CHECK(r.response->body["stats"]["total_instructions"] == 1000);
    }
}

TEST_SUITE("live endpoint")
{
    TEST_CASE("lifecycle, stats, flags and remote exit")
    {
        LiveRun run;
        auto endpoint_file = run.run_dir() / "control.endpoint";
        REQUIRE(fs::exists(endpoint_file));
        auto endpoint = resolve_endpoint(run.run_dir());
        CHECK(endpoint == run.server->endpoint());

        ControlClient client(endpoint);
        auto stats = client.request({{"type", "get_stats"}, {"request_id", "s1"}});
        REQUIRE(stats.ok);
        CHECK(stats.request_id == "s1");
        const auto& body = stats.body;
        CHECK(body["stats"]["total_instructions"] == body["retired_instructions"]);
        CHECK(body["stats"]["tick"].get<std::uint64_t>() >= body["retired_instructions"].get<std::uint64_t>());

        auto flags = client.request({{"type", "set_debug_flags"}, {"add", {"ExitEvents"}}, {"request_id", "f1"}});
        REQUIRE(flags.ok);
        CHECK(flags.body["flags"] == json::array({"ExitEvents"}));

        client.send_raw("not json");
        auto err = client.receive();
        CHECK_FALSE(err.ok);
        CHECK(err.message.find("malformed") != std::string::npos);

        auto probe = client.request({{"type", "hypercall"}, {"num", 99}, {"request_id", "p"}});
        REQUIRE(probe.ok);
        auto exit = client.request({{"type", "hypercall"}, {"num", 3}, {"request_id", "x"}});
        REQUIRE(exit.ok);
        CHECK(exit.body["directive"] == "exit");
        run.join();

        CHECK(run.result.terminal_cause == TerminalCause::ExitHypercall);
        CHECK(run.result.final_stats.total_instructions < 10'000'800);
        // flags may land before the boot markers are dispatched, so only the injected events are certain
        const auto& lines = run.sim->trace_lines();
        auto traced = [&](const std::string& what) {
            return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) {
                return l.find("ExitEvents: dispatch hypercall " + what + " from external") != std::string::npos;
            });
        };
        CHECK(traced("99"));
        CHECK(traced("3"));

        CHECK_FALSE(fs::exists(endpoint_file));
        CHECK_FALSE(fs::exists(endpoint));
        CHECK_THROWS_AS(resolve_endpoint(run.run_dir()), ConnectError);
        CHECK_THROWS_AS(ControlClient{endpoint}, ConnectError);
    }

    TEST_CASE("response arrives within one poll interval")
    {
        LiveRun run(2e6); // one poll interval of 10^5 instructions is 50 ms of wall time
        ControlClient client(resolve_endpoint(run.run_dir()));
        auto begin = std::chrono::steady_clock::now();
        auto stats = client.request({{"type", "get_stats"}});
        auto elapsed = std::chrono::steady_clock::now() - begin;
        REQUIRE(stats.ok);
        CHECK(elapsed < 50ms + 100ms);
        client.request({{"type", "hypercall"}, {"num", 3}});
    }

    TEST_CASE("a second server on a live endpoint is refused")
    {
        LiveRun run;
        Simulation other(make_setup("other", base_image()), {});
        CHECK_THROWS_AS(ControlServer(other, run.server->endpoint()), ConfigError);
        ControlClient(run.server->endpoint()).request({{"type", "hypercall"}, {"num", 3}});
    }

    TEST_CASE("requests on one connection are answered in order")
    {
        LiveRun run;
        ControlClient client(resolve_endpoint(run.run_dir()));
        client.send({{"type", "hypercall"}, {"num", 99}, {"request_id", "a"}});
        client.send({{"type", "get_stats"}, {"request_id", "b"}});
        CHECK(client.receive().request_id == "a");
        CHECK(client.receive().request_id == "b");
        client.request({{"type", "hypercall"}, {"num", 3}});
    }
}
