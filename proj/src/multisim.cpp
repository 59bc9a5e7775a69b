#include "simharness/multisim.hpp"

#include "simharness/control.hpp"
#include "simharness/suites.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <thread>

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

namespace simharness
{
    namespace fs = std::filesystem;
    using Clock = std::chrono::steady_clock;

    namespace
    {
        /// Body of a forked child. Never returns.
        [[noreturn]] void child_main(const MultiSimPlan& plan, const SimulatorConfig& config)
        {
            int code = 3;
            try
            {
                auto options = plan.options();
                options.overwrite = true; // the parent already checked for collisions
                auto sim = build_simulation(config, plan.out_root(), options);
                std::unique_ptr<ControlServer> control;
                if (plan.control())
                {
                    control = serve(*sim);
                }
                auto result = sim->run();
                code = result.terminal_cause == TerminalCause::ExitHypercall ? 0 : 1;
            }
            catch (const std::exception& e)
            {
                std::error_code ec;
                fs::create_directories(plan.out_root() / config.id, ec);
                try
                {
                    write_text_file(plan.out_root() / config.id / "error.txt", std::string(e.what()) + "\n");
                }
                catch (...)
                {
                }
                std::fprintf(stderr, "%s: %s\n", config.id.c_str(), e.what());
                code = 2;
            }
            std::fflush(nullptr);
            ::_exit(code);
        }

        std::optional<std::string> read_terminal_cause(const fs::path& run_dir)
        {
            std::error_code ec;
            auto file = run_dir / "result.json";
            if (!fs::exists(file, ec))
            {
                return std::nullopt;
            }
            try
            {
                auto j = load_json_file(file);
                if (auto it = j.find("terminal_cause"); it != j.end() && it->is_string())
                {
                    return it->get<std::string>();
                }
            }
            catch (const Error&)
            {
            }
            return std::nullopt;
        }
    } // namespace

    MultiSimPlan::MultiSimPlan(fs::path out_root) : out_root_(std::move(out_root)) {}

    void MultiSimPlan::set_num_processes(int n)
    {
        if (n <= 0)
        {
            throw ConfigError("number of processes must be positive, got " + std::to_string(n));
        }
        num_processes_ = n;
    }

    void MultiSimPlan::add_simulator(SimulatorConfig config)
    {
        if (!is_valid_sim_id(config.id))
        {
            throw ConfigError("invalid simulator id '" + config.id + "'");
        }
        for (const auto& e : entries_)
        {
            if (e.id == config.id)
            {
                throw ConfigError("duplicate simulator id '" + config.id + "'");
            }
        }
        entries_.push_back(std::move(config));
    }

    std::string_view to_string(EntryStatus s)
    {
        switch (s)
        {
        case EntryStatus::Completed:
            return "completed";
        case EntryStatus::Failed:
            return "failed";
        case EntryStatus::TimedOut:
            return "timed_out";
        }
        return "failed";
    }

    ordered_json to_json(const AggregateReport& r)
    {
        ordered_json j;
        j["num_processes"] = r.num_processes;
        j["peak_concurrency"] = r.peak_concurrency;
        ordered_json entries = ordered_json::array();
        for (const auto& e : r.entries)
        {
            ordered_json x;
            x["id"] = e.id;
            x["status"] = to_string(e.status);
            x["terminal_cause"] = e.terminal_cause ? ordered_json(*e.terminal_cause) : ordered_json(nullptr);
            x["wall_time_s"] = e.wall_time_s;
            x["out_dir"] = e.out_dir.string();
            x["exit_code"] = e.exit_code;
            x["signal"] = e.signal;
            entries.push_back(std::move(x));
        }
        j["entries"] = std::move(entries);
        j["totals"] = {{"completed", r.completed}, {"failed", r.failed}, {"timed_out", r.timed_out}};
        return j;
    }

    AggregateReport report_from_json(const json& j)
    {
        try
        {
            AggregateReport r;
            r.num_processes = j.at("num_processes").get<int>();
            r.peak_concurrency = j.at("peak_concurrency").get<std::size_t>();
            for (const auto& x : j.at("entries"))
            {
                EntryReport e;
                e.id = x.at("id").get<std::string>();
                auto status = x.at("status").get<std::string>();
                e.status = status == "completed"   ? EntryStatus::Completed
                           : status == "timed_out" ? EntryStatus::TimedOut
                                                   : EntryStatus::Failed;
                if (x.contains("terminal_cause") && x["terminal_cause"].is_string())
                {
                    e.terminal_cause = x["terminal_cause"].get<std::string>();
                }
                e.wall_time_s = x.value("wall_time_s", 0.0);
                e.out_dir = x.value("out_dir", std::string());
                e.exit_code = x.value("exit_code", -1);
                e.signal = x.value("signal", 0);
                r.entries.push_back(std::move(e));
            }
            const auto& totals = j.at("totals");
            r.completed = totals.at("completed").get<std::size_t>();
            r.failed = totals.at("failed").get<std::size_t>();
            r.timed_out = totals.at("timed_out").get<std::size_t>();
            return r;
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("malformed report: ") + e.what());
        }
    }

    AggregateReport run_all(const MultiSimPlan& plan, MultiSimObserver* observer)
    {
        const auto& root = plan.out_root();
        std::error_code ec;
        fs::create_directories(root, ec);
        if (ec || !fs::is_directory(root) || ::access(root.c_str(), W_OK) != 0)
        {
            throw IoError("output root '" + root.string() + "' is not writable");
        }
        for (const auto& e : plan.entries())
        {
            auto dir = root / e.id;
            if (fs::exists(dir, ec))
            {
                if (!plan.overwrite())
                {
                    throw ConfigError("output directory '" + dir.string() +
                                      "' already exists; pass --overwrite to replace it");
                }
                fs::remove_all(dir, ec);
            }
        }

        AggregateReport report;
        report.num_processes = plan.num_processes();
        report.entries.resize(plan.entries().size());

        struct Live
        {
            std::size_t index;
            Clock::time_point start;
            bool killed_for_timeout = false;
        };
        std::map<pid_t, Live> live;
        std::size_t next = 0;
        const auto bound = static_cast<std::size_t>(plan.num_processes());

        while (next < plan.entries().size() || !live.empty())
        {
            while (live.size() < bound && next < plan.entries().size())
            {
                const auto& config = plan.entries()[next];
                std::fflush(nullptr);
                std::cout.flush();
                std::cerr.flush();
                pid_t pid = ::fork();
                if (pid < 0)
                {
                    throw IoError("fork failed while launching '" + config.id + "'");
                }
                if (pid == 0)
                {
                    child_main(plan, config);
                }
                live.emplace(pid, Live{next, Clock::now()});
                report.peak_concurrency = std::max(report.peak_concurrency, live.size());
                if (observer != nullptr)
                {
                    observer->on_launch(config.id, pid);
                }
                ++next;
            }

            bool reaped = false;
            for (auto it = live.begin(); it != live.end();)
            {
                int status = 0;
                pid_t r = ::waitpid(it->first, &status, WNOHANG);
                if (r == 0)
                {
                    if (plan.timeout() && !it->second.killed_for_timeout &&
                        Clock::now() - it->second.start > *plan.timeout())
                    {
                        ::kill(it->first, SIGKILL);
                        it->second.killed_for_timeout = true;
                    }
                    ++it;
                    continue;
                }
                const auto& config = plan.entries()[it->second.index];
                EntryReport e;
                e.id = config.id;
                e.out_dir = root / config.id;
                e.wall_time_s = std::chrono::duration<double>(Clock::now() - it->second.start).count();
                if (r > 0 && WIFEXITED(status))
                {
                    e.exit_code = WEXITSTATUS(status);
                }
                else if (r > 0 && WIFSIGNALED(status))
                {
                    e.signal = WTERMSIG(status);
                }
                e.terminal_cause = read_terminal_cause(e.out_dir);
                if (it->second.killed_for_timeout)
                {
                    e.status = EntryStatus::TimedOut;
                }
                else
                {
                    e.status = e.exit_code == 0 ? EntryStatus::Completed : EntryStatus::Failed;
                }
                if (observer != nullptr)
                {
                    observer->on_exit(e);
                }
                report.entries[it->second.index] = std::move(e);
                it = live.erase(it);
                reaped = true;
            }
            if (!reaped && !live.empty())
            {
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
            }
        }

        for (const auto& e : report.entries)
        {
            switch (e.status)
            {
            case EntryStatus::Completed:
                ++report.completed;
                break;
            case EntryStatus::Failed:
                ++report.failed;
                break;
            case EntryStatus::TimedOut:
                ++report.timed_out;
                break;
            }
        }
        write_text_file(root / "report.json", to_json(report).dump(2) + "\n");
        return report;
    }

    std::string expand_id_pattern(std::string_view pattern, std::string_view workload_id)
    {
        std::string out(pattern);
        static constexpr std::string_view kToken = "{workload}";
        for (auto pos = out.find(kToken); pos != std::string::npos; pos = out.find(kToken, pos + workload_id.size()))
        {
            out.replace(pos, kToken.size(), workload_id);
        }
        return out;
    }

    void add_suite(MultiSimPlan& plan, const ResolvedSuite& suite, const BoardConfig& board,
                   std::string_view id_pattern, const json& handlers, std::uint64_t seed)
    {
        for (auto& workload : suite_iter(suite))
        {
            SimulatorConfig c;
            c.id = expand_id_pattern(id_pattern, workload.id());
            c.board = board;
            c.workload = std::move(workload);
            c.handlers = handlers;
            c.seed = seed;
            plan.add_simulator(std::move(c));
        }
    }

    PlanFile read_plan_file(const fs::path& path)
    {
        PlanFile f;
        f.path = fs::absolute(path);
        f.doc = load_json_file(path);
        if (!f.doc.is_object())
        {
            throw ConfigError(path.string() + ": plan must be a JSON object");
        }
        if (auto it = f.doc.find("catalogs"); it != f.doc.end())
        {
            if (!it->is_array())
            {
                throw ConfigError(path.string() + ": 'catalogs' must be an array of paths");
            }
            for (const auto& c : *it)
            {
                fs::path p(c.get<std::string>());
                f.catalogs.push_back(p.is_relative() ? (f.path.parent_path() / p).lexically_normal() : p);
            }
        }
        return f;
    }

    MultiSimPlan make_plan(const PlanFile& file, const CatalogChain& chain, std::string_view framework_version)
    {
        const auto& doc = file.doc;
        MultiSimPlan plan;
        if (auto it = doc.find("out"); it != doc.end() && it->is_string())
        {
            fs::path out(it->get<std::string>());
            plan.set_out_root(out.is_relative() ? file.path.parent_path() / out : out);
        }
        if (auto it = doc.find("num_processes"); it != doc.end())
        {
            if (!it->is_number_integer())
            {
                throw ConfigError("num_processes must be an integer");
            }
            plan.set_num_processes(it->get<int>());
        }
        if (auto it = doc.find("timeout_s"); it != doc.end() && it->is_number())
        {
            plan.set_timeout(std::chrono::milliseconds(static_cast<long long>(it->get<double>() * 1000)));
        }
        json default_board = doc.value("board", json("x86-demo-board"));
        json handlers = doc.value("handlers", json::object());
        std::uint64_t seed = doc.value("seed", std::uint64_t{0});

        bool has_suite = doc.contains("suite");
        bool has_entries = doc.contains("entries");
        if (has_suite == has_entries)
        {
            throw ConfigError("plan must name exactly one of 'suite' or 'entries'");
        }
        if (has_suite)
        {
            auto suite = obtain_suite(doc["suite"].get<std::string>(), std::nullopt, chain, framework_version);
            if (auto g = doc.find("groups"); g != doc.end())
            {
                std::vector<std::string> warnings;
                suite = filter_by_input_group(suite, g->get<std::set<std::string>>(), warnings);
                for (const auto& w : warnings)
                {
                    std::cerr << "warning: " << w << "\n";
                }
            }
            add_suite(plan, suite, board_from_json(default_board), doc.value("id_pattern", "process_{workload}"),
                      handlers, seed);
            return plan;
        }
        if (!doc["entries"].is_array())
        {
            throw ConfigError("'entries' must be an array");
        }
        for (const auto& e : doc["entries"])
        {
            if (!e.is_object() || !e.contains("workload"))
            {
                throw ConfigError("every plan entry needs a 'workload'");
            }
            SimulatorConfig c;
            auto wid = e["workload"].get<std::string>();
            std::optional<std::string> version;
            if (auto v = e.find("version"); v != e.end())
            {
                version = v->get<std::string>();
            }
            c.workload = obtain_workload(wid, version, chain, framework_version);
            c.id = e.value("id", expand_id_pattern(doc.value("id_pattern", "process_{workload}"), wid));
            c.board = board_from_json(e.value("board", default_board));
            c.handlers = e.value("handlers", handlers);
            c.seed = e.value("seed", seed);
            plan.add_simulator(std::move(c));
        }
        return plan;
    }
} // namespace simharness
