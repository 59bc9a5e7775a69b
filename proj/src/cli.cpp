#include "simharness/cli.hpp"

#include "simharness/control.hpp"
#include "simharness/multisim.hpp"
#include "simharness/resources.hpp"
#include "simharness/simcore.hpp"
#include "simharness/suites.hpp"
#include "simharness/validate.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace simharness
{
    namespace fs = std::filesystem;

    namespace
    {
        struct Globals
        {
            std::vector<std::string> catalogs;
            bool no_default_catalog = false;
            bool json_output = false;
            std::string framework_version{kFrameworkVersion};
        };

        fs::path data_dir()
        {
            if (const char* env = std::getenv("SIMHARNESS_DATA_DIR"); env != nullptr && *env != '\0')
            {
                return env;
            }
            return SIMHARNESS_DATA_DIR;
        }

        std::vector<fs::path> catalog_paths(const Globals& g)
        {
            std::vector<fs::path> paths;
            if (!g.no_default_catalog)
            {
                paths.push_back(data_dir() / "catalog" / "resources.json");
            }
            for (const auto& c : g.catalogs)
            {
                paths.emplace_back(c);
            }
            return paths;
        }

        CatalogChain load_chain(const Globals& g, const std::vector<fs::path>& extra = {})
        {
            auto paths = catalog_paths(g);
            paths.insert(paths.end(), extra.begin(), extra.end());
            auto chain = CatalogChain::load(paths);
            for (const auto& w : chain.warnings())
            {
                std::cerr << "warning: " << w << "\n";
            }
            return chain;
        }

        void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

        std::string stats_line(const StatsSnapshot& s)
        {
            std::string out = "tick " + std::to_string(s.tick) + ", instructions " +
                              std::to_string(s.total_instructions) + ", roi instructions " +
                              std::to_string(s.roi_instructions);
            return out;
        }

        // ---- resources ----------------------------------------------------------

        int cmd_resources_list(const Globals& g)
        {
            auto chain = load_chain(g);
            if (g.json_output)
            {
                ordered_json arr = ordered_json::array();
                for (const auto& e : chain.entries())
                {
                    ordered_json x = serialize_descriptor(e.descriptor);
                    x["provenance"] = e.provenance;
                    arr.push_back(std::move(x));
                }
                print_json(arr);
                return exit_status::ok;
            }
            for (const auto& e : chain.entries())
            {
                const auto& d = e.descriptor;
                std::cout << d.id << " " << d.resource_version << "  [" << to_string(d.category) << ", "
                          << to_string(d.architecture) << "]  " << e.provenance << "\n";
            }
            return exit_status::ok;
        }

        int cmd_resources_validate(const Globals& g, const std::string& path)
        {
            auto descriptors = load_catalog_file(path);
            ordered_json report = ordered_json::array();
            bool ok = true;
            for (std::size_t i = 0; i < descriptors.size(); ++i)
            {
                auto violations = validate_descriptor(descriptors[i], g.framework_version);
                ok = ok && violations.empty();
                ordered_json x;
                x["index"] = i;
                x["id"] = descriptors[i].id;
                x["resource_version"] = descriptors[i].resource_version;
                x["violations"] = violations;
                report.push_back(std::move(x));
            }
            std::string reference_problem;
            try
            {
                auto paths = catalog_paths(g);
                paths.emplace_back(path);
                CatalogChain::load(paths);
            }
            catch (const DependencyError& e)
            {
                reference_problem = e.what();
                ok = false;
            }
            if (g.json_output)
            {
                ordered_json j;
                j["catalog"] = path;
                j["framework_version"] = g.framework_version;
                j["valid"] = ok;
                j["entries"] = std::move(report);
                if (!reference_problem.empty())
                {
                    j["references"] = reference_problem;
                }
                print_json(j);
            }
            else
            {
                for (const auto& x : report)
                {
                    const auto& v = x["violations"];
                    std::cout << (v.empty() ? "✓ " : "✗ ") << x["id"].get<std::string>() << " "
                              << x["resource_version"].get<std::string>();
                    for (const auto& s : v)
                    {
                        std::cout << "\n    " << s.get<std::string>();
                    }
                    std::cout << "\n";
                }
                if (!reference_problem.empty())
                {
                    std::cout << "✗ references: " << reference_problem << "\n";
                }
                std::cout << (ok ? "catalog valid" : "catalog invalid") << " for framework " << g.framework_version
                          << "\n";
            }
            return ok ? exit_status::ok : exit_status::outcome_failed;
        }

        // ---- suite --------------------------------------------------------------

        ordered_json suite_json(const ResolvedSuite& s)
        {
            ordered_json j;
            j["id"] = s.id();
            j["resource_version"] = s.version();
            j["fingerprint"] = suite_fingerprint(s);
            ordered_json members = ordered_json::array();
            for (const auto& m : s.members())
            {
                ordered_json x;
                x["id"] = m.workload.id();
                x["resource_version"] = m.workload.version();
                x["input_groups"] = m.input_groups;
                members.push_back(std::move(x));
            }
            j["workloads"] = std::move(members);
            return j;
        }

        int print_suite(const Globals& g, const ResolvedSuite& s)
        {
            if (g.json_output)
            {
                print_json(suite_json(s));
                return exit_status::ok;
            }
            std::cout << s.id() << " " << s.version() << " (" << s.size() << " workloads)\n"
                      << "fingerprint " << suite_fingerprint(s) << "\n";
            for (const auto& m : s.members())
            {
                std::cout << "  " << m.workload.id() << " " << m.workload.version();
                std::string sep = "  [";
                for (const auto& t : m.input_groups)
                {
                    std::cout << sep << t;
                    sep = ", ";
                }
                std::cout << (m.input_groups.empty() ? "" : "]") << "\n";
            }
            return exit_status::ok;
        }

        // ---- run ----------------------------------------------------------------

        struct RunArgs
        {
            std::string config_file;
            std::string workload;
            std::string suite;
            std::string version;
            std::string board;
            std::string out;
            std::string id;
            std::uint64_t seed = 0;
            bool seed_given = false;
            bool control = false;
            std::string endpoint;
            bool overwrite = false;
            std::vector<std::string> handlers;
            double pace_ips = 0.0;
            std::uint64_t poll_interval = 0;
            std::vector<std::string> debug_flags;
        };

        json parse_handler_flags(const std::vector<std::string>& flags, json base)
        {
            for (const auto& f : flags)
            {
                auto eq = f.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 == f.size())
                {
                    throw ConfigError("--handler expects NUM=NAME, got '" + f + "'");
                }
                base[f.substr(0, eq)] = f.substr(eq + 1);
            }
            return base;
        }

        int cmd_run(const Globals& g, RunArgs a)
        {
            json file = json::object();
            if (!a.config_file.empty())
            {
                file = load_json_file(a.config_file);
                if (!file.is_object())
                {
                    throw ConfigError(a.config_file + ": run configuration must be a JSON object");
                }
            }
            auto pick = [&](std::string& flag, const char* key) {
                if (flag.empty() && file.contains(key))
                {
                    flag = file[key].get<std::string>();
                }
            };
            pick(a.workload, "workload");
            pick(a.suite, "suite");
            pick(a.version, "version");
            pick(a.out, "out");
            pick(a.id, "id");
            if (!a.seed_given && file.contains("seed"))
            {
                a.seed = file["seed"].get<std::uint64_t>();
            }
            a.control = a.control || file.value("control", false);

            if (a.workload.empty() == a.suite.empty())
            {
                throw ConfigError("exactly one of --workload or --suite is required");
            }
            auto chain = load_chain(g);
            std::optional<std::string_view> constraint;
            if (!a.version.empty())
            {
                constraint = a.version;
            }
            if (!a.suite.empty())
            {
                // resolve first so unknown ids still report as resolution failures
                obtain_suite(a.suite, constraint, chain, g.framework_version);
                throw ConfigError("suite given; use multisim");
            }

            SimulatorConfig config;
            config.workload = obtain_workload(a.workload, constraint, chain, g.framework_version);
            if (!a.board.empty())
            {
                if (a.board.size() > 5 && a.board.ends_with(".json"))
                {
                    config.board = board_from_json(load_json_file(a.board));
                }
                else
                {
                    config.board = board_from_json(json(a.board));
                }
            }
            else
            {
                config.board = board_from_json(file.value("board", json("x86-demo-board")));
            }
            config.handlers = parse_handler_flags(a.handlers, file.value("handlers", json::object()));
            config.seed = a.seed;
            config.id = a.id.empty() ? config.workload.id() : a.id;

            SimulationOptions options;
            options.overwrite = a.overwrite;
            options.pace_ips = a.pace_ips;
            if (a.poll_interval > 0)
            {
                options.poll_interval = a.poll_interval;
            }
            options.debug_flags.insert(a.debug_flags.begin(), a.debug_flags.end());
            fs::path out = a.out.empty() ? fs::path("runs") : fs::path(a.out);

            auto sim = build_simulation(config, out, options);
            std::unique_ptr<ControlServer> server;
            if (a.control || !a.endpoint.empty())
            {
                std::optional<fs::path> endpoint;
                if (!a.endpoint.empty())
                {
                    endpoint = a.endpoint;
                }
                server = serve(*sim, endpoint);
                std::cerr << "control endpoint: " << server->endpoint().string() << "\n";
            }
            auto result = sim->run();
            if (server)
            {
                server->shutdown();
            }
            for (const auto& w : sim->warnings())
            {
                std::cerr << "warning: " << w << "\n";
            }
            if (g.json_output)
            {
                print_json(load_json_file(sim->run_dir() / "result.json"));
            }
            else
            {
                std::cout << "simulation " << sim->id() << ": " << to_string(result.terminal_cause);
                if (!result.detail.empty() && result.detail != to_string(result.terminal_cause))
                {
                    std::cout << " (" << result.detail << ")";
                }
                std::cout << "\n  " << stats_line(result.final_stats) << "\n  events";
                for (const auto& e : result.event_log)
                {
                    std::cout << " " << e.num << "@" << e.tick;
                }
                std::cout << "\n  output " << sim->run_dir().string() << "\n";
            }
            return result.terminal_cause == TerminalCause::ExitHypercall ? exit_status::ok
                                                                         : exit_status::outcome_failed;
        }

        // ---- multisim -----------------------------------------------------------

        struct MultiArgs
        {
            std::string plan_file;
            std::string suite;
            std::string board;
            std::vector<std::string> groups;
            std::string id_pattern = "process_{workload}";
            std::optional<int> processes;
            std::string out;
            bool overwrite = false;
            double timeout_s = 0.0;
            bool control = false;
        };

        void print_report(const Globals& g, const AggregateReport& r)
        {
            if (g.json_output)
            {
                print_json(to_json(r));
                return;
            }
            std::cout << r.entries.size() << " simulations, " << r.num_processes << " processes, peak "
                      << r.peak_concurrency << " concurrent\n";
            for (const auto& e : r.entries)
            {
                std::cout << "  " << (e.status == EntryStatus::Completed ? "✓ " : "✗ ") << e.id << "  "
                          << to_string(e.status);
                if (e.terminal_cause)
                {
                    std::cout << " (" << *e.terminal_cause << ")";
                }
                else if (e.signal != 0)
                {
                    std::cout << " (signal " << e.signal << ")";
                }
                std::cout << "\n";
            }
            std::cout << "completed " << r.completed << ", failed " << r.failed << ", timed out " << r.timed_out
                      << "\n";
        }

        int cmd_multisim_run(const Globals& g, const MultiArgs& a)
        {
            if (a.plan_file.empty() == a.suite.empty())
            {
                throw ConfigError("give either a plan file or --suite");
            }
            if (a.processes && *a.processes <= 0)
            {
                throw ConfigError("--processes must be positive, got " + std::to_string(*a.processes));
            }
            MultiSimPlan plan;
            if (!a.plan_file.empty())
            {
                auto file = read_plan_file(a.plan_file);
                auto chain = load_chain(g, file.catalogs);
                plan = make_plan(file, chain, g.framework_version);
            }
            else
            {
                auto chain = load_chain(g);
                auto suite = obtain_suite(a.suite, std::nullopt, chain, g.framework_version);
                if (!a.groups.empty())
                {
                    std::vector<std::string> warnings;
                    suite = filter_by_input_group(suite, {a.groups.begin(), a.groups.end()}, warnings);
                    for (const auto& w : warnings)
                    {
                        std::cerr << "warning: " << w << "\n";
                    }
                }
                auto board = board_from_json(json(a.board.empty() ? "x86-demo-board" : a.board));
                add_suite(plan, suite, board, a.id_pattern);
            }
            if (a.processes)
            {
                plan.set_num_processes(*a.processes);
            }
            if (!a.out.empty())
            {
                plan.set_out_root(a.out);
            }
            plan.set_overwrite(plan.overwrite() || a.overwrite);
            if (a.timeout_s > 0)
            {
                plan.set_timeout(std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000)));
            }
            plan.set_control(a.control);
            auto report = run_all(plan);
            print_report(g, report);
            return report.all_completed() ? exit_status::ok : exit_status::outcome_failed;
        }

        int cmd_multisim_report(const Globals& g, const std::string& dir)
        {
            auto path = fs::path(dir) / "report.json";
            if (!fs::is_regular_file(path))
            {
                throw IoError("no report at '" + path.string() + "'");
            }
            auto report = report_from_json(load_json_file(path));
            print_report(g, report);
            return report.all_completed() ? exit_status::ok : exit_status::outcome_failed;
        }

        // ---- ctl ----------------------------------------------------------------

        struct CtlArgs
        {
            std::string run_dir;
            std::string endpoint;
            std::vector<std::string> add;
            std::vector<std::string> remove;
            int num = -1;
            std::string payload;
            double timeout_s = 30.0;
        };

        int send_control(const Globals& g, const CtlArgs& a, json message)
        {
            if (a.run_dir.empty() == a.endpoint.empty())
            {
                throw ConfigError("give exactly one of --run DIR or --endpoint PATH");
            }
            auto endpoint = resolve_endpoint(a.run_dir.empty() ? fs::path(a.endpoint) : fs::path(a.run_dir));
            ControlClient client(endpoint);
            message["request_id"] = next_request_id();
            auto timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000));
            auto response = client.request(message, timeout);
            if (g.json_output || response.ok)
            {
                print_json(to_json(response));
            }
            if (!response.ok)
            {
                std::cerr << "error: " << response.message << "\n";
                return exit_status::command_rejected;
            }
            return exit_status::ok;
        }

        // ---- validate -----------------------------------------------------------

        int cmd_validate(const Globals& g, const std::string& dir, const std::string& expect)
        {
            auto exp = load_expectation(expect);
            fs::path root(dir);
            if (!fs::exists(root / "result.json") && fs::exists(root / "report.json"))
            {
                auto reports = validate_multisim(root, exp);
                bool ok = true;
                ordered_json all = ordered_json::object();
                for (const auto& [id, r] : reports)
                {
                    ok = ok && r.pass();
                    all[id] = r.to_json();
                }
                if (g.json_output)
                {
                    print_json(all);
                }
                else
                {
                    for (const auto& [id, r] : reports)
                    {
                        std::cout << (r.pass() ? "✓ " : "✗ ") << id << "\n";
                        if (!r.pass())
                        {
                            std::string text = r.render();
                            std::cout << "    " << text.substr(0, text.size() - 1) << "\n";
                        }
                    }
                    std::cout << (ok ? "PASS" : "FAIL") << "\n";
                }
                return ok ? exit_status::ok : exit_status::outcome_failed;
            }
            auto report = validate_run(root, exp);
            if (g.json_output)
            {
                print_json(report.to_json());
            }
            else
            {
                std::cout << report.render() << (report.pass() ? "PASS" : "FAIL") << "\n";
            }
            return report.pass() ? exit_status::ok : exit_status::outcome_failed;
        }

        int report_error(const char* kind, const std::exception& e, int status)
        {
            std::cerr << "error: " << kind << e.what() << "\n";
            return status;
        }
    } // namespace

    int run_cli(int argc, char** argv)
    {
        CLI::App app{"Orchestrates deterministic guest simulations: catalogs, runs, batches, live control and "
                     "validation.",
                     "simharness"};
        app.fallthrough();
        app.require_subcommand(1);
        Globals g;
        app.add_option("--catalog", g.catalogs, "Additional catalog file; later ones shadow earlier ones")
            ->type_name("PATH");
        app.add_flag("--no-default-catalog", g.no_default_catalog, "Do not load the bundled catalog");
        app.add_flag("--json", g.json_output, "Machine-readable JSON on stdout");
        app.add_option("--framework-version", g.framework_version, "Framework version used for compatibility")
            ->capture_default_str();

        std::function<int()> action;

        auto* resources = app.add_subcommand("resources", "List or validate catalog entries");
        resources->require_subcommand(1);
        resources->add_subcommand("list", "List every entry of the catalog chain")->callback([&] {
            action = [&] { return cmd_resources_list(g); };
        });
        std::string validate_path;
        auto* res_validate = resources->add_subcommand("validate", "Check a catalog file");
        res_validate->add_option("path", validate_path, "Catalog file")->required();
        res_validate->callback([&] { action = [&] { return cmd_resources_validate(g, validate_path); }; });

        auto* suite = app.add_subcommand("suite", "Inspect suites");
        suite->require_subcommand(1);
        std::string suite_id;
        std::string suite_version;
        std::vector<std::string> suite_groups;
        auto* suite_show = suite->add_subcommand("show", "Show a suite and its members");
        suite_show->add_option("id", suite_id)->required();
        suite_show->add_option("--version", suite_version, "Version constraint");
        suite_show->callback([&] {
            action = [&] {
                auto chain = load_chain(g);
                std::optional<std::string_view> c;
                if (!suite_version.empty())
                {
                    c = suite_version;
                }
                return print_suite(g, obtain_suite(suite_id, c, chain, g.framework_version));
            };
        });
        auto* suite_filter = suite->add_subcommand("filter", "Subset of a suite by input group");
        suite_filter->add_option("id", suite_id)->required();
        suite_filter->add_option("--group", suite_groups, "Input group tag (repeatable)")->required();
        suite_filter->callback([&] {
            action = [&] {
                auto chain = load_chain(g);
                auto s = obtain_suite(suite_id, std::nullopt, chain, g.framework_version);
                std::vector<std::string> warnings;
                auto filtered = filter_by_input_group(s, {suite_groups.begin(), suite_groups.end()}, warnings);
                for (const auto& w : warnings)
                {
                    std::cerr << "warning: " << w << "\n";
                }
                return print_suite(g, filtered);
            };
        });

        RunArgs ra;
        auto* run = app.add_subcommand("run", "Run one simulation");
        run->add_option("--config", ra.config_file, "Run configuration file (flags override it)");
        run->add_option("--workload", ra.workload, "Workload id");
        run->add_option("--suite", ra.suite, "Suite id (rejected: suites run through multisim)");
        run->add_option("--version", ra.version, "Version constraint for the workload");
        run->add_option("--board", ra.board, "Board preset name or board JSON file");
        run->add_option("--out", ra.out, "Output root; the run writes to OUT/<id>/");
        run->add_option("--id", ra.id, "Simulation id (defaults to the workload id)");
        auto* seed_opt = run->add_option("--seed", ra.seed, "Seed recorded with the run");
        run->add_flag("--control", ra.control, "Serve the control endpoint while running");
        run->add_option("--endpoint", ra.endpoint, "Control socket path (implies --control)");
        run->add_flag("--overwrite", ra.overwrite, "Replace an existing run directory");
        run->add_option("--handler", ra.handlers, "Handler override NUM=NAME (repeatable)");
        run->add_option("--pace-ips", ra.pace_ips, "Throttle to this many instructions per wall-clock second");
        run->add_option("--poll-interval", ra.poll_interval, "Instructions between control polls");
        run->add_option("--debug-flags", ra.debug_flags, "Debug flags enabled from the start")->delimiter(',');
        run->callback([&] {
            ra.seed_given = seed_opt->count() > 0;
            action = [&] { return cmd_run(g, ra); };
        });

        MultiArgs ma;
        auto* multisim = app.add_subcommand("multisim", "Run many simulations in parallel processes");
        multisim->require_subcommand(1);
        auto* ms_run = multisim->add_subcommand("run", "Run a plan file or a whole suite");
        ms_run->add_option("plan", ma.plan_file, "Plan file");
        ms_run->add_option("--suite", ma.suite, "Suite id to run instead of a plan");
        ms_run->add_option("--board", ma.board, "Board preset for --suite");
        ms_run->add_option("--group", ma.groups, "Restrict --suite to input groups (repeatable)");
        ms_run->add_option("--id-pattern", ma.id_pattern, "Simulation id pattern for --suite")->capture_default_str();
        ms_run->add_option("--processes", ma.processes, "Maximum concurrent processes");
        ms_run->add_option("--out", ma.out, "Output root");
        ms_run->add_flag("--overwrite", ma.overwrite, "Replace existing run directories");
        ms_run->add_option("--timeout", ma.timeout_s, "Per-simulation wall-clock limit in seconds");
        ms_run->add_flag("--control", ma.control, "Serve a control endpoint in every child");
        ms_run->callback([&] { action = [&] { return cmd_multisim_run(g, ma); }; });
        std::string report_dir;
        auto* ms_report = multisim->add_subcommand("report", "Print a multisim report");
        ms_report->add_option("dir", report_dir, "Output root of a multisim run")->required();
        ms_report->callback([&] { action = [&] { return cmd_multisim_report(g, report_dir); }; });

        CtlArgs ca;
        auto* ctl = app.add_subcommand("ctl", "Talk to a running simulation");
        ctl->add_option("--run", ca.run_dir, "Run directory of the live simulation");
        ctl->add_option("--endpoint", ca.endpoint, "Control socket path");
        ctl->add_option("--timeout", ca.timeout_s, "Seconds to wait for the response")->capture_default_str();
        ctl->require_subcommand(1);
        ctl->add_subcommand("get-stats", "Fetch a statistics snapshot")->callback([&] {
            action = [&] { return send_control(g, ca, {{"type", "get_stats"}}); };
        });
        auto* set_flags = ctl->add_subcommand("set-flags", "Enable or disable debug flags");
        set_flags->add_option("--add", ca.add, "Flag to enable (repeatable)");
        set_flags->add_option("--remove", ca.remove, "Flag to disable (repeatable)");
        set_flags->callback([&] {
            action = [&] {
                return send_control(g, ca, {{"type", "set_debug_flags"}, {"add", ca.add}, {"remove", ca.remove}});
            };
        });
        auto* hypercall = ctl->add_subcommand("hypercall", "Inject a hypercall");
        hypercall->add_option("num", ca.num, "Hypercall number")->required()->check(CLI::Range(0, 255));
        hypercall->add_option("--payload", ca.payload, "Flat JSON object delivered with the hypercall");
        hypercall->callback([&] {
            action = [&] {
                json msg = {{"type", "hypercall"}, {"num", ca.num}};
                if (!ca.payload.empty())
                {
                    msg["payload"] = parse_json(ca.payload);
                }
                return send_control(g, ca, std::move(msg));
            };
        });

        std::string validate_dir;
        std::string expect = "default";
        auto* validate = app.add_subcommand("validate", "Check a finished run (or multisim output root)");
        validate->add_option("dir", validate_dir, "Run directory")->required();
        validate->add_option("--expect", expect, "default, default-roi or an expectation JSON file")
            ->capture_default_str();
        validate->callback([&] { action = [&] { return cmd_validate(g, validate_dir, expect); }; });

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp& e)
        {
            return app.exit(e);
        }
        catch (const CLI::CallForAllHelp& e)
        {
            return app.exit(e);
        }
        catch (const CLI::CallForVersion& e)
        {
            return app.exit(e);
        }
        catch (const CLI::ParseError& e)
        {
            app.exit(e);
            return exit_status::usage;
        }

        try
        {
            return action ? action() : exit_status::usage;
        }
        catch (const ConnectError& e)
        {
            return report_error("", e, exit_status::unreachable);
        }
        catch (const NotFoundError& e)
        {
            return report_error("", e, exit_status::resolution);
        }
        catch (const VersionConflictError& e)
        {
            return report_error("", e, exit_status::resolution);
        }
        catch (const DependencyError& e)
        {
            return report_error("", e, exit_status::resolution);
        }
        catch (const SchemaError& e)
        {
            return report_error("", e, exit_status::resolution);
        }
        catch (const ParseError& e)
        {
            return report_error("", e, exit_status::usage);
        }
        catch (const ConfigError& e)
        {
            return report_error("", e, exit_status::usage);
        }
        catch (const StateError& e)
        {
            return report_error("", e, exit_status::usage);
        }
        catch (const IoError& e)
        {
            return report_error("", e, exit_status::io);
        }
        catch (const json::exception& e)
        {
            return report_error("malformed JSON value: ", e, exit_status::usage);
        }
        catch (const std::exception& e)
        {
            return report_error("internal: ", e, exit_status::internal);
        }
    }
} // namespace simharness
