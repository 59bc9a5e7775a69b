#pragma once

#include "simharness/board.hpp"
#include "simharness/exits.hpp"
#include "simharness/guest.hpp"
#include "simharness/resources.hpp"
#include "simharness/stats.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace simharness
{
    enum class TerminalCause
    {
        ExitHypercall,
        MaxTick,
        WorkloadExhausted,
        GuestFault,
        HostHandlerError,
    };

    std::string_view to_string(TerminalCause c);
    std::optional<TerminalCause> terminal_cause_from_string(std::string_view s);

    struct Terminal
    {
        TerminalCause cause = TerminalCause::WorkloadExhausted;
        std::string detail;
    };

    using StepOutcome = std::variant<HypercallEvent, Terminal>;

    struct RunResult
    {
        TerminalCause terminal_cause = TerminalCause::WorkloadExhausted;
        std::string detail;
        StatsSnapshot final_stats;
        std::vector<HypercallEvent> event_log;
        std::vector<StatsSnapshot> stats_dumps;
        std::string output_digest;
    };

    /// Delivered once an injected hypercall has been dispatched.
    struct InjectionAck
    {
        std::uint64_t dispatch_tick = 0;
        Directive directive;
    };

    /// One simulation's identity and inputs, as listed in a multi-simulation plan.
    struct SimulatorConfig
    {
        std::string id;
        BoardConfig board;
        ResolvedWorkload workload;
        json handlers = json::object();
        std::uint64_t seed = 0;
    };

    struct SimulationOptions
    {
        bool overwrite = false;
        /// Upper bound on instructions executed between control polls.
        std::uint64_t poll_interval = 1'000'000;
        /// Wall-clock pacing in instructions per second; 0 runs unpaced.
        double pace_ips = 0.0;
        std::set<std::string> debug_flags;
    };

    /// Fully materialized inputs of a simulation, independent of catalogs.
    struct SimulationSetup
    {
        std::string id;
        BoardConfig board;
        GuestImage image;
        std::uint64_t seed = 0;
        std::string workload_id;
        std::string workload_version;
        json parameters = json::object();
        std::optional<std::string> expected_output_digest;
    };

    class Simulation;

    /// Polled by the simulation thread at event boundaries and between exec chunks.
    class ControlHook
    {
    public:
        virtual ~ControlHook() = default;
        virtual void poll(Simulation& sim) = 0;
        virtual void on_terminate(Simulation& sim) = 0;
    };

    const std::vector<std::string>& known_debug_flags();

    /// Deterministic tick-based interpreter for a guest image.
    ///
    /// Execution order is the image skeleton: boot work, hypercall 1, init work,
    /// hypercall 2, run script, hypercall 3. Each exec phase advances the tick by
    /// ceil(instructions * clock factor); each raised event takes one tick and is
    /// stamped with the tick at which it was raised.
    ///
    /// Single-threaded; only inject_external_hypercall may be called from other threads.
    class Simulation : public HandlerContext
    {
    public:
        /// out_dir may be empty, in which case nothing is written to disk.
        /// Otherwise outputs go to out_dir/<id>/. Throws ConfigError on id or
        /// output-directory problems.
        Simulation(SimulationSetup setup, const std::filesystem::path& out_dir, SimulationOptions options = {});
        ~Simulation() override;

        Simulation(const Simulation&) = delete;
        Simulation& operator=(const Simulation&) = delete;

        const std::string& id() const noexcept { return setup_.id; }
        const BoardConfig& board() const noexcept { return setup_.board; }
        const GuestImage& image() const noexcept { return setup_.image; }
        const std::filesystem::path& run_dir() const noexcept { return run_dir_; }
        const SimulationOptions& options() const noexcept { return options_; }

        std::optional<ExitHandler> register_handler(std::uint16_t num, ExitHandler h);
        HandlerTable& handlers() noexcept { return handlers_; }

        /// Runs to completion, dispatching every event. Throws StateError if the
        /// simulation was already stepped or run.
        RunResult run();

        /// Advances to the next raised event and returns it undispatched, or
        /// returns the terminal state. The terminal state is returned once;
        /// stepping again afterwards throws StateError.
        StepOutcome step_until_exit_event();

        /// Runs the handler for `e` and applies its directive.
        Directive dispatch(const HypercallEvent& e);

        /// Thread-safe. Queued and dispatched at the next event boundary.
        /// Throws StateError once the simulation is terminal.
        std::future<InjectionAck> inject_external_hypercall(std::uint16_t num, json payload);

        /// Throws ConfigError listing known flags when a name is unknown.
        void set_debug_flags(const std::vector<std::string>& add, const std::vector<std::string>& remove);
        const std::set<std::string>& debug_flags() const noexcept { return debug_flags_; }

        void set_control_hook(ControlHook* hook) noexcept { hook_ = hook; }

        /// Writes "<tick>: <flag>: <message>" to the run log when `flag` is enabled.
        void trace(std::string_view flag, std::string_view message);

        bool started() const noexcept { return started_; }
        bool terminal() const noexcept { return terminal_.has_value(); }
        const std::optional<Terminal>& terminal_state() const noexcept { return terminal_; }
        std::string phase_marker() const;
        std::uint64_t retired_instructions() const noexcept { return retired_; }

        const std::vector<HypercallEvent>& event_log() const noexcept { return events_; }
        const std::vector<StatsSnapshot>& stats_dumps() const noexcept { return dumps_; }
        const std::vector<std::string>& log_lines() const noexcept { return log_lines_; }
        const std::vector<std::string>& trace_lines() const noexcept { return trace_lines_; }
        const std::vector<std::string>& warnings() const noexcept { return warnings_; }
        RunResult result() const;
        std::string output_digest() const;

        // HandlerContext
        std::uint64_t tick() const override { return tick_; }
        StatsSnapshot stats() const override;
        StatsSnapshot dump_stats(std::string label) override;
        void reset_stats() override;
        void open_roi() override { roi_open_ = true; }
        void close_roi() override { roi_open_ = false; }
        bool roi_open() const override { return roi_open_; }
        void log(std::string_view line) override;
        void warn(std::string_view line) override;
        void set_max_tick(std::optional<std::uint64_t> max_tick) override { setup_.board.max_tick = max_tick; }
        std::uint64_t times_seen(std::uint16_t num) const override;

    private:
        enum class Stage
        {
            Boot,
            BootHypercall,
            Init,
            LoginHypercall,
            RunScript,
            ExitHypercall,
            Done,
        };

        struct Frame
        {
            const std::vector<Phase>* body;
            std::size_t next;
            std::uint64_t reps_left;
        };

        struct ActiveExec
        {
            std::uint64_t total;
            std::uint64_t done;
            std::uint64_t start_tick;
        };

        struct PendingInjection
        {
            std::uint16_t num;
            json payload;
            std::promise<InjectionAck> promise;
        };

        void poll_control();
        StepOutcome advance();
        bool run_exec_chunk();
        StepOutcome raise(std::uint16_t num, std::uint64_t arg, EventSource source, json payload);
        StepOutcome guest_access(std::uint16_t num, std::uint64_t arg, bool via_mmio);
        Terminal terminate(TerminalCause cause, std::string detail);
        void write_line(std::ofstream& out, const std::string& line);
        void pace();

        SimulationSetup setup_;
        SimulationOptions options_;
        std::filesystem::path run_dir_;
        HandlerTable handlers_;
        std::set<std::string> debug_flags_;
        ControlHook* hook_ = nullptr;

        Stage stage_ = Stage::Boot;
        std::vector<Frame> frames_;
        std::optional<ActiveExec> exec_;

        std::uint64_t tick_ = 0;
        std::uint64_t total_instructions_ = 0;
        std::uint64_t roi_instructions_ = 0;
        std::uint64_t retired_ = 0;
        std::map<std::uint16_t, std::uint64_t> counts_;
        std::map<std::uint16_t, std::uint64_t> seen_;
        bool roi_open_ = false;

        bool started_ = false;
        bool ran_ = false;
        std::optional<Terminal> terminal_;
        bool terminal_reported_ = false;
        std::vector<HypercallEvent> events_;
        std::vector<StatsSnapshot> dumps_;
        std::vector<std::string> log_lines_;
        std::vector<std::string> trace_lines_;
        std::vector<std::string> warnings_;

        std::mutex inject_mutex_;
        bool inject_closed_ = false;
        std::deque<PendingInjection> injections_;
        std::optional<std::promise<InjectionAck>> undispatched_ack_;

        std::ofstream events_out_;
        std::ofstream stats_out_;
        std::ofstream log_out_;
        std::chrono::steady_clock::time_point wall_start_{};
        std::uint64_t paced_base_ = 0;
    };

    /// Materializes a workload into a simulation: loads the image, installs the
    /// workload's binary as the run script and applies handler configuration.
    /// Throws DependencyError for missing or unloadable components.
    SimulationSetup materialize(const SimulatorConfig& config);

    std::unique_ptr<Simulation> build_simulation(const SimulatorConfig& config, const std::filesystem::path& out_dir,
                                                 SimulationOptions options = {});

    /// Letters, digits, '.', '_' and '-' only; not "." or "..".
    bool is_valid_sim_id(std::string_view id);
} // namespace simharness
