#pragma once

#include "simharness/board.hpp"
#include "simharness/resources.hpp"
#include "simharness/simcore.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <sys/types.h>

namespace simharness
{
    /// Simulations to run, each in its own process, at most num_processes at a time.
    class MultiSimPlan
    {
    public:
        explicit MultiSimPlan(std::filesystem::path out_root = "multisim-out");

        /// Throws ConfigError for n <= 0.
        void set_num_processes(int n);

        /// Throws ConfigError when the id is already present or is not a valid run id.
        void add_simulator(SimulatorConfig config);

        void set_out_root(std::filesystem::path out_root) { out_root_ = std::move(out_root); }
        void set_overwrite(bool overwrite) { overwrite_ = overwrite; }
        void set_timeout(std::optional<std::chrono::milliseconds> timeout) { timeout_ = timeout; }
        void set_control(bool enabled) { control_ = enabled; }
        void set_options(SimulationOptions options) { options_ = std::move(options); }

        int num_processes() const noexcept { return num_processes_; }
        const std::vector<SimulatorConfig>& entries() const noexcept { return entries_; }
        const std::filesystem::path& out_root() const noexcept { return out_root_; }
        bool overwrite() const noexcept { return overwrite_; }
        std::optional<std::chrono::milliseconds> timeout() const noexcept { return timeout_; }
        bool control() const noexcept { return control_; }
        const SimulationOptions& options() const noexcept { return options_; }

    private:
        int num_processes_ = 1;
        std::vector<SimulatorConfig> entries_;
        std::filesystem::path out_root_;
        bool overwrite_ = false;
        std::optional<std::chrono::milliseconds> timeout_;
        bool control_ = false;
        SimulationOptions options_;
    };

    enum class EntryStatus
    {
        Completed,
        Failed,
        TimedOut,
    };

    std::string_view to_string(EntryStatus s);

    struct EntryReport
    {
        std::string id;
        EntryStatus status = EntryStatus::Failed;
        std::optional<std::string> terminal_cause;
        double wall_time_s = 0.0;
        std::filesystem::path out_dir;
        int exit_code = -1; // -1 when the child died from a signal
        int signal = 0;
    };

    struct AggregateReport
    {
        int num_processes = 1;
        std::size_t peak_concurrency = 0;
        std::vector<EntryReport> entries; // plan order
        std::size_t completed = 0;
        std::size_t failed = 0;
        std::size_t timed_out = 0;

        bool all_completed() const noexcept { return completed == entries.size(); }
    };

    ordered_json to_json(const AggregateReport& r);
    AggregateReport report_from_json(const json& j);

    /// Parent-side notifications, e.g. for tests that need child pids.
    class MultiSimObserver
    {
    public:
        virtual ~MultiSimObserver() = default;
        virtual void on_launch(const std::string& id, pid_t pid) { (void)id, (void)pid; }
        virtual void on_exit(const EntryReport& entry) { (void)entry; }
    };

    /// Runs every entry in a forked child with output under out_root/<id>/ and
    /// writes out_root/report.json. A failing child never affects its siblings.
    /// Throws ConfigError/IoError before launching anything when out_root is
    /// unusable or a run directory already exists without overwrite.
    AggregateReport run_all(const MultiSimPlan& plan, MultiSimObserver* observer = nullptr);

    /// `{workload}` in the pattern is replaced by the workload id.
    std::string expand_id_pattern(std::string_view pattern, std::string_view workload_id);

    /// One entry per suite member, ids from the pattern.
    void add_suite(MultiSimPlan& plan, const ResolvedSuite& suite, const BoardConfig& board,
                   std::string_view id_pattern = "process_{workload}", const json& handlers = json::object(),
                   std::uint64_t seed = 0);

    /// Contents of a plan file, before catalog resolution.
    struct PlanFile
    {
        std::filesystem::path path;
        json doc;
        std::vector<std::filesystem::path> catalogs; // absolute
    };

    /// Throws ConfigError/ParseError/IoError.
    PlanFile read_plan_file(const std::filesystem::path& path);

    /// Resolves the plan's suite or entries against the chain.
    MultiSimPlan make_plan(const PlanFile& file, const CatalogChain& chain, std::string_view framework_version);
} // namespace simharness
