#pragma once

#include "simharness/board.hpp"
#include "simharness/guest.hpp"
#include "simharness/resources.hpp"
#include "simharness/simcore.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace simharness::testing
{
    namespace fs = std::filesystem;

    /// Fresh directory under the temp dir, removed on destruction.
    class TempDir
    {
    public:
        TempDir();
        ~TempDir();
        TempDir(const TempDir&) = delete;
        TempDir& operator=(const TempDir&) = delete;

        const fs::path& path() const noexcept { return path_; }
        fs::path operator/(const fs::path& p) const { return path_ / p; }

    private:
        fs::path path_;
    };

    fs::path data_dir();
    fs::path fixture(const std::string& name);
    CatalogChain bundled_chain();

    std::string slurp(const fs::path& p);

    BoardConfig board(const std::string& preset = "x86-demo-board");

    /// 500 boot and 300 init instructions, like the bundled base image.
    GuestImage base_image(std::optional<GuestProgram> script = std::nullopt, bool bridge = true);
    GuestProgram program(std::vector<Phase> phases, Privilege privilege = Privilege::User);

    SimulationSetup make_setup(const std::string& id, GuestImage image, BoardConfig b = board());

    std::vector<std::uint16_t> guest_nums(const std::vector<HypercallEvent>& events);

    /// Runs a bundled-catalog workload into out_dir and returns the result.
    RunResult run_workload(const std::string& workload, const fs::path& out_dir, const std::string& id = "",
                           const std::string& board_preset = "x86-demo-board");

    struct CliResult
    {
        int status = -1;
        std::string out;
        std::string err;
    };

    /// Runs the built `simharness` executable; stdin is closed.
    CliResult run_cli(const std::vector<std::string>& args, const fs::path& cwd = {});
} // namespace simharness::testing
