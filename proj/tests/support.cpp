#include "support.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace simharness::testing
{
    TempDir::TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "simharness-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr)
        {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }

    TempDir::~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }

    fs::path data_dir() { return SIMHARNESS_DATA_DIR; }

    fs::path fixture(const std::string& name) { return fs::path(SIMHARNESS_FIXTURE_DIR) / name; }

    CatalogChain bundled_chain() { return CatalogChain::load({data_dir() / "catalog" / "resources.json"}); }

    std::string slurp(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        if (!in)
        {
            throw std::runtime_error("cannot read " + p.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    BoardConfig board(const std::string& preset) { return *find_board_preset(preset); }

    GuestImage base_image(std::optional<GuestProgram> script, bool bridge)
    {
        GuestImage img;
        img.boot_instructions = 500;
        img.init_instructions = 300;
        img.run_script = std::move(script);
        img.bridge_device_present = bridge;
        return img;
    }

    GuestProgram program(std::vector<Phase> phases, Privilege privilege)
    {
        return GuestProgram{std::move(phases), privilege};
    }

    SimulationSetup make_setup(const std::string& id, GuestImage image, BoardConfig b)
    {
        SimulationSetup s;
        s.id = id;
        s.board = std::move(b);
        s.image = std::move(image);
        s.workload_id = id;
        s.workload_version = "1.0.0";
        return s;
    }

    std::vector<std::uint16_t> guest_nums(const std::vector<HypercallEvent>& events)
    {
        std::vector<std::uint16_t> nums;
        for (const auto& e : events)
        {
            if (e.source == EventSource::Guest)
            {
                nums.push_back(e.num);
            }
        }
        return nums;
    }

    RunResult run_workload(const std::string& workload, const fs::path& out_dir, const std::string& id,
                           const std::string& board_preset)
    {
        auto chain = bundled_chain();
        SimulatorConfig c;
        c.workload = obtain_workload(workload, std::nullopt, chain, kFrameworkVersion);
        c.board = board(board_preset);
        c.id = id.empty() ? workload : id;
        SimulationOptions options;
        options.overwrite = true;
        return build_simulation(c, out_dir, options)->run();
    }

    CliResult run_cli(const std::vector<std::string>& args, const fs::path& cwd)
    {
        int out_pipe[2];
        int err_pipe[2];
        if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        {
            throw std::runtime_error("pipe failed");
        }
        pid_t pid = ::fork();
        if (pid == 0)
        {
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::dup2(err_pipe[1], STDERR_FILENO);
            ::close(out_pipe[0]);
            ::close(err_pipe[0]);
            int devnull = ::open("/dev/null", O_RDONLY);
            ::dup2(devnull, STDIN_FILENO);
            if (!cwd.empty() && ::chdir(cwd.c_str()) != 0)
            {
                ::_exit(127);
            }
            std::vector<char*> argv;
            std::string exe = SIMHARNESS_CLI_PATH;
            argv.push_back(exe.data());
            std::vector<std::string> copy = args;
            for (auto& a : copy)
            {
                argv.push_back(a.data());
            }
            argv.push_back(nullptr);
            ::execv(exe.c_str(), argv.data());
            ::_exit(127);
        }
        ::close(out_pipe[1]);
        ::close(err_pipe[1]);
        CliResult r;
        pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
        int open_fds = 2;
        char buf[4096];
        while (open_fds > 0)
        {
            if (::poll(fds, 2, -1) < 0)
            {
                break;
            }
            for (int i = 0; i < 2; ++i)
            {
                if (fds[i].fd >= 0 && (fds[i].revents & (POLLIN | POLLHUP)) != 0)
                {
                    auto n = ::read(fds[i].fd, buf, sizeof buf);
                    if (n <= 0)
                    {
                        ::close(fds[i].fd);
                        fds[i].fd = -1;
                        --open_fds;
                    }
                    else
                    {
                        (i == 0 ? r.out : r.err).append(buf, static_cast<std::size_t>(n));
                    }
                }
            }
        }
        int status = 0;
        ::waitpid(pid, &status, 0);
        r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }
} // namespace simharness::testing
