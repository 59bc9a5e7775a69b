#include "simharness/simcore.hpp"

#include "simharness/bridge.hpp"
#include "simharness/digest.hpp"

#include <algorithm>
#include <thread>

namespace simharness
{
    namespace fs = std::filesystem;

    namespace
    {
        constexpr std::pair<TerminalCause, std::string_view> kCauseNames[] = {
            {TerminalCause::ExitHypercall, "exit_hypercall"},
            {TerminalCause::MaxTick, "max_tick"},
            {TerminalCause::WorkloadExhausted, "workload_exhausted"},
            {TerminalCause::GuestFault, "guest_fault"},
            {TerminalCause::HostHandlerError, "host_handler_error"},
        };

        void check_architecture(const BoardConfig& board, const ResolvedResource& r, const std::string& role)
        {
            auto arch = r.descriptor.architecture;
            if (board.architecture == Architecture::ANY || arch == Architecture::ANY || arch == Architecture::Unknown)
            {
                return;
            }
            if (arch != board.architecture)
            {
                throw DependencyError("component '" + role + "' (" + r.id() + ") targets " +
                                      std::string(to_string(arch)) + " but board '" + board.name + "' is " +
                                      std::string(to_string(board.architecture)));
            }
        }
    } // namespace

    std::string_view to_string(TerminalCause c)
    {
        for (const auto& [cause, name] : kCauseNames)
        {
            if (cause == c)
            {
                return name;
            }
        }
        return "unknown";
    }

    std::optional<TerminalCause> terminal_cause_from_string(std::string_view s)
    {
        for (const auto& [cause, name] : kCauseNames)
        {
            if (name == s)
            {
                return cause;
            }
        }
        return std::nullopt;
    }

    const std::vector<std::string>& known_debug_flags()
    {
        static const std::vector<std::string> flags{"Control", "Exec", "ExitEvents", "Stats"};
        return flags;
    }

    bool is_valid_sim_id(std::string_view id)
    {
        if (id.empty() || id == "." || id == "..")
        {
            return false;
        }
        return std::all_of(id.begin(), id.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                   c == '_' || c == '-';
        });
    }

    Simulation::Simulation(SimulationSetup setup, const fs::path& out_dir, SimulationOptions options)
        : setup_(std::move(setup)), options_(std::move(options)), handlers_(default_handlers())
    {
        if (!is_valid_sim_id(setup_.id))
        {
            throw ConfigError("invalid simulation id '" + setup_.id + "'");
        }
        if (options_.poll_interval == 0)
        {
            throw ConfigError("poll interval must be positive");
        }
        set_debug_flags(std::vector<std::string>(options_.debug_flags.begin(), options_.debug_flags.end()), {});
        if (!out_dir.empty())
        {
            run_dir_ = out_dir / setup_.id;
            std::error_code ec;
            if (fs::exists(run_dir_, ec) && !fs::is_empty(run_dir_, ec))
            {
                if (!options_.overwrite)
                {
                    throw ConfigError("output directory '" + run_dir_.string() +
                                      "' already holds a run; pass --overwrite to replace it");
                }
                fs::remove_all(run_dir_, ec);
            }
            fs::create_directories(run_dir_, ec);
            if (ec)
            {
                throw IoError("cannot create '" + run_dir_.string() + "': " + ec.message());
            }
            events_out_.open(run_dir_ / "events.jsonl", std::ios::trunc);
            stats_out_.open(run_dir_ / "stats.jsonl", std::ios::trunc);
            log_out_.open(run_dir_ / "run.log", std::ios::trunc);
            if (!events_out_ || !stats_out_ || !log_out_)
            {
                throw IoError("cannot open output files in '" + run_dir_.string() + "'");
            }
        }
        log("simulation " + setup_.id + " seed " + std::to_string(setup_.seed));
    }

    Simulation::~Simulation() = default;

    std::optional<ExitHandler> Simulation::register_handler(std::uint16_t num, ExitHandler h)
    {
        if (terminal_)
        {
            throw StateError("cannot register handlers on a terminated simulation");
        }
        return handlers_.register_handler(num, std::move(h));
    }

    RunResult Simulation::run()
    {
        if (started_)
        {
            throw StateError("simulation '" + setup_.id + "' has already been started");
        }
        while (true)
        {
            auto outcome = step_until_exit_event();
            if (std::holds_alternative<Terminal>(outcome))
            {
                break;
            }
            dispatch(std::get<HypercallEvent>(outcome));
            if (terminal_)
            {
                break;
            }
        }
        return result();
    }

    StepOutcome Simulation::step_until_exit_event()
    {
        if (terminal_)
        {
            if (terminal_reported_)
            {
                throw StateError("simulation '" + setup_.id + "' has already terminated");
            }
            terminal_reported_ = true;
            return *terminal_;
        }
        auto outcome = advance();
        terminal_reported_ = std::holds_alternative<Terminal>(outcome);
        return outcome;
    }

    StepOutcome Simulation::advance()
    {
        if (!started_)
        {
            started_ = true;
            wall_start_ = std::chrono::steady_clock::now();
        }
        if (undispatched_ack_)
        {
            undispatched_ack_->set_exception(
                std::make_exception_ptr(StateError("injected hypercall was stepped over without dispatch")));
            undispatched_ack_.reset();
        }

        while (true)
        {
            poll_control();
            if (terminal_)
            {
                return *terminal_;
            }

            std::optional<PendingInjection> injected;
            {
                std::lock_guard lock(inject_mutex_);
                if (!injections_.empty())
                {
                    injected.emplace(std::move(injections_.front()));
                    injections_.pop_front();
                }
            }
            if (injected)
            {
                auto outcome = raise(injected->num, 0, EventSource::External, std::move(injected->payload));
                if (std::holds_alternative<HypercallEvent>(outcome))
                {
                    undispatched_ack_.emplace(std::move(injected->promise));
                }
                else
                {
                    injected->promise.set_exception(
                        std::make_exception_ptr(StateError("simulation terminated before dispatch")));
                }
                return outcome;
            }

            if (exec_)
            {
                if (!run_exec_chunk())
                {
                    return *terminal_;
                }
                continue;
            }

            auto start_exec = [&](std::uint64_t n) {
                trace("Exec", "exec " + std::to_string(n) + " instructions");
                if (n > 0)
                {
                    exec_ = ActiveExec{n, 0, tick_};
                }
            };

            switch (stage_)
            {
            case Stage::Boot:
                start_exec(setup_.image.boot_instructions);
                stage_ = Stage::BootHypercall;
                continue;
            case Stage::BootHypercall:
                stage_ = Stage::Init;
                return raise(1, 0, EventSource::Guest, nullptr);
            case Stage::Init:
                start_exec(setup_.image.init_instructions);
                stage_ = Stage::LoginHypercall;
                continue;
            case Stage::LoginHypercall:
                stage_ = Stage::RunScript;
                if (setup_.image.run_script && !setup_.image.run_script->phases.empty())
                {
                    frames_.push_back(Frame{&setup_.image.run_script->phases, 0, 1});
                }
                return raise(2, 0, EventSource::Guest, nullptr);
            case Stage::RunScript:
                break;
            case Stage::ExitHypercall:
                stage_ = Stage::Done;
                return raise(3, 0, EventSource::Guest, nullptr);
            case Stage::Done:
                return terminate(TerminalCause::WorkloadExhausted, "guest finished without an exit hypercall");
            }

            if (frames_.empty())
            {
                stage_ = Stage::ExitHypercall;
                continue;
            }
            auto& frame = frames_.back();
            if (frame.next == frame.body->size())
            {
                if (frame.reps_left > 1)
                {
                    --frame.reps_left;
                    frame.next = 0;
                }
                else
                {
                    frames_.pop_back();
                }
                continue;
            }
            const Phase& phase = (*frame.body)[frame.next++];
            if (const auto* e = std::get_if<ExecPhase>(&phase.op))
            {
                start_exec(e->instructions);
            }
            else if (const auto* h = std::get_if<HypercallPhase>(&phase.op))
            {
                return guest_access(h->num, h->arg, false);
            }
            else if (const auto* m = std::get_if<MmioWritePhase>(&phase.op))
            {
                return guest_access(m->offset, m->value, true);
            }
            else if (const auto* f = std::get_if<FaultPhase>(&phase.op))
            {
                return terminate(TerminalCause::GuestFault, f->message);
            }
            else if (const auto* r = std::get_if<RepeatPhase>(&phase.op))
            {
                if (r->count > 0 && !r->body.empty())
                {
                    frames_.push_back(Frame{&r->body, 0, r->count});
                }
            }
        }
    }

    StepOutcome Simulation::guest_access(std::uint16_t num_or_offset, std::uint64_t arg, bool via_mmio)
    {
        HypercallEvent e;
        try
        {
            auto privilege = setup_.image.run_script ? setup_.image.run_script->privilege : Privilege::Root;
            check_guest_access(privilege, setup_.image.bridge_device_present);
            e = via_mmio ? decode_mmio(num_or_offset, arg, tick_) : HypercallEvent{num_or_offset, arg, nullptr, tick_};
        }
        catch (const GuestFault& fault)
        {
            return terminate(TerminalCause::GuestFault, fault.what());
        }
        return raise(e.num, e.arg, EventSource::Guest, nullptr);
    }

    StepOutcome Simulation::raise(std::uint16_t num, std::uint64_t arg, EventSource source, json payload)
    {
        const auto& max_tick = setup_.board.max_tick;
        if (max_tick && tick_ + 1 > *max_tick)
        {
            return terminate(TerminalCause::MaxTick, "max_tick " + std::to_string(*max_tick) + " reached");
        }
        HypercallEvent e{num, arg, std::move(payload), tick_, source};
        tick_ += 1;
        ++counts_[num];
        ++seen_[num];
        events_.push_back(e);
        write_line(events_out_, to_json(e).dump());
        return e;
    }

    bool Simulation::run_exec_chunk()
    {
        auto& x = *exec_;
        std::uint64_t remaining = x.total - x.done;
        std::uint64_t chunk = std::min(remaining, options_.poll_interval);
        bool capped = false;
        if (const auto& max_tick = setup_.board.max_tick)
        {
            std::uint64_t reachable =
                *max_tick < x.start_tick ? 0 : setup_.board.clock.instructions_within(*max_tick - x.start_tick);
            std::uint64_t limit = reachable > x.done ? reachable - x.done : 0;
            if (chunk > limit)
            {
                chunk = limit;
                capped = true;
            }
        }
        x.done += chunk;
        total_instructions_ += chunk;
        retired_ += chunk;
        if (roi_open_)
        {
            roi_instructions_ += chunk;
        }
        tick_ = x.start_tick + setup_.board.clock.ticks_for(x.done);
        trace("Exec", "retired " + std::to_string(x.done) + "/" + std::to_string(x.total));
        if (x.done == x.total)
        {
            exec_.reset();
        }
        pace();
        if (capped)
        {
            terminate(TerminalCause::MaxTick, "max_tick " + std::to_string(*setup_.board.max_tick) + " reached");
            return false;
        }
        return true;
    }

    void Simulation::pace()
    {
        if (options_.pace_ips <= 0.0)
        {
            return;
        }
        auto target = wall_start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(static_cast<double>(retired_) / options_.pace_ips));
        std::this_thread::sleep_until(target);
    }

    void Simulation::poll_control()
    {
        if (hook_ != nullptr && !terminal_)
        {
            hook_->poll(*this);
        }
    }

    Directive Simulation::dispatch(const HypercallEvent& e)
    {
        if (terminal_)
        {
            throw StateError("simulation '" + setup_.id + "' has already terminated");
        }
        trace("ExitEvents", "dispatch hypercall " + std::to_string(e.num) + " from " + std::string(to_string(e.source)));
        bool external = e.source == EventSource::External && undispatched_ack_.has_value();
        Directive d;
        try
        {
            d = simharness::dispatch(handlers_, *this, e);
        }
        catch (const HostHandlerError& err)
        {
            if (external)
            {
                undispatched_ack_->set_exception(std::make_exception_ptr(err));
                undispatched_ack_.reset();
            }
            terminate(TerminalCause::HostHandlerError, err.what());
            return Directive::exit("host_handler_error");
        }
        if (external)
        {
            undispatched_ack_->set_value(InjectionAck{e.tick, d});
            undispatched_ack_.reset();
        }
        if (d.is_exit())
        {
            terminate(TerminalCause::ExitHypercall, d.reason);
        }
        return d;
    }

    std::future<InjectionAck> Simulation::inject_external_hypercall(std::uint16_t num, json payload)
    {
        std::lock_guard lock(inject_mutex_);
        if (inject_closed_)
        {
            throw StateError("simulation '" + setup_.id + "' has terminated; injection rejected");
        }
        PendingInjection p{num, std::move(payload), {}};
        auto fut = p.promise.get_future();
        injections_.push_back(std::move(p));
        return fut;
    }

    void Simulation::set_debug_flags(const std::vector<std::string>& add, const std::vector<std::string>& remove)
    {
        const auto& known = known_debug_flags();
        auto check = [&](const std::string& f) {
            if (std::find(known.begin(), known.end(), f) == known.end())
            {
                std::string list;
                for (const auto& k : known)
                {
                    list += (list.empty() ? "" : ", ") + k;
                }
                throw ConfigError("unknown debug flag '" + f + "'; known flags: " + list);
            }
        };
        std::for_each(add.begin(), add.end(), check);
        std::for_each(remove.begin(), remove.end(), check);
        for (const auto& f : add)
        {
            debug_flags_.insert(f);
        }
        for (const auto& f : remove)
        {
            debug_flags_.erase(f);
        }
    }

    std::string Simulation::phase_marker() const
    {
        if (terminal_)
        {
            return "terminated";
        }
        switch (stage_)
        {
        case Stage::Boot:
        case Stage::BootHypercall:
            return "boot";
        case Stage::Init:
        case Stage::LoginHypercall:
            return "init";
        case Stage::RunScript:
            return "run_script";
        case Stage::ExitHypercall:
            return "exit";
        case Stage::Done:
            return "done";
        }
        return "unknown";
    }

    StatsSnapshot Simulation::stats() const
    {
        return StatsSnapshot{tick_, total_instructions_, roi_instructions_, counts_, ""};
    }

    StatsSnapshot Simulation::dump_stats(std::string label)
    {
        auto s = stats();
        s.label = std::move(label);
        dumps_.push_back(s);
        write_line(stats_out_, to_json(s).dump());
        trace("Stats", "dump '" + s.label + "'");
        return s;
    }

    void Simulation::reset_stats()
    {
        total_instructions_ = 0;
        roi_instructions_ = 0;
        counts_.clear();
        trace("Stats", "reset");
    }

    void Simulation::log(std::string_view line)
    {
        std::string full = std::to_string(tick_) + ": " + std::string(line);
        log_lines_.push_back(full);
        write_line(log_out_, full);
    }

    void Simulation::warn(std::string_view line)
    {
        warnings_.emplace_back(line);
        write_line(log_out_, std::to_string(tick_) + ": warning: " + std::string(line));
    }

    void Simulation::trace(std::string_view flag, std::string_view message)
    {
        if (!debug_flags_.contains(std::string(flag)))
        {
            return;
        }
        std::string full = std::to_string(tick_) + ": " + std::string(flag) + ": " + std::string(message);
        trace_lines_.push_back(full);
        write_line(log_out_, full);
    }

    std::uint64_t Simulation::times_seen(std::uint16_t num) const
    {
        auto it = seen_.find(num);
        return it == seen_.end() ? 0 : it->second;
    }

    void Simulation::write_line(std::ofstream& out, const std::string& line)
    {
        if (out.is_open())
        {
            out << line << '\n';
            out.flush();
        }
    }

    std::string Simulation::output_digest() const
    {
        std::string canon;
        for (const auto& e : events_)
        {
            if (e.source == EventSource::Guest)
            {
                canon += "hypercall " + std::to_string(e.num) + " " + std::to_string(e.arg) + "\n";
            }
        }
        canon += "retired " + std::to_string(retired_) + "\n";
        return sha256_hex(canon);
    }

    RunResult Simulation::result() const
    {
        RunResult r;
        if (terminal_)
        {
            r.terminal_cause = terminal_->cause;
            r.detail = terminal_->detail;
        }
        r.final_stats = stats();
        r.final_stats.label = "final";
        r.event_log = events_;
        r.stats_dumps = dumps_;
        r.output_digest = output_digest();
        return r;
    }

    Terminal Simulation::terminate(TerminalCause cause, std::string detail)
    {
        if (terminal_)
        {
            return *terminal_;
        }
        exec_.reset();
        log("terminated: " + std::string(to_string(cause)) + (detail.empty() ? "" : " (" + detail + ")"));
        dump_stats("final");
        terminal_ = Terminal{cause, std::move(detail)};

        {
            std::lock_guard lock(inject_mutex_);
            inject_closed_ = true;
            for (auto& p : injections_)
            {
                p.promise.set_exception(std::make_exception_ptr(StateError("simulation terminated before dispatch")));
            }
            injections_.clear();
        }
        if (undispatched_ack_)
        {
            undispatched_ack_->set_exception(std::make_exception_ptr(StateError("simulation terminated")));
            undispatched_ack_.reset();
        }

        if (!run_dir_.empty())
        {
            auto privilege = setup_.image.run_script ? setup_.image.run_script->privilege : Privilege::Root;
            ordered_json j;
            j["sim_id"] = setup_.id;
            j["workload"] = {{"id", setup_.workload_id}, {"version", setup_.workload_version}};
            j["board"] = to_json(setup_.board);
            j["seed"] = setup_.seed;
            j["terminal_cause"] = to_string(terminal_->cause);
            j["detail"] = terminal_->detail;
            j["privilege"] = to_string(privilege);
            j["bridge_device_present"] = setup_.image.bridge_device_present;
            j["final_stats"] = to_json(dumps_.back());
            j["event_count"] = events_.size();
            j["stats_dump_count"] = dumps_.size();
            j["output_digest"] = output_digest();
            if (setup_.expected_output_digest)
            {
                j["expected_output_digest"] = *setup_.expected_output_digest;
            }
            j["parameters"] = ordered_json::parse(setup_.parameters.dump());
            j["warnings"] = warnings_;
            write_text_file(run_dir_ / "result.json", j.dump(2) + "\n");
        }

        if (hook_ != nullptr)
        {
            hook_->on_terminate(*this);
        }
        events_out_.close();
        stats_out_.close();
        log_out_.close();
        return *terminal_;
    }

    SimulationSetup materialize(const SimulatorConfig& config)
    {
        const auto& w = config.workload;
        for (const char* role : {"image", "kernel"})
        {
            if (w.component(role) == nullptr)
            {
                throw DependencyError("workload '" + w.id() + "' has no '" + role + "' component (role " + role + ")");
            }
        }
        for (const auto& [role, comp] : w.components)
        {
            check_architecture(config.board, comp, role);
        }

        const auto* image_res = w.component("image");
        GuestImage image;
        try
        {
            image = load_image_file(image_res->local_path());
        }
        catch (const Error& e)
        {
            throw DependencyError("workload '" + w.id() + "': role 'image' (" + image_res->id() +
                                  ") cannot be loaded: " + e.what());
        }
        const auto* kernel = w.component("kernel");
        if (!fs::exists(kernel->local_path()))
        {
            throw DependencyError("workload '" + w.id() + "': role 'kernel' (" + kernel->id() + ") file '" +
                                  kernel->local_path().string() + "' not found");
        }
        if (const auto* binary = w.component("binary"))
        {
            try
            {
                image.run_script = load_program_file(binary->local_path());
            }
            catch (const Error& e)
            {
                throw DependencyError("workload '" + w.id() + "': role 'binary' (" + binary->id() +
                                      ") cannot be loaded: " + e.what());
            }
        }

        SimulationSetup setup;
        setup.id = config.id;
        setup.board = config.board;
        setup.image = std::move(image);
        setup.seed = config.seed;
        setup.workload_id = w.id();
        setup.workload_version = w.version();
        setup.parameters = w.parameters;
        setup.expected_output_digest = w.expected_output_digest;
        return setup;
    }

    std::unique_ptr<Simulation> build_simulation(const SimulatorConfig& config, const fs::path& out_dir,
                                                 SimulationOptions options)
    {
        auto setup = materialize(config);
        auto table = default_handlers();
        apply_handler_config(table, config.handlers);
        auto sim = std::make_unique<Simulation>(std::move(setup), out_dir, std::move(options));
        sim->handlers() = std::move(table);
        return sim;
    }
} // namespace simharness
