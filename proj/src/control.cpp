#include "simharness/control.hpp"

#include "simharness/bridge.hpp"
#include "simharness/digest.hpp"

#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

namespace simharness
{
    namespace fs = std::filesystem;

    namespace
    {
        constexpr std::size_t kSocketPathLimit = sizeof(sockaddr_un::sun_path) - 1;

        sockaddr_un make_address(const fs::path& path)
        {
            auto s = path.string();
            if (s.size() > kSocketPathLimit)
            {
                throw ConfigError("socket path too long: " + s);
            }
            sockaddr_un addr{};
            addr.sun_family = AF_UNIX;
            std::memcpy(addr.sun_path, s.c_str(), s.size() + 1);
            return addr;
        }

        bool send_all(int fd, std::string_view bytes)
        {
            while (!bytes.empty())
            {
                auto n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
                if (n < 0)
                {
                    if (errno == EINTR)
                    {
                        continue;
                    }
                    return false;
                }
                bytes.remove_prefix(static_cast<std::size_t>(n));
            }
            return true;
        }

        int connect_to(const fs::path& endpoint)
        {
            sockaddr_un addr{};
            try
            {
                addr = make_address(endpoint);
            }
            catch (const ConfigError& e)
            {
                throw ConnectError(e.what());
            }
            int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
            if (fd < 0)
            {
                throw ConnectError(std::string("socket: ") + std::strerror(errno));
            }
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            {
                int err = errno;
                ::close(fd);
                throw ConnectError("cannot connect to '" + endpoint.string() + "': " + std::strerror(err));
            }
            return fd;
        }

        std::vector<std::string> string_list(const json& j, const char* key)
        {
            std::vector<std::string> out;
            auto it = j.find(key);
            if (it == j.end())
            {
                return out;
            }
            if (!it->is_array())
            {
                throw ConfigError(std::string("'") + key + "' must be an array of flag names");
            }
            for (const auto& v : *it)
            {
                if (!v.is_string())
                {
                    throw ConfigError(std::string("'") + key + "' must be an array of flag names");
                }
                out.push_back(v.get<std::string>());
            }
            return out;
        }

        ControlResponse error_response(std::string request_id, std::string message)
        {
            ControlResponse r;
            r.request_id = std::move(request_id);
            r.ok = false;
            r.body = json::object();
            r.message = std::move(message);
            return r;
        }
    } // namespace

    std::string encode_frame(std::string_view payload)
    {
        if (payload.size() > kMaxFrameSize)
        {
            throw Error("frame of " + std::to_string(payload.size()) + " bytes exceeds the limit");
        }
        auto n = static_cast<std::uint32_t>(payload.size());
        std::string out;
        out.reserve(4 + payload.size());
        out.push_back(static_cast<char>((n >> 24) & 0xff));
        out.push_back(static_cast<char>((n >> 16) & 0xff));
        out.push_back(static_cast<char>((n >> 8) & 0xff));
        out.push_back(static_cast<char>(n & 0xff));
        out.append(payload);
        return out;
    }

    void FrameDecoder::feed(std::string_view bytes)
    {
        buffer_.append(bytes);
    }

    std::optional<std::string> FrameDecoder::next()
    {
        if (buffer_.size() < 4)
        {
            return std::nullopt;
        }
        auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer_[i])); };
        std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
        if (n > kMaxFrameSize)
        {
            throw Error("incoming frame of " + std::to_string(n) + " bytes exceeds the limit");
        }
        if (buffer_.size() < 4 + static_cast<std::size_t>(n))
        {
            return std::nullopt;
        }
        std::string frame = buffer_.substr(4, n);
        buffer_.erase(0, 4 + static_cast<std::size_t>(n));
        return frame;
    }

    ControlMessage parse_control_message(const json& j)
    {
        if (!j.is_object())
        {
            throw ConfigError("control message must be a JSON object");
        }
        ControlMessage m;
        if (auto it = j.find("request_id"); it != j.end())
        {
            if (it->is_string())
            {
                m.request_id = it->get<std::string>();
            }
            else if (it->is_number_integer())
            {
                m.request_id = it->dump();
            }
            else
            {
                throw ConfigError("request_id must be a string");
            }
        }
        auto type = j.find("type");
        if (type == j.end() || !type->is_string())
        {
            throw ConfigError("control message needs a string 'type'");
        }
        auto t = type->get<std::string>();
        if (t == "get_stats")
        {
            m.type = ControlMessage::Type::GetStats;
        }
        else if (t == "set_debug_flags")
        {
            m.type = ControlMessage::Type::SetDebugFlags;
            m.add = string_list(j, "add");
            m.remove = string_list(j, "remove");
        }
        else if (t == "hypercall")
        {
            m.type = ControlMessage::Type::Hypercall;
            auto num = j.find("num");
            if (num == j.end() || !is_non_negative_integer(*num) || num->get<std::uint64_t>() > kMaxHypercallNum)
            {
                throw ConfigError("hypercall message needs 'num' in 0.." + std::to_string(kMaxHypercallNum));
            }
            m.num = num->get<std::uint16_t>();
            if (auto p = j.find("payload"); p != j.end())
            {
                m.payload = *p;
                check_payload(m.payload);
            }
        }
        else
        {
            throw ConfigError("unknown control message type '" + t + "'");
        }
        return m;
    }

    json to_json(const ControlMessage& m)
    {
        json j;
        j["request_id"] = m.request_id;
        switch (m.type)
        {
        case ControlMessage::Type::GetStats:
            j["type"] = "get_stats";
            break;
        case ControlMessage::Type::SetDebugFlags:
            j["type"] = "set_debug_flags";
            j["add"] = m.add;
            j["remove"] = m.remove;
            break;
        case ControlMessage::Type::Hypercall:
            j["type"] = "hypercall";
            j["num"] = m.num;
            j["payload"] = m.payload.is_null() ? json::object() : m.payload;
            break;
        }
        return j;
    }

    ordered_json to_json(const ControlResponse& r)
    {
        ordered_json j;
        j["request_id"] = r.request_id;
        j["status"] = r.ok ? "ok" : "error";
        if (r.ok)
        {
            j["body"] = ordered_json::parse(r.body.dump());
        }
        else
        {
            j["message"] = r.message;
        }
        return j;
    }

    ControlResponse response_from_json(const json& j)
    {
        if (!j.is_object() || !j.contains("status"))
        {
            throw ConfigError("malformed control response");
        }
        ControlResponse r;
        r.request_id = j.value("request_id", std::string());
        r.ok = j["status"] == "ok";
        r.body = j.value("body", json::object());
        r.message = j.value("message", std::string());
        return r;
    }

    CommandResult handle_command(Simulation& sim, const ControlMessage& m)
    {
        CommandResult out;
        if (sim.terminal())
        {
            out.response = error_response(m.request_id, "simulation terminated");
            return out;
        }
        switch (m.type)
        {
        case ControlMessage::Type::GetStats: {
            ControlResponse r;
            r.request_id = m.request_id;
            r.body = json::object();
            r.body["stats"] = json::parse(to_json(sim.stats()).dump());
            r.body["phase"] = sim.phase_marker();
            r.body["roi_open"] = sim.roi_open();
            r.body["retired_instructions"] = sim.retired_instructions();
            out.response = std::move(r);
            break;
        }
        case ControlMessage::Type::SetDebugFlags:
            try
            {
                sim.set_debug_flags(m.add, m.remove);
                ControlResponse r;
                r.request_id = m.request_id;
                r.body = {{"flags", std::vector<std::string>(sim.debug_flags().begin(), sim.debug_flags().end())}};
                out.response = std::move(r);
            }
            catch (const ConfigError& e)
            {
                out.response = error_response(m.request_id, e.what());
            }
            break;
        case ControlMessage::Type::Hypercall:
            try
            {
                out.pending = inject_external_hypercall(sim, m.num, m.payload);
            }
            catch (const Error& e)
            {
                out.response = error_response(m.request_id, e.what());
            }
            break;
        }
        return out;
    }

    ControlResponse injection_response(const std::string& request_id, std::future<InjectionAck>& ack)
    {
        try
        {
            auto a = ack.get();
            ControlResponse r;
            r.request_id = request_id;
            r.body = {{"dispatch_tick", a.dispatch_tick},
                      {"directive", a.directive.is_exit() ? "exit" : "continue"}};
            return r;
        }
        catch (const std::exception& e)
        {
            return error_response(request_id, e.what());
        }
    }

    fs::path default_endpoint_path(const Simulation& sim)
    {
        if (!sim.run_dir().empty())
        {
            auto p = fs::absolute(sim.run_dir()) / "control.sock";
            if (p.string().size() <= kSocketPathLimit)
            {
                return p;
            }
            auto key = sha256_hex(p.string()).substr(0, 16);
            return fs::temp_directory_path() / ("simharness-" + key + ".sock");
        }
        return fs::temp_directory_path() /
               ("simharness-" + std::to_string(::getpid()) + "-" + sim.id() + ".sock");
    }

    struct ControlServer::Slot
    {
        std::string request_id;
        std::optional<ControlResponse> response;
        std::optional<std::future<InjectionAck>> pending;
    };

    struct ControlServer::Connection
    {
        explicit Connection(int f) : fd(f) {}
        ~Connection()
        {
            if (fd >= 0)
            {
                ::close(fd);
            }
        }
        int fd;
        FrameDecoder decoder;
        std::deque<Slot> outbox; // simulation thread only
    };

    struct ControlServer::Request
    {
        std::shared_ptr<Connection> conn;
        std::optional<ControlMessage> message;
        std::string request_id;
        std::string error;
    };

    ControlServer::ControlServer(Simulation& sim, fs::path endpoint) : sim_(&sim), endpoint_(std::move(endpoint))
    {
        auto addr = make_address(endpoint_);
        std::error_code ec;
        if (fs::exists(fs::symlink_status(endpoint_, ec)))
        {
            bool live = false;
            try
            {
                ::close(connect_to(endpoint_));
                live = true;
            }
            catch (const ConnectError&)
            {
            }
            if (live)
            {
                throw ConfigError("control endpoint '" + endpoint_.string() + "' is already in use");
            }
            fs::remove(endpoint_, ec);
        }
        listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (listen_fd_ < 0)
        {
            throw IoError(std::string("socket: ") + std::strerror(errno));
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0)
        {
            int err = errno;
            ::close(listen_fd_);
            throw ConfigError("cannot bind control endpoint '" + endpoint_.string() + "': " + std::strerror(err));
        }
        if (::pipe2(wake_pipe_, O_CLOEXEC) != 0)
        {
            ::close(listen_fd_);
            fs::remove(endpoint_, ec);
            throw IoError(std::string("pipe: ") + std::strerror(errno));
        }
        if (!sim.run_dir().empty())
        {
            endpoint_file_ = sim.run_dir() / "control.endpoint";
            write_text_file(endpoint_file_, fs::absolute(endpoint_).string() + "\n");
        }
        sim.set_control_hook(this);
        listener_ = std::thread([this] { listen_loop(); });
    }

    ControlServer::~ControlServer()
    {
        shutdown();
    }

    void ControlServer::shutdown()
    {
        if (shut_down_)
        {
            return;
        }
        shut_down_ = true;
        stop_ = true;
        if (wake_pipe_[1] >= 0)
        {
            char c = 1;
            [[maybe_unused]] auto n = ::write(wake_pipe_[1], &c, 1);
        }
        if (listener_.joinable())
        {
            listener_.join();
        }
        if (sim_ != nullptr)
        {
            sim_->set_control_hook(nullptr);
        }
        ::close(listen_fd_);
        ::close(wake_pipe_[0]);
        ::close(wake_pipe_[1]);
        std::error_code ec;
        fs::remove(endpoint_, ec);
        if (!endpoint_file_.empty())
        {
            fs::remove(endpoint_file_, ec);
        }
        std::lock_guard lock(queue_mutex_);
        queue_.clear();
        outstanding_.clear();
    }

    void ControlServer::listen_loop()
    {
        std::vector<std::shared_ptr<Connection>> conns;
        while (!stop_)
        {
            std::vector<pollfd> fds;
            fds.push_back({listen_fd_, POLLIN, 0});
            fds.push_back({wake_pipe_[0], POLLIN, 0});
            for (const auto& c : conns)
            {
                fds.push_back({c->fd, POLLIN, 0});
            }
            int rc = ::poll(fds.data(), fds.size(), 200);
            if (rc < 0)
            {
                if (errno == EINTR)
                {
                    continue;
                }
                break;
            }
            if (stop_)
            {
                break;
            }
            if (fds[0].revents & POLLIN)
            {
                int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
                if (fd >= 0)
                {
                    conns.push_back(std::make_shared<Connection>(fd));
                }
            }
            std::vector<std::shared_ptr<Connection>> keep;
            for (std::size_t i = 0; i < conns.size(); ++i)
            {
                auto& c = conns[i];
                auto revents = fds[i + 2].revents;
                if (revents == 0)
                {
                    keep.push_back(c);
                    continue;
                }
                char buf[4096];
                auto n = ::recv(c->fd, buf, sizeof(buf), 0);
                if (n <= 0)
                {
                    if (n < 0 && errno == EINTR)
                    {
                        keep.push_back(c);
                    }
                    continue; // peer closed; queued requests keep the connection alive
                }
                c->decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
                bool broken = false;
                std::vector<Request> parsed;
                while (true)
                {
                    std::optional<std::string> frame;
                    try
                    {
                        frame = c->decoder.next();
                    }
                    catch (const Error& e)
                    {
                        parsed.push_back(Request{c, std::nullopt, "", e.what()});
                        broken = true;
                        break;
                    }
                    if (!frame)
                    {
                        break;
                    }
                    Request req{c, std::nullopt, "", ""};
                    try
                    {
                        auto j = parse_json(*frame);
                        if (j.is_object())
                        {
                            if (auto id = j.find("request_id"); id != j.end() && id->is_string())
                            {
                                req.request_id = id->get<std::string>();
                            }
                        }
                        req.message = parse_control_message(j);
                        req.request_id = req.message->request_id;
                    }
                    catch (const Error& e)
                    {
                        req.error = std::string("malformed message: ") + e.what();
                    }
                    parsed.push_back(std::move(req));
                }
                {
                    std::lock_guard lock(queue_mutex_);
                    for (auto& r : parsed)
                    {
                        queue_.push_back(std::move(r));
                    }
                }
                if (!broken)
                {
                    keep.push_back(c);
                }
            }
            conns = std::move(keep);
        }
    }

    void ControlServer::flush(Connection& c)
    {
        while (!c.outbox.empty())
        {
            auto& slot = c.outbox.front();
            if (!slot.response)
            {
                if (slot.pending->wait_for(std::chrono::seconds(0)) != std::future_status::ready)
                {
                    return;
                }
                slot.response = injection_response(slot.request_id, *slot.pending);
            }
            send_all(c.fd, encode_frame(to_json(*slot.response).dump()));
            c.outbox.pop_front();
        }
    }

    void ControlServer::poll(Simulation& sim)
    {
        ++polls_;
        std::deque<Request> batch;
        {
            std::lock_guard lock(queue_mutex_);
            batch.swap(queue_);
        }
        for (auto& req : batch)
        {
            Slot slot;
            slot.request_id = req.request_id;
            if (!req.message)
            {
                slot.response = error_response(req.request_id, req.error);
            }
            else
            {
                sim.trace("Control", "request '" + req.request_id + "'");
                auto result = handle_command(sim, *req.message);
                slot.response = std::move(result.response);
                slot.pending = std::move(result.pending);
            }
            req.conn->outbox.push_back(std::move(slot));
            if (std::find(outstanding_.begin(), outstanding_.end(), req.conn) == outstanding_.end())
            {
                outstanding_.push_back(req.conn);
            }
        }
        for (auto& c : outstanding_)
        {
            flush(*c);
        }
        std::erase_if(outstanding_, [](const std::shared_ptr<Connection>& c) { return c->outbox.empty(); });
    }

    void ControlServer::on_terminate(Simulation& sim)
    {
        // Requests still queued are answered against the terminated simulation.
        poll(sim);
        for (auto& c : outstanding_)
        {
            for (auto& slot : c->outbox)
            {
                if (!slot.response && slot.pending->wait_for(std::chrono::seconds(0)) != std::future_status::ready)
                {
                    slot.response = error_response(slot.request_id, "simulation terminated");
                }
            }
            flush(*c);
        }
        outstanding_.clear();
        sim_ = &sim;
        shutdown();
    }

    std::unique_ptr<ControlServer> serve(Simulation& sim, std::optional<fs::path> endpoint)
    {
        return std::make_unique<ControlServer>(sim, endpoint ? *endpoint : default_endpoint_path(sim));
    }

    fs::path resolve_endpoint(const fs::path& endpoint_or_run_dir)
    {
        std::error_code ec;
        if (fs::is_directory(endpoint_or_run_dir, ec))
        {
            auto file = endpoint_or_run_dir / "control.endpoint";
            if (!fs::exists(file, ec))
            {
                throw ConnectError("no control endpoint in '" + endpoint_or_run_dir.string() +
                                   "' (simulation not running or started without control)");
            }
            std::string text;
            try
            {
                text = read_text_file(file);
            }
            catch (const IoError& e)
            {
                throw ConnectError(e.what());
            }
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
            {
                text.pop_back();
            }
            return fs::path(text);
        }
        return endpoint_or_run_dir;
    }

    ControlClient::ControlClient(const fs::path& endpoint) : fd_(connect_to(endpoint)) {}

    ControlClient::~ControlClient()
    {
        if (fd_ >= 0)
        {
            ::close(fd_);
        }
    }

    void ControlClient::send(const json& message)
    {
        send_raw(message.dump());
    }

    void ControlClient::send_raw(std::string_view frame_payload)
    {
        if (!send_all(fd_, encode_frame(frame_payload)))
        {
            throw IoError(std::string("send failed: ") + std::strerror(errno));
        }
    }

    ControlResponse ControlClient::receive(std::chrono::milliseconds timeout)
    {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true)
        {
            if (auto frame = decoder_.next())
            {
                return response_from_json(parse_json(*frame));
            }
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0)
            {
                throw IoError("timed out waiting for a control response");
            }
            pollfd p{fd_, POLLIN, 0};
            int rc = ::poll(&p, 1, static_cast<int>(left.count()));
            if (rc < 0 && errno == EINTR)
            {
                continue;
            }
            if (rc <= 0)
            {
                continue;
            }
            char buf[4096];
            auto n = ::recv(fd_, buf, sizeof(buf), 0);
            if (n == 0)
            {
                throw IoError("control endpoint closed the connection");
            }
            if (n < 0)
            {
                if (errno == EINTR)
                {
                    continue;
                }
                throw IoError(std::string("recv failed: ") + std::strerror(errno));
            }
            decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        }
    }

    ControlResponse ControlClient::request(const json& message, std::chrono::milliseconds timeout)
    {
        send(message);
        return receive(timeout);
    }

    std::string next_request_id()
    {
        static std::atomic<std::uint64_t> counter{0};
        return std::to_string(::getpid()) + "-" + std::to_string(++counter);
    }
} // namespace simharness
