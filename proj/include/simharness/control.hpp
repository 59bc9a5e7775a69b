#pragma once

#include "simharness/error.hpp"
#include "simharness/json_io.hpp"
#include "simharness/simcore.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace simharness
{
    /// Frames are a 4-byte big-endian length followed by that many bytes of UTF-8 JSON.
    inline constexpr std::uint32_t kMaxFrameSize = 16u << 20;

    std::string encode_frame(std::string_view payload);

    /// Incremental frame splitter for a byte stream.
    class FrameDecoder
    {
    public:
        void feed(std::string_view bytes);

        /// Next complete frame, if buffered. Throws Error on an oversized length prefix.
        std::optional<std::string> next();

    private:
        std::string buffer_;
    };

    struct ControlMessage
    {
        enum class Type
        {
            GetStats,
            SetDebugFlags,
            Hypercall,
        };

        Type type = Type::GetStats;
        std::string request_id;
        std::vector<std::string> add;
        std::vector<std::string> remove;
        std::uint16_t num = 0;
        json payload;
    };

    /// Throws ConfigError describing what is wrong with the message.
    ControlMessage parse_control_message(const json& j);
    json to_json(const ControlMessage& m);

    struct ControlResponse
    {
        std::string request_id;
        bool ok = true;
        json body = json::object();
        std::string message;
    };

    ordered_json to_json(const ControlResponse& r);
    ControlResponse response_from_json(const json& j);

    /// Outcome of one command: an immediate response, or a pending injection
    /// acknowledged once the hypercall is dispatched.
    struct CommandResult
    {
        std::optional<ControlResponse> response;
        std::optional<std::future<InjectionAck>> pending;
    };

    /// Runs on the simulation thread.
    CommandResult handle_command(Simulation& sim, const ControlMessage& m);

    /// Builds the response for a finished (or failed) injection.
    ControlResponse injection_response(const std::string& request_id, std::future<InjectionAck>& ack);

    /// Path used when none is given: <run_dir>/control.sock, or a short path under
    /// the temp directory when that would exceed the socket path limit.
    std::filesystem::path default_endpoint_path(const Simulation& sim);

    /// Local socket endpoint bound to one simulation. A listener thread parses
    /// incoming frames and queues them; all command effects run on the simulation
    /// thread when it polls. Responses on a connection keep request order.
    class ControlServer : public ControlHook
    {
    public:
        /// Binds the endpoint, writes <run_dir>/control.endpoint and attaches
        /// itself to `sim`. Throws ConfigError if a live endpoint already uses the path.
        ControlServer(Simulation& sim, std::filesystem::path endpoint);
        ~ControlServer() override;

        ControlServer(const ControlServer&) = delete;
        ControlServer& operator=(const ControlServer&) = delete;

        const std::filesystem::path& endpoint() const noexcept { return endpoint_; }
        std::uint64_t polls() const noexcept { return polls_; }

        void poll(Simulation& sim) override;
        void on_terminate(Simulation& sim) override;

        /// Stops the listener and removes the endpoint; idempotent.
        void shutdown();

    private:
        struct Connection;
        struct Request;
        struct Slot;

        void listen_loop();
        void flush(Connection& c);

        Simulation* sim_;
        std::filesystem::path endpoint_;
        std::filesystem::path endpoint_file_;
        int listen_fd_ = -1;
        int wake_pipe_[2] = {-1, -1};
        std::atomic<bool> stop_{false};
        std::thread listener_;
        std::mutex queue_mutex_;
        std::deque<Request> queue_;
        std::vector<std::shared_ptr<Connection>> outstanding_;
        std::uint64_t polls_ = 0;
        bool shut_down_ = false;
    };

    /// Starts serving `sim` on `endpoint`, or on default_endpoint_path(sim).
    std::unique_ptr<ControlServer> serve(Simulation& sim, std::optional<std::filesystem::path> endpoint = {});

    /// The endpoint is unreachable.
    class ConnectError : public IoError
    {
    public:
        using IoError::IoError;
    };

    /// A run directory resolves through its control.endpoint file; anything else
    /// is taken as the socket path itself. Throws ConnectError.
    std::filesystem::path resolve_endpoint(const std::filesystem::path& endpoint_or_run_dir);

    class ControlClient
    {
    public:
        /// Throws ConnectError.
        explicit ControlClient(const std::filesystem::path& endpoint);
        ~ControlClient();

        ControlClient(const ControlClient&) = delete;
        ControlClient& operator=(const ControlClient&) = delete;

        void send(const json& message);
        void send_raw(std::string_view frame_payload);

        /// Waits for the next response frame. Throws IoError on timeout or disconnect.
        ControlResponse receive(std::chrono::milliseconds timeout = std::chrono::seconds(30));

        ControlResponse request(const json& message, std::chrono::milliseconds timeout = std::chrono::seconds(30));

    private:
        int fd_ = -1;
        FrameDecoder decoder_;
    };

    /// Fresh request id, unique within this process.
    std::string next_request_id();
} // namespace simharness
