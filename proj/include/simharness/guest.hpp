#pragma once

#include "simharness/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace simharness
{
    enum class Privilege
    {
        User,
        Root,
    };

    std::string_view to_string(Privilege p);

    struct Phase;

    struct ExecPhase
    {
        std::uint64_t instructions = 0;
    };

    struct HypercallPhase
    {
        std::uint16_t num = 0;
        std::uint64_t arg = 0;
    };

    struct MmioWritePhase
    {
        std::uint16_t offset = 0;
        std::uint64_t value = 0;
    };

    struct FaultPhase
    {
        std::string message;
    };

    struct RepeatPhase
    {
        std::uint64_t count = 0;
        std::vector<Phase> body;
    };

    /// One step of a guest program script.
    struct Phase
    {
        std::variant<ExecPhase, HypercallPhase, MmioWritePhase, FaultPhase, RepeatPhase> op;

        static Phase exec(std::uint64_t instructions) { return {ExecPhase{instructions}}; }
        static Phase hypercall(std::uint16_t num, std::uint64_t arg = 0) { return {HypercallPhase{num, arg}}; }
        static Phase mmio_write(std::uint16_t offset, std::uint64_t value) { return {MmioWritePhase{offset, value}}; }
        static Phase fault(std::string message) { return {FaultPhase{std::move(message)}}; }
        static Phase repeat(std::uint64_t count, std::vector<Phase> body)
        {
            return {RepeatPhase{count, std::move(body)}};
        }
    };

    inline constexpr std::size_t kMaxRepeatDepth = 16;
    inline constexpr std::uint16_t kMaxHypercallNum = 255;

    /// The modeled analog of a benchmark binary.
    struct GuestProgram
    {
        std::vector<Phase> phases;
        Privilege privilege = Privilege::User;
    };

    /// Boot skeleton of a disk image: boot work, hypercall 1, init work,
    /// hypercall 2, the run script, hypercall 3.
    struct GuestImage
    {
        std::uint64_t boot_instructions = 0;
        std::uint64_t init_instructions = 0;
        std::optional<GuestProgram> run_script;
        bool bridge_device_present = false;
    };

    /// Parsing enforces the nesting limit and the hypercall number range.
    /// Throws ConfigError.
    GuestProgram parse_program(const json& j);
    GuestImage parse_image(const json& j);
    GuestProgram load_program_file(const std::filesystem::path& path);
    GuestImage load_image_file(const std::filesystem::path& path);

    json to_json(const Phase& p);
    json to_json(const GuestProgram& p);
    json to_json(const GuestImage& img);

    /// Sum of instructions over all exec phases, repeats expanded (saturating).
    std::uint64_t count_instructions(const std::vector<Phase>& phases);
} // namespace simharness
