#include "simharness/guest.hpp"

#include "simharness/error.hpp"

#include <limits>

namespace simharness
{
    namespace
    {
        std::uint64_t get_u64(const json& j, const char* key, bool required = true)
        {
            auto it = j.find(key);
            if (it == j.end())
            {
                if (required)
                {
                    throw ConfigError(std::string("phase is missing '") + key + "'");
                }
                return 0;
            }
            if (!is_non_negative_integer(*it))
            {
                throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
            }
            return it->get<std::uint64_t>();
        }

        std::vector<Phase> parse_phases(const json& arr, std::size_t depth)
        {
            if (!arr.is_array())
            {
                throw ConfigError("phase list must be an array");
            }
            std::vector<Phase> out;
            out.reserve(arr.size());
            for (const auto& p : arr)
            {
                if (!p.is_object() || !p.contains("op") || !p["op"].is_string())
                {
                    throw ConfigError("every phase needs a string 'op'");
                }
                auto op = p["op"].get<std::string>();
                if (op == "exec")
                {
                    out.push_back(Phase::exec(get_u64(p, "instructions")));
                }
                else if (op == "hypercall")
                {
                    auto num = get_u64(p, "num");
                    if (num > kMaxHypercallNum)
                    {
                        throw ConfigError("hypercall number " + std::to_string(num) + " exceeds " +
                                          std::to_string(kMaxHypercallNum));
                    }
                    out.push_back(Phase::hypercall(static_cast<std::uint16_t>(num), get_u64(p, "arg", false)));
                }
                else if (op == "mmio_write")
                {
                    auto offset = get_u64(p, "offset");
                    if (offset > std::numeric_limits<std::uint16_t>::max())
                    {
                        throw ConfigError("mmio offset " + std::to_string(offset) + " does not fit 16 bits");
                    }
                    out.push_back(Phase::mmio_write(static_cast<std::uint16_t>(offset), get_u64(p, "value", false)));
                }
                else if (op == "fault")
                {
                    std::string msg = "guest fault";
                    if (auto it = p.find("message"); it != p.end() && it->is_string())
                    {
                        msg = it->get<std::string>();
                    }
                    out.push_back(Phase::fault(std::move(msg)));
                }
                else if (op == "repeat")
                {
                    if (depth + 1 > kMaxRepeatDepth)
                    {
                        throw ConfigError("repeat nesting exceeds depth " + std::to_string(kMaxRepeatDepth));
                    }
                    if (!p.contains("body"))
                    {
                        throw ConfigError("repeat phase is missing 'body'");
                    }
                    out.push_back(Phase::repeat(get_u64(p, "count"), parse_phases(p["body"], depth + 1)));
                }
                else
                {
                    throw ConfigError("unknown phase op '" + op + "'");
                }
            }
            return out;
        }
    } // namespace

    std::string_view to_string(Privilege p)
    {
        return p == Privilege::Root ? "root" : "user";
    }

    GuestProgram parse_program(const json& j)
    {
        if (!j.is_object())
        {
            throw ConfigError("guest program must be a JSON object");
        }
        GuestProgram prog;
        if (auto it = j.find("privilege"); it != j.end())
        {
            if (*it == "root")
            {
                prog.privilege = Privilege::Root;
            }
            else if (*it == "user")
            {
                prog.privilege = Privilege::User;
            }
            else
            {
                throw ConfigError("privilege must be 'user' or 'root'");
            }
        }
        if (auto it = j.find("phases"); it != j.end())
        {
            prog.phases = parse_phases(*it, 0);
        }
        return prog;
    }

    GuestImage parse_image(const json& j)
    {
        if (!j.is_object())
        {
            throw ConfigError("guest image must be a JSON object");
        }
        GuestImage img;
        img.boot_instructions = get_u64(j, "boot_instructions", false);
        img.init_instructions = get_u64(j, "init_instructions", false);
        if (auto it = j.find("bridge_device_present"); it != j.end())
        {
            if (!it->is_boolean())
            {
                throw ConfigError("bridge_device_present must be a boolean");
            }
            img.bridge_device_present = it->get<bool>();
        }
        if (auto it = j.find("run_script"); it != j.end() && !it->is_null())
        {
            img.run_script = parse_program(*it);
        }
        return img;
    }

    GuestProgram load_program_file(const std::filesystem::path& path)
    {
        try
        {
            return parse_program(load_json_file(path));
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    GuestImage load_image_file(const std::filesystem::path& path)
    {
        try
        {
            return parse_image(load_json_file(path));
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    json to_json(const Phase& p)
    {
        return std::visit(
            [](const auto& op) -> json {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, ExecPhase>)
                {
                    return {{"op", "exec"}, {"instructions", op.instructions}};
                }
                else if constexpr (std::is_same_v<T, HypercallPhase>)
                {
                    return {{"op", "hypercall"}, {"num", op.num}, {"arg", op.arg}};
                }
                else if constexpr (std::is_same_v<T, MmioWritePhase>)
                {
                    return {{"op", "mmio_write"}, {"offset", op.offset}, {"value", op.value}};
                }
                else if constexpr (std::is_same_v<T, FaultPhase>)
                {
                    return {{"op", "fault"}, {"message", op.message}};
                }
                else
                {
                    json body = json::array();
                    for (const auto& b : op.body)
                    {
                        body.push_back(to_json(b));
                    }
                    return {{"op", "repeat"}, {"count", op.count}, {"body", body}};
                }
            },
            p.op);
    }

    json to_json(const GuestProgram& p)
    {
        json phases = json::array();
        for (const auto& ph : p.phases)
        {
            phases.push_back(to_json(ph));
        }
        return {{"privilege", to_string(p.privilege)}, {"phases", phases}};
    }

    json to_json(const GuestImage& img)
    {
        json j = {{"boot_instructions", img.boot_instructions},
                  {"init_instructions", img.init_instructions},
                  {"bridge_device_present", img.bridge_device_present}};
        j["run_script"] = img.run_script ? to_json(*img.run_script) : json(nullptr);
        return j;
    }

    std::uint64_t count_instructions(const std::vector<Phase>& phases)
    {
        constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
        std::uint64_t total = 0;
        auto add = [&](std::uint64_t v) { total = (kMax - total < v) ? kMax : total + v; };
        for (const auto& p : phases)
        {
            if (const auto* e = std::get_if<ExecPhase>(&p.op))
            {
                add(e->instructions);
            }
            else if (const auto* r = std::get_if<RepeatPhase>(&p.op))
            {
                auto inner = static_cast<unsigned __int128>(count_instructions(r->body)) * r->count;
                add(inner > kMax ? kMax : static_cast<std::uint64_t>(inner));
            }
        }
        return total;
    }
} // namespace simharness
