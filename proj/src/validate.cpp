#include "simharness/validate.hpp"

#include "simharness/bridge.hpp"

#include <fstream>
#include <sstream>

namespace simharness
{
    namespace fs = std::filesystem;

    namespace
    {
        std::string join_nums(const std::vector<std::uint16_t>& nums)
        {
            std::string out = "[";
            for (std::size_t i = 0; i < nums.size(); ++i)
            {
                if (i > 0)
                {
                    out += ", ";
                }
                out += std::to_string(nums[i]);
            }
            return out + "]";
        }

        CheckResult check_roi(const std::vector<HypercallEvent>& events)
        {
            std::optional<std::uint64_t> open_tick;
            std::size_t regions = 0;
            for (const auto& e : events)
            {
                if (e.source != EventSource::Guest)
                {
                    continue;
                }
                if (e.num == 4)
                {
                    if (open_tick)
                    {
                        return {"roi_well_formed", false,
                                "nested start-of-ROI at tick " + std::to_string(e.tick) + " (already open since tick " +
                                    std::to_string(*open_tick) + ")"};
                    }
                    open_tick = e.tick;
                }
                else if (e.num == 5)
                {
                    if (!open_tick)
                    {
                        return {"roi_well_formed", false, "unmatched end-of-ROI at tick " + std::to_string(e.tick)};
                    }
                    open_tick.reset();
                    ++regions;
                }
            }
            if (open_tick)
            {
                return {"roi_well_formed", false,
                        "start-of-ROI at tick " + std::to_string(*open_tick) + " is never closed"};
            }
            return {"roi_well_formed", true, std::to_string(regions) + " region(s), all closed"};
        }
    } // namespace

    Expectation Expectation::parse(const json& j)
    {
        if (!j.is_object() || !j.contains("sequence") || !j["sequence"].is_array())
        {
            throw ConfigError("expectation needs a 'sequence' array");
        }
        Expectation exp;
        bool literal_roi_open = false;
        for (const auto& t : j["sequence"])
        {
            Token token;
            if (t.is_number_unsigned() || t.is_number_integer())
            {
                auto n = t.get<long long>();
                if (n < 0 || n > kMaxHypercallNum)
                {
                    throw ConfigError("hypercall number " + std::to_string(n) + " out of range in expectation");
                }
                token.num = static_cast<std::uint16_t>(n);
                if (token.num == 4)
                {
                    if (literal_roi_open)
                    {
                        throw ConfigError("expectation opens a region of interest twice");
                    }
                    literal_roi_open = true;
                }
                else if (token.num == 5)
                {
                    if (!literal_roi_open)
                    {
                        throw ConfigError("expectation closes a region of interest that was never opened");
                    }
                    literal_roi_open = false;
                }
            }
            else if (t == "roi")
            {
                token.kind = TokenKind::Roi;
            }
            else if (t == "any*")
            {
                token.kind = TokenKind::AnyStar;
            }
            else
            {
                throw ConfigError("unknown expectation token " + t.dump() + " (expected a number, \"roi\" or \"any*\")");
            }
            exp.sequence.push_back(token);
        }
        if (literal_roi_open)
        {
            throw ConfigError("expectation leaves a region of interest open");
        }
        if (auto it = j.find("terminal_cause"); it != j.end())
        {
            auto cause = terminal_cause_from_string(it->get<std::string>());
            if (!cause)
            {
                throw ConfigError("unknown terminal cause '" + it->get<std::string>() + "'");
            }
            exp.terminal_cause = *cause;
        }
        return exp;
    }

    ordered_json Expectation::to_json() const
    {
        ordered_json seq = ordered_json::array();
        for (const auto& t : sequence)
        {
            switch (t.kind)
            {
            case TokenKind::Literal:
                seq.push_back(t.num);
                break;
            case TokenKind::Roi:
                seq.push_back("roi");
                break;
            case TokenKind::AnyStar:
                seq.push_back("any*");
                break;
            }
        }
        ordered_json j;
        j["sequence"] = std::move(seq);
        j["terminal_cause"] = to_string(terminal_cause);
        return j;
    }

    std::string Expectation::describe() const
    {
        std::string out = "[";
        for (std::size_t i = 0; i < sequence.size(); ++i)
        {
            if (i > 0)
            {
                out += ", ";
            }
            switch (sequence[i].kind)
            {
            case TokenKind::Literal:
                out += std::to_string(sequence[i].num);
                break;
            case TokenKind::Roi:
                out += "roi";
                break;
            case TokenKind::AnyStar:
                out += "any*";
                break;
            }
        }
        return out + "]";
    }

    Expectation default_boot_expectation(bool with_roi)
    {
        using K = Expectation::TokenKind;
        Expectation exp;
        exp.sequence = {{K::Literal, 1}, {K::Literal, 2}};
        if (with_roi)
        {
            exp.sequence.push_back({K::Roi, 0});
        }
        exp.sequence.push_back({K::Literal, 3});
        return exp;
    }

    Expectation load_expectation(std::string_view source)
    {
        if (source == "default")
        {
            return default_boot_expectation(false);
        }
        if (source == "default-roi")
        {
            return default_boot_expectation(true);
        }
        return Expectation::parse(load_json_file(fs::path(source)));
    }

    bool matches_template(const std::vector<std::uint16_t>& nums, const Expectation& exp)
    {
        const auto n = nums.size();
        const auto m = exp.sequence.size();
        // reachable[i][j]: nums[i..] can still match tokens[j..]
        std::vector<std::vector<char>> memo(n + 1, std::vector<char>(m + 1, -1));
        auto match = [&](auto&& self, std::size_t i, std::size_t j) -> bool {
            if (memo[i][j] != -1)
            {
                return memo[i][j] != 0;
            }
            bool ok = false;
            if (j == m)
            {
                ok = i == n;
            }
            else
            {
                const auto& t = exp.sequence[j];
                switch (t.kind)
                {
                case Expectation::TokenKind::Literal:
                    ok = i < n && nums[i] == t.num && self(self, i + 1, j + 1);
                    break;
                case Expectation::TokenKind::AnyStar:
                    ok = self(self, i, j + 1) || (i < n && self(self, i + 1, j));
                    break;
                case Expectation::TokenKind::Roi:
                    if (i < n && nums[i] == 4)
                    {
                        std::size_t k = i + 1;
                        while (k < n && nums[k] != 4 && nums[k] != 5)
                        {
                            ++k;
                        }
                        ok = k < n && nums[k] == 5 && self(self, k + 1, j + 1);
                    }
                    break;
                }
            }
            memo[i][j] = ok ? 1 : 0;
            return ok;
        };
        return match(match, 0, 0);
    }

    bool ValidationReport::pass() const
    {
        for (const auto& c : checks)
        {
            if (!c.pass)
            {
                return false;
            }
        }
        return true;
    }

    std::string ValidationReport::render() const
    {
        std::string out;
        for (const auto& c : checks)
        {
            out += c.pass ? "✓ " : "✗ ";
            out += c.name + ": " + c.detail + "\n";
        }
        return out;
    }

    ordered_json ValidationReport::to_json() const
    {
        ordered_json j;
        j["pass"] = pass();
        j["expectation"] = expectation.to_json();
        ordered_json arr = ordered_json::array();
        for (const auto& c : checks)
        {
            ordered_json x;
            x["name"] = c.name;
            x["pass"] = c.pass;
            x["detail"] = c.detail;
            arr.push_back(std::move(x));
        }
        j["checks"] = std::move(arr);
        return j;
    }

    ValidationReport validate_events(const std::vector<HypercallEvent>& events, const json& result,
                                     const Expectation& exp)
    {
        ValidationReport report;
        report.expectation = exp;

        std::vector<std::uint16_t> nums;
        for (const auto& e : events)
        {
            if (e.source == EventSource::Guest)
            {
                nums.push_back(e.num);
            }
        }
        bool seq_ok = matches_template(nums, exp);
        report.checks.push_back({"hypercall_sequence", seq_ok,
                                 seq_ok ? "guest events " + join_nums(nums) + " match " + exp.describe()
                                        : "expected " + exp.describe() + ", observed " + join_nums(nums)});

        std::string cause = result.value("terminal_cause", std::string("<missing>"));
        std::string detail = result.value("detail", std::string());
        bool cause_ok = cause == to_string(exp.terminal_cause);
        std::string cause_text = cause_ok ? cause : "expected " + std::string(to_string(exp.terminal_cause)) +
                                                        ", observed " + cause;
        if (!detail.empty() && detail != cause)
        {
            cause_text += " (" + detail + ")";
        }
        report.checks.push_back({"terminal_cause", cause_ok, cause_text});

        report.checks.push_back(check_roi(events));

        std::string privilege = result.value("privilege", std::string("user"));
        bool bridge = result.value("bridge_device_present", false);
        if (privilege == "user" && bridge)
        {
            bool denied = cause == "guest_fault" && detail.find(kPermissionDenied) != std::string::npos;
            report.checks.push_back({"user_mode_bridge", !denied,
                                     denied ? "user-mode hypercall was denied: " + detail
                                            : "user-mode hypercalls reached the host"});
        }
        else
        {
            report.checks.push_back({"user_mode_bridge", true,
                                     "not applicable (privilege " + privilege + ", bridge device " +
                                         (bridge ? "present" : "absent") + ")"});
        }

        auto expected = result.find("expected_output_digest");
        if (expected != result.end() && expected->is_string())
        {
            auto observed = result.value("output_digest", std::string());
            bool ok = observed == expected->get<std::string>();
            report.checks.push_back({"workload_output", ok,
                                     ok ? "output digest matches" : "expected digest " + expected->get<std::string>() +
                                                                        ", observed " + observed});
        }
        else
        {
            report.checks.push_back({"workload_output", true, "no expected output declared"});
        }
        return report;
    }

    std::vector<HypercallEvent> read_event_log(const fs::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw IoError("cannot read event log '" + path.string() + "'");
        }
        std::vector<HypercallEvent> events;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty())
            {
                continue;
            }
            try
            {
                events.push_back(event_from_json(json::parse(line)));
            }
            catch (const std::exception& e)
            {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed event record: " + e.what());
            }
        }
        return events;
    }

    ValidationReport validate_run(const fs::path& run_dir, const Expectation& exp, bool write_report)
    {
        auto events_path = run_dir / "events.jsonl";
        auto result_path = run_dir / "result.json";
        std::error_code ec;
        for (const auto& p : {events_path, result_path})
        {
            if (!fs::is_regular_file(p, ec))
            {
                throw IoError("missing run file '" + p.string() + "'");
            }
        }
        json result;
        try
        {
            result = load_json_file(result_path);
        }
        catch (const ParseError& e)
        {
            throw IoError(std::string("unreadable result file: ") + e.what());
        }
        auto report = validate_events(read_event_log(events_path), result, exp);
        if (write_report)
        {
            write_text_file(run_dir / "validation.json", report.to_json().dump(2) + "\n");
        }
        return report;
    }

    std::map<std::string, ValidationReport> validate_multisim(const fs::path& out_root, const Expectation& exp)
    {
        auto report_path = out_root / "report.json";
        std::error_code ec;
        if (!fs::is_regular_file(report_path, ec))
        {
            throw IoError("missing multi-simulation report '" + report_path.string() + "'");
        }
        auto report = load_json_file(report_path);
        std::map<std::string, ValidationReport> out;
        for (const auto& entry : report.at("entries"))
        {
            auto id = entry.at("id").get<std::string>();
            try
            {
                out.emplace(id, validate_run(out_root / id, exp));
            }
            catch (const IoError& e)
            {
                ValidationReport r;
                r.expectation = exp;
                r.checks.push_back({"run_files", false, e.what()});
                out.emplace(id, std::move(r));
            }
        }
        return out;
    }
} // namespace simharness
