#pragma once

#include "simharness/exits.hpp"
#include "simharness/simcore.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace simharness
{
    /// Expected shape of a finished run's guest hypercall sequence.
    struct Expectation
    {
        enum class TokenKind
        {
            Literal,
            Roi,     // 4, any events other than 4 and 5, then 5
            AnyStar, // zero or more arbitrary events
        };

        struct Token
        {
            TokenKind kind = TokenKind::Literal;
            std::uint16_t num = 0;
        };

        std::vector<Token> sequence;
        TerminalCause terminal_cause = TerminalCause::ExitHypercall;

        /// {"sequence": [1, 2, "roi", 3], "terminal_cause": "exit_hypercall"}.
        /// Throws ConfigError for unknown tokens or unbalanced literal 4/5 markers.
        static Expectation parse(const json& j);
        ordered_json to_json() const;
        /// "[1, 2, roi, 3]"
        std::string describe() const;
    };

    /// Boot markers and exit, optionally with a region of interest before the exit.
    Expectation default_boot_expectation(bool with_roi);

    /// "default", "default-roi", or a path to an expectation file.
    Expectation load_expectation(std::string_view source);

    bool matches_template(const std::vector<std::uint16_t>& nums, const Expectation& exp);

    struct CheckResult
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    struct ValidationReport
    {
        std::vector<CheckResult> checks;
        Expectation expectation;

        bool pass() const;
        /// One "✓ name: detail" or "✗ name: detail" line per check.
        std::string render() const;
        ordered_json to_json() const;
    };

    /// Checks recorded events and result.json contents against the expectation.
    ValidationReport validate_events(const std::vector<HypercallEvent>& events, const json& result,
                                     const Expectation& exp);

    /// Reads events.jsonl and result.json from a run directory and writes
    /// validation.json next to them. Throws IoError when either file is missing
    /// or unreadable.
    ValidationReport validate_run(const std::filesystem::path& run_dir, const Expectation& exp,
                                  bool write_report = true);

    /// Validates every run listed in <out_root>/report.json. Runs whose files are
    /// missing get a single failing "run_files" check.
    std::map<std::string, ValidationReport> validate_multisim(const std::filesystem::path& out_root,
                                                              const Expectation& exp);

    std::vector<HypercallEvent> read_event_log(const std::filesystem::path& path);
} // namespace simharness
