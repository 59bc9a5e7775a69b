#pragma once

namespace simharness
{
    /// Process exit statuses of the `simharness` command.
    namespace exit_status
    {
        inline constexpr int ok = 0;
        inline constexpr int outcome_failed = 1;   // run did not exit cleanly, validation failed, entry failed
        inline constexpr int usage = 2;            // bad flags, configuration or input documents
        inline constexpr int unreachable = 2;      // control endpoint not reachable; same status as usage errors
        inline constexpr int io = 3;               // missing or unwritable files
        inline constexpr int resolution = 4;       // catalog schema, lookup or dependency failure
        inline constexpr int command_rejected = 5; // control endpoint answered with an error
        inline constexpr int internal = 70;
    } // namespace exit_status

    int run_cli(int argc, char** argv);
} // namespace simharness
