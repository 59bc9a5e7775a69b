#include "simharness/suites.hpp"

#include "simharness/digest.hpp"

#include <algorithm>

namespace simharness
{
    std::vector<ResolvedWorkload> suite_iter(const ResolvedSuite& s)
    {
        std::vector<ResolvedWorkload> out;
        out.reserve(s.size());
        for (const auto& m : s.members())
        {
            out.push_back(m.workload);
        }
        return out;
    }

    ResolvedSuite filter_by_input_group(const ResolvedSuite& s, const std::set<std::string>& tags,
                                        std::vector<std::string>& warnings)
    {
        std::set<std::string> present;
        for (const auto& m : s.members())
        {
            present.insert(m.input_groups.begin(), m.input_groups.end());
        }
        for (const auto& t : tags)
        {
            if (!present.contains(t))
            {
                warnings.push_back("suite '" + s.id() + "' has no input group '" + t + "'");
            }
        }

        std::vector<SuiteMember> kept;
        for (const auto& m : s.members())
        {
            bool hit = std::any_of(m.input_groups.begin(), m.input_groups.end(),
                                   [&](const std::string& g) { return tags.contains(g); });
            if (hit)
            {
                kept.push_back(m);
            }
        }

        // std::set iterates sorted
        std::string derived = s.id() + "#";
        bool first = true;
        for (const auto& t : tags)
        {
            if (!first)
            {
                derived += ",";
            }
            derived += t;
            first = false;
        }
        return ResolvedSuite(s.resource(), std::move(derived), std::move(kept));
    }

    std::string suite_fingerprint(const ResolvedSuite& s)
    {
        // Length-prefixed fields keep the encoding injective.
        std::string canon;
        auto put = [&](const std::string& field) {
            canon += std::to_string(field.size());
            canon += ':';
            canon += field;
        };
        put("suite");
        put(s.id());
        put(s.version());
        put(std::to_string(s.size()));
        for (const auto& m : s.members())
        {
            put(m.workload.id());
            put(m.workload.version());
        }
        return sha256_hex(canon);
    }
} // namespace simharness
