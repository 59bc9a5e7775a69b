#pragma once

#include "simharness/resources.hpp"

#include <set>
#include <string>
#include <vector>

namespace simharness
{
    /// Workloads of a suite in declaration order.
    std::vector<ResolvedWorkload> suite_iter(const ResolvedSuite& s);

    /// New suite holding the members whose input groups intersect `tags`.
    /// The derived id is `<parent-id>#<tags sorted, comma-joined>`. Tags that no
    /// member carries are reported through `warnings`.
    ResolvedSuite filter_by_input_group(const ResolvedSuite& s, const std::set<std::string>& tags,
                                        std::vector<std::string>& warnings);

    /// Content digest over suite id, version and the ordered member (id, version) list.
    std::string suite_fingerprint(const ResolvedSuite& s);
} // namespace simharness
