#pragma once

#include "simharness/json_io.hpp"
#include "simharness/semver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace simharness
{
    enum class Category
    {
        Binary,
        DiskImage,
        Kernel,
        Workload,
        Suite,
        File,
    };

    enum class Architecture
    {
        X86,
        ARM,
        RISCV,
        ANY,
        Unknown,
    };

    std::string_view to_string(Category c);
    std::optional<Category> category_from_string(std::string_view s);
    std::string_view to_string(Architecture a);

    /// Case-insensitive. A template placeholder such as `<ISA>` maps to ANY;
    /// anything else unrecognised maps to Unknown.
    Architecture architecture_from_string(std::string_view s);

    /// One catalog entry.
    struct ResourceDescriptor
    {
        Category category = Category::File;
        std::string id;
        std::string description;
        Architecture architecture = Architecture::ANY;
        std::string architecture_text; // as written in the catalog; empty when absent
        std::string url;
        std::filesystem::path local_path; // resolved from url; empty for unsupported schemes
        std::string resource_version;
        std::vector<std::string> gem5_versions;
        json extra = json::object(); // every other field, category-specific ones included

        std::optional<Semver> version() const { return Semver::parse(resource_version); }
    };

    /// Parses a catalog (a JSON array of descriptor objects). Relative urls are
    /// resolved against base_dir. Throws ParseError or SchemaError.
    std::vector<ResourceDescriptor> parse_catalog(std::string_view json_text, const std::filesystem::path& base_dir);

    std::vector<ResourceDescriptor> load_catalog_file(const std::filesystem::path& path);

    /// Inverse of parse_catalog for a single entry.
    json serialize_descriptor(const ResourceDescriptor& d);

    /// Returns the list of violations; empty means the descriptor is usable
    /// with the given framework version.
    std::vector<std::string> validate_descriptor(const ResourceDescriptor& d, std::string_view framework_version);

    /// Reference from a workload or suite to another catalog entry.
    struct ComponentRef
    {
        std::string id;
        std::string constraint; // empty means any version
    };

    inline const std::set<std::string>& workload_roles()
    {
        static const std::set<std::string> roles{"image", "kernel", "binary"};
        return roles;
    }

    /// Reads the `resources` map of a workload entry. Throws SchemaError.
    std::map<std::string, ComponentRef> workload_components(const ResourceDescriptor& d, std::size_t entry_index = 0);

    struct SuiteEntryRef
    {
        std::string id;
        std::string resource_version;
        std::set<std::string> input_groups;
    };

    /// Reads the `workloads` list of a suite entry. Throws SchemaError.
    std::vector<SuiteEntryRef> suite_entries(const ResourceDescriptor& d, std::size_t entry_index = 0);

    /// Ordered set of catalogs. Later catalogs shadow earlier ones on exact
    /// (id, version) collisions. Immutable once loaded.
    class CatalogChain
    {
    public:
        struct Entry
        {
            ResourceDescriptor descriptor;
            std::string provenance;
        };

        /// Throws SchemaError when the catalog itself repeats an (id, version).
        void add_catalog(std::vector<ResourceDescriptor> descriptors, std::string provenance);
        void add_catalog_file(const std::filesystem::path& path);

        /// Throws DependencyError for workload/suite references that match no entry.
        void check_references() const;

        /// Loads every file in order, then checks references.
        static CatalogChain load(const std::vector<std::filesystem::path>& paths);

        const std::vector<Entry>& entries() const noexcept { return entries_; }
        std::vector<const Entry*> find(std::string_view id) const;
        const Entry* find(std::string_view id, std::string_view version) const;
        const std::vector<std::string>& warnings() const noexcept { return warnings_; }
        const std::vector<std::string>& sources() const noexcept { return sources_; }

    private:
        std::vector<Entry> entries_;
        std::vector<std::string> warnings_;
        std::vector<std::string> sources_;
    };

    struct ResolvedResource
    {
        ResourceDescriptor descriptor;
        std::string provenance;

        const std::string& id() const noexcept { return descriptor.id; }
        const std::string& version() const noexcept { return descriptor.resource_version; }
        const std::filesystem::path& local_path() const noexcept { return descriptor.local_path; }
    };

    /// Everything needed to run one benchmark invocation.
    struct ResolvedWorkload
    {
        ResolvedResource resource;
        std::map<std::string, ResolvedResource> components; // role -> component
        json parameters = json::object();
        std::optional<std::string> additional_input;
        std::optional<std::string> expected_output_digest;

        const std::string& id() const noexcept { return resource.id(); }
        const std::string& version() const noexcept { return resource.version(); }
        const ResolvedResource* component(std::string_view role) const;
    };

    struct SuiteMember
    {
        ResolvedWorkload workload;
        std::set<std::string> input_groups;
    };

    /// A fixed collection of workloads. Membership never changes after construction;
    /// filtering produces a new suite.
    class ResolvedSuite
    {
    public:
        ResolvedSuite(ResolvedResource resource, std::string id, std::vector<SuiteMember> members);

        const std::string& id() const noexcept { return id_; }
        const std::string& version() const noexcept { return resource_.version(); }
        const ResolvedResource& resource() const noexcept { return resource_; }
        const std::vector<SuiteMember>& members() const noexcept { return members_; }
        std::size_t size() const noexcept { return members_.size(); }

    private:
        ResolvedResource resource_;
        std::string id_;
        std::vector<SuiteMember> members_;
    };

    using Resolution = std::variant<ResolvedResource, ResolvedWorkload, ResolvedSuite>;

    /// Picks the highest resource_version that satisfies the constraint and the
    /// framework version, then resolves workload and suite components recursively.
    /// Throws NotFoundError, VersionConflictError or DependencyError.
    Resolution obtain_resource(std::string_view id, std::optional<std::string_view> constraint,
                               const CatalogChain& chain, std::string_view framework_version);

    /// Same as obtain_resource but requires the workload category (ConfigError otherwise).
    ResolvedWorkload obtain_workload(std::string_view id, std::optional<std::string_view> constraint,
                                     const CatalogChain& chain, std::string_view framework_version);

    ResolvedSuite obtain_suite(std::string_view id, std::optional<std::string_view> constraint,
                               const CatalogChain& chain, std::string_view framework_version);

    /// Framework release this build identifies as.
    inline constexpr std::string_view kFrameworkVersion = "25.0";
} // namespace simharness
