#include "simharness/resources.hpp"

#include "simharness/error.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

namespace simharness
{
    namespace fs = std::filesystem;

    namespace
    {
        constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
            {Category::Binary, "binary"},     {Category::DiskImage, "disk-image"}, {Category::Kernel, "kernel"},
            {Category::Workload, "workload"}, {Category::Suite, "suite"},          {Category::File, "file"},
        };

        const std::set<std::string>& known_fields()
        {
            static const std::set<std::string> fields{"category",         "id",           "description", "architecture",
                                                      "url",              "resource_version", "gem5_versions"};
            return fields;
        }

        std::string upper(std::string_view s)
        {
            std::string out(s);
            for (auto& c : out)
            {
                c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            }
            return out;
        }

        fs::path resolve_url(const std::string& url, const fs::path& base_dir)
        {
            std::string rest;
            if (url.starts_with("file://"))
            {
                rest = url.substr(7);
            }
            else if (url.find("://") != std::string::npos)
            {
                return {};
            }
            else
            {
                rest = url;
            }
            if (rest.empty())
            {
                return {};
            }
            fs::path p(rest);
            if (p.is_relative())
            {
                p = base_dir / p;
            }
            return p.lexically_normal();
        }

        const json& required(const json& obj, const char* field, std::size_t index)
        {
            auto it = obj.find(field);
            if (it == obj.end())
            {
                throw SchemaError("catalog entry " + std::to_string(index) + ": missing required field '" + field + "'",
                                  field, index);
            }
            return *it;
        }

        std::string required_string(const json& obj, const char* field, std::size_t index)
        {
            const auto& v = required(obj, field, index);
            if (!v.is_string())
            {
                throw SchemaError("catalog entry " + std::to_string(index) + ": field '" + field + "' must be a string",
                                  field, index);
            }
            return v.get<std::string>();
        }

        std::size_t edit_distance(std::string_view a, std::string_view b)
        {
            std::vector<std::size_t> prev(b.size() + 1);
            std::vector<std::size_t> cur(b.size() + 1);
            for (std::size_t j = 0; j <= b.size(); ++j)
            {
                prev[j] = j;
            }
            for (std::size_t i = 1; i <= a.size(); ++i)
            {
                cur[0] = i;
                for (std::size_t j = 1; j <= b.size(); ++j)
                {
                    std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
                    cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
                }
                std::swap(prev, cur);
            }
            return prev[b.size()];
        }

        std::vector<std::string> nearest_ids(const CatalogChain& chain, std::string_view id)
        {
            std::vector<std::pair<std::size_t, std::string>> scored;
            std::set<std::string> seen;
            for (const auto& e : chain.entries())
            {
                if (seen.insert(e.descriptor.id).second)
                {
                    scored.emplace_back(edit_distance(id, e.descriptor.id), e.descriptor.id);
                }
            }
            std::sort(scored.begin(), scored.end());
            std::vector<std::string> out;
            for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
            {
                out.push_back(scored[i].second);
            }
            return out;
        }

        bool framework_compatible(const ResourceDescriptor& d, std::string_view framework_version)
        {
            return std::any_of(d.gem5_versions.begin(), d.gem5_versions.end(),
                               [&](const std::string& v) { return same_major_minor(v, framework_version); });
        }

        std::string join(const std::vector<std::string>& items, std::string_view sep)
        {
            std::string out;
            for (std::size_t i = 0; i < items.size(); ++i)
            {
                if (i != 0)
                {
                    out += sep;
                }
                out += items[i];
            }
            return out;
        }

        const CatalogChain::Entry& select_entry(std::string_view id, std::optional<std::string_view> constraint,
                                                const CatalogChain& chain, std::string_view framework_version)
        {
            auto candidates = chain.find(id);
            if (candidates.empty())
            {
                auto nearest = nearest_ids(chain, id);
                std::string msg = "resource '" + std::string(id) + "' not found";
                if (!nearest.empty())
                {
                    msg += "; nearest matches: " + join(nearest, ", ");
                }
                throw NotFoundError(msg, std::move(nearest));
            }
            auto vc = VersionConstraint::parse(constraint.value_or(""));
            const CatalogChain::Entry* best = nullptr;
            Semver best_version{};
            std::vector<std::string> available;
            for (const auto* c : candidates)
            {
                available.push_back(c->descriptor.resource_version + " (framework " +
                                    join(c->descriptor.gem5_versions, "/") + ")");
                auto v = c->descriptor.version();
                if (!v || !vc.matches(*v) || !framework_compatible(c->descriptor, framework_version))
                {
                    continue;
                }
                if (best == nullptr || *v > best_version)
                {
                    best = c;
                    best_version = *v;
                }
            }
            if (best == nullptr)
            {
                throw VersionConflictError("no version of '" + std::string(id) + "' satisfies '" + vc.to_string() +
                                               "' for framework " + std::string(framework_version) +
                                               "; available: " + join(available, ", "),
                                           std::move(available));
            }
            return *best;
        }

        ResolvedResource plain(const CatalogChain::Entry& e)
        {
            return ResolvedResource{e.descriptor, e.provenance};
        }

        ResolvedWorkload resolve_workload(const CatalogChain::Entry& entry, const CatalogChain& chain,
                                          std::string_view framework_version)
        {
            ResolvedWorkload w;
            w.resource = plain(entry);
            const auto& d = entry.descriptor;
            for (const auto& [role, ref] : workload_components(d))
            {
                const CatalogChain::Entry* comp = nullptr;
                try
                {
                    comp = &select_entry(ref.id, ref.constraint, chain, framework_version);
                }
                catch (const Error& e)
                {
                    throw DependencyError("workload '" + d.id + "': component '" + role + "' (" + ref.id + ", " +
                                          (ref.constraint.empty() ? "*" : ref.constraint) +
                                          ") cannot be resolved: " + e.what());
                }
                auto cat = comp->descriptor.category;
                if (cat == Category::Workload || cat == Category::Suite)
                {
                    throw DependencyError("workload '" + d.id + "': component '" + role + "' refers to a " +
                                          std::string(to_string(cat)));
                }
                w.components.emplace(role, plain(*comp));
            }
            if (auto it = d.extra.find("parameters"); it != d.extra.end() && it->is_object())
            {
                w.parameters = *it;
            }
            if (auto it = d.extra.find("additional_input"); it != d.extra.end() && it->is_string())
            {
                w.additional_input = it->get<std::string>();
            }
            if (auto it = d.extra.find("expected_output"); it != d.extra.end() && it->is_string())
            {
                w.expected_output_digest = it->get<std::string>();
            }
            return w;
        }

        ResolvedSuite resolve_suite(const CatalogChain::Entry& entry, const CatalogChain& chain,
                                    std::string_view framework_version)
        {
            const auto& d = entry.descriptor;
            std::vector<SuiteMember> members;
            std::set<std::string> ids;
            for (const auto& ref : suite_entries(d))
            {
                if (!ids.insert(ref.id).second)
                {
                    throw DependencyError("suite '" + d.id + "' lists workload '" + ref.id + "' twice");
                }
                const CatalogChain::Entry* w = nullptr;
                try
                {
                    w = &select_entry(ref.id, ref.resource_version, chain, framework_version);
                }
                catch (const Error& e)
                {
                    throw DependencyError("suite '" + d.id + "': workload (" + ref.id + ", " + ref.resource_version +
                                          ") cannot be resolved: " + e.what());
                }
                if (w->descriptor.category != Category::Workload)
                {
                    throw DependencyError("suite '" + d.id + "': member '" + ref.id + "' is not a workload");
                }
                members.push_back(SuiteMember{resolve_workload(*w, chain, framework_version), ref.input_groups});
            }
            return ResolvedSuite(plain(entry), d.id, std::move(members));
        }
    } // namespace

    std::string_view to_string(Category c)
    {
        for (const auto& [cat, name] : kCategoryNames)
        {
            if (cat == c)
            {
                return name;
            }
        }
        return "file";
    }

    std::optional<Category> category_from_string(std::string_view s)
    {
        for (const auto& [cat, name] : kCategoryNames)
        {
            if (name == s)
            {
                return cat;
            }
        }
        return std::nullopt;
    }

    std::string_view to_string(Architecture a)
    {
        switch (a)
        {
        case Architecture::X86:
            return "X86";
        case Architecture::ARM:
            return "ARM";
        case Architecture::RISCV:
            return "RISCV";
        case Architecture::ANY:
            return "ANY";
        case Architecture::Unknown:
            return "UNKNOWN";
        }
        return "UNKNOWN";
    }

    Architecture architecture_from_string(std::string_view s)
    {
        if (s.size() >= 2 && s.front() == '<' && s.back() == '>')
        {
            return Architecture::ANY;
        }
        auto u = upper(s);
        if (u == "X86" || u == "X86_64")
        {
            return Architecture::X86;
        }
        if (u == "ARM" || u == "AARCH64")
        {
            return Architecture::ARM;
        }
        if (u == "RISCV" || u == "RISCV64")
        {
            return Architecture::RISCV;
        }
        if (u == "ANY" || u.empty())
        {
            return Architecture::ANY;
        }
        return Architecture::Unknown;
    }

    std::vector<ResourceDescriptor> parse_catalog(std::string_view json_text, const fs::path& base_dir)
    {
        auto doc = parse_json(blank_trailing_commas(json_text));
        if (!doc.is_array())
        {
            throw SchemaError("catalog root must be a JSON array", "<root>", 0);
        }
        std::vector<ResourceDescriptor> out;
        out.reserve(doc.size());
        for (std::size_t i = 0; i < doc.size(); ++i)
        {
            const auto& obj = doc[i];
            if (!obj.is_object())
            {
                throw SchemaError("catalog entry " + std::to_string(i) + " is not an object", "<entry>", i);
            }
            ResourceDescriptor d;
            auto category = required_string(obj, "category", i);
            auto cat = category_from_string(category);
            if (!cat)
            {
                throw SchemaError("catalog entry " + std::to_string(i) + ": unknown category '" + category + "'",
                                  "category", i);
            }
            d.category = *cat;
            d.id = required_string(obj, "id", i);
            d.url = required_string(obj, "url", i);
            d.resource_version = required_string(obj, "resource_version", i);
            const auto& versions = required(obj, "gem5_versions", i);
            if (!versions.is_array() ||
                !std::all_of(versions.begin(), versions.end(), [](const json& v) { return v.is_string(); }))
            {
                throw SchemaError("catalog entry " + std::to_string(i) +
                                      ": field 'gem5_versions' must be an array of strings",
                                  "gem5_versions", i);
            }
            d.gem5_versions = versions.get<std::vector<std::string>>();
            if (auto it = obj.find("description"); it != obj.end() && it->is_string())
            {
                d.description = it->get<std::string>();
            }
            if (auto it = obj.find("architecture"); it != obj.end() && it->is_string())
            {
                d.architecture_text = it->get<std::string>();
                d.architecture = architecture_from_string(d.architecture_text);
            }
            d.local_path = resolve_url(d.url, base_dir);
            for (const auto& [key, value] : obj.items())
            {
                if (!known_fields().contains(key))
                {
                    d.extra[key] = value;
                }
            }
            out.push_back(std::move(d));
        }
        return out;
    }

    std::vector<ResourceDescriptor> load_catalog_file(const fs::path& path)
    {
        auto text = read_text_file(path);
        auto base = fs::absolute(path).parent_path();
        try
        {
            return parse_catalog(text, base);
        }
        catch (const ParseError& e)
        {
            throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
        }
        catch (const SchemaError& e)
        {
            throw SchemaError(path.string() + ": " + e.what(), e.field(), e.entry_index());
        }
    }

    json serialize_descriptor(const ResourceDescriptor& d)
    {
        json out = d.extra.is_object() ? d.extra : json::object();
        out["category"] = to_string(d.category);
        out["id"] = d.id;
        out["description"] = d.description;
        out["architecture"] = d.architecture_text.empty() ? std::string(to_string(d.architecture)) : d.architecture_text;
        out["url"] = d.url;
        out["resource_version"] = d.resource_version;
        out["gem5_versions"] = d.gem5_versions;
        return out;
    }

    std::vector<std::string> validate_descriptor(const ResourceDescriptor& d, std::string_view framework_version)
    {
        std::vector<std::string> violations;
        if (d.id.empty())
        {
            violations.emplace_back("id is empty");
        }
        if (!d.version())
        {
            violations.emplace_back("resource_version not MAJOR.MINOR.PATCH");
        }
        if (d.gem5_versions.empty())
        {
            violations.emplace_back("gem5_versions is empty");
        }
        else if (!framework_compatible(d, framework_version))
        {
            violations.emplace_back("incompatible framework version");
        }
        if (d.architecture == Architecture::Unknown)
        {
            violations.push_back("unknown architecture '" + d.architecture_text + "'");
        }
        bool composite = d.category == Category::Workload || d.category == Category::Suite;
        if (d.local_path.empty() && !(composite && d.url.empty()))
        {
            violations.push_back("unsupported url '" + d.url + "'");
        }
        try
        {
            if (d.category == Category::Workload)
            {
                for (const auto& [role, ref] : workload_components(d))
                {
                    if (!workload_roles().contains(role))
                    {
                        violations.push_back("unknown workload role '" + role + "'");
                    }
                    try
                    {
                        (void)VersionConstraint::parse(ref.constraint);
                    }
                    catch (const ConfigError& e)
                    {
                        violations.emplace_back(e.what());
                    }
                }
            }
            else if (d.category == Category::Suite)
            {
                std::set<std::string> ids;
                for (const auto& ref : suite_entries(d))
                {
                    if (!ids.insert(ref.id).second)
                    {
                        violations.push_back("workload '" + ref.id + "' listed twice");
                    }
                }
            }
        }
        catch (const SchemaError& e)
        {
            violations.emplace_back(e.what());
        }
        return violations;
    }

    std::map<std::string, ComponentRef> workload_components(const ResourceDescriptor& d, std::size_t entry_index)
    {
        std::map<std::string, ComponentRef> out;
        auto it = d.extra.find("resources");
        if (it == d.extra.end())
        {
            return out;
        }
        if (!it->is_object())
        {
            throw SchemaError("workload '" + d.id + "': 'resources' must be an object", "resources", entry_index);
        }
        for (const auto& [role, ref] : it->items())
        {
            ComponentRef c;
            if (ref.is_string())
            {
                c.id = ref.get<std::string>();
            }
            else if (ref.is_object() && ref.contains("id") && ref["id"].is_string())
            {
                c.id = ref["id"].get<std::string>();
                if (auto v = ref.find("version"); v != ref.end())
                {
                    if (!v->is_string())
                    {
                        throw SchemaError("workload '" + d.id + "': version of role '" + role + "' must be a string",
                                          "resources", entry_index);
                    }
                    c.constraint = v->get<std::string>();
                }
            }
            else
            {
                throw SchemaError("workload '" + d.id + "': role '" + role + "' must name an id", "resources",
                                  entry_index);
            }
            out.emplace(role, std::move(c));
        }
        return out;
    }

    std::vector<SuiteEntryRef> suite_entries(const ResourceDescriptor& d, std::size_t entry_index)
    {
        std::vector<SuiteEntryRef> out;
        auto it = d.extra.find("workloads");
        if (it == d.extra.end())
        {
            return out;
        }
        if (!it->is_array())
        {
            throw SchemaError("suite '" + d.id + "': 'workloads' must be an array", "workloads", entry_index);
        }
        for (const auto& w : *it)
        {
            if (!w.is_object() || !w.contains("id") || !w["id"].is_string())
            {
                throw SchemaError("suite '" + d.id + "': every workload needs a string 'id'", "workloads",
                                  entry_index);
            }
            SuiteEntryRef ref;
            ref.id = w["id"].get<std::string>();
            if (auto v = w.find("resource_version"); v != w.end() && v->is_string())
            {
                ref.resource_version = v->get<std::string>();
            }
            if (auto g = w.find("input_groups"); g != w.end())
            {
                if (!g->is_array() || !std::all_of(g->begin(), g->end(), [](const json& t) { return t.is_string(); }))
                {
                    throw SchemaError("suite '" + d.id + "': input_groups of '" + ref.id + "' must be strings",
                                      "workloads", entry_index);
                }
                for (const auto& t : *g)
                {
                    ref.input_groups.insert(t.get<std::string>());
                }
            }
            out.push_back(std::move(ref));
        }
        return out;
    }

    void CatalogChain::add_catalog(std::vector<ResourceDescriptor> descriptors, std::string provenance)
    {
        std::set<std::pair<std::string, std::string>> local;
        for (std::size_t i = 0; i < descriptors.size(); ++i)
        {
            const auto& d = descriptors[i];
            if (!local.emplace(d.id, d.resource_version).second)
            {
                throw SchemaError(provenance + ": duplicate resource (" + d.id + ", " + d.resource_version + ")", "id",
                                  i);
            }
        }
        for (auto& d : descriptors)
        {
            auto existing = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
                return e.descriptor.id == d.id && e.descriptor.resource_version == d.resource_version;
            });
            if (existing != entries_.end())
            {
                warnings_.push_back("resource (" + d.id + ", " + d.resource_version + ") from " + provenance +
                                    " shadows the definition from " + existing->provenance);
                *existing = Entry{std::move(d), provenance};
            }
            else
            {
                entries_.push_back(Entry{std::move(d), provenance});
            }
        }
        sources_.push_back(std::move(provenance));
    }

    void CatalogChain::add_catalog_file(const fs::path& path)
    {
        add_catalog(load_catalog_file(path), fs::absolute(path).lexically_normal().string());
    }

    void CatalogChain::check_references() const
    {
        auto satisfiable = [&](const std::string& id, const std::string& constraint) {
            auto vc = VersionConstraint::parse(constraint);
            for (const auto* e : find(id))
            {
                auto v = e->descriptor.version();
                if (v && vc.matches(*v))
                {
                    return true;
                }
            }
            return false;
        };
        for (const auto& e : entries_)
        {
            const auto& d = e.descriptor;
            if (d.category == Category::Workload)
            {
                for (const auto& [role, ref] : workload_components(d))
                {
                    if (!satisfiable(ref.id, ref.constraint))
                    {
                        throw DependencyError("workload '" + d.id + "' role '" + role + "' references missing (" +
                                              ref.id + ", " + (ref.constraint.empty() ? "*" : ref.constraint) + ")");
                    }
                }
            }
            else if (d.category == Category::Suite)
            {
                for (const auto& ref : suite_entries(d))
                {
                    if (!satisfiable(ref.id, ref.resource_version))
                    {
                        throw DependencyError("suite '" + d.id + "' references missing (" + ref.id + ", " +
                                              ref.resource_version + ")");
                    }
                }
            }
        }
    }

    CatalogChain CatalogChain::load(const std::vector<fs::path>& paths)
    {
        CatalogChain chain;
        for (const auto& p : paths)
        {
            chain.add_catalog_file(p);
        }
        chain.check_references();
        return chain;
    }

    std::vector<const CatalogChain::Entry*> CatalogChain::find(std::string_view id) const
    {
        std::vector<const Entry*> out;
        for (const auto& e : entries_)
        {
            if (e.descriptor.id == id)
            {
                out.push_back(&e);
            }
        }
        return out;
    }

    const CatalogChain::Entry* CatalogChain::find(std::string_view id, std::string_view version) const
    {
        for (const auto& e : entries_)
        {
            if (e.descriptor.id == id && e.descriptor.resource_version == version)
            {
                return &e;
            }
        }
        return nullptr;
    }

    const ResolvedResource* ResolvedWorkload::component(std::string_view role) const
    {
        auto it = components.find(std::string(role));
        return it == components.end() ? nullptr : &it->second;
    }

    ResolvedSuite::ResolvedSuite(ResolvedResource resource, std::string id, std::vector<SuiteMember> members)
        : resource_(std::move(resource)), id_(std::move(id)), members_(std::move(members))
    {
    }

    Resolution obtain_resource(std::string_view id, std::optional<std::string_view> constraint,
                               const CatalogChain& chain, std::string_view framework_version)
    {
        const auto& entry = select_entry(id, constraint, chain, framework_version);
        switch (entry.descriptor.category)
        {
        case Category::Workload:
            return resolve_workload(entry, chain, framework_version);
        case Category::Suite:
            return resolve_suite(entry, chain, framework_version);
        default:
            return plain(entry);
        }
    }

    ResolvedWorkload obtain_workload(std::string_view id, std::optional<std::string_view> constraint,
                                     const CatalogChain& chain, std::string_view framework_version)
    {
        auto r = obtain_resource(id, constraint, chain, framework_version);
        if (auto* w = std::get_if<ResolvedWorkload>(&r))
        {
            return std::move(*w);
        }
        if (std::holds_alternative<ResolvedSuite>(r))
        {
            throw ConfigError("suite given; use multisim");
        }
        throw ConfigError("resource '" + std::string(id) + "' is not a workload");
    }

    ResolvedSuite obtain_suite(std::string_view id, std::optional<std::string_view> constraint,
                               const CatalogChain& chain, std::string_view framework_version)
    {
        auto r = obtain_resource(id, constraint, chain, framework_version);
        if (auto* s = std::get_if<ResolvedSuite>(&r))
        {
            return std::move(*s);
        }
        throw ConfigError("resource '" + std::string(id) + "' is not a suite");
    }
} // namespace simharness
