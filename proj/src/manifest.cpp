#include "respir/manifest.hpp"

#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <json.hpp>

namespace respir {

using nlohmann::json;

void validate(const RecordingManifest& manifest) {
    if (manifest.entries.empty()) {
        throw ManifestError(ManifestError::Code::EmptyManifest, "empty manifest");
    }
    std::set<std::pair<std::string, AuscultationSite>> seen;
    std::map<std::string, Label> subject_label;
    for (const auto& e : manifest.entries) {
        if (!seen.insert({e.subject, e.channel}).second) {
            throw ManifestError(ManifestError::Code::DuplicateEntry,
                                "duplicate entry for subject '" + e.subject +
                                    "' channel " + std::string(site_name(e.channel)));
        }
        auto [it, inserted] = subject_label.insert({e.subject, e.label});
        if (!inserted && it->second != e.label) {
            throw ManifestError(ManifestError::Code::MixedLabels,
                                "subject '" + e.subject + "' carries both labels");
        }
    }
}

RecordingManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ManifestError(ManifestError::Code::IoFailure,
                            "cannot open manifest: " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ManifestError(ManifestError::Code::SchemaViolation,
                            "manifest is not valid JSON: " + std::string(e.what()));
    }

    RecordingManifest manifest;
    try {
        if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
            throw ManifestError(ManifestError::Code::SchemaViolation,
                                "manifest must be an object with an \"entries\" array");
        }
        for (const auto& item : doc["entries"]) {
            ManifestEntry e;
            e.path = item.at("path").get<std::string>();
            e.subject = item.at("subject").get<std::string>();
            e.channel = site_from_name(item.at("channel").get<std::string>());
            e.label = label_from_name(item.at("label").get<std::string>());
            manifest.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ManifestError(ManifestError::Code::SchemaViolation,
                            "manifest schema violation: " + std::string(e.what()));
    } catch (const SignalError& e) {
        throw ManifestError(ManifestError::Code::SchemaViolation,
                            "manifest schema violation: " + std::string(e.what()));
    }
    validate(manifest);
    return manifest;
}

void save_manifest(const RecordingManifest& manifest,
                   const std::filesystem::path& path) {
    json entries = json::array();
    for (const auto& e : manifest.entries) {
        entries.push_back({{"path", e.path},
                           {"subject", e.subject},
                           {"channel", std::string(site_name(e.channel))},
                           {"label", std::string(label_name(e.label))}});
    }
    json doc = {{"entries", entries}};
    std::ofstream out(path);
    if (!out) {
        throw ManifestError(ManifestError::Code::IoFailure,
                            "cannot write manifest: " + path.string());
    }
    out << doc.dump(2) << "\n";
}

std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         const ManifestEntry& entry) {
    std::filesystem::path p(entry.path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

}  // namespace respir
