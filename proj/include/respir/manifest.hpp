#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "respir/error.hpp"
#include "respir/signal.hpp"

namespace respir {

class ManifestError : public Error {
public:
    enum class Code {
        IoFailure,
        SchemaViolation,
        EmptyManifest,
        DuplicateEntry,
        MixedLabels,
    };

    ManifestError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct ManifestEntry {
    std::string path;  // relative paths resolve against the manifest's directory
    std::string subject;
    AuscultationSite channel = AuscultationSite::L1;
    Label label = Label::Healthy;
};

struct RecordingManifest {
    std::vector<ManifestEntry> entries;
};

// Throws ManifestError on empty entry list, duplicate (subject, channel)
// pairs, or a subject carrying both labels.
void validate(const RecordingManifest& manifest);

RecordingManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const RecordingManifest& manifest,
                   const std::filesystem::path& path);

// Entry path resolved against the directory containing the manifest file.
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         const ManifestEntry& entry);

}  // namespace respir
