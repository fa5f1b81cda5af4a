#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "temnet/config.hpp"

namespace temnet {

struct Artifact {
    std::string path; // relative to the run directory
    std::uintmax_t bytes = 0;
    std::string checksum; // fnv1a64 hex of the file bytes

    bool operator==(const Artifact&) const = default;
};

struct RunResult {
    std::filesystem::path out_dir;
    std::vector<Artifact> artifacts; // sorted by path
};

// Executes ingest -> returns -> segmentation -> TE series -> metrics/trend/
// peaks/activity -> networks -> exports, then writes manifest.json listing
// every artifact with its checksum. On a stage failure the manifest is still
// written (status "failed", failing stage recorded) and the error is rethrown
// with the stage name attached.
RunResult run_pipeline(const RunConfig& cfg, bool quiet = true);

// Generates the configured synthetic panel and writes it as a price CSV
// loadable by load_price_panel. Returns the written path.
std::filesystem::path synth_panel(const RunConfig& cfg,
                                  const std::filesystem::path& out_file);

// Human-readable digest of a finished run directory. Throws ConfigError when
// the directory has no manifest.
std::string report_text(const std::filesystem::path& run_dir);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_hex_of_file(const std::filesystem::path& path);

} // namespace temnet
