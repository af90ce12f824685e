#pragma once

#include "sct/fuse.hpp"
#include "sct/gan.hpp"
#include "sct/prep.hpp"
#include "sct/tiles.hpp"
#include "sct/volume.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sct::cfg {

std::string code_version();

// Flat key=value run configuration ('#' comments, dotted sections). Unknown
// keys are rejected.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "runs/out";
    int jobs = 1;

    // phantom dataset
    int edge = 64;
    float spacing = 1.0f;
    int n_train = 6, n_val = 1, n_test = 3;
    float noise_sigma = 25.0f;
    int bone_shells = 2;
    int air_cavities = 2;

    tiles::TileSpec tile{32, 8, 4};
    tiles::AugmentParams augment;
    prep::ClipPolicy clip = prep::ClipPolicy::static_clip(2500.0);
    int mask_dilate = 12;

    gan::TrainConfig train;

    std::vector<fuse::FusionPolicy::Kind> policies = {fuse::FusionPolicy::Kind::Average,
                                                      fuse::FusionPolicy::Kind::Median,
                                                      fuse::FusionPolicy::Kind::Vote};
    std::vector<View> views = {View::Axial, View::Coronal, View::Sagittal};

    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value); // throws config_error
    void finalize(); // syncs derived fields (train.seed, train.patch, train.views) and validates

    // every effective key on one line each, fixed order
    std::string canonical_text() const;
    std::uint64_t config_hash() const;
};

// Run manifest: config hash, code version, per-stage wall-clock timings and a
// digest inventory of every file the command wrote.
class RunManifest {
  public:
    RunManifest(const RunConfig& rc, std::string command);

    void add_timing(const std::string& stage, double seconds);
    void add_file(const std::string& path); // records size + FNV-1a digest
    void write(const std::string& path) const;

  private:
    std::string command_;
    std::uint64_t config_hash_;
    std::string code_version_;
    std::vector<std::pair<std::string, double>> timings_;
    struct FileEntry {
        std::string path;
        std::uint64_t bytes;
        std::uint64_t digest;
    };
    std::vector<FileEntry> files_;
};

std::uint64_t file_digest(const std::string& path);

// Simple wall-clock stage timer.
class StageTimer {
  public:
    StageTimer();
    double elapsed_seconds() const;
    void restart();

  private:
    std::int64_t start_ns_;
};

} // namespace sct::cfg
