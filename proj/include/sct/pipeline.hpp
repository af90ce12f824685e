#pragma once

#include "sct/config.hpp"
#include "sct/fuse.hpp"
#include "sct/gan.hpp"
#include "sct/phantom.hpp"

#include <string>
#include <vector>

namespace sct::pipeline {

struct CaseRecord {
    std::string id;    // e.g. "test01"
    std::string split; // train | val | test
    std::string mr_path, ct_path, labels_path;
};

struct PhantomSplits {
    std::vector<CaseRecord> train, val, test;
};

// Deterministic per-case phantom spec: split composition puts artifact cases
// into train and test, and the abnormal (tumor) case only into test.
phantom::PhantomSpec make_phantom_spec(const cfg::RunConfig& rc, const std::string& split,
                                       int index);

std::string phantom_dir(const cfg::RunConfig& rc, const std::string& split);
std::string model_path(const cfg::RunConfig& rc, gan::ModelKind kind, View view);

// Generates all splits, writes VOXV1 triples plus per-case sidecar manifests.
PhantomSplits cmd_phantom(const cfg::RunConfig& rc);
// Relocates previously generated splits on disk (throws missing_artifact_error).
PhantomSplits load_splits(const cfg::RunConfig& rc);
CaseRecord find_case(const PhantomSplits& splits, const std::string& case_id);

struct CaseVolumes {
    Volume mr;     // raw MR intensities
    Volume ct;     // ground-truth CT (HU)
    Volume labels; // TissueClass codes
};
CaseVolumes load_case(const CaseRecord& rec);

// Trains one model kind for every configured view (up to `jobs` views in
// parallel) and writes checkpoints + per-epoch loss CSVs.
void cmd_train(const cfg::RunConfig& rc, gan::ModelKind kind);

struct SynthOptions {
    gan::ModelKind kind = gan::ModelKind::Pix2Pix;
    tiles::TileSpec spec;
    fuse::FusionPolicy policy;
    std::vector<View> views;
    std::string translator = "model"; // model | identity | oracle
    bool write_count_map = false;
    prep::ClipPolicy clip; // test-time preprocessing

    static SynthOptions defaults(const cfg::RunConfig& rc);
};

// views folded into labels as initials, e.g. "acs" for all three
std::string views_label(const std::vector<View>& views);
// row label carrying desk and paper-scale tile names plus the view set
std::string cell_label(const tiles::TileSpec& spec, const std::vector<View>& views);

// Synthesizes one case in memory; stage timings appended to `timings` when
// non-null.
Volume synthesize_case(const cfg::RunConfig& rc, const CaseRecord& rec, const SynthOptions& opt,
                       fuse::EstimateAccumulator* acc_out = nullptr,
                       std::vector<std::pair<std::string, double>>* timings = nullptr);

// Synthesizes and writes the sCT volume (and optional estimate-count map);
// returns the sCT path.
std::string cmd_synth(const cfg::RunConfig& rc, const std::string& case_id,
                      const SynthOptions& opt);

// Region metrics over the test split; writes the per-case metrics CSV and a
// report CSV with avg/std_dev rows. Returns the per-case CSV path.
std::string cmd_eval(const cfg::RunConfig& rc, const SynthOptions& opt);

// Sagittal + coronal DRRs for the ground-truth CT and the synthesized sCT.
void cmd_drr(const cfg::RunConfig& rc, const std::string& case_id, const SynthOptions& opt);

// Grid over the four tile specs x {axial-only, three views} x configured
// policies; one body-region row per cell and test case. Returns the CSV path.
std::string cmd_sweep(const cfg::RunConfig& rc, const std::string& translator = "model");

// Aggregates a per-case metrics CSV (avg + population std rows per group).
std::string cmd_report(const cfg::RunConfig& rc, const std::string& metrics_csv);

// The four sweep tile specs derived from the configured patch size:
// (c=0,s=P), (c=P/8,s=3P/4), (c=P/8,s=P/4), (c=P/16,s=P/4).
std::vector<tiles::TileSpec> sweep_specs(const tiles::TileSpec& base);

// Paired, standardized training cases (MR standardized with the config clip
// policy, CT mapped to network units).
std::vector<gan::CasePair> prepare_case_pairs(const cfg::RunConfig& rc,
                                              const std::vector<CaseRecord>& records);

} // namespace sct::pipeline
