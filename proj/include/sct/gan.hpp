#pragma once

#include "sct/nets.hpp"
#include "sct/tiles.hpp"
#include "sct/volume.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sct::gan {

enum class ModelKind { Pix2Pix, Cycle };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 30; // paper scale: 200
    int batch = 1;   // the models use batch size one
    std::uint64_t seed = 0;
    float lambda_l1 = 100.0f;
    float lambda_cyc = 10.0f;
    float lr = 2e-4f;
    int patch = 32;
    int base_channels = 32;
    tiles::AugmentParams augment;
    std::vector<View> views = {View::Axial, View::Coronal, View::Sagittal};

    void validate() const;
};

// One case of paired, aligned volumes, both already in network units [0,255].
struct CasePair {
    std::string id;
    Volume mr_net;
    Volume ct_net;
};

// Per-patch MR -> CT-space map in [0,255]. Implementations carry forward
// caches, so an instance must not be shared across threads.
class Translator {
  public:
    virtual ~Translator() = default;
    virtual int patch_size() const = 0; // 0 = any size accepted
    virtual Image2D translate(const Image2D& patch) = 0;
};

Image2D translate_patch(Translator& t, const Image2D& patch);

class IdentityTranslator final : public Translator {
  public:
    int patch_size() const override { return 0; }
    Image2D translate(const Image2D& patch) override { return patch; }
};

// Perfect translator over TissueClass-code patches: code -> hu_to_net(class HU).
class OracleTranslator final : public Translator {
  public:
    int patch_size() const override { return 0; }
    Image2D translate(const Image2D& patch) override;
};

class GeneratorTranslator final : public Translator {
  public:
    GeneratorTranslator(std::shared_ptr<nn::UNetGenerator> g, int patch)
        : g_(std::move(g)), patch_(patch) {}
    int patch_size() const override { return patch_; }
    Image2D translate(const Image2D& patch) override { return g_->translate(patch); }

  private:
    std::shared_ptr<nn::UNetGenerator> g_;
    int patch_;
};

struct StepLosses {
    double d_loss = 0.0;
    double g_adv = 0.0;
    double g_l1 = 0.0; // cycle: summed cycle-consistency term
};

// Conditional paired model: G maps MR to CT space, D scores MR||CT pairs.
class Pix2PixModel {
  public:
    Pix2PixModel(const TrainConfig& cfg, std::uint64_t seed);

    StepLosses step(const Image2D& mr, const Image2D& ct);
    void update_d(const Image2D& mr, const Image2D& ct, StepLosses& out);
    void update_g(const Image2D& mr, const Image2D& ct, StepLosses& out);
    // Fills G parameter gradients without stepping (test and update_g path).
    void accumulate_g_grads(const Image2D& mr, const Image2D& ct, float lambda_l1,
                            StepLosses& out);

    nn::UNetGenerator& generator() { return g_; }
    nn::PatchDiscriminator& discriminator() { return d_; }
    float lambda_l1() const { return lambda_l1_; }

    std::vector<nn::NamedBlob> state_blobs() const;
    void load_state(const std::vector<nn::NamedBlob>& blobs);
    std::string descriptor() const;

  private:
    nn::UNetGenerator g_;
    nn::PatchDiscriminator d_;
    nn::AdamState g_opt_, d_opt_;
    float lambda_l1_;
    nn::Tensor4 x_, y_, cat_;
};

// Two generators and two unconditional discriminators with L1 cycle terms;
// inputs need not be paired.
class CycleModel {
  public:
    CycleModel(const TrainConfig& cfg, std::uint64_t seed);

    StepLosses step(const Image2D& mr, const Image2D& ct_unpaired);

    nn::UNetGenerator& g_mr2ct() { return g_mr2ct_; }
    nn::UNetGenerator& g_ct2mr() { return g_ct2mr_; }
    nn::PatchDiscriminator& d_ct() { return d_ct_; }
    nn::PatchDiscriminator& d_mr() { return d_mr_; }

    std::vector<nn::NamedBlob> state_blobs() const;
    void load_state(const std::vector<nn::NamedBlob>& blobs);
    std::string descriptor() const;

  private:
    nn::UNetGenerator g_mr2ct_, g_ct2mr_;
    nn::PatchDiscriminator d_ct_, d_mr_;
    nn::AdamState g_opt_, dct_opt_, dmr_opt_;
    float lambda_cyc_;
    nn::Tensor4 x_, y_, fake_ct_copy_, fake_mr_copy_;
};

// Mean round-trip L1 in [0,255] units over a patch set:
// |mr - g2(g1(mr))| and |ct - g1(g2(ct))| averaged together.
double cycle_consistency_loss(Translator& g_mr2ct, Translator& g_ct2mr,
                              const std::vector<tiles::PatchPair>& patches);

struct TrainLogRow {
    int epoch = 0;
    long step = 0; // cumulative optimizer steps at epoch end
    double d_loss = 0.0, g_adv = 0.0, g_l1 = 0.0;
    double val_l1 = 0.0;
};

struct ViewCheckpoint {
    std::string descriptor;
    std::vector<nn::NamedBlob> blobs;
    std::vector<TrainLogRow> log;
};

// Deterministic per-view training over paired, standardized volumes. Slices
// with an all-air MR are excluded; mirrored volumes contribute slices to all
// views when augmentation has mirror on. Cycle training shuffles the CT side
// so steps see unpaired patches.
ViewCheckpoint train_view(const std::vector<CasePair>& train_cases,
                          const std::vector<CasePair>& val_cases, View view,
                          const TrainConfig& cfg, ModelKind kind);

// Deterministic validation patch set: center crops of three interior slices
// per case (used for per-epoch logs and held-out loss probes).
std::vector<tiles::PatchPair> validation_patches(const std::vector<CasePair>& cases, View view,
                                                 int patch);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

// Seed train_view uses to initialize the model of a given view/kind; lets
// callers rebuild the exact untrained starting point.
std::uint64_t view_model_seed(std::uint64_t master_seed, View view, ModelKind kind);

} // namespace sct::gan
