#include "sct/gan.hpp"

#include "sct/errors.hpp"
#include "sct/phantom.hpp"
#include "sct/prep.hpp"
#include "sct/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sct::gan {

const char* to_string(ModelKind k) {
    return k == ModelKind::Pix2Pix ? "pix2pix" : "cycle";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "pix2pix") return ModelKind::Pix2Pix;
    if (s == "cycle") return ModelKind::Cycle;
    throw std::invalid_argument("unknown model kind: " + s);
}

void TrainConfig::validate() const {
    if (batch != 1) throw std::invalid_argument("batch size is fixed at one");
    if (epochs < 0) throw std::invalid_argument("negative epoch count");
    if (patch % 32 != 0) throw std::invalid_argument("patch must be a multiple of 32");
    if (lr <= 0.0f) throw std::invalid_argument("learning rate must be positive");
    if (views.empty()) throw std::invalid_argument("no views selected");
    augment.validate();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = master ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
    splitmix64(s);
    return splitmix64(s);
}

std::uint64_t view_model_seed(std::uint64_t master_seed, View view, ModelKind kind) {
    return derive_seed(master_seed, std::uint64_t(view), 100 + std::uint64_t(kind));
}

Image2D translate_patch(Translator& t, const Image2D& patch) {
    if (t.patch_size() != 0 && (patch.width != t.patch_size() || patch.height != t.patch_size()))
        throw std::invalid_argument("translator patch size mismatch");
    Image2D out = t.translate(patch);
    if (out.width != patch.width || out.height != patch.height)
        throw numeric_error("translator changed patch dims");
    return out;
}

Image2D OracleTranslator::translate(const Image2D& patch) {
    Image2D out(patch.width, patch.height);
    for (std::int64_t i = 0; i < patch.size(); ++i) {
        const int code = int(std::lround(patch.v[i]));
        if (code < 0 || code > int(phantom::TissueClass::Tumor))
            throw std::invalid_argument("oracle translator expects TissueClass codes");
        out.v[i] = prep::hu_to_net(phantom::class_hu(phantom::TissueClass(code)));
    }
    return out;
}

namespace {

void require_finite(const StepLosses& l, const char* where) {
    if (!std::isfinite(l.d_loss) || !std::isfinite(l.g_adv) || !std::isfinite(l.g_l1))
        throw numeric_error(std::string("NaN loss in ") + where);
}

} // namespace

// ------------------------------------------------------------ Pix2PixModel

Pix2PixModel::Pix2PixModel(const TrainConfig& cfg, std::uint64_t seed)
    : g_("g", 1, 1, cfg.base_channels, derive_seed(seed, 1, 0)),
      d_("d", 2, cfg.base_channels, derive_seed(seed, 2, 0)),
      lambda_l1_(cfg.lambda_l1) {
    g_opt_.lr = cfg.lr;
    d_opt_.lr = cfg.lr;
}

void Pix2PixModel::update_d(const Image2D& mr, const Image2D& ct, StepLosses& out) {
    x_ = nn::image_to_pm1(mr);
    y_ = nn::image_to_pm1(ct);
    const nn::Tensor4& fake = g_.forward(x_, /*training=*/true); // detached below

    d_.zero_grad();
    nn::concat_channels(x_, y_, cat_);
    d_.forward(cat_, true);
    const double loss_real = nn::lsgan_loss(d_.output(), 1.0f);
    d_.output().zero_grad();
    nn::add_lsgan_grad(d_.output(), 1.0f, 0.5f);
    d_.backward(cat_, /*with_input_grad=*/false);

    nn::concat_channels(x_, fake, cat_);
    d_.forward(cat_, true);
    const double loss_fake = nn::lsgan_loss(d_.output(), 0.0f);
    d_.output().zero_grad();
    nn::add_lsgan_grad(d_.output(), 0.0f, 0.5f);
    d_.backward(cat_, false);

    auto params = d_.params();
    nn::adam_step(params, d_opt_);
    out.d_loss = 0.5 * (loss_real + loss_fake);
}

void Pix2PixModel::accumulate_g_grads(const Image2D& mr, const Image2D& ct, float lambda_l1,
                                      StepLosses& out) {
    x_ = nn::image_to_pm1(mr);
    y_ = nn::image_to_pm1(ct);
    g_.forward(x_, true);
    nn::Tensor4& fake = g_.output();

    // adversarial branch: push the fooling gradient through D to its input
    nn::concat_channels(x_, fake, cat_);
    cat_.zero_grad();
    d_.forward(cat_, true);
    out.g_adv = nn::lsgan_loss(d_.output(), 1.0f);
    d_.output().zero_grad();
    nn::add_lsgan_grad(d_.output(), 1.0f, 1.0f);
    d_.backward(cat_, /*with_input_grad=*/true);

    fake.zero_grad();
    const std::int64_t plane = fake.plane();
    for (int in = 0; in < fake.n; ++in)
        fake.g.segment(fake.index(in, 0, 0, 0), plane) +=
            cat_.g.segment(cat_.index(in, x_.c, 0, 0), plane);

    out.g_l1 = nn::l1_loss(fake, y_);
    if (lambda_l1 != 0.0f) nn::add_l1_grad(fake, y_, lambda_l1);

    g_.zero_grad();
    g_.backward(x_, /*with_input_grad=*/false);
}

void Pix2PixModel::update_g(const Image2D& mr, const Image2D& ct, StepLosses& out) {
    accumulate_g_grads(mr, ct, lambda_l1_, out);
    auto params = g_.params();
    nn::adam_step(params, g_opt_);
}

StepLosses Pix2PixModel::step(const Image2D& mr, const Image2D& ct) {
    StepLosses out;
    update_d(mr, ct, out);
    update_g(mr, ct, out);
    require_finite(out, "pix2pix step");
    return out;
}

std::vector<nn::NamedBlob> Pix2PixModel::state_blobs() const {
    auto blobs = g_.state_blobs();
    for (auto& b : d_.state_blobs()) blobs.push_back(std::move(b));
    return blobs;
}

void Pix2PixModel::load_state(const std::vector<nn::NamedBlob>& blobs) {
    g_.load_state(blobs);
    d_.load_state(blobs);
}

std::string Pix2PixModel::descriptor() const {
    return "pix2pix | " + g_.arch_descriptor() + " | " + d_.arch_descriptor();
}

// -------------------------------------------------------------- CycleModel

CycleModel::CycleModel(const TrainConfig& cfg, std::uint64_t seed)
    : g_mr2ct_("g_mr2ct", 1, 1, cfg.base_channels, derive_seed(seed, 1, 1)),
      g_ct2mr_("g_ct2mr", 1, 1, cfg.base_channels, derive_seed(seed, 1, 2)),
      d_ct_("d_ct", 1, cfg.base_channels, derive_seed(seed, 2, 1)),
      d_mr_("d_mr", 1, cfg.base_channels, derive_seed(seed, 2, 2)),
      lambda_cyc_(cfg.lambda_cyc) {
    g_opt_.lr = cfg.lr;
    dct_opt_.lr = cfg.lr;
    dmr_opt_.lr = cfg.lr;
}

StepLosses CycleModel::step(const Image2D& mr, const Image2D& ct_unpaired) {
    x_ = nn::image_to_pm1(mr);
    y_ = nn::image_to_pm1(ct_unpaired);
    StepLosses out;

    // --- generator phase (discriminators are read-only here)
    g_mr2ct_.zero_grad();
    g_ct2mr_.zero_grad();

    // MR -> sCT -> sMR cycle
    g_mr2ct_.forward(x_, true);
    nn::Tensor4& fake_ct = g_mr2ct_.output();
    fake_ct_copy_ = fake_ct; // values reused for the D update
    fake_ct.zero_grad();

    d_ct_.forward(fake_ct, true);
    const double adv_ct = nn::lsgan_loss(d_ct_.output(), 1.0f);
    d_ct_.output().zero_grad();
    nn::add_lsgan_grad(d_ct_.output(), 1.0f, 1.0f);
    d_ct_.backward(fake_ct, /*with_input_grad=*/true);

    g_ct2mr_.forward(fake_ct, true);
    nn::Tensor4& rec_mr = g_ct2mr_.output();
    const double cyc_mr = nn::l1_loss(rec_mr, x_);
    rec_mr.zero_grad();
    nn::add_l1_grad(rec_mr, x_, lambda_cyc_);
    g_ct2mr_.backward(fake_ct, /*with_input_grad=*/true);
    g_mr2ct_.backward(x_, false);

    // CT -> sMR -> sCT cycle (generator caches freed by the backwards above)
    g_ct2mr_.forward(y_, true);
    nn::Tensor4& fake_mr = g_ct2mr_.output();
    fake_mr_copy_ = fake_mr;
    fake_mr.zero_grad();

    d_mr_.forward(fake_mr, true);
    const double adv_mr = nn::lsgan_loss(d_mr_.output(), 1.0f);
    d_mr_.output().zero_grad();
    nn::add_lsgan_grad(d_mr_.output(), 1.0f, 1.0f);
    d_mr_.backward(fake_mr, true);

    g_mr2ct_.forward(fake_mr, true);
    nn::Tensor4& rec_ct = g_mr2ct_.output();
    const double cyc_ct = nn::l1_loss(rec_ct, y_);
    rec_ct.zero_grad();
    nn::add_l1_grad(rec_ct, y_, lambda_cyc_);
    g_mr2ct_.backward(fake_mr, true);
    g_ct2mr_.backward(y_, false);

    std::vector<nn::Param*> gparams = g_mr2ct_.params();
    for (nn::Param* p : g_ct2mr_.params()) gparams.push_back(p);
    nn::adam_step(gparams, g_opt_);

    // --- discriminator phase, against the saved fakes
    const auto update_d = [](nn::PatchDiscriminator& d, nn::AdamState& opt, nn::Tensor4& real,
                             nn::Tensor4& fake) {
        d.zero_grad();
        d.forward(real, true);
        const double lr_ = nn::lsgan_loss(d.output(), 1.0f);
        d.output().zero_grad();
        nn::add_lsgan_grad(d.output(), 1.0f, 0.5f);
        d.backward(real, false);
        d.forward(fake, true);
        const double lf = nn::lsgan_loss(d.output(), 0.0f);
        d.output().zero_grad();
        nn::add_lsgan_grad(d.output(), 0.0f, 0.5f);
        d.backward(fake, false);
        auto params = d.params();
        nn::adam_step(params, opt);
        return 0.5 * (lr_ + lf);
    };
    const double d_ct_loss = update_d(d_ct_, dct_opt_, y_, fake_ct_copy_);
    const double d_mr_loss = update_d(d_mr_, dmr_opt_, x_, fake_mr_copy_);

    out.d_loss = 0.5 * (d_ct_loss + d_mr_loss);
    out.g_adv = 0.5 * (adv_ct + adv_mr);
    out.g_l1 = cyc_mr + cyc_ct;
    require_finite(out, "cycle step");
    return out;
}

std::vector<nn::NamedBlob> CycleModel::state_blobs() const {
    auto blobs = g_mr2ct_.state_blobs();
    for (auto& b : g_ct2mr_.state_blobs()) blobs.push_back(std::move(b));
    for (auto& b : d_ct_.state_blobs()) blobs.push_back(std::move(b));
    for (auto& b : d_mr_.state_blobs()) blobs.push_back(std::move(b));
    return blobs;
}

void CycleModel::load_state(const std::vector<nn::NamedBlob>& blobs) {
    g_mr2ct_.load_state(blobs);
    g_ct2mr_.load_state(blobs);
    d_ct_.load_state(blobs);
    d_mr_.load_state(blobs);
}

std::string CycleModel::descriptor() const {
    return "cycle | " + g_mr2ct_.arch_descriptor() + " | " + d_ct_.arch_descriptor();
}

double cycle_consistency_loss(Translator& g_mr2ct, Translator& g_ct2mr,
                              const std::vector<tiles::PatchPair>& patches) {
    if (patches.empty()) throw std::invalid_argument("no patches for cycle loss");
    double total = 0.0;
    std::int64_t count = 0;
    for (const auto& p : patches) {
        const Image2D rec_mr = g_ct2mr.translate(g_mr2ct.translate(p.mr));
        const Image2D rec_ct = g_mr2ct.translate(g_ct2mr.translate(p.ct));
        total += double((rec_mr.v - p.mr.v).abs().sum());
        total += double((rec_ct.v - p.ct.v).abs().sum());
        count += p.mr.size() + p.ct.size();
    }
    return total / double(count);
}

// --------------------------------------------------------------- training

namespace {

struct SliceRef {
    int case_idx;
    bool mirrored;
    int slice_idx;
};

bool slice_has_content(const Image2D& mr_slice) {
    return (mr_slice.v > 1e-6f).any();
}

} // namespace

std::vector<tiles::PatchPair> validation_patches(const std::vector<CasePair>& cases, View view,
                                                 int patch) {
    std::vector<tiles::PatchPair> out;
    for (const auto& cp : cases) {
        std::vector<int> nonair;
        for (int k = 0; k < view_extent(cp.mr_net, view); ++k)
            if (slice_has_content(slice(cp.mr_net, view, k))) nonair.push_back(k);
        if (nonair.empty()) continue;
        for (double frac : {0.25, 0.5, 0.75}) {
            const int k = nonair[size_t(frac * double(nonair.size() - 1))];
            const Image2D mr_sl = slice(cp.mr_net, view, k);
            const Image2D ct_sl = slice(cp.ct_net, view, k);
            if (mr_sl.width < patch || mr_sl.height < patch) continue;
            const int ox = (mr_sl.width - patch) / 2, oy = (mr_sl.height - patch) / 2;
            tiles::PatchPair pp{Image2D(patch, patch), Image2D(patch, patch)};
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) {
                    pp.mr.at(x, y) = mr_sl.at(ox + x, oy + y);
                    pp.ct.at(x, y) = ct_sl.at(ox + x, oy + y);
                }
            out.push_back(std::move(pp));
        }
    }
    return out;
}

ViewCheckpoint train_view(const std::vector<CasePair>& train_cases,
                          const std::vector<CasePair>& val_cases, View view,
                          const TrainConfig& cfg, ModelKind kind) {
    cfg.validate();
    if (train_cases.empty()) throw std::invalid_argument("empty training dataset");

    const std::uint64_t model_seed = view_model_seed(cfg.seed, view, kind);
    std::unique_ptr<Pix2PixModel> p2p;
    std::unique_ptr<CycleModel> cyc;
    if (kind == ModelKind::Pix2Pix)
        p2p = std::make_unique<Pix2PixModel>(cfg, model_seed);
    else
        cyc = std::make_unique<CycleModel>(cfg, model_seed);

    // mirrored copies double usable slices in all three views
    std::vector<CasePair> mirrored;
    if (cfg.augment.mirror)
        for (const auto& cp : train_cases)
            mirrored.push_back(
                {cp.id + "+m", mirror_volume(cp.mr_net), mirror_volume(cp.ct_net)});

    const auto case_of = [&](const SliceRef& s) -> const CasePair& {
        return s.mirrored ? mirrored[size_t(s.case_idx)] : train_cases[size_t(s.case_idx)];
    };

    std::vector<SliceRef> refs;
    for (int ci = 0; ci < int(train_cases.size()); ++ci) {
        const int extent = view_extent(train_cases[size_t(ci)].mr_net, view);
        for (int k = 0; k < extent; ++k) {
            if (slice_has_content(slice(train_cases[size_t(ci)].mr_net, view, k)))
                refs.push_back({ci, false, k});
            if (cfg.augment.mirror &&
                slice_has_content(slice(mirrored[size_t(ci)].mr_net, view, k)))
                refs.push_back({ci, true, k});
        }
    }
    if (refs.empty()) throw std::invalid_argument("training dataset has no non-air slices");

    const auto val_patches = validation_patches(val_cases, view, cfg.patch);
    const auto eval_val = [&]() -> double {
        if (val_patches.empty()) return 0.0;
        nn::UNetGenerator& g = kind == ModelKind::Pix2Pix ? p2p->generator() : cyc->g_mr2ct();
        double total = 0.0;
        for (const auto& vp : val_patches) {
            nn::Tensor4 x = nn::image_to_pm1(vp.mr);
            nn::Tensor4 y = nn::image_to_pm1(vp.ct);
            total += nn::l1_loss(g.forward(x, false), y);
        }
        return total / double(val_patches.size());
    };

    ViewCheckpoint result;
    auto order_rng = rng_stream(derive_seed(cfg.seed, std::uint64_t(view), 200), 0);
    auto aug_rng = rng_stream(derive_seed(cfg.seed, std::uint64_t(view), 201), 0);
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<size_t> order(refs.size());
        std::iota(order.begin(), order.end(), size_t(0));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[uniform_index(order_rng, i)]);

        double sum_d = 0.0, sum_adv = 0.0, sum_l1 = 0.0;
        long epoch_steps = 0;
        for (size_t oi : order) {
            const SliceRef& ref = refs[oi];
            const CasePair& cp = case_of(ref);
            const Image2D mr_sl = slice(cp.mr_net, view, ref.slice_idx);
            const Image2D ct_sl = slice(cp.ct_net, view, ref.slice_idx);
            auto pairs = tiles::augment_slice(mr_sl, ct_sl, cfg.patch, cfg.augment, aug_rng);

            if (kind == ModelKind::Cycle) {
                // decouple the CT side so steps are genuinely unpaired
                for (size_t i = pairs.size(); i > 1; --i)
                    std::swap(pairs[i - 1].ct, pairs[uniform_index(aug_rng, i)].ct);
            }
            for (const auto& pp : pairs) {
                const StepLosses l = kind == ModelKind::Pix2Pix ? p2p->step(pp.mr, pp.ct)
                                                                : cyc->step(pp.mr, pp.ct);
                sum_d += l.d_loss;
                sum_adv += l.g_adv;
                sum_l1 += l.g_l1;
                ++step;
                ++epoch_steps;
            }
        }
        TrainLogRow row;
        row.epoch = epoch + 1;
        row.step = step;
        row.d_loss = sum_d / double(epoch_steps);
        row.g_adv = sum_adv / double(epoch_steps);
        row.g_l1 = sum_l1 / double(epoch_steps);
        row.val_l1 = eval_val();
        result.log.push_back(row);
    }

    result.descriptor = (kind == ModelKind::Pix2Pix ? p2p->descriptor() : cyc->descriptor()) +
                        " | view=" + to_string(view) + " | patch=" + std::to_string(cfg.patch);
    result.blobs = kind == ModelKind::Pix2Pix ? p2p->state_blobs() : cyc->state_blobs();
    return result;
}

} // namespace sct::gan
