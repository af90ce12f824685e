#include "sct/pipeline.hpp"

#include "sct/errors.hpp"
#include "sct/metrics.hpp"
#include "sct/nets.hpp"
#include "sct/prep.hpp"
#include "sct/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace sct::pipeline {

namespace {

void ensure_dir(const std::string& path) {
    fs::create_directories(path);
}

std::string manifest_path(const cfg::RunConfig& rc, const std::string& command) {
    ensure_dir(rc.out + "/manifests");
    return rc.out + "/manifests/" + command + ".json";
}

std::string spec_sidecar(const phantom::PhantomSpec& s, const std::string& id,
                         const std::string& split) {
    std::stringstream ss;
    ss << "id = " << id << "\n"
       << "split = " << split << "\n"
       << "seed = " << s.seed << "\n"
       << "edge = " << s.edge << "\n"
       << "spacing = " << s.spacing << "\n"
       << "body = " << s.body[0] << "," << s.body[1] << "," << s.body[2] << "\n"
       << "bone_shells = " << s.n_bone_shells << "\n"
       << "air_cavities = " << s.n_air_cavities << "\n"
       << "tumor = " << (s.tumor ? "true" : "false") << "\n"
       << "artifact = " << (s.artifact ? "true" : "false") << "\n"
       << "noise_sigma = " << s.noise_sigma << "\n";
    return ss.str();
}

int split_code(const std::string& split) {
    if (split == "train") return 10;
    if (split == "val") return 11;
    if (split == "test") return 12;
    throw std::invalid_argument("unknown split: " + split);
}

std::string case_name(const std::string& split, int index) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", index);
    return split + buf;
}

} // namespace

phantom::PhantomSpec make_phantom_spec(const cfg::RunConfig& rc, const std::string& split,
                                       int index) {
    phantom::PhantomSpec spec;
    spec.seed = gan::derive_seed(rc.seed, std::uint64_t(split_code(split)), std::uint64_t(index));
    spec.edge = rc.edge;
    spec.spacing = rc.spacing;
    spec.noise_sigma = rc.noise_sigma;
    spec.n_bone_shells = rc.bone_shells;
    spec.n_air_cavities = rc.air_cavities;

    // per-case anatomy jitter
    auto rng = rng_stream(spec.seed, 7);
    spec.body = {float(uniform_range(rng, 0.32, 0.38)), float(uniform_range(rng, 0.40, 0.46)),
                 float(uniform_range(rng, 0.42, 0.48))};

    if (split == "train") {
        spec.artifact = index % 2 == 1; // artifact cases are part of training
        spec.tumor = false;             // the abnormal case is held out
    } else if (split == "val") {
        spec.artifact = false;
        spec.tumor = false;
    } else {
        spec.artifact = index == 1 || (index > 2 && index % 2 == 1);
        spec.tumor = index == 2; // out-of-distribution probe
    }
    return spec;
}

std::string phantom_dir(const cfg::RunConfig& rc, const std::string& split) {
    return rc.out + "/phantoms/" + split;
}

std::string model_path(const cfg::RunConfig& rc, gan::ModelKind kind, View view) {
    return rc.out + "/models/" + std::string(gan::to_string(kind)) + "_" + to_string(view) +
           ".voxw1";
}

PhantomSplits cmd_phantom(const cfg::RunConfig& rc) {
    cfg::RunManifest manifest(rc, "phantom");
    cfg::StageTimer timer;
    PhantomSplits splits;

    const auto make_split = [&](const std::string& split, int count,
                                std::vector<CaseRecord>& out) {
        ensure_dir(phantom_dir(rc, split));
        for (int i = 0; i < count; ++i) {
            const auto spec = make_phantom_spec(rc, split, i);
            const auto pair = phantom::generate_pair(spec);
            CaseRecord rec;
            rec.id = case_name(split, i);
            rec.split = split;
            const std::string base = phantom_dir(rc, split) + "/" + rec.id;
            rec.mr_path = base + "_mr.vox";
            rec.ct_path = base + "_ct.vox";
            rec.labels_path = base + "_labels.vox";
            write_volume(pair.mr, rec.mr_path);
            write_volume(pair.ct, rec.ct_path);
            write_volume(pair.labels, rec.labels_path);
            std::ofstream sidecar(base + ".txt");
            sidecar << spec_sidecar(spec, rec.id, split);
            sidecar.close();
            for (const auto& p : {rec.mr_path, rec.ct_path, rec.labels_path, base + ".txt"})
                manifest.add_file(p);
            out.push_back(std::move(rec));
        }
    };
    make_split("train", rc.n_train, splits.train);
    make_split("val", rc.n_val, splits.val);
    make_split("test", rc.n_test, splits.test);

    manifest.add_timing("phantom_generation", timer.elapsed_seconds());
    manifest.write(manifest_path(rc, "phantom"));
    return splits;
}

PhantomSplits load_splits(const cfg::RunConfig& rc) {
    PhantomSplits splits;
    const auto load_split = [&](const std::string& split, int count,
                                std::vector<CaseRecord>& out) {
        for (int i = 0; i < count; ++i) {
            CaseRecord rec;
            rec.id = case_name(split, i);
            rec.split = split;
            const std::string base = phantom_dir(rc, split) + "/" + rec.id;
            rec.mr_path = base + "_mr.vox";
            rec.ct_path = base + "_ct.vox";
            rec.labels_path = base + "_labels.vox";
            for (const auto& p : {rec.mr_path, rec.ct_path, rec.labels_path})
                if (!fs::exists(p))
                    throw missing_artifact_error("expected phantom volume at " + p +
                                                 "; run `sctgen phantom` first");
            out.push_back(std::move(rec));
        }
    };
    load_split("train", rc.n_train, splits.train);
    load_split("val", rc.n_val, splits.val);
    load_split("test", rc.n_test, splits.test);
    return splits;
}

CaseRecord find_case(const PhantomSplits& splits, const std::string& case_id) {
    for (const auto* v : {&splits.train, &splits.val, &splits.test})
        for (const auto& rec : *v)
            if (rec.id == case_id) return rec;
    throw missing_artifact_error("unknown case id: " + case_id);
}

CaseVolumes load_case(const CaseRecord& rec) {
    return {read_volume(rec.mr_path), read_volume(rec.ct_path), read_volume(rec.labels_path)};
}

std::vector<gan::CasePair> prepare_case_pairs(const cfg::RunConfig& rc,
                                              const std::vector<CaseRecord>& records) {
    std::vector<gan::CasePair> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        const CaseVolumes vols = load_case(rec);
        const auto mask = prep::build_body_mask(vols.mr, rc.mask_dilate);
        gan::CasePair cp;
        cp.id = rec.id;
        cp.mr_net = prep::standardize(vols.mr, mask, rc.clip);
        cp.ct_net = prep::hu_to_net_volume(vols.ct);
        out.push_back(std::move(cp));
    }
    return out;
}

void cmd_train(const cfg::RunConfig& rc, gan::ModelKind kind) {
    cfg::RunManifest manifest(rc, std::string("train_") + gan::to_string(kind));
    cfg::StageTimer timer;

    const PhantomSplits splits = load_splits(rc);
    const auto train_pairs = prepare_case_pairs(rc, splits.train);
    const auto val_pairs = prepare_case_pairs(rc, splits.val);
    ensure_dir(rc.out + "/models");

    std::vector<View> views = rc.views;
    std::vector<gan::ViewCheckpoint> results(views.size());
    std::vector<std::string> errors(views.size());

    std::size_t next = 0;
    std::mutex next_mutex;
    const auto worker = [&]() {
        while (true) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= views.size()) return;
                idx = next++;
            }
            try {
                results[idx] =
                    gan::train_view(train_pairs, val_pairs, views[idx], rc.train, kind);
            } catch (const std::exception& e) {
                errors[idx] = e.what();
            }
        }
    };
    const int n_threads = std::min<int>(rc.jobs, int(views.size()));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (!e.empty()) throw numeric_error("training failed: " + e);

    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string ckpt = model_path(rc, kind, views[i]);
        nn::write_checkpoint(ckpt, results[i].descriptor, results[i].blobs);
        const std::string log_path = rc.out + "/models/" + gan::to_string(kind) + "_" +
                                     to_string(views[i]) + "_loss.csv";
        std::ofstream log(log_path);
        log << "epoch,step,d_loss,g_adv,g_l1,val_l1\n";
        for (const auto& row : results[i].log)
            log << row.epoch << "," << row.step << "," << metrics::format_g6(row.d_loss) << ","
                << metrics::format_g6(row.g_adv) << "," << metrics::format_g6(row.g_l1) << ","
                << metrics::format_g6(row.val_l1) << "\n";
        log.close();
        manifest.add_file(ckpt);
        manifest.add_file(log_path);
    }
    manifest.add_timing("training", timer.elapsed_seconds());
    manifest.write(manifest_path(rc, std::string("train_") + gan::to_string(kind)));
}

SynthOptions SynthOptions::defaults(const cfg::RunConfig& rc) {
    SynthOptions opt;
    opt.spec = rc.tile;
    opt.policy.kind = rc.policies.front();
    opt.views = rc.views;
    opt.clip = rc.clip;
    return opt;
}

std::string views_label(const std::vector<View>& views) {
    std::string s;
    for (View v : views) s += to_string(v)[0];
    return s;
}

std::string cell_label(const tiles::TileSpec& spec, const std::vector<View>& views) {
    return spec.label() + "|" + spec.paper_label() + "|" + views_label(views);
}

namespace {

// Per-view translators; "model" loads the generator from the checkpoint.
std::map<View, std::unique_ptr<gan::Translator>> build_translators(
    const cfg::RunConfig& rc, const SynthOptions& opt) {
    std::map<View, std::unique_ptr<gan::Translator>> out;
    for (View v : opt.views) {
        if (opt.translator == "identity") {
            out[v] = std::make_unique<gan::IdentityTranslator>();
        } else if (opt.translator == "oracle") {
            out[v] = std::make_unique<gan::OracleTranslator>();
        } else if (opt.translator == "model") {
            const std::string path = model_path(rc, opt.kind, v);
            if (!fs::exists(path))
                throw missing_artifact_error(
                    "expected checkpoint at " + path + "; run `sctgen train --kind " +
                    gan::to_string(opt.kind) + "` first");
            auto [desc, blobs] = nn::read_checkpoint(path);
            const std::string prefix =
                opt.kind == gan::ModelKind::Pix2Pix ? "g" : "g_mr2ct";
            auto g = std::make_shared<nn::UNetGenerator>(prefix, 1, 1, rc.train.base_channels,
                                                         /*seed=*/0);
            g->load_state(blobs);
            out[v] = std::make_unique<gan::GeneratorTranslator>(std::move(g), opt.spec.patch);
        } else {
            throw config_error("unknown translator: " + opt.translator);
        }
    }
    return out;
}

} // namespace

Volume synthesize_case(const cfg::RunConfig& rc, const CaseRecord& rec, const SynthOptions& opt,
                       fuse::EstimateAccumulator* acc_out,
                       std::vector<std::pair<std::string, double>>* timings) {
    cfg::StageTimer timer;
    const CaseVolumes vols = load_case(rec);
    const auto mask = prep::build_body_mask(vols.mr, rc.mask_dilate);
    // the oracle consumes label codes; model/identity consume standardized MR
    const Volume input = opt.translator == "oracle"
                             ? vols.labels
                             : prep::standardize(vols.mr, mask, opt.clip);
    auto translators = build_translators(rc, opt);
    if (timings) timings->emplace_back("network_setup", timer.elapsed_seconds());

    timer.restart();
    fuse::EstimateAccumulator acc(input.nx(), input.ny(), input.nz());
    for (auto& [view, translator] : translators)
        fuse::synthesize_view(input, mask.mask, *translator, view, opt.spec, acc);
    if (timings) timings->emplace_back("sct_generation", timer.elapsed_seconds());

    timer.restart();
    Volume sct = fuse::fuse(acc, opt.policy, input.spacing());
    if (timings) timings->emplace_back("fusion", timer.elapsed_seconds());
    if (acc_out) *acc_out = std::move(acc);
    return sct;
}

namespace {

std::string sct_base_name(const std::string& case_id, const SynthOptions& opt) {
    return case_id + "_" + gan::to_string(opt.kind) + "_" + opt.translator + "_" +
           opt.spec.label() + "_" + to_string(opt.policy.kind) + "_" + views_label(opt.views);
}

} // namespace

std::string cmd_synth(const cfg::RunConfig& rc, const std::string& case_id,
                      const SynthOptions& opt) {
    cfg::RunManifest manifest(rc, "synth");
    const PhantomSplits splits = load_splits(rc);
    const CaseRecord rec = find_case(splits, case_id);
    ensure_dir(rc.out + "/sct");

    std::vector<std::pair<std::string, double>> timings;
    fuse::EstimateAccumulator acc(1, 1, 1);
    const Volume sct = synthesize_case(rc, rec, opt, &acc, &timings);

    const std::string path = rc.out + "/sct/" + sct_base_name(case_id, opt) + ".vox";
    write_volume(sct, path);
    manifest.add_file(path);
    if (opt.write_count_map) {
        const std::string cpath = rc.out + "/sct/" + sct_base_name(case_id, opt) + "_counts.vox";
        write_volume(acc.count_map(sct.spacing()), cpath);
        manifest.add_file(cpath);
    }
    for (const auto& [stage, secs] : timings) manifest.add_timing(stage, secs);
    manifest.write(manifest_path(rc, "synth"));
    return path;
}

namespace {

// body/bone/air rows for one case; empty bone/air regions are flagged and
// skipped rather than reported.
void append_case_rows(const cfg::RunConfig& rc, const CaseRecord& rec, const Volume& sct,
                      const std::string& model_label, const std::string& policy_label,
                      const std::string& tilespec_label, std::vector<metrics::MetricsRow>& rows) {
    const CaseVolumes vols = load_case(rec);
    const Volume body = prep::build_body_mask(vols.mr, 0).mask;
    const struct {
        metrics::RegionSpec spec;
        const char* name;
    } regions[] = {{metrics::RegionSpec::body(), "body"},
                   {metrics::RegionSpec::bone(), "bone"},
                   {metrics::RegionSpec::air(), "air"}};
    for (const auto& r : regions) {
        const Volume m = metrics::region_mask(vols.ct, body, r.spec);
        if ((m.values() == 0.0f).all()) {
            std::cerr << "note: empty " << r.name << " region for " << rec.id << ", skipped\n";
            continue;
        }
        metrics::MetricsRow row;
        row.case_id = rec.id;
        row.model = model_label;
        row.policy = policy_label;
        row.tilespec = tilespec_label;
        row.region = r.name;
        row.stats = metrics::region_stats(vols.ct, sct, m);
        rows.push_back(std::move(row));
    }
}

std::string write_rows_csv(const std::string& path, const std::vector<metrics::MetricsRow>& rows) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write metrics csv: " + path);
    os << metrics::kMetricsHeader << "\n";
    for (const auto& r : rows) os << metrics::csv_row(r) << "\n";
    return path;
}

} // namespace

std::string cmd_eval(const cfg::RunConfig& rc, const SynthOptions& opt) {
    cfg::RunManifest manifest(rc, "eval");
    cfg::StageTimer timer;
    const PhantomSplits splits = load_splits(rc);
    ensure_dir(rc.out + "/metrics");

    const std::string model_label =
        opt.translator == "model" ? gan::to_string(opt.kind) : opt.translator;
    const std::string tilespec_label = cell_label(opt.spec, opt.views);

    std::vector<metrics::MetricsRow> rows;
    for (const auto& rec : splits.test) {
        const Volume sct = synthesize_case(rc, rec, opt);
        append_case_rows(rc, rec, sct, model_label, to_string(opt.policy.kind), tilespec_label,
                         rows);
    }
    const std::string base = rc.out + "/metrics/eval_" + model_label + "_" + opt.spec.label() +
                             "_" + to_string(opt.policy.kind) + "_" + views_label(opt.views);
    const std::string csv = write_rows_csv(base + ".csv", rows);
    std::ofstream rep(base + "_report.csv");
    rep << metrics::report(rows);
    rep.close();
    manifest.add_file(csv);
    manifest.add_file(base + "_report.csv");
    manifest.add_timing("evaluation", timer.elapsed_seconds());
    manifest.write(manifest_path(rc, "eval"));
    return csv;
}

void cmd_drr(const cfg::RunConfig& rc, const std::string& case_id, const SynthOptions& opt) {
    cfg::RunManifest manifest(rc, "drr");
    cfg::StageTimer timer;
    const PhantomSplits splits = load_splits(rc);
    const CaseRecord rec = find_case(splits, case_id);
    ensure_dir(rc.out + "/drr");

    const CaseVolumes vols = load_case(rec);
    const std::string sct_path = rc.out + "/sct/" + sct_base_name(case_id, opt) + ".vox";
    const Volume sct = fs::exists(sct_path) ? read_volume(sct_path)
                                            : synthesize_case(rc, rec, opt);

    for (const auto& [vol, tag] : {std::pair<const Volume&, const char*>{vols.ct, "ct"},
                                   std::pair<const Volume&, const char*>{sct, "sct"}}) {
        for (View view : {View::Sagittal, View::Coronal}) {
            const std::string path =
                rc.out + "/drr/" + case_id + "_" + tag + "_" + to_string(view) + ".pgm";
            metrics::write_pgm(metrics::drr(vol, view), path);
            manifest.add_file(path);
        }
    }
    manifest.add_timing("drr", timer.elapsed_seconds());
    manifest.write(manifest_path(rc, "drr"));
}

std::vector<tiles::TileSpec> sweep_specs(const tiles::TileSpec& base) {
    const int p = base.patch;
    return {
        {p, p, 0},
        {p, 3 * p / 4, p / 8},
        {p, p / 4, p / 8},
        {p, p / 4, p / 16},
    };
}

std::string cmd_sweep(const cfg::RunConfig& rc, const std::string& translator) {
    cfg::RunManifest manifest(rc, "sweep");
    cfg::StageTimer timer;
    const PhantomSplits splits = load_splits(rc);
    ensure_dir(rc.out + "/metrics");

    const std::vector<std::vector<View>> view_sets = {
        {View::Axial}, {View::Axial, View::Coronal, View::Sagittal}};

    std::vector<metrics::MetricsRow> rows;
    for (const auto& spec : sweep_specs(rc.tile)) {
        for (const auto& views : view_sets) {
            SynthOptions opt = SynthOptions::defaults(rc);
            opt.spec = spec;
            opt.views = views;
            opt.translator = translator;
            const std::string model_label =
                translator == "model" ? gan::to_string(opt.kind) : translator;
            const std::string tilespec_label = cell_label(spec, views);

            // one accumulator per case serves every policy
            for (const auto& rec : splits.test) {
                fuse::EstimateAccumulator acc(1, 1, 1);
                opt.policy.kind = rc.policies.front();
                synthesize_case(rc, rec, opt, &acc);
                for (const auto pk : rc.policies) {
                    fuse::FusionPolicy policy;
                    policy.kind = pk;
                    const Volume sct = fuse::fuse(acc, policy, rc.spacing);
                    append_case_rows(rc, rec, sct, model_label, to_string(pk), tilespec_label,
                                     rows);
                }
            }
        }
    }
    const std::string csv_path = rc.out + "/metrics/sweep_" + translator + ".csv";
    write_rows_csv(csv_path, rows);
    std::ofstream rep(rc.out + "/metrics/sweep_" + translator + "_report.csv");
    rep << metrics::report(rows);
    rep.close();
    manifest.add_file(csv_path);
    manifest.add_file(rc.out + "/metrics/sweep_" + translator + "_report.csv");
    manifest.add_timing("sweep", timer.elapsed_seconds());
    manifest.write(manifest_path(rc, "sweep"));
    return csv_path;
}

std::string cmd_report(const cfg::RunConfig& rc, const std::string& metrics_csv) {
    cfg::RunManifest manifest(rc, "report");
    std::ifstream is(metrics_csv);
    if (!is) throw missing_artifact_error("cannot open metrics csv: " + metrics_csv);
    std::string line;
    if (!std::getline(is, line) || line != metrics::kMetricsHeader)
        throw io_error("unexpected metrics header in " + metrics_csv);
    std::vector<metrics::MetricsRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 10) throw io_error("bad metrics row: " + line);
        metrics::MetricsRow r;
        r.case_id = cols[0];
        r.model = cols[1];
        r.policy = cols[2];
        r.tilespec = cols[3];
        r.region = cols[4];
        r.stats.mae = std::stod(cols[5]);
        r.stats.mae_sd = std::stod(cols[6]);
        r.stats.me = std::stod(cols[7]);
        r.stats.me_sd = std::stod(cols[8]);
        r.stats.voxels = std::stoll(cols[9]);
        rows.push_back(std::move(r));
    }
    const std::string out_path = metrics_csv.substr(0, metrics_csv.size() - 4) + "_report.csv";
    std::ofstream os(out_path);
    os << metrics::report(rows);
    os.close();
    manifest.add_file(out_path);
    manifest.write(manifest_path(rc, "report"));
    return out_path;
}

} // namespace sct::pipeline
