// sctgen: phantom-scale synthetic-CT pipeline driver.
//
// Subcommands: phantom, train, synth, eval, drr, sweep, report.
// Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 numeric failure.

#include "sct/errors.hpp"
#include "sct/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out;
};

sct::cfg::RunConfig load_config(const CommonArgs& args) {
    sct::cfg::RunConfig rc = args.config_path.empty()
                                 ? sct::cfg::RunConfig{}
                                 : sct::cfg::RunConfig::from_file(args.config_path);
    if (args.seed) rc.seed = *args.seed;
    if (args.jobs) rc.jobs = *args.jobs;
    if (args.out) rc.out = *args.out;
    rc.finalize();
    return rc;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value run configuration file");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--jobs", args.jobs, "worker cap for parallel stages");
    cmd->add_option("--out", args.out, "output directory override");
}

struct SynthArgs {
    std::string case_id;
    std::string kind = "pix2pix";
    std::string policy;
    std::string translator = "model";
    std::string views;
    std::optional<int> stride, crop;
    bool count_map = false;
};

void add_synth_options(CLI::App* cmd, SynthArgs& args, bool with_case) {
    if (with_case) cmd->add_option("--case", args.case_id, "case id, e.g. test00")->required();
    cmd->add_option("--kind", args.kind, "model kind: pix2pix | cycle");
    cmd->add_option("--policy", args.policy, "fusion policy: average | median | vote");
    cmd->add_option("--translator", args.translator, "translator: model | identity | oracle");
    cmd->add_option("--views", args.views, "comma list, e.g. axial,coronal,sagittal");
    cmd->add_option("--stride", args.stride, "tile stride override");
    cmd->add_option("--crop", args.crop, "tile crop override");
}

sct::pipeline::SynthOptions make_options(const sct::cfg::RunConfig& rc, const SynthArgs& args) {
    sct::pipeline::SynthOptions opt = sct::pipeline::SynthOptions::defaults(rc);
    opt.kind = sct::gan::model_kind_from_string(args.kind);
    opt.translator = args.translator;
    opt.write_count_map = args.count_map;
    if (!args.policy.empty()) opt.policy.kind = sct::fuse::policy_kind_from_string(args.policy);
    if (args.stride) opt.spec.stride = *args.stride;
    if (args.crop) opt.spec.crop = *args.crop;
    opt.spec.validate();
    if (!args.views.empty()) {
        opt.views.clear();
        std::stringstream ss(args.views);
        std::string v;
        while (std::getline(ss, v, ',')) opt.views.push_back(sct::view_from_string(v));
    }
    return opt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"patch-based 2.5-D synthetic CT pipeline on procedural phantoms"};
    app.require_subcommand(1);

    CommonArgs common;
    SynthArgs synth_args;
    std::string train_kind = "pix2pix";
    std::string report_csv;

    auto* c_phantom = app.add_subcommand("phantom", "generate the phantom dataset splits");
    add_common(c_phantom, common);

    auto* c_train = app.add_subcommand("train", "train per-view models");
    add_common(c_train, common);
    c_train->add_option("--kind", train_kind, "model kind: pix2pix | cycle");

    auto* c_synth = app.add_subcommand("synth", "synthesize one case");
    add_common(c_synth, common);
    add_synth_options(c_synth, synth_args, true);
    c_synth->add_flag("--count-map", synth_args.count_map, "emit the per-voxel estimate counts");

    auto* c_eval = app.add_subcommand("eval", "region metrics over the test split");
    add_common(c_eval, common);
    add_synth_options(c_eval, synth_args, false);

    auto* c_drr = app.add_subcommand("drr", "sagittal/coronal DRRs for CT and sCT");
    add_common(c_drr, common);
    add_synth_options(c_drr, synth_args, true);

    auto* c_sweep = app.add_subcommand("sweep", "tile/view/policy grid over the test split");
    add_common(c_sweep, common);
    c_sweep->add_option("--translator", synth_args.translator,
                        "translator: model | identity | oracle");

    auto* c_report = app.add_subcommand("report", "aggregate a per-case metrics CSV");
    add_common(c_report, common);
    c_report->add_option("--in", report_csv, "per-case metrics CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const sct::cfg::RunConfig rc = load_config(common);
        if (c_phantom->parsed()) {
            sct::pipeline::cmd_phantom(rc);
        } else if (c_train->parsed()) {
            sct::pipeline::cmd_train(rc, sct::gan::model_kind_from_string(train_kind));
        } else if (c_synth->parsed()) {
            std::cout << sct::pipeline::cmd_synth(rc, synth_args.case_id,
                                                  make_options(rc, synth_args))
                      << "\n";
        } else if (c_eval->parsed()) {
            std::cout << sct::pipeline::cmd_eval(rc, make_options(rc, synth_args)) << "\n";
        } else if (c_drr->parsed()) {
            sct::pipeline::cmd_drr(rc, synth_args.case_id, make_options(rc, synth_args));
        } else if (c_sweep->parsed()) {
            std::cout << sct::pipeline::cmd_sweep(rc, synth_args.translator) << "\n";
        } else if (c_report->parsed()) {
            std::cout << sct::pipeline::cmd_report(rc, report_csv) << "\n";
        }
    } catch (const sct::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sct::missing_artifact_error& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 3;
    } catch (const sct::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
