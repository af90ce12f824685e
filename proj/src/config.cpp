#include "sct/config.hpp"

#include "sct/errors.hpp"
#include "sct/nets.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

namespace sct::cfg {

std::string code_version() {
    return "sctgen 0.1.0";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_num(const std::string& key, const std::string& value) {
    std::stringstream ss(value);
    T x;
    ss >> x;
    if (ss.fail() || !trim(value.substr(std::size_t(ss.tellg()) == std::size_t(-1)
                                            ? value.size()
                                            : std::size_t(ss.tellg())))
                          .empty())
        throw config_error("bad numeric value for " + key + ": " + value);
    return x;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("bad boolean for " + key + ": " + value);
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    try {
        if (key == "seed") seed = parse_num<std::uint64_t>(key, value);
        else if (key == "out") out = value;
        else if (key == "jobs") jobs = parse_num<int>(key, value);
        else if (key == "phantom.edge") edge = parse_num<int>(key, value);
        else if (key == "phantom.spacing") spacing = parse_num<float>(key, value);
        else if (key == "phantom.train") n_train = parse_num<int>(key, value);
        else if (key == "phantom.val") n_val = parse_num<int>(key, value);
        else if (key == "phantom.test") n_test = parse_num<int>(key, value);
        else if (key == "phantom.noise_sigma") noise_sigma = parse_num<float>(key, value);
        else if (key == "phantom.bone_shells") bone_shells = parse_num<int>(key, value);
        else if (key == "phantom.air_cavities") air_cavities = parse_num<int>(key, value);
        else if (key == "tiles.patch") tile.patch = parse_num<int>(key, value);
        else if (key == "tiles.stride") tile.stride = parse_num<int>(key, value);
        else if (key == "tiles.crop") tile.crop = parse_num<int>(key, value);
        else if (key == "augment.cuts_per_slice") augment.cuts_per_slice = parse_num<int>(key, value);
        else if (key == "augment.max_tries") augment.max_tries = parse_num<int>(key, value);
        else if (key == "augment.mirror") augment.mirror = parse_bool(key, value);
        else if (key == "clip.policy") {
            if (value == "static") clip.kind = prep::ClipPolicy::Kind::Static;
            else if (value == "dynamic") clip.kind = prep::ClipPolicy::Kind::DynamicPercentile;
            else throw config_error("clip.policy must be static or dynamic");
        } else if (key == "clip.value") clip.value = parse_num<double>(key, value);
        else if (key == "mask.dilate") mask_dilate = parse_num<int>(key, value);
        else if (key == "train.epochs") train.epochs = parse_num<int>(key, value);
        else if (key == "train.lr") train.lr = parse_num<float>(key, value);
        else if (key == "train.lambda_l1") train.lambda_l1 = parse_num<float>(key, value);
        else if (key == "train.lambda_cyc") train.lambda_cyc = parse_num<float>(key, value);
        else if (key == "train.base_channels") train.base_channels = parse_num<int>(key, value);
        else if (key == "fusion.policies") {
            policies.clear();
            for (const auto& p : split_list(value)) policies.push_back(fuse::policy_kind_from_string(p));
            if (policies.empty()) throw config_error("fusion.policies is empty");
        } else if (key == "views") {
            views.clear();
            for (const auto& v : split_list(value)) views.push_back(view_from_string(v));
            if (views.empty()) throw config_error("views is empty");
        } else {
            throw config_error("unknown config key: " + key);
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string(e.what()) + " (key " + key + ")");
    }
}

void RunConfig::finalize() {
    train.seed = seed;
    train.patch = tile.patch;
    train.views = views;
    train.augment = augment;
    if (jobs < 1) throw config_error("jobs must be >= 1");
    if (n_train < 1 || n_val < 0 || n_test < 1)
        throw config_error("need at least one train and one test phantom");
    if (edge < 32) throw config_error("phantom.edge must be >= 32");
    try {
        tile.validate();
        clip.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    if (tile.patch > edge) throw config_error("tiles.patch exceeds phantom.edge");
    if (mask_dilate < 0) throw config_error("mask.dilate must be >= 0");
}

RunConfig RunConfig::from_string(const std::string& text) {
    RunConfig rc;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + " is not key = value");
        rc.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    rc.finalize();
    return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw missing_artifact_error("cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return from_string(ss.str());
    } catch (const config_error& e) {
        throw config_error(path + ": " + e.what());
    }
}

std::string RunConfig::canonical_text() const {
    std::string policies_s, views_s;
    for (const auto& p : policies) policies_s += std::string(policies_s.empty() ? "" : ",") + fuse::to_string(p);
    for (const auto& v : views) views_s += std::string(views_s.empty() ? "" : ",") + to_string(v);
    std::stringstream ss;
    ss << "augment.cuts_per_slice = " << augment.cuts_per_slice << "\n"
       << "augment.max_tries = " << augment.max_tries << "\n"
       << "augment.mirror = " << (augment.mirror ? "true" : "false") << "\n"
       << "clip.policy = "
       << (clip.kind == prep::ClipPolicy::Kind::Static ? "static" : "dynamic") << "\n"
       << "clip.value = " << clip.value << "\n"
       << "fusion.policies = " << policies_s << "\n"
       << "jobs = " << jobs << "\n"
       << "mask.dilate = " << mask_dilate << "\n"
       << "out = " << out << "\n"
       << "phantom.air_cavities = " << air_cavities << "\n"
       << "phantom.bone_shells = " << bone_shells << "\n"
       << "phantom.edge = " << edge << "\n"
       << "phantom.noise_sigma = " << noise_sigma << "\n"
       << "phantom.spacing = " << spacing << "\n"
       << "phantom.test = " << n_test << "\n"
       << "phantom.train = " << n_train << "\n"
       << "phantom.val = " << n_val << "\n"
       << "seed = " << seed << "\n"
       << "tiles.crop = " << tile.crop << "\n"
       << "tiles.patch = " << tile.patch << "\n"
       << "tiles.stride = " << tile.stride << "\n"
       << "train.base_channels = " << train.base_channels << "\n"
       << "train.epochs = " << train.epochs << "\n"
       << "train.lambda_cyc = " << train.lambda_cyc << "\n"
       << "train.lambda_l1 = " << train.lambda_l1 << "\n"
       << "train.lr = " << train.lr << "\n"
       << "views = " << views_s << "\n";
    return ss.str();
}

std::uint64_t RunConfig::config_hash() const {
    const std::string text = canonical_text();
    return nn::fnv1a64(text.data(), text.size());
}

// ----------------------------------------------------------------- manifest

RunManifest::RunManifest(const RunConfig& rc, std::string command)
    : command_(std::move(command)), config_hash_(rc.config_hash()), code_version_(code_version()) {}

void RunManifest::add_timing(const std::string& stage, double seconds) {
    timings_.emplace_back(stage, seconds);
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw missing_artifact_error("cannot digest missing file: " + path);
    char buf[1 << 16];
    std::uint64_t h = 0xcbf29ce484222325ULL;
    while (is) {
        is.read(buf, sizeof buf);
        h = nn::fnv1a64(buf, std::size_t(is.gcount()), h);
    }
    return h;
}

void RunManifest::add_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw missing_artifact_error("manifest cannot find file: " + path);
    files_.push_back({path, std::uint64_t(is.tellg()), file_digest(path)});
}

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command_;
    j["config_hash"] = config_hash_;
    j["code_version"] = code_version_;
    nlohmann::json jt = nlohmann::json::object();
    for (const auto& [stage, secs] : timings_) jt[stage] = secs;
    j["timings_seconds"] = jt;
    nlohmann::json jf = nlohmann::json::array();
    for (const auto& f : files_)
        jf.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv64", f.digest}});
    j["files"] = jf;
    std::ofstream os(path);
    if (!os) throw io_error("cannot write manifest: " + path);
    os << j.dump(2) << "\n";
}

StageTimer::StageTimer() {
    restart();
}

void StageTimer::restart() {
    start_ns_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now().time_since_epoch())
                    .count();
}

double StageTimer::elapsed_seconds() const {
    const auto now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now().time_since_epoch())
                         .count();
    return double(now - start_ns_) / 1e9;
}

} // namespace sct::cfg
