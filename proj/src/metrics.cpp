#include "sct/metrics.hpp"

#include "sct/errors.hpp"
#include "sct/prep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace sct::metrics {

const char* to_string(RegionSpec::Kind k) {
    switch (k) {
        case RegionSpec::Kind::Body: return "body";
        case RegionSpec::Kind::Bone: return "bone";
        case RegionSpec::Kind::Air: return "air";
    }
    return "?";
}

Volume region_mask(const Volume& ct_ref, const Volume& body, const RegionSpec& spec) {
    if (body.kind() != VolumeKind::Mask)
        throw std::invalid_argument("region_mask expects a Mask body volume");
    if (ct_ref.size() != body.size())
        throw std::invalid_argument("reference CT and body dims mismatch");
    if (spec.expand < 0) throw std::invalid_argument("negative expansion");
    if (float(spec.expand) * ct_ref.spacing() >= 5.0f)
        throw std::invalid_argument("region expansion must stay under 5 mm");

    Volume m(ct_ref.nx(), ct_ref.ny(), ct_ref.nz(), ct_ref.spacing(), VolumeKind::Mask);
    switch (spec.kind) {
        case RegionSpec::Kind::Body:
            m.values() = body.values();
            break;
        case RegionSpec::Kind::Bone:
            for (std::int64_t i = 0; i < m.size(); ++i)
                m.values()[i] =
                    (body.values()[i] != 0.0f && ct_ref.values()[i] > spec.threshold) ? 1.0f : 0.0f;
            break;
        case RegionSpec::Kind::Air:
            for (std::int64_t i = 0; i < m.size(); ++i)
                m.values()[i] =
                    (body.values()[i] != 0.0f && ct_ref.values()[i] < spec.threshold) ? 1.0f : 0.0f;
            break;
    }
    return prep::dilate_mask(m, spec.expand);
}

RegionStats region_stats(const Volume& ct, const Volume& sct, const Volume& mask) {
    if (ct.size() != sct.size() || ct.size() != mask.size())
        throw std::invalid_argument("metric volume dims mismatch");
    RegionStats st;
    double sum_abs = 0.0, sum_abs2 = 0.0, sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < ct.size(); ++i) {
        if (mask.values()[i] == 0.0f) continue;
        const double d = double(ct.values()[i]) - double(sct.values()[i]);
        sum += d;
        sum2 += d * d;
        sum_abs += std::abs(d);
        sum_abs2 += d * d;
        ++st.voxels;
    }
    if (st.voxels == 0) throw std::invalid_argument("empty region mask");
    const double n = double(st.voxels);
    st.mae = sum_abs / n;
    st.me = sum / n;
    if (st.voxels > 1) {
        st.mae_sd = std::sqrt(std::max(0.0, (sum_abs2 - n * st.mae * st.mae) / (n - 1.0)));
        st.me_sd = std::sqrt(std::max(0.0, (sum2 - n * st.me * st.me) / (n - 1.0)));
    }
    return st;
}

double mae(const Volume& ct, const Volume& sct, const Volume& mask) {
    return region_stats(ct, sct, mask).mae;
}

double me(const Volume& ct, const Volume& sct, const Volume& mask) {
    return region_stats(ct, sct, mask).me;
}

Image2D drr_raw(const Volume& v, View view) {
    if (v.kind() != VolumeKind::CTLike && v.kind() != VolumeKind::Synthetic)
        throw std::invalid_argument("drr expects a CT-like volume");
    if (view == View::Axial) throw std::invalid_argument("drr views are Sagittal and Coronal");

    const auto [w, h] = slice_dims(v, view);
    Image2D img(w, h);
    const double spacing = v.spacing();
    if (view == View::Sagittal) {
        for (int z = 0; z < v.nz(); ++z)
            for (int y = 0; y < v.ny(); ++y) {
                double sum = 0.0;
                for (int x = 0; x < v.nx(); ++x)
                    sum += std::max(0.0, double(v.at(x, y, z)) + 1000.0) * spacing;
                img.at(y, z) = float(sum);
            }
    } else {
        for (int z = 0; z < v.nz(); ++z)
            for (int x = 0; x < v.nx(); ++x) {
                double sum = 0.0;
                for (int y = 0; y < v.ny(); ++y)
                    sum += std::max(0.0, double(v.at(x, y, z)) + 1000.0) * spacing;
                img.at(x, z) = float(sum);
            }
    }
    return img;
}

Image2D drr(const Volume& v, View view) {
    Image2D img = drr_raw(v, view);
    const float mx = img.v.maxCoeff();
    if (mx > 0.0f) img.v *= 255.0f / mx;
    return img;
}

void write_pgm(const Image2D& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (std::int64_t i = 0; i < img.size(); ++i) {
        const int val = std::clamp(int(std::lround(img.v[i])), 0, 255);
        const unsigned char byte = static_cast<unsigned char>(val);
        os.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!os) throw io_error("write failed: " + path);
}

std::string format_g6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string csv_row(const MetricsRow& row) {
    return row.case_id + "," + row.model + "," + row.policy + "," + row.tilespec + "," +
           row.region + "," + format_g6(row.stats.mae) + "," + format_g6(row.stats.mae_sd) + "," +
           format_g6(row.stats.me) + "," + format_g6(row.stats.me_sd) + "," +
           std::to_string(row.stats.voxels);
}

std::string report(const std::vector<MetricsRow>& rows) {
    std::string out = std::string(kMetricsHeader) + "\n";
    // group by (model, policy, tilespec, region), first-appearance order
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<const MetricsRow*>> groups;
    for (const auto& r : rows) {
        const std::string key = r.model + "," + r.policy + "," + r.tilespec + "," + r.region;
        if (groups.find(key) == groups.end()) group_order.push_back(key);
        groups[key].push_back(&r);
        out += csv_row(r) + "\n";
    }
    for (const auto& key : group_order) {
        const auto& g = groups[key];
        const double n = double(g.size());
        RegionStats avg;
        for (const auto* r : g) {
            avg.mae += r->stats.mae;
            avg.mae_sd += r->stats.mae_sd;
            avg.me += r->stats.me;
            avg.me_sd += r->stats.me_sd;
            avg.voxels += r->stats.voxels;
        }
        avg.mae /= n;
        avg.mae_sd /= n;
        avg.me /= n;
        avg.me_sd /= n;
        avg.voxels = std::int64_t(double(avg.voxels) / n);
        double var_mae = 0.0, var_me = 0.0; // population, matching the table's std-dev row
        for (const auto* r : g) {
            var_mae += (r->stats.mae - avg.mae) * (r->stats.mae - avg.mae);
            var_me += (r->stats.me - avg.me) * (r->stats.me - avg.me);
        }
        out += "avg," + key + "," + format_g6(avg.mae) + "," + format_g6(avg.mae_sd) + "," +
               format_g6(avg.me) + "," + format_g6(avg.me_sd) + "," + std::to_string(avg.voxels) +
               "\n";
        out += "std_dev," + key + "," + format_g6(std::sqrt(var_mae / n)) + ",," +
               format_g6(std::sqrt(var_me / n)) + ",,\n";
    }
    return out;
}

} // namespace sct::metrics
