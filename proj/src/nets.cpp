#include "sct/nets.hpp"

#include "sct/errors.hpp"
#include "sct/rng.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

namespace sct::nn {

namespace {

constexpr char kMagic[5] = {'V', 'O', 'X', 'W', '1'};

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw io_error("truncated checkpoint: " + path);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_checkpoint(const std::string& path, const std::string& descriptor,
                      const std::vector<NamedBlob>& blobs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path);
    os.write(kMagic, 5);
    put_u32(os, std::uint32_t(descriptor.size()));
    os.write(descriptor.data(), std::streamsize(descriptor.size()));
    put_u32(os, std::uint32_t(blobs.size()));
    for (const auto& b : blobs) {
        put_u32(os, std::uint32_t(b.name.size()));
        os.write(b.name.data(), std::streamsize(b.name.size()));
        put_u32(os, std::uint32_t(b.dims.size()));
        for (int d : b.dims) put_u32(os, std::uint32_t(d));
        os.write(reinterpret_cast<const char*>(b.data.data()), b.data.size() * 4);
    }
    if (!os) throw io_error("write failed: " + path);
}

std::pair<std::string, std::vector<NamedBlob>> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw missing_artifact_error("cannot open checkpoint: " + path);
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0)
        throw io_error("bad VOXW1 magic in " + path);
    const std::uint32_t dlen = get_u32(is, path);
    std::string desc(dlen, '\0');
    if (!is.read(desc.data(), dlen)) throw io_error("truncated checkpoint: " + path);
    const std::uint32_t count = get_u32(is, path);
    std::vector<NamedBlob> blobs(count);
    for (auto& b : blobs) {
        const std::uint32_t nlen = get_u32(is, path);
        b.name.resize(nlen);
        if (!is.read(b.name.data(), nlen)) throw io_error("truncated checkpoint: " + path);
        const std::uint32_t rank = get_u32(is, path);
        b.dims.resize(rank);
        std::int64_t total = 1;
        for (auto& d : b.dims) {
            d = int(get_u32(is, path));
            total *= d;
        }
        b.data.resize(total);
        if (!is.read(reinterpret_cast<char*>(b.data.data()), total * 4))
            throw io_error("truncated checkpoint payload in " + path);
    }
    return {std::move(desc), std::move(blobs)};
}

namespace {

std::vector<NamedBlob> blobs_from(const std::vector<const Param*>& ps) {
    std::vector<NamedBlob> out;
    out.reserve(ps.size());
    for (const Param* p : ps) out.push_back({p->name, p->dims, p->w});
    return out;
}

void load_into(const std::vector<NamedBlob>& blobs, const std::vector<Param*>& ps,
               const std::vector<std::pair<std::string, Eigen::ArrayXf*>>& buffers) {
    std::map<std::string, const NamedBlob*> by_name;
    for (const auto& b : blobs) by_name[b.name] = &b;
    const auto fetch = [&](const std::string& name, Eigen::ArrayXf& dst) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw io_error("checkpoint misses parameter " + name);
        if (it->second->data.size() != dst.size())
            throw io_error("checkpoint size mismatch for " + name);
        dst = it->second->data;
    };
    for (Param* p : ps) fetch(p->name, p->w);
    for (const auto& [name, buf] : buffers) fetch(name, *buf);
}

std::uint64_t hash_arrays(const std::vector<const Eigen::ArrayXf*>& arrays) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* a : arrays) h = fnv1a64(a->data(), std::size_t(a->size()) * 4, h);
    return h;
}

} // namespace

Tensor4 image_to_pm1(const Image2D& img) {
    Tensor4 t(1, 1, img.height, img.width);
    t.v = img.v / 127.5f - 1.0f;
    return t;
}

Image2D pm1_to_image(const Tensor4& t) {
    Image2D img(t.w, t.h);
    img.v = ((t.v + 1.0f) * 127.5f).min(255.0f).max(0.0f);
    return img;
}

// ---------------------------------------------------------- UNetGenerator

UNetGenerator::UNetGenerator(std::string prefix, int in_ch, int out_ch, int base,
                             std::uint64_t seed)
    : prefix_(std::move(prefix)),
      in_ch_(in_ch),
      out_ch_(out_ch),
      base_(base),
      e1c_(prefix_ + ".e1.conv", in_ch, base, 4, 2, 1),
      e2c_(prefix_ + ".e2.conv", base, 2 * base, 4, 2, 1),
      e3c_(prefix_ + ".e3.conv", 2 * base, 4 * base, 4, 2, 1),
      e2bn_(prefix_ + ".e2.bn", 2 * base),
      e3bn_(prefix_ + ".e3.bn", 4 * base),
      d1t_(prefix_ + ".d1.tconv", 4 * base, 2 * base, 4, 2, 1),
      d2t_(prefix_ + ".d2.tconv", 4 * base, base, 4, 2, 1),
      d3t_(prefix_ + ".d3.tconv", 2 * base, out_ch, 4, 2, 1),
      d1bn_(prefix_ + ".d1.bn", 2 * base),
      d2bn_(prefix_ + ".d2.bn", base),
      d1do_(0.5f),
      d2do_(0.5f) {
    auto rng = rng_stream(seed, 0);
    e1c_.init(rng);
    e2c_.init(rng);
    e3c_.init(rng);
    d1t_.init(rng);
    d2t_.init(rng);
    d3t_.init(rng);
    dropout_rng_ = rng_stream(seed, 1);
}

const Tensor4& UNetGenerator::forward(const Tensor4& x, bool training) {
    if (x.h % 8 != 0 || x.w % 8 != 0)
        throw std::invalid_argument("generator input dims must be divisible by 8");
    e1c_.forward(x, t_e1c_);
    lr1_.forward(t_e1c_, t_a1_);
    e2c_.forward(t_a1_, t_e2c_);
    e2bn_.forward(t_e2c_, t_e2bn_, training);
    lr2_.forward(t_e2bn_, t_a2_);
    e3c_.forward(t_a2_, t_e3c_);
    e3bn_.forward(t_e3c_, t_e3bn_, training);
    lr3_.forward(t_e3bn_, t_a3_);

    d1t_.forward(t_a3_, t_d1t_);
    d1bn_.forward(t_d1t_, t_d1bn_, training);
    d1do_.forward(t_d1bn_, t_d1do_, training, dropout_rng_);
    ru1_.forward(t_d1do_, t_u1_);
    concat_channels(t_u1_, t_a2_, t_cat1_);

    d2t_.forward(t_cat1_, t_d2t_);
    d2bn_.forward(t_d2t_, t_d2bn_, training);
    d2do_.forward(t_d2bn_, t_d2do_, training, dropout_rng_);
    ru2_.forward(t_d2do_, t_u2_);
    concat_channels(t_u2_, t_a1_, t_cat2_);

    d3t_.forward(t_cat2_, t_d3t_);
    tanh_.forward(t_d3t_, t_y_);
    return t_y_;
}

void UNetGenerator::zero_activation_grads(Tensor4& x) {
    for (Tensor4* t : {&t_e1c_, &t_a1_, &t_e2c_, &t_e2bn_, &t_a2_, &t_e3c_, &t_e3bn_, &t_a3_,
                       &t_d1t_, &t_d1bn_, &t_d1do_, &t_u1_, &t_cat1_, &t_d2t_, &t_d2bn_, &t_d2do_,
                       &t_u2_, &t_cat2_, &t_d3t_})
        t->zero_grad();
    (void)x;
}

void UNetGenerator::backward(Tensor4& x, bool with_input_grad) {
    zero_activation_grads(x);
    tanh_.backward(t_y_, t_d3t_);
    d3t_.backward(t_d3t_, t_cat2_);
    split_channel_grad(t_cat2_, t_u2_, t_a1_);
    ru2_.backward(t_u2_, t_d2do_);
    d2do_.backward(t_d2do_, t_d2bn_);
    d2bn_.backward(t_d2bn_, t_d2t_);
    d2t_.backward(t_d2t_, t_cat1_);
    split_channel_grad(t_cat1_, t_u1_, t_a2_);
    ru1_.backward(t_u1_, t_d1do_);
    d1do_.backward(t_d1do_, t_d1bn_);
    d1bn_.backward(t_d1bn_, t_d1t_);
    d1t_.backward(t_d1t_, t_a3_);

    lr3_.backward(t_a3_, t_e3bn_);
    e3bn_.backward(t_e3bn_, t_e3c_);
    e3c_.backward(t_e3c_, t_a2_); // t_a2_.g already carries the skip share
    lr2_.backward(t_a2_, t_e2bn_);
    e2bn_.backward(t_e2bn_, t_e2c_);
    e2c_.backward(t_e2c_, t_a1_);
    lr1_.backward(t_a1_, t_e1c_);
    e1c_.backward(t_e1c_, x, with_input_grad);
}

Image2D UNetGenerator::translate(const Image2D& patch) {
    Tensor4 x = image_to_pm1(patch);
    const Tensor4& y = forward(x, /*training=*/false);
    return pm1_to_image(y);
}

void UNetGenerator::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

std::vector<Param*> UNetGenerator::params() {
    std::vector<Param*> out;
    for (auto* layer_params : {&e1c_, &e2c_, &e3c_})
        for (Param* p : layer_params->params()) out.push_back(p);
    for (auto* bn : {&e2bn_, &e3bn_, &d1bn_, &d2bn_})
        for (Param* p : bn->params()) out.push_back(p);
    for (auto* t : {&d1t_, &d2t_, &d3t_})
        for (Param* p : t->params()) out.push_back(p);
    return out;
}

std::vector<NamedBlob> UNetGenerator::state_blobs() const {
    auto* self = const_cast<UNetGenerator*>(this);
    std::vector<const Param*> ps;
    for (Param* p : self->params()) ps.push_back(p);
    auto blobs = blobs_from(ps);
    for (auto* bn : {&self->e2bn_, &self->e3bn_, &self->d1bn_, &self->d2bn_}) {
        const std::string base = bn->params()[0]->name.substr(0, bn->params()[0]->name.size() - 6);
        blobs.push_back({base + ".running_mean", {bn->channels()}, bn->running_mean()});
        blobs.push_back({base + ".running_var", {bn->channels()}, bn->running_var()});
    }
    return blobs;
}

void UNetGenerator::load_state(const std::vector<NamedBlob>& blobs) {
    std::vector<std::pair<std::string, Eigen::ArrayXf*>> buffers;
    for (auto* bn : {&e2bn_, &e3bn_, &d1bn_, &d2bn_}) {
        const std::string base = bn->params()[0]->name.substr(0, bn->params()[0]->name.size() - 6);
        buffers.emplace_back(base + ".running_mean", &bn->running_mean());
        buffers.emplace_back(base + ".running_var", &bn->running_var());
    }
    load_into(blobs, params(), buffers);
}

std::string UNetGenerator::arch_descriptor() const {
    return "unet in=" + std::to_string(in_ch_) + " out=" + std::to_string(out_ch_) +
           " base=" + std::to_string(base_) + " depth=3";
}

std::uint64_t UNetGenerator::state_hash() const {
    std::vector<const Eigen::ArrayXf*> arrays;
    for (const auto& b : state_blobs()) arrays.push_back(&b.data);
    return hash_arrays(arrays);
}

// ------------------------------------------------------ PatchDiscriminator

PatchDiscriminator::PatchDiscriminator(std::string prefix, int in_ch, int base, std::uint64_t seed)
    : prefix_(std::move(prefix)),
      in_ch_(in_ch),
      base_(base),
      c1_(prefix_ + ".c1.conv", in_ch, base, 4, 2, 1),
      c2_(prefix_ + ".c2.conv", base, 2 * base, 4, 2, 1),
      c3_(prefix_ + ".c3.conv", 2 * base, 4 * base, 4, 2, 1),
      c4_(prefix_ + ".c4.conv", 4 * base, 4 * base, 4, 2, 1),
      c5_(prefix_ + ".c5.conv", 4 * base, 1, 4, 2, 1),
      b2_(prefix_ + ".c2.bn", 2 * base),
      b3_(prefix_ + ".c3.bn", 4 * base),
      b4_(prefix_ + ".c4.bn", 4 * base) {
    auto rng = rng_stream(seed, 0);
    c1_.init(rng);
    c2_.init(rng);
    c3_.init(rng);
    c4_.init(rng);
    c5_.init(rng);
}

const Tensor4& PatchDiscriminator::forward(const Tensor4& x, bool training) {
    if (x.h % 32 != 0 || x.w % 32 != 0)
        throw std::invalid_argument("discriminator input dims must be divisible by 32");
    c1_.forward(x, t_c1_);
    l1_.forward(t_c1_, t_a1_);
    c2_.forward(t_a1_, t_c2_);
    b2_.forward(t_c2_, t_b2_, training);
    l2_.forward(t_b2_, t_a2_);
    c3_.forward(t_a2_, t_c3_);
    b3_.forward(t_c3_, t_b3_, training);
    l3_.forward(t_b3_, t_a3_);
    c4_.forward(t_a3_, t_c4_);
    b4_.forward(t_c4_, t_b4_, training);
    l4_.forward(t_b4_, t_a4_);
    c5_.forward(t_a4_, t_c5_);
    return t_c5_;
}

void PatchDiscriminator::zero_activation_grads(Tensor4& x) {
    for (Tensor4* t :
         {&t_c1_, &t_a1_, &t_c2_, &t_b2_, &t_a2_, &t_c3_, &t_b3_, &t_a3_, &t_c4_, &t_b4_, &t_a4_})
        t->zero_grad();
    (void)x;
}

void PatchDiscriminator::backward(Tensor4& x, bool with_input_grad) {
    zero_activation_grads(x);
    c5_.backward(t_c5_, t_a4_);
    l4_.backward(t_a4_, t_b4_);
    b4_.backward(t_b4_, t_c4_);
    c4_.backward(t_c4_, t_a3_);
    l3_.backward(t_a3_, t_b3_);
    b3_.backward(t_b3_, t_c3_);
    c3_.backward(t_c3_, t_a2_);
    l2_.backward(t_a2_, t_b2_);
    b2_.backward(t_b2_, t_c2_);
    c2_.backward(t_c2_, t_a1_);
    l1_.backward(t_a1_, t_c1_);
    c1_.backward(t_c1_, x, with_input_grad);
}

void PatchDiscriminator::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

std::vector<Param*> PatchDiscriminator::params() {
    std::vector<Param*> out;
    for (auto* conv : {&c1_, &c2_, &c3_, &c4_, &c5_})
        for (Param* p : conv->params()) out.push_back(p);
    for (auto* bn : {&b2_, &b3_, &b4_})
        for (Param* p : bn->params()) out.push_back(p);
    return out;
}

std::vector<NamedBlob> PatchDiscriminator::state_blobs() const {
    auto* self = const_cast<PatchDiscriminator*>(this);
    std::vector<const Param*> ps;
    for (Param* p : self->params()) ps.push_back(p);
    auto blobs = blobs_from(ps);
    for (auto* bn : {&self->b2_, &self->b3_, &self->b4_}) {
        const std::string base = bn->params()[0]->name.substr(0, bn->params()[0]->name.size() - 6);
        blobs.push_back({base + ".running_mean", {bn->channels()}, bn->running_mean()});
        blobs.push_back({base + ".running_var", {bn->channels()}, bn->running_var()});
    }
    return blobs;
}

void PatchDiscriminator::load_state(const std::vector<NamedBlob>& blobs) {
    std::vector<std::pair<std::string, Eigen::ArrayXf*>> buffers;
    for (auto* bn : {&b2_, &b3_, &b4_}) {
        const std::string base = bn->params()[0]->name.substr(0, bn->params()[0]->name.size() - 6);
        buffers.emplace_back(base + ".running_mean", &bn->running_mean());
        buffers.emplace_back(base + ".running_var", &bn->running_var());
    }
    load_into(blobs, params(), buffers);
}

std::string PatchDiscriminator::arch_descriptor() const {
    return "disc in=" + std::to_string(in_ch_) + " base=" + std::to_string(base_) + " layers=5";
}

std::uint64_t PatchDiscriminator::state_hash() const {
    std::vector<const Eigen::ArrayXf*> arrays;
    for (const auto& b : state_blobs()) arrays.push_back(&b.data);
    return hash_arrays(arrays);
}

} // namespace sct::nn
