#pragma once

#include "sct/adam.hpp"
#include "sct/layers.hpp"
#include "sct/volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sct::nn {

// Named parameter blob for the VOXW1 checkpoint container.
struct NamedBlob {
    std::string name;
    std::vector<int> dims;
    Eigen::ArrayXf data;
};

// VOXW1: 5 magic bytes "VOXW1", u32 descriptor length + descriptor text,
// u32 blob count, then per blob: u32 name length + name, u32 rank,
// rank x u32 dims, f32 LE payload.
void write_checkpoint(const std::string& path, const std::string& descriptor,
                      const std::vector<NamedBlob>& blobs);
std::pair<std::string, std::vector<NamedBlob>> read_checkpoint(const std::string& path);

// UNet translator: stride-2 convolution encoder, stride-2 transposed
// convolution decoder with skip connections, batch norm, leaky-ReLU down /
// ReLU up, dropout in the decoder, final tanh. The public patch interface is
// [0,255]; internally the net works in [-1,1] (x/127.5 - 1).
class UNetGenerator {
  public:
    UNetGenerator(std::string prefix, int in_ch, int out_ch, int base, std::uint64_t seed);

    // internal [-1,1] space; spatial dims must be divisible by 8
    const Tensor4& forward(const Tensor4& x, bool training);
    Tensor4& output() { return t_y_; }
    // reads output().g; accumulates param grads and, optionally, x.g
    void backward(Tensor4& x, bool with_input_grad = false);

    // [0,255] -> [0,255] inference on one patch
    Image2D translate(const Image2D& patch) ;

    void zero_grad();
    std::vector<Param*> params();
    std::vector<NamedBlob> state_blobs() const;
    void load_state(const std::vector<NamedBlob>& blobs);
    std::string arch_descriptor() const;
    std::uint64_t state_hash() const;

  private:
    std::string prefix_;
    int in_ch_, out_ch_, base_;
    Conv2d e1c_, e2c_, e3c_;
    BatchNorm2d e2bn_, e3bn_;
    TConv2d d1t_, d2t_, d3t_;
    BatchNorm2d d1bn_, d2bn_;
    Dropout d1do_, d2do_;
    LeakyReLU lr1_{0.2f}, lr2_{0.2f}, lr3_{0.2f};
    LeakyReLU ru1_{0.0f}, ru2_{0.0f}; // plain ReLU
    Tanh tanh_;
    std::mt19937_64 dropout_rng_;

    Tensor4 t_e1c_, t_a1_, t_e2c_, t_e2bn_, t_a2_, t_e3c_, t_e3bn_, t_a3_;
    Tensor4 t_d1t_, t_d1bn_, t_d1do_, t_u1_, t_cat1_;
    Tensor4 t_d2t_, t_d2bn_, t_d2do_, t_u2_, t_cat2_;
    Tensor4 t_d3t_, t_y_;

    void zero_activation_grads(Tensor4& x);
};

// Five stride-2 convolution layers with leaky-ReLU; for a 32x32 input the
// realness score collapses to 1x1 (larger inputs give a small score map).
class PatchDiscriminator {
  public:
    PatchDiscriminator(std::string prefix, int in_ch, int base, std::uint64_t seed);

    const Tensor4& forward(const Tensor4& x, bool training);
    Tensor4& output() { return t_c5_; }
    void backward(Tensor4& x, bool with_input_grad);

    void zero_grad();
    std::vector<Param*> params();
    std::vector<NamedBlob> state_blobs() const;
    void load_state(const std::vector<NamedBlob>& blobs);
    std::string arch_descriptor() const;
    std::uint64_t state_hash() const;

  private:
    std::string prefix_;
    int in_ch_, base_;
    Conv2d c1_, c2_, c3_, c4_, c5_;
    BatchNorm2d b2_, b3_, b4_;
    LeakyReLU l1_{0.2f}, l2_{0.2f}, l3_{0.2f}, l4_{0.2f};

    Tensor4 t_c1_, t_a1_, t_c2_, t_b2_, t_a2_, t_c3_, t_b3_, t_a3_, t_c4_, t_b4_, t_a4_, t_c5_;

    void zero_activation_grads(Tensor4& x);
};

// [0,255] <-> internal [-1,1] patch conversions.
Tensor4 image_to_pm1(const Image2D& img);
Image2D pm1_to_image(const Tensor4& t);

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace sct::nn
