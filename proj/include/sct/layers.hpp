#pragma once

#include "sct/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace sct::nn {

// One learnable array plus its gradient and Adam moment accumulators.
struct Param {
    std::string name;
    std::vector<int> dims;
    Eigen::ArrayXf w, g, m, v;

    void setup(std::string n, std::vector<int> d);
    std::int64_t size() const { return w.size(); }
    void zero_grad() { g.setZero(); }
};

// 2-D convolution, im2col + GEMM. Weight layout (out_ch, in_ch, k, k).
class Conv2d {
  public:
    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad);
    void init(std::mt19937_64& rng, float stddev = 0.02f);

    void forward(const Tensor4& x, Tensor4& y);
    // reads y.g, accumulates into weight grads and (if with_input_grad) x.g
    void backward(const Tensor4& y, Tensor4& x, bool with_input_grad = true);

    std::vector<Param*> params() { return {&w_, &b_}; }
    int out_ch() const { return out_ch_; }
    std::pair<int, int> out_dims(int hin, int win) const;

  private:
    int in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Param w_, b_;
    Eigen::MatrixXf col_, dcol_;
    Eigen::ArrayXf x_cache_;
    int hin_ = 0, win_ = 0;
};

// Transposed 2-D convolution (the adjoint map of Conv2d with the same
// stride/pad). Weight layout (in_ch, out_ch, k, k).
class TConv2d {
  public:
    TConv2d() = default;
    TConv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad);
    void init(std::mt19937_64& rng, float stddev = 0.02f);

    void forward(const Tensor4& x, Tensor4& y);
    void backward(const Tensor4& y, Tensor4& x, bool with_input_grad = true);

    std::vector<Param*> params() { return {&w_, &b_}; }
    int out_ch() const { return out_ch_; }
    std::pair<int, int> out_dims(int hin, int win) const;

  private:
    int in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    Param w_, b_;
    Eigen::MatrixXf col_, dcol_;
    Eigen::ArrayXf x_cache_;
    int hin_ = 0, win_ = 0;
};

// Per-channel batch normalization. Batch statistics in training, running
// statistics at inference.
class BatchNorm2d {
  public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(std::string name, int channels, float eps = 1e-5f,
                         float momentum = 0.1f);

    void forward(const Tensor4& x, Tensor4& y, bool training);
    void backward(const Tensor4& y, Tensor4& x); // training-mode gradient

    std::vector<Param*> params() { return {&gamma_, &beta_}; }
    Eigen::ArrayXf& running_mean() { return running_mean_; }
    Eigen::ArrayXf& running_var() { return running_var_; }
    int channels() const { return channels_; }

  private:
    int channels_ = 0;
    float eps_ = 1e-5f, momentum_ = 0.1f;
    Param gamma_, beta_;
    Eigen::ArrayXf running_mean_, running_var_;
    Eigen::ArrayXf xhat_, invstd_; // training caches
};

class LeakyReLU {
  public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    void forward(const Tensor4& x, Tensor4& y);
    void backward(const Tensor4& y, Tensor4& x);

  private:
    float slope_ = 0.2f;
    Eigen::ArrayXf x_cache_;
};

class Tanh {
  public:
    void forward(const Tensor4& x, Tensor4& y);
    void backward(const Tensor4& y, Tensor4& x);

  private:
    Eigen::ArrayXf y_cache_;
};

// Inverted dropout: train-time y = x * mask / (1 - rate), identity at inference.
class Dropout {
  public:
    explicit Dropout(float rate = 0.5f) : rate_(rate) {}
    void forward(const Tensor4& x, Tensor4& y, bool training, std::mt19937_64& rng);
    void backward(const Tensor4& y, Tensor4& x);

  private:
    float rate_ = 0.5f;
    bool last_training_ = false;
    Eigen::ArrayXf mask_;
};

// Mean absolute difference; subgradient sign(a-b)/count (0 at ties).
double l1_loss(const Tensor4& a, const Tensor4& b);
void add_l1_grad(Tensor4& a, const Tensor4& b, float scale);

// Least-squares GAN loss: mean (score - target)^2 against a constant label.
double lsgan_loss(const Tensor4& score, float target);
void add_lsgan_grad(Tensor4& score, float target, float scale);

} // namespace sct::nn
