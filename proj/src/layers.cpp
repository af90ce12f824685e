#include "sct/layers.hpp"

#include "sct/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sct::nn {

namespace {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

// Gathers k x k windows of a (C, H, W) block into (C*k*k, hout*wout).
// `hout x wout` is the window grid of a conv with the given stride/pad.
void im2col(const float* x, int c, int h, int w, int k, int stride, int pad, int hout, int wout,
            Eigen::MatrixXf& col) {
    col.resize(std::int64_t(c) * k * k, std::int64_t(hout) * wout);
    for (int ic = 0; ic < c; ++ic) {
        const float* plane = x + std::int64_t(ic) * h * w;
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                const std::int64_t row = (std::int64_t(ic) * k + kh) * k + kw;
                for (int oh = 0; oh < hout; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    for (int ow = 0; ow < wout; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        col(row, std::int64_t(oh) * wout + ow) =
                            (ih >= 0 && ih < h && iw >= 0 && iw < w) ? plane[std::int64_t(ih) * w + iw]
                                                                     : 0.0f;
                    }
                }
            }
    }
}

// Adjoint of im2col: scatter-adds columns back into the (C, H, W) block.
void col2im_add(const Eigen::MatrixXf& col, float* x, int c, int h, int w, int k, int stride,
                int pad, int hout, int wout) {
    for (int ic = 0; ic < c; ++ic) {
        float* plane = x + std::int64_t(ic) * h * w;
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
                const std::int64_t row = (std::int64_t(ic) * k + kh) * k + kw;
                for (int oh = 0; oh < hout; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) continue;
                    for (int ow = 0; ow < wout; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        if (iw < 0 || iw >= w) continue;
                        plane[std::int64_t(ih) * w + iw] += col(row, std::int64_t(oh) * wout + ow);
                    }
                }
            }
    }
}

} // namespace

void Param::setup(std::string n, std::vector<int> d) {
    name = std::move(n);
    dims = std::move(d);
    std::int64_t total = 1;
    for (int x : dims) total *= x;
    w = Eigen::ArrayXf::Zero(total);
    g = Eigen::ArrayXf::Zero(total);
    m = Eigen::ArrayXf::Zero(total);
    v = Eigen::ArrayXf::Zero(total);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad) {
    w_.setup(name + ".w", {out_ch, in_ch, k, k});
    b_.setup(name + ".b", {out_ch});
}

void Conv2d::init(std::mt19937_64& rng, float stddev) {
    for (std::int64_t i = 0; i < w_.size(); ++i) w_.w[i] = float(stddev * gaussian(rng));
    b_.w.setZero();
}

std::pair<int, int> Conv2d::out_dims(int hin, int win) const {
    return {(hin + 2 * pad_ - k_) / stride_ + 1, (win + 2 * pad_ - k_) / stride_ + 1};
}

void Conv2d::forward(const Tensor4& x, Tensor4& y) {
    if (x.c != in_ch_) throw std::invalid_argument(w_.name + ": channel mismatch");
    const auto [hout, wout] = out_dims(x.h, x.w);
    if (y.n != x.n || y.c != out_ch_ || y.h != hout || y.w != wout)
        y.resize(x.n, out_ch_, hout, wout);
    hin_ = x.h;
    win_ = x.w;
    x_cache_ = x.v;

    ConstRowMap wmat(w_.w.data(), out_ch_, std::int64_t(in_ch_) * k_ * k_);
    for (int in = 0; in < x.n; ++in) {
        im2col(x.v.data() + x.index(in, 0, 0, 0), in_ch_, x.h, x.w, k_, stride_, pad_, hout, wout,
               col_);
        RowMap ymat(y.v.data() + y.index(in, 0, 0, 0), out_ch_, std::int64_t(hout) * wout);
        ymat.noalias() = wmat * col_;
        for (int oc = 0; oc < out_ch_; ++oc) ymat.row(oc).array() += b_.w[oc];
    }
}

void Conv2d::backward(const Tensor4& y, Tensor4& x, bool with_input_grad) {
    const int hout = y.h, wout = y.w;
    ConstRowMap wmat(w_.w.data(), out_ch_, std::int64_t(in_ch_) * k_ * k_);
    RowMap dwmat(w_.g.data(), out_ch_, std::int64_t(in_ch_) * k_ * k_);
    for (int in = 0; in < y.n; ++in) {
        // im2col of the cached input is recomputed; cheaper than keeping one
        // col buffer per batch item.
        im2col(x_cache_.data() + std::int64_t(in) * in_ch_ * hin_ * win_, in_ch_, hin_, win_, k_,
               stride_, pad_, hout, wout, col_);
        ConstRowMap dy(y.g.data() + y.index(in, 0, 0, 0), out_ch_, std::int64_t(hout) * wout);
        dwmat.noalias() += dy * col_.transpose();
        for (int oc = 0; oc < out_ch_; ++oc) b_.g[oc] += dy.row(oc).sum();
        if (with_input_grad) {
            dcol_.resize(col_.rows(), col_.cols());
            dcol_.noalias() = wmat.transpose() * dy;
            col2im_add(dcol_, x.g.data() + x.index(in, 0, 0, 0), in_ch_, x.h, x.w, k_, stride_,
                       pad_, hout, wout);
        }
    }
}

// --------------------------------------------------------------- TConv2d

TConv2d::TConv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad) {
    w_.setup(name + ".w", {in_ch, out_ch, k, k});
    b_.setup(name + ".b", {out_ch});
}

void TConv2d::init(std::mt19937_64& rng, float stddev) {
    for (std::int64_t i = 0; i < w_.size(); ++i) w_.w[i] = float(stddev * gaussian(rng));
    b_.w.setZero();
}

std::pair<int, int> TConv2d::out_dims(int hin, int win) const {
    return {(hin - 1) * stride_ - 2 * pad_ + k_, (win - 1) * stride_ - 2 * pad_ + k_};
}

void TConv2d::forward(const Tensor4& x, Tensor4& y) {
    if (x.c != in_ch_) throw std::invalid_argument(w_.name + ": channel mismatch");
    const auto [hout, wout] = out_dims(x.h, x.w);
    if (y.n != x.n || y.c != out_ch_ || y.h != hout || y.w != wout)
        y.resize(x.n, out_ch_, hout, wout);
    hin_ = x.h;
    win_ = x.w;
    x_cache_ = x.v;
    y.v.setZero();

    // y is the "image" side of the adjoint conv: cols = W^T Xmat, scatter-add.
    ConstRowMap wmat(w_.w.data(), in_ch_, std::int64_t(out_ch_) * k_ * k_);
    for (int in = 0; in < x.n; ++in) {
        ConstRowMap xmat(x.v.data() + x.index(in, 0, 0, 0), in_ch_, std::int64_t(x.h) * x.w);
        col_.resize(std::int64_t(out_ch_) * k_ * k_, std::int64_t(x.h) * x.w);
        col_.noalias() = wmat.transpose() * xmat;
        float* yblock = y.v.data() + y.index(in, 0, 0, 0);
        col2im_add(col_, yblock, out_ch_, hout, wout, k_, stride_, pad_, x.h, x.w);
        for (int oc = 0; oc < out_ch_; ++oc) {
            Eigen::Map<Eigen::ArrayXf> plane(yblock + std::int64_t(oc) * hout * wout,
                                             std::int64_t(hout) * wout);
            plane += b_.w[oc];
        }
    }
}

void TConv2d::backward(const Tensor4& y, Tensor4& x, bool with_input_grad) {
    ConstRowMap wmat(w_.w.data(), in_ch_, std::int64_t(out_ch_) * k_ * k_);
    RowMap dwmat(w_.g.data(), in_ch_, std::int64_t(out_ch_) * k_ * k_);
    for (int in = 0; in < y.n; ++in) {
        im2col(y.g.data() + y.index(in, 0, 0, 0), out_ch_, y.h, y.w, k_, stride_, pad_, hin_, win_,
               dcol_);
        ConstRowMap xmat(x_cache_.data() + std::int64_t(in) * in_ch_ * hin_ * win_, in_ch_,
                         std::int64_t(hin_) * win_);
        dwmat.noalias() += xmat * dcol_.transpose();
        ConstRowMap dy(y.g.data() + y.index(in, 0, 0, 0), out_ch_, std::int64_t(y.h) * y.w);
        for (int oc = 0; oc < out_ch_; ++oc) b_.g[oc] += dy.row(oc).sum();
        if (with_input_grad) {
            RowMap dx(x.g.data() + x.index(in, 0, 0, 0), in_ch_, std::int64_t(hin_) * win_);
            dx.noalias() += wmat * dcol_;
        }
    }
}

// ------------------------------------------------------------ BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels, float eps, float momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
    gamma_.setup(name + ".gamma", {channels});
    beta_.setup(name + ".beta", {channels});
    gamma_.w.setOnes();
    running_mean_ = Eigen::ArrayXf::Zero(channels);
    running_var_ = Eigen::ArrayXf::Ones(channels);
}

void BatchNorm2d::forward(const Tensor4& x, Tensor4& y, bool training) {
    if (x.c != channels_) throw std::invalid_argument(gamma_.name + ": channel mismatch");
    if (!y.same_shape(x)) y.resize(x.n, x.c, x.h, x.w);
    const std::int64_t plane = x.plane();
    const std::int64_t m = std::int64_t(x.n) * plane;
    if (training) {
        xhat_.resize(x.v.size());
        invstd_.resize(channels_);
        for (int ic = 0; ic < channels_; ++ic) {
            double sum = 0.0, sq = 0.0;
            for (int in = 0; in < x.n; ++in) {
                const auto seg = x.v.segment(x.index(in, ic, 0, 0), plane);
                sum += seg.sum();
                sq += double(seg.square().sum());
            }
            const double mean = sum / double(m);
            const double var = std::max(0.0, sq / double(m) - mean * mean);
            const float istd = float(1.0 / std::sqrt(var + eps_));
            invstd_[ic] = istd;
            running_mean_[ic] = (1.0f - momentum_) * running_mean_[ic] + momentum_ * float(mean);
            const double unbiased = m > 1 ? var * double(m) / double(m - 1) : var;
            running_var_[ic] = (1.0f - momentum_) * running_var_[ic] + momentum_ * float(unbiased);
            for (int in = 0; in < x.n; ++in) {
                const std::int64_t off = x.index(in, ic, 0, 0);
                xhat_.segment(off, plane) = (x.v.segment(off, plane) - float(mean)) * istd;
                y.v.segment(off, plane) = gamma_.w[ic] * xhat_.segment(off, plane) + beta_.w[ic];
            }
        }
    } else {
        for (int ic = 0; ic < channels_; ++ic) {
            const float istd = 1.0f / std::sqrt(running_var_[ic] + eps_);
            for (int in = 0; in < x.n; ++in) {
                const std::int64_t off = x.index(in, ic, 0, 0);
                y.v.segment(off, plane) =
                    gamma_.w[ic] * (x.v.segment(off, plane) - running_mean_[ic]) * istd +
                    beta_.w[ic];
            }
        }
    }
}

void BatchNorm2d::backward(const Tensor4& y, Tensor4& x) {
    const std::int64_t plane = x.plane();
    const std::int64_t m = std::int64_t(x.n) * plane;
    for (int ic = 0; ic < channels_; ++ic) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int in = 0; in < x.n; ++in) {
            const std::int64_t off = x.index(in, ic, 0, 0);
            const auto dy = y.g.segment(off, plane);
            sum_dy += dy.sum();
            sum_dy_xhat += double((dy * xhat_.segment(off, plane)).sum());
        }
        beta_.g[ic] += float(sum_dy);
        gamma_.g[ic] += float(sum_dy_xhat);
        const float k1 = gamma_.w[ic] * invstd_[ic];
        const float mean_dy = float(sum_dy / double(m));
        const float mean_dy_xhat = float(sum_dy_xhat / double(m));
        for (int in = 0; in < x.n; ++in) {
            const std::int64_t off = x.index(in, ic, 0, 0);
            x.g.segment(off, plane) +=
                k1 * (y.g.segment(off, plane) - mean_dy - xhat_.segment(off, plane) * mean_dy_xhat);
        }
    }
}

// ------------------------------------------------------------ activations

void LeakyReLU::forward(const Tensor4& x, Tensor4& y) {
    if (!y.same_shape(x)) y.resize(x.n, x.c, x.h, x.w);
    x_cache_ = x.v;
    y.v = (x.v >= 0.0f).select(x.v, x.v * slope_);
}

void LeakyReLU::backward(const Tensor4& y, Tensor4& x) {
    x.g += (x_cache_ >= 0.0f).select(y.g, y.g * slope_);
}

void Tanh::forward(const Tensor4& x, Tensor4& y) {
    if (!y.same_shape(x)) y.resize(x.n, x.c, x.h, x.w);
    y.v = x.v.tanh();
    y_cache_ = y.v;
}

void Tanh::backward(const Tensor4& y, Tensor4& x) {
    x.g += y.g * (1.0f - y_cache_.square());
}

void Dropout::forward(const Tensor4& x, Tensor4& y, bool training, std::mt19937_64& rng) {
    if (!y.same_shape(x)) y.resize(x.n, x.c, x.h, x.w);
    last_training_ = training;
    if (!training || rate_ <= 0.0f) {
        y.v = x.v;
        return;
    }
    const float keep = 1.0f - rate_;
    mask_.resize(x.v.size());
    for (std::int64_t i = 0; i < mask_.size(); ++i)
        mask_[i] = uniform01(rng) < keep ? 1.0f / keep : 0.0f;
    y.v = x.v * mask_;
}

void Dropout::backward(const Tensor4& y, Tensor4& x) {
    if (!last_training_ || rate_ <= 0.0f)
        x.g += y.g;
    else
        x.g += y.g * mask_;
}

// ----------------------------------------------------------------- losses

double l1_loss(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("l1_loss shape mismatch");
    return double((a.v - b.v).abs().sum()) / double(a.size());
}

void add_l1_grad(Tensor4& a, const Tensor4& b, float scale) {
    if (!a.same_shape(b)) throw std::invalid_argument("l1_loss shape mismatch");
    const float k = scale / float(a.size());
    const Eigen::ArrayXf diff = a.v - b.v;
    a.g += (diff > 0.0f).select(Eigen::ArrayXf::Constant(diff.size(), k),
                                (diff < 0.0f).select(Eigen::ArrayXf::Constant(diff.size(), -k),
                                                     Eigen::ArrayXf::Zero(diff.size())));
}

double lsgan_loss(const Tensor4& score, float target) {
    return double((score.v - target).square().sum()) / double(score.size());
}

void add_lsgan_grad(Tensor4& score, float target, float scale) {
    score.g += (2.0f * scale / float(score.size())) * (score.v - target);
}

} // namespace sct::nn
