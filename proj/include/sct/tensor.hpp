#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace sct::nn {

// Batched NCHW activation/gradient carrier, 32-bit float, w fastest:
// index(n,c,h,w) = ((n*C + c)*H + h)*W + w. The g buffer always matches v.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    Eigen::ArrayXf v;
    Eigen::ArrayXf g;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

    void resize(int n_, int c_, int h_, int w_) {
        n = n_;
        c = c_;
        h = h_;
        w = w_;
        v = Eigen::ArrayXf::Zero(size());
        g = Eigen::ArrayXf::Zero(size());
    }

    std::int64_t size() const { return std::int64_t(n) * c * h * w; }
    std::int64_t plane() const { return std::int64_t(h) * w; }

    std::int64_t index(int in, int ic, int ih, int iw) const {
        return ((std::int64_t(in) * c + ic) * h + ih) * w + iw;
    }
    float at(int in, int ic, int ih, int iw) const { return v[index(in, ic, ih, iw)]; }
    float& at(int in, int ic, int ih, int iw) { return v[index(in, ic, ih, iw)]; }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    void zero_grad() { g.setZero(); }
};

// Throws numeric_error if any value or gradient is non-finite.
void check_finite(const Tensor4& t, const char* where);

// out = a ++ b along channels; grads flow back through split_channel_grad.
void concat_channels(const Tensor4& a, const Tensor4& b, Tensor4& out);
void split_channel_grad(const Tensor4& out, Tensor4& a, Tensor4& b);

} // namespace sct::nn
