#include "sct/tensor.hpp"

#include "sct/errors.hpp"

#include <string>

namespace sct::nn {

void check_finite(const Tensor4& t, const char* where) {
    if (!t.v.isFinite().all() || !t.g.isFinite().all())
        throw numeric_error(std::string("non-finite tensor values in ") + where);
}

void concat_channels(const Tensor4& a, const Tensor4& b, Tensor4& out) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels shape mismatch");
    if (out.n != a.n || out.c != a.c + b.c || out.h != a.h || out.w != a.w)
        out.resize(a.n, a.c + b.c, a.h, a.w);
    const std::int64_t plane = a.plane();
    for (int in = 0; in < a.n; ++in) {
        out.v.segment(out.index(in, 0, 0, 0), a.c * plane) =
            a.v.segment(a.index(in, 0, 0, 0), a.c * plane);
        out.v.segment(out.index(in, a.c, 0, 0), b.c * plane) =
            b.v.segment(b.index(in, 0, 0, 0), b.c * plane);
    }
}

void split_channel_grad(const Tensor4& out, Tensor4& a, Tensor4& b) {
    const std::int64_t plane = a.plane();
    for (int in = 0; in < a.n; ++in) {
        a.g.segment(a.index(in, 0, 0, 0), a.c * plane) +=
            out.g.segment(out.index(in, 0, 0, 0), a.c * plane);
        b.g.segment(b.index(in, 0, 0, 0), b.c * plane) +=
            out.g.segment(out.index(in, a.c, 0, 0), b.c * plane);
    }
}

} // namespace sct::nn
