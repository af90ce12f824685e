#include "sct/adam.hpp"

#include <cmath>

namespace sct::nn {

void adam_update(Eigen::ArrayXf& w, const Eigen::ArrayXf& g, Eigen::ArrayXf& m, Eigen::ArrayXf& v,
                 const AdamState& st, long t) {
    m = st.beta1 * m + (1.0f - st.beta1) * g;
    v = st.beta2 * v + (1.0f - st.beta2) * g.square();
    const float bc1 = 1.0f - std::pow(st.beta1, float(t));
    const float bc2 = 1.0f - std::pow(st.beta2, float(t));
    w -= st.lr * (m / bc1) / ((v / bc2).sqrt() + st.eps);
}

void adam_step(std::span<Param* const> params, AdamState& st) {
    ++st.t;
    for (Param* p : params) adam_update(p->w, p->g, p->m, p->v, st, st.t);
}

} // namespace sct::nn
