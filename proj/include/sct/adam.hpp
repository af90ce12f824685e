#pragma once

#include "sct/layers.hpp"

#include <span>

namespace sct::nn {

// Adam with the paper's betas. t counts completed steps; the step increments
// t before the bias correction.
struct AdamState {
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    long t = 0;
};

// Single-array update (moments m, v carried by the caller at step t).
void adam_update(Eigen::ArrayXf& w, const Eigen::ArrayXf& g, Eigen::ArrayXf& m, Eigen::ArrayXf& v,
                 const AdamState& st, long t);

// One optimizer step over a parameter group; increments st.t once.
void adam_step(std::span<Param* const> params, AdamState& st);

} // namespace sct::nn
