#include "cisrl/mlp.hpp"

#include "cisrl/common.hpp"

#include <cmath>

namespace cisrl::rl {

Mlp::Mlp(int in, int h1, int h2, int out) : in_(in), h1_(h1), h2_(h2), out_(out) {
    if (in < 1 || h1 < 1 || h2 < 1 || out < 1) throw ConfigError("Mlp: bad layer sizes");
    params_.assign(static_cast<size_t>(h1) * in + h1 + static_cast<size_t>(h2) * h1 + h2 +
                       static_cast<size_t>(out) * h2 + out,
                   0.0);
}

void Mlp::init_uniform(Rng& rng) {
    auto fill = [&](size_t off, int rows, int cols) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows * cols; ++i) params_[off + i] = rng.uniform(-bound, bound);
    };
    fill(w1(), h1_, in_);
    fill(w2(), h2_, h1_);
    fill(w3(), out_, h2_);
    for (int i = 0; i < h1_; ++i) params_[b1() + i] = 0.0;
    for (int i = 0; i < h2_; ++i) params_[b2() + i] = 0.0;
    for (int i = 0; i < out_; ++i) params_[b3() + i] = 0.0;
}

void Mlp::forward(const double* x, Workspace& ws) const {
    ws.a1.resize(h1_);
    ws.a2.resize(h2_);
    ws.out.resize(out_);
    const double* p = params_.data();
    for (int i = 0; i < h1_; ++i) {
        double s = p[b1() + i];
        const double* w = p + w1() + static_cast<size_t>(i) * in_;
        for (int j = 0; j < in_; ++j) s += w[j] * x[j];
        ws.a1[i] = std::tanh(s);
    }
    for (int i = 0; i < h2_; ++i) {
        double s = p[b2() + i];
        const double* w = p + w2() + static_cast<size_t>(i) * h1_;
        for (int j = 0; j < h1_; ++j) s += w[j] * ws.a1[j];
        ws.a2[i] = std::tanh(s);
    }
    for (int i = 0; i < out_; ++i) {
        double s = p[b3() + i];
        const double* w = p + w3() + static_cast<size_t>(i) * h2_;
        for (int j = 0; j < h2_; ++j) s += w[j] * ws.a2[j];
        ws.out[i] = s;
    }
}

void Mlp::backward(const double* x, const Workspace& ws, const double* dout,
                   std::vector<double>& grad) const {
    const double* p = params_.data();
    double* g = grad.data();
    auto& d2 = const_cast<Workspace&>(ws).d2;
    auto& d1 = const_cast<Workspace&>(ws).d1;
    d2.assign(h2_, 0.0);
    d1.assign(h1_, 0.0);

    for (int i = 0; i < out_; ++i) {
        const double d = dout[i];
        double* gw = g + w3() + static_cast<size_t>(i) * h2_;
        const double* w = p + w3() + static_cast<size_t>(i) * h2_;
        for (int j = 0; j < h2_; ++j) {
            gw[j] += d * ws.a2[j];
            d2[j] += w[j] * d;
        }
        g[b3() + i] += d;
    }
    for (int i = 0; i < h2_; ++i) {
        const double d = d2[i] * (1.0 - ws.a2[i] * ws.a2[i]);
        double* gw = g + w2() + static_cast<size_t>(i) * h1_;
        const double* w = p + w2() + static_cast<size_t>(i) * h1_;
        for (int j = 0; j < h1_; ++j) {
            gw[j] += d * ws.a1[j];
            d1[j] += w[j] * d;
        }
        g[b2() + i] += d;
    }
    for (int i = 0; i < h1_; ++i) {
        const double d = d1[i] * (1.0 - ws.a1[i] * ws.a1[i]);
        double* gw = g + w1() + static_cast<size_t>(i) * in_;
        for (int j = 0; j < in_; ++j) gw[j] += d * x[j];
        g[b1() + i] += d;
    }
}

} // namespace cisrl::rl
