#pragma once

#include "cisrl/rng.hpp"

#include <vector>

namespace cisrl::rl {

// Small dense net: in -> h1 -> h2 -> out, tanh hidden activations, linear
// output. Parameters live in one flat vector (W1, b1, W2, b2, W3, b3) so
// optimizers and persistence can treat them uniformly.
class Mlp {
  public:
    Mlp(int in, int h1, int h2, int out);

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }
    int h1_dim() const { return h1_; }
    int h2_dim() const { return h2_; }
    int param_count() const { return static_cast<int>(params_.size()); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // weights uniform in +-1/sqrt(fan_in), biases zero
    void init_uniform(Rng& rng);

    struct Workspace {
        std::vector<double> a1, a2, out; // post-activation values
        std::vector<double> d1, d2;      // scratch for backward
    };

    void forward(const double* x, Workspace& ws) const;

    // Accumulates dL/dparams into grad (same layout as params) given
    // dL/dout. Requires the workspace of the matching forward call.
    void backward(const double* x, const Workspace& ws, const double* dout,
                  std::vector<double>& grad) const;

  private:
    int in_, h1_, h2_, out_;
    std::vector<double> params_;

    // offsets into the flat parameter vector
    size_t w1() const { return 0; }
    size_t b1() const { return static_cast<size_t>(h1_) * in_; }
    size_t w2() const { return b1() + h1_; }
    size_t b2() const { return w2() + static_cast<size_t>(h2_) * h1_; }
    size_t w3() const { return b2() + h2_; }
    size_t b3() const { return w3() + static_cast<size_t>(out_) * h2_; }
};

} // namespace cisrl::rl
