#pragma once

#include "cisrl/dynamics.hpp"
#include "cisrl/geometry.hpp"
#include "cisrl/mlp.hpp"
#include "cisrl/rng.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace cisrl::rl {

struct Hyper {
    double lr = 1e-4;
    double gamma = 0.99;
    double clip = 0.2;
    double gae_lambda = 0.95;
    int epochs_per_update = 10;
    int batch_episodes = 10;
    double std_floor = 0.05; // normalized action units, keeps exploration alive
    // The two below are artifact choices (the optimizer setup is not pinned
    // anywhere): a faster value head and scaled value targets keep the critic
    // usable against 1e6-scale returns.
    double value_lr = 1e-3;
    double value_target_scale = 1e-4;

    void validate() const;
};

struct Transition {
    dynamics::State x;
    dynamics::ControlInput u;
    double r = 0.0;
    dynamics::State x_next;
    double logprob = 0.0;
    bool done = false;
};

using Episode = std::vector<Transition>;

struct Losses {
    double policy = 0.0;
    double value = 0.0;
    double kl = 0.0;
};

// Discounted returns and GAE advantages for one episode. Bootstraps with 0
// on done transitions and value_fn(x_next) otherwise.
void returns_and_advantages(const Episode& episode, double gamma, double lambda,
                            const std::function<double(const dynamics::State&)>& value_fn,
                            std::vector<double>& returns, std::vector<double>& advantages);

// Actor-critic with a clipped-surrogate policy update. The action space is
// one-dimensional; states are normalized by the constraint box, the action
// mean goes through tanh and is scaled to [u_lo, u_hi], and the exploration
// std is state-independent with a hard floor (softplus parameterization, so
// the floor can never be crossed).
class Agent {
  public:
    Agent(const geometry::BoxSet& state_box, double u_lo, double u_hi, const Hyper& hyper,
          uint64_t seed);

    std::pair<dynamics::ControlInput, double> act(const dynamics::State& x, bool explore,
                                                  Rng& rng) const;

    // One PPO update over a batch of episodes: pooled GAE advantages
    // (normalized), epochs_per_update full-batch Adam steps on the clipped
    // surrogate and the value MSE. Restores the previous weights and throws
    // NumericError if a loss goes non-finite. The pooled transitions are
    // processed in a content-sorted order, so the result does not depend on
    // episode ordering within the batch. lr_scale multiplies both step sizes
    // for this update only (online retraining runs hotter than offline).
    Losses update(const std::vector<Episode>& batch, double lr_scale = 1.0);

    double value(const dynamics::State& x) const; // reward-scale estimate
    double std_normalized() const;
    double std_kelvin() const;
    const Hyper& hyper() const { return hyper_; }
    uint64_t seed() const { return seed_; }
    double action_low() const { return u_lo_; }
    double action_high() const { return u_hi_; }
    const geometry::BoxSet& state_box() const { return box_; }

    // ----- internals exposed for numerical tests -----
    struct PreparedBatch {
        std::vector<double> xn0, xn1;   // normalized states
        std::vector<double> a;          // normalized executed actions
        std::vector<double> logp_old;
        std::vector<double> adv;        // normalized advantages
        std::vector<double> target;     // scaled value targets
        size_t size() const { return a.size(); }
    };
    PreparedBatch prepare(const std::vector<Episode>& batch) const;

    std::vector<double> policy_params_flat() const; // mlp params + std parameter
    void set_policy_params_flat(const std::vector<double>& v);
    std::vector<double> value_params_flat() const;
    void set_value_params_flat(const std::vector<double>& v);

    double policy_loss_and_grad(const PreparedBatch& data, std::vector<double>* grad) const;
    double value_loss_and_grad(const PreparedBatch& data, std::vector<double>* grad) const;

    // persistence: layer sizes, box, action range, seed, std parameter and
    // the flat weight vectors, 17 significant digits throughout
    std::string serialize() const;
    static Agent deserialize(const std::string& text, const std::string& origin,
                             const Hyper& hyper);
    void save(const std::string& path) const;
    static Agent load(const std::string& path, const Hyper& hyper);

    // test hook: force the policy mean to an extreme by biasing the output
    void force_mean_bias(double z);

  private:
    geometry::BoxSet box_;
    double u_lo_, u_hi_;
    Hyper hyper_;
    uint64_t seed_;
    Mlp policy_;
    Mlp value_;
    double rho_; // std = std_floor + softplus(rho)

    struct AdamState {
        std::vector<double> m, v;
        long t = 0;
    };
    AdamState opt_policy_; // over policy params + rho
    AdamState opt_value_;

    double normalize0(double cA) const;
    double normalize1(double T) const;
    double std_value() const;
    double mean_normalized(double xn0, double xn1, Mlp::Workspace& ws) const;
};

} // namespace cisrl::rl
