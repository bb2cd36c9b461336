#include "cisrl/agent.hpp"

#include "cisrl/common.hpp"
#include "cisrl/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cisrl::rl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double gauss_logpdf(double a, double mean, double s) {
    const double z = (a - mean) / s;
    return -0.5 * z * z - std::log(s) - 0.5 * kLog2Pi;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               std::vector<double>& m, std::vector<double>& v, long& t, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
        v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

void Hyper::validate() const {
    if (!(lr > 0) || !(gamma > 0) || !(gae_lambda >= 0) || !(std_floor > 0) ||
        !(value_lr > 0) || !(value_target_scale > 0))
        throw ConfigError("Hyper: fields must be positive");
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("Hyper: clip must be in (0,1)");
    if (epochs_per_update < 1 || batch_episodes < 1)
        throw ConfigError("Hyper: epochs and batch episodes must be >= 1");
}

void returns_and_advantages(const Episode& episode, double gamma, double lambda,
                            const std::function<double(const dynamics::State&)>& value_fn,
                            std::vector<double>& returns, std::vector<double>& advantages) {
    if (episode.empty()) throw ConfigError("returns_and_advantages: empty episode");
    const size_t n = episode.size();
    returns.resize(n);
    advantages.resize(n);
    double G = 0.0;
    double A = 0.0;
    for (size_t k = n; k-- > 0;) {
        const Transition& t = episode[k];
        const double v_cur = value_fn(t.x);
        const double v_next = t.done ? 0.0 : value_fn(t.x_next);
        if (t.done) G = t.r;
        else if (k == n - 1) G = t.r + gamma * v_next;
        else G = t.r + gamma * G;
        returns[k] = G;
        const double delta = t.r + gamma * v_next - v_cur;
        A = delta + gamma * lambda * (t.done ? 0.0 : A);
        advantages[k] = A;
    }
}

Agent::Agent(const geometry::BoxSet& state_box, double u_lo, double u_hi, const Hyper& hyper,
             uint64_t seed)
    : box_(state_box), u_lo_(u_lo), u_hi_(u_hi), hyper_(hyper), seed_(seed),
      policy_(state_box.dim(), 64, 64, 1), value_(state_box.dim(), 64, 64, 1) {
    hyper_.validate();
    if (!(u_hi > u_lo)) throw ConfigError("Agent: action range empty");
    Rng rng(seed);
    Rng pr = rng.fork(1);
    Rng vr = rng.fork(2);
    policy_.init_uniform(pr);
    value_.init_uniform(vr);
    // initial exploration std of 0.5 in normalized units
    rho_ = std::log(std::expm1(0.5 - hyper_.std_floor));
}

double Agent::normalize0(double cA) const {
    return 2.0 * (cA - box_.lower[0]) / box_.width(0) - 1.0;
}

double Agent::normalize1(double T) const {
    return 2.0 * (T - box_.lower[1]) / box_.width(1) - 1.0;
}

double Agent::std_value() const { return hyper_.std_floor + softplus(rho_); }
double Agent::std_normalized() const { return std_value(); }
double Agent::std_kelvin() const { return std_value() * 0.5 * (u_hi_ - u_lo_); }

double Agent::mean_normalized(double xn0, double xn1, Mlp::Workspace& ws) const {
    const double xn[2] = {xn0, xn1};
    policy_.forward(xn, ws);
    return std::tanh(ws.out[0]);
}

std::pair<dynamics::ControlInput, double> Agent::act(const dynamics::State& x, bool explore,
                                                     Rng& rng) const {
    if (!std::isfinite(x.cA) || !std::isfinite(x.T)) throw ConfigError("act: non-finite state");
    Mlp::Workspace ws;
    const double m = mean_normalized(normalize0(x.cA), normalize1(x.T), ws);
    const double s = std_value();
    double a = m;
    double logp;
    if (explore) {
        const double a_pre = m + s * rng.normal();
        logp = gauss_logpdf(a_pre, m, s);
        a = std::clamp(a_pre, -1.0, 1.0);
    } else {
        logp = gauss_logpdf(m, m, s);
    }
    const double mid = 0.5 * (u_lo_ + u_hi_);
    const double half = 0.5 * (u_hi_ - u_lo_);
    return {dynamics::ControlInput{mid + half * a}, logp};
}

double Agent::value(const dynamics::State& x) const {
    Mlp::Workspace ws;
    const double xn[2] = {normalize0(x.cA), normalize1(x.T)};
    value_.forward(xn, ws);
    return ws.out[0] / hyper_.value_target_scale;
}

Agent::PreparedBatch Agent::prepare(const std::vector<Episode>& batch) const {
    if (batch.empty()) throw ConfigError("update: empty batch");
    const double mid = 0.5 * (u_lo_ + u_hi_);
    const double half = 0.5 * (u_hi_ - u_lo_);

    struct Row {
        double xn0, xn1, a, logp_old, adv, target;
        bool operator<(const Row& o) const {
            if (xn0 != o.xn0) return xn0 < o.xn0;
            if (xn1 != o.xn1) return xn1 < o.xn1;
            if (a != o.a) return a < o.a;
            if (logp_old != o.logp_old) return logp_old < o.logp_old;
            if (adv != o.adv) return adv < o.adv;
            return target < o.target;
        }
    };
    std::vector<Row> rows;
    std::vector<double> rets, advs;
    auto value_fn = [this](const dynamics::State& s) { return value(s); };
    for (const auto& ep : batch) {
        returns_and_advantages(ep, hyper_.gamma, hyper_.gae_lambda, value_fn, rets, advs);
        for (size_t k = 0; k < ep.size(); ++k) {
            const Transition& t = ep[k];
            Row r;
            r.xn0 = normalize0(t.x.cA);
            r.xn1 = normalize1(t.x.T);
            r.a = std::clamp((t.u.Tc - mid) / half, -1.0, 1.0);
            r.logp_old = t.logprob;
            r.adv = advs[k];
            r.target = rets[k] * hyper_.value_target_scale;
            rows.push_back(r);
        }
    }
    // content-sorted pooling: invariant to episode ordering in the batch
    std::sort(rows.begin(), rows.end());

    PreparedBatch data;
    const size_t n = rows.size();
    data.xn0.resize(n);
    data.xn1.resize(n);
    data.a.resize(n);
    data.logp_old.resize(n);
    data.adv.resize(n);
    data.target.resize(n);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += rows[i].adv;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = rows[i].adv - mean;
        var += d * d;
    }
    const double denom = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
    for (size_t i = 0; i < n; ++i) {
        data.xn0[i] = rows[i].xn0;
        data.xn1[i] = rows[i].xn1;
        data.a[i] = rows[i].a;
        data.logp_old[i] = rows[i].logp_old;
        data.adv[i] = (rows[i].adv - mean) / denom;
        data.target[i] = rows[i].target;
    }
    return data;
}

std::vector<double> Agent::policy_params_flat() const {
    std::vector<double> v = policy_.params();
    v.push_back(rho_);
    return v;
}

void Agent::set_policy_params_flat(const std::vector<double>& v) {
    if (v.size() != policy_.params().size() + 1)
        throw DimensionError("set_policy_params_flat: size mismatch");
    std::copy(v.begin(), v.end() - 1, policy_.params().begin());
    rho_ = v.back();
}

std::vector<double> Agent::value_params_flat() const { return value_.params(); }

void Agent::set_value_params_flat(const std::vector<double>& v) {
    if (v.size() != value_.params().size())
        throw DimensionError("set_value_params_flat: size mismatch");
    value_.params() = v;
}

double Agent::policy_loss_and_grad(const PreparedBatch& data, std::vector<double>* grad) const {
    const size_t n = data.size();
    if (n == 0) throw ConfigError("policy_loss_and_grad: empty data");
    if (grad) grad->assign(policy_.params().size() + 1, 0.0);

    const double s = std_value();
    const double dsig = sigmoid(rho_); // d std / d rho
    const double inv_n = 1.0 / static_cast<double>(n);
    const double eps = hyper_.clip;

    Mlp::Workspace ws;
    std::vector<double> mlp_grad;
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double xn[2] = {data.xn0[i], data.xn1[i]};
        policy_.forward(xn, ws);
        const double z = ws.out[0];
        const double m = std::tanh(z);
        const double diff = data.a[i] - m;
        const double logp = gauss_logpdf(data.a[i], m, s);
        const double ratio = std::exp(logp - data.logp_old[i]);
        const double A = data.adv[i];
        const double unclipped = ratio * A;
        const double rc = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
        const double clipped = rc * A;
        const double obj = std::min(unclipped, clipped);
        loss -= obj * inv_n;
        if (!grad) continue;
        // gradient flows only when the unclipped branch is taken
        if (unclipped <= clipped) {
            const double dlogp = -A * ratio * inv_n; // d loss / d logp_new
            const double dm = dlogp * (diff / (s * s));
            const double dz = dm * (1.0 - m * m);
            policy_.backward(xn, ws, &dz, *grad);
            const double ds = dlogp * (diff * diff / (s * s * s) - 1.0 / s);
            (*grad)[policy_.params().size()] += ds * dsig;
        }
    }
    return loss;
}

double Agent::value_loss_and_grad(const PreparedBatch& data, std::vector<double>* grad) const {
    const size_t n = data.size();
    if (n == 0) throw ConfigError("value_loss_and_grad: empty data");
    if (grad) grad->assign(value_.params().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    Mlp::Workspace ws;
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double xn[2] = {data.xn0[i], data.xn1[i]};
        value_.forward(xn, ws);
        const double err = ws.out[0] - data.target[i];
        loss += err * err * inv_n;
        if (grad) {
            const double dout = 2.0 * err * inv_n;
            value_.backward(xn, ws, &dout, *grad);
        }
    }
    return loss;
}

Losses Agent::update(const std::vector<Episode>& batch, double lr_scale) {
    if (!(lr_scale > 0.0)) throw ConfigError("update: lr_scale must be positive");
    for (const auto& ep : batch)
        if (ep.empty()) throw ConfigError("update: batch contains an empty episode");

    // snapshot for restore-on-failure
    const std::vector<double> policy_snap = policy_.params();
    const std::vector<double> value_snap = value_.params();
    const double rho_snap = rho_;
    const AdamState opt_p_snap = opt_policy_;
    const AdamState opt_v_snap = opt_value_;

    PreparedBatch data = prepare(batch);

    Losses losses;
    std::vector<double> pgrad, vgrad;
    try {
        for (int e = 0; e < hyper_.epochs_per_update; ++e) {
            losses.policy = policy_loss_and_grad(data, &pgrad);
            losses.value = value_loss_and_grad(data, &vgrad);
            if (!std::isfinite(losses.policy) || !std::isfinite(losses.value))
                throw NumericError("update: non-finite loss");

            std::vector<double> pflat = policy_params_flat();
            adam_step(pflat, pgrad, opt_policy_.m, opt_policy_.v, opt_policy_.t,
                      hyper_.lr * lr_scale);
            set_policy_params_flat(pflat);

            adam_step(value_.params(), vgrad, opt_value_.m, opt_value_.v, opt_value_.t,
                      hyper_.value_lr * lr_scale);
        }
    } catch (...) {
        policy_.params() = policy_snap;
        value_.params() = value_snap;
        rho_ = rho_snap;
        opt_policy_ = opt_p_snap;
        opt_value_ = opt_v_snap;
        throw;
    }

    // approximate KL between the rollout policy and the updated one
    double kl = 0.0;
    Mlp::Workspace ws;
    const double s = std_value();
    for (size_t i = 0; i < data.size(); ++i) {
        const double xn[2] = {data.xn0[i], data.xn1[i]};
        policy_.forward(xn, ws);
        const double m = std::tanh(ws.out[0]);
        kl += data.logp_old[i] - gauss_logpdf(data.a[i], m, s);
    }
    losses.kl = kl / static_cast<double>(data.size());
    return losses;
}

void Agent::force_mean_bias(double z) {
    // output bias is the last policy parameter
    policy_.params().back() = z;
}

std::string Agent::serialize() const {
    std::string out = "cisrl-agent 1\n";
    out += "layers " + std::to_string(policy_.in_dim()) + " " + std::to_string(policy_.h1_dim()) +
           " " + std::to_string(policy_.h2_dim()) + " " + std::to_string(policy_.out_dim()) + "\n";
    out += "action " + format_full(u_lo_) + " " + format_full(u_hi_) + "\n";
    out += "box " + format_full(box_.lower[0]) + " " + format_full(box_.lower[1]) + " " +
           format_full(box_.upper[0]) + " " + format_full(box_.upper[1]) + "\n";
    out += "seed " + std::to_string(seed_) + "\n";
    out += "rho " + format_full(rho_) + "\n";
    out += "policy " + std::to_string(policy_.params().size()) + "\n";
    for (double v : policy_.params()) out += format_full(v) + "\n";
    out += "value " + std::to_string(value_.params().size()) + "\n";
    for (double v : value_.params()) out += format_full(v) + "\n";
    return out;
}

Agent Agent::deserialize(const std::string& text, const std::string& origin,
                         const Hyper& hyper) {
    std::istringstream in(text);
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "cisrl-agent" || version != 1)
        throw IoError(origin + ": not an agent file");
    int li = 0, l1 = 0, l2 = 0, lo = 0;
    if (!(in >> tag >> li >> l1 >> l2 >> lo) || tag != "layers")
        throw IoError(origin + ": bad layers header");
    if (li != 2 || lo != 1) throw IoError(origin + ": unsupported layer shape");
    double ulo, uhi;
    if (!(in >> tag >> ulo >> uhi) || tag != "action")
        throw IoError(origin + ": bad action header");
    double b0, b1v, b2v, b3v;
    if (!(in >> tag >> b0 >> b1v >> b2v >> b3v) || tag != "box")
        throw IoError(origin + ": bad box header");
    uint64_t seed = 0;
    if (!(in >> tag >> seed) || tag != "seed") throw IoError(origin + ": bad seed header");
    double rho = 0.0;
    if (!(in >> tag >> rho) || tag != "rho") throw IoError(origin + ": bad rho header");

    Agent a(geometry::BoxSet({b0, b1v}, {b2v, b3v}), ulo, uhi, hyper, seed);
    if (a.policy_.h1_dim() != l1 || a.policy_.h2_dim() != l2)
        throw IoError(origin + ": unsupported hidden sizes");
    a.rho_ = rho;
    size_t count = 0;
    if (!(in >> tag >> count) || tag != "policy" || count != a.policy_.params().size())
        throw IoError(origin + ": bad policy block");
    for (size_t i = 0; i < count; ++i)
        if (!(in >> a.policy_.params()[i])) throw IoError(origin + ": truncated policy block");
    if (!(in >> tag >> count) || tag != "value" || count != a.value_.params().size())
        throw IoError(origin + ": bad value block");
    for (size_t i = 0; i < count; ++i)
        if (!(in >> a.value_.params()[i])) throw IoError(origin + ": truncated value block");
    return a;
}

void Agent::save(const std::string& path) const { write_text_file(path, serialize()); }

Agent Agent::load(const std::string& path, const Hyper& hyper) {
    return deserialize(read_text_file(path), path, hyper);
}

} // namespace cisrl::rl
