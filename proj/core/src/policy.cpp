#include "residpo/policy.hpp"

#include <algorithm>
#include <cmath>

namespace residpo {

namespace {

constexpr int kH = PolicyParams::kHidden;
constexpr int kIn = PolicyParams::kInput;
constexpr int kA = kNumAminoAcids;

}  // namespace

void require_finite(std::span<const double> values, const char* name) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in tensor '") + name + "'");
  }
}

PolicyParams PolicyParams::init(std::uint64_t seed, double weight_std) {
  PolicyParams p;
  Rng rng(seed);
  auto d = p.flat();
  for (size_t i = kW1; i < kB1; ++i) d[i] = weight_std * rng.normal();
  for (size_t i = kW2; i < kB2; ++i) d[i] = weight_std * rng.normal();
  return p;
}

std::vector<double> aggregate_inputs(const StructureInstance& s) {
  const int n = s.length();
  std::vector<double> g(static_cast<size_t>(n) * kIn);
  for (int i = 0; i < n; ++i) {
    double* gi = &g[static_cast<size_t>(i) * kIn];
    const int lo = std::max(0, i - 1);
    const int hi = std::min(n - 1, i + 1);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (int k = 0; k < kFeatureDim; ++k) {
      gi[k] = s.features[static_cast<size_t>(i)][k];
      double acc = 0.0;
      for (int j = lo; j <= hi; ++j) acc += s.features[static_cast<size_t>(j)][k];
      gi[kFeatureDim + k] = acc * inv;
    }
  }
  return g;
}

ForwardPass forward_pass(const PolicyParams& params, const StructureInstance& s) {
  const int n = s.length();
  ForwardPass fp;
  fp.length = n;
  fp.inputs = aggregate_inputs(s);
  fp.pre.resize(static_cast<size_t>(n) * kH);
  fp.hidden.resize(static_cast<size_t>(n) * kH);
  fp.logp.length = n;
  fp.logp.values.resize(static_cast<size_t>(n) * kA);

  const auto W1 = params.W1();
  const auto b1 = params.b1();
  const auto W2 = params.W2();
  const auto b2 = params.b2();
  for (int i = 0; i < n; ++i) {
    const double* g = &fp.inputs[static_cast<size_t>(i) * kIn];
    double* pre = &fp.pre[static_cast<size_t>(i) * kH];
    double* h = &fp.hidden[static_cast<size_t>(i) * kH];
    for (int u = 0; u < kH; ++u) {
      double acc = b1[u];
      const double* w = &W1[static_cast<size_t>(u) * kIn];
      for (int k = 0; k < kIn; ++k) acc += w[k] * g[k];
      pre[u] = acc;
      h[u] = acc > 0.0 ? acc : 0.0;
    }
    double* out = &fp.logp.values[static_cast<size_t>(i) * kA];
    double mx = -INFINITY;
    for (int a = 0; a < kA; ++a) {
      double acc = b2[a];
      const double* w = &W2[static_cast<size_t>(a) * kH];
      for (int u = 0; u < kH; ++u) acc += w[u] * h[u];
      out[a] = acc;
      mx = std::max(mx, acc);
    }
    double z = 0.0;
    for (int a = 0; a < kA; ++a) z += std::exp(out[a] - mx);
    const double lse = mx + std::log(z);
    for (int a = 0; a < kA; ++a) out[a] -= lse;
  }
  require_finite(fp.logp.values, "logp");
  return fp;
}

PerResidueLogProbs forward(const PolicyParams& params, const StructureInstance& s) {
  return forward_pass(params, s).logp;
}

SequenceLogProb seq_log_prob(const PerResidueLogProbs& logp, const Sequence& y) {
  if (static_cast<int>(y.size()) != logp.length) {
    throw DataError("seq_log_prob: sequence length " + std::to_string(y.size()) +
                    " does not match structure length " + std::to_string(logp.length));
  }
  SequenceLogProb out;
  out.per_residue.resize(y.size());
  for (int i = 0; i < logp.length; ++i) {
    out.per_residue[static_cast<size_t>(i)] = logp.at(i, y[static_cast<size_t>(i)]);
    out.total += out.per_residue[static_cast<size_t>(i)];
  }
  return out;
}

SequenceLogProb seq_log_prob(const PolicyParams& params, const StructureInstance& s, const Sequence& y) {
  return seq_log_prob(forward(params, s), y);
}

Sequence sample(const PerResidueLogProbs& logp, const SamplingOptions& opts, std::uint64_t seed) {
  if (!(opts.temperature > 0.0)) throw ConfigError("sample: temperature must be > 0");
  std::array<bool, kA> allowed;
  allowed.fill(true);
  for (auto aa : opts.banned) allowed[static_cast<size_t>(aa.index())] = false;
  if (std::none_of(allowed.begin(), allowed.end(), [](bool b) { return b; })) {
    throw ConfigError("sample: banned set covers the whole vocabulary");
  }
  for (const auto& [pos, aa] : opts.fixed) {
    if (pos < 0 || pos >= logp.length) {
      throw ConfigError("sample: fixed position " + std::to_string(pos) + " out of range");
    }
  }

  Rng rng(seed);
  Sequence out;
  out.reserve(static_cast<size_t>(logp.length));
  std::array<double, kA> w{};
  for (int i = 0; i < logp.length; ++i) {
    // Every position consumes one draw so fixing a position leaves the others unchanged.
    const double u = rng.uniform();
    if (auto it = opts.fixed.find(i); it != opts.fixed.end()) {
      out.push_back(it->second);
      continue;
    }
    const auto row = logp.row(i);
    double mx = -INFINITY;
    for (int a = 0; a < kA; ++a) {
      if (allowed[static_cast<size_t>(a)]) mx = std::max(mx, row[static_cast<size_t>(a)] / opts.temperature);
    }
    double z = 0.0;
    for (int a = 0; a < kA; ++a) {
      w[static_cast<size_t>(a)] =
          allowed[static_cast<size_t>(a)] ? std::exp(row[static_cast<size_t>(a)] / opts.temperature - mx) : 0.0;
      z += w[static_cast<size_t>(a)];
    }
    const double target = u * z;
    double acc = 0.0;
    int pick = -1;
    for (int a = 0; a < kA; ++a) {
      if (w[static_cast<size_t>(a)] <= 0.0) continue;
      acc += w[static_cast<size_t>(a)];
      pick = a;
      if (target < acc) break;
    }
    out.emplace_back(pick);
  }
  return out;
}

Sequence sample(const PolicyParams& params, const StructureInstance& s, const SamplingOptions& opts,
                std::uint64_t seed) {
  return sample(forward(params, s), opts, seed);
}

Sequence argmax_sequence(const PerResidueLogProbs& logp) {
  Sequence out;
  out.reserve(static_cast<size_t>(logp.length));
  for (int i = 0; i < logp.length; ++i) {
    const auto row = logp.row(i);
    out.emplace_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

void accumulate_gradient(const PolicyParams& params, const ForwardPass& pass, const LogProbAdjoint& adj,
                         double scale, Gradient& grad) {
  if (adj.length != pass.length) throw DataError("accumulate_gradient: adjoint length mismatch");
  require_finite(adj.values, "dlogp");
  const auto W2 = params.W2();
  auto g = grad.flat();
  double* dW1 = &g[PolicyParams::kW1];
  double* db1 = &g[PolicyParams::kB1];
  double* dW2 = &g[PolicyParams::kW2];
  double* db2 = &g[PolicyParams::kB2];

  std::array<double, kA> dlogits{};
  std::array<double, kH> dpre{};
  for (int i = 0; i < pass.length; ++i) {
    const double* a_row = &adj.values[static_cast<size_t>(i) * kA];
    double row_sum = 0.0;
    bool any = false;
    for (int a = 0; a < kA; ++a) {
      row_sum += a_row[a];
      any = any || a_row[a] != 0.0;
    }
    if (!any) continue;
    // d logp_a / d logit_b = [a == b] - softmax_b
    const double* lp = &pass.logp.values[static_cast<size_t>(i) * kA];
    for (int b = 0; b < kA; ++b) dlogits[b] = scale * (a_row[b] - std::exp(lp[b]) * row_sum);
    require_finite(dlogits, "dlogits");

    const double* h = &pass.hidden[static_cast<size_t>(i) * kH];
    const double* pre = &pass.pre[static_cast<size_t>(i) * kH];
    const double* in = &pass.inputs[static_cast<size_t>(i) * kIn];
    dpre.fill(0.0);
    for (int a = 0; a < kA; ++a) {
      const double d = dlogits[a];
      db2[a] += d;
      double* dw = dW2 + static_cast<size_t>(a) * kH;
      const double* w = &W2[static_cast<size_t>(a) * kH];
      for (int u = 0; u < kH; ++u) {
        dw[u] += d * h[u];
        dpre[u] += d * w[u];
      }
    }
    for (int u = 0; u < kH; ++u) {
      if (pre[u] <= 0.0) continue;
      const double d = dpre[u];
      db1[u] += d;
      double* dw = dW1 + static_cast<size_t>(u) * kIn;
      for (int k = 0; k < kIn; ++k) dw[k] += d * in[k];
    }
  }
}

LossGradient grad_loss(const PolicyParams& params, const StructureInstance& s, const LogProbLoss& loss) {
  const auto pass = forward_pass(params, s);
  LogProbAdjoint adj(pass.length);
  LossGradient out;
  out.loss = loss(pass.logp, adj);
  if (!std::isfinite(out.loss)) throw NumericError("non-finite value in tensor 'loss'");
  accumulate_gradient(params, pass, adj, 1.0, out.grad);
  require_finite(out.grad.flat(), "grad");
  return out;
}

}  // namespace residpo
