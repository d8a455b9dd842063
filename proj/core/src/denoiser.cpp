// Copyright 2026 The otinfill Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "otinfill/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "otinfill/errors.hpp"
#include "otinfill/random.hpp"

namespace otinfill {
namespace {

constexpr double kNormEps = 1e-6;
constexpr double kTimeScale = 1000.0;

Matrix randn(Eigen::Index rows, Eigen::Index cols, Rng& rng, double std) {
  if (std <= 0.0) return Matrix::Zero(rows, cols);
  std::normal_distribution<double> dist(0.0, std);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// tanh approximation
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}
double gelu_grad(double x) {
  const double inner = kGeluC * (x + 0.044715 * x * x * x);
  const double th = std::tanh(inner);
  const double dinner = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner;
}

RowVector time_features(double t, int dim) {
  RowVector f(dim);
  const int half = dim / 2;
  for (int k = 0; k < half; ++k) {
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(k) / half);
    f(k) = std::sin(t * kTimeScale * freq);
    f(k + half) = std::cos(t * kTimeScale * freq);
  }
  return f;
}

Matrix layer_norm(const Matrix& x, Vector& inv_std) {
  const Eigen::Index d = x.cols();
  Matrix out(x.rows(), d);
  inv_std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const auto centered = x.row(i).array() - mean;
    const double var = centered.square().sum() / static_cast<double>(d);
    inv_std(i) = 1.0 / std::sqrt(var + kNormEps);
    out.row(i) = centered * inv_std(i);
  }
  return out;
}

Matrix layer_norm_backward(const Matrix& normed, const Vector& inv_std,
                           const Matrix& dnormed) {
  Matrix dx(normed.rows(), normed.cols());
  for (Eigen::Index i = 0; i < normed.rows(); ++i) {
    const double mean_d = dnormed.row(i).mean();
    const double mean_dn = dnormed.row(i).dot(normed.row(i)) /
                           static_cast<double>(normed.cols());
    dx.row(i) = inv_std(i) * (dnormed.row(i).array() - mean_d -
                              normed.row(i).array() * mean_dn);
  }
  return dx;
}

Matrix modulate(const Matrix& n, const RowVector& shift,
                const RowVector& scale) {
  Matrix u = n;
  u.array().rowwise() *= (scale.array() + 1.0);
  u.array().rowwise() += shift.array();
  return u;
}

// du -> (dn, dshift, dscale)
Matrix modulate_backward(const Matrix& n, const RowVector& scale,
                         const Matrix& du, Eigen::Ref<RowVector> dshift,
                         Eigen::Ref<RowVector> dscale) {
  dshift += du.colwise().sum();
  dscale += (du.array() * n.array()).colwise().sum().matrix();
  Matrix dn = du;
  dn.array().rowwise() *= (scale.array() + 1.0);
  return dn;
}

// Rotates consecutive pairs within each head by angle(i, j). `sign` = -1
// applies the inverse rotation.
void apply_rotary(Matrix& x, const Matrix& cos, const Matrix& sin, int heads,
                  int head_dim, double sign) {
  const int pairs = head_dim / 2;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int h = 0; h < heads; ++h) {
      for (int j = 0; j < pairs; ++j) {
        const Eigen::Index c0 = h * head_dim + 2 * j;
        const double a = x(i, c0);
        const double b = x(i, c0 + 1);
        const double cs = cos(i, j);
        const double sn = sign * sin(i, j);
        x(i, c0) = a * cs - b * sn;
        x(i, c0 + 1) = a * sn + b * cs;
      }
    }
  }
}

void check_finite(const Matrix& m, const std::string& where) {
  if (!m.allFinite()) {
    throw NumericalError("denoiser: non-finite activation in " + where);
  }
}

}  // namespace

struct BlockCache {
  RowVector mod;
  Matrix n1, u1, q, k, v, attn;
  Vector inv1;
  std::vector<Matrix> probs;
  Matrix n2, u2, pre, act;
  Vector inv2;
};

struct ForwardCache {
  TokenSequence tokens;
  std::vector<int> types;
  Matrix cos, sin;
  RowVector tfeat, c1_pre, c1, c, sc;
  std::vector<BlockCache> blocks;
  Matrix nf, uf;
  Vector invf;
  RowVector fmod;
};

ForwardCacheHandle::ForwardCacheHandle()
    : cache_(std::make_unique<ForwardCache>()) {}
ForwardCacheHandle::~ForwardCacheHandle() = default;
ForwardCacheHandle::ForwardCacheHandle(ForwardCacheHandle&&) noexcept = default;
ForwardCacheHandle& ForwardCacheHandle::operator=(
    ForwardCacheHandle&&) noexcept = default;

void DenoiserConfig::validate() const {
  auto fail = [](const std::string& m) { throw FormatError("denoiser: " + m); };
  if (vocab_size < 3) fail("vocab_size must be >= 3 (ordinary, PAD, MASK)");
  if (embed_dim <= 0 || num_layers < 0 || num_heads <= 0 || mlp_ratio <= 0) {
    fail("dimensions must be positive");
  }
  if (embed_dim % (2 * num_heads) != 0) {
    fail("embed_dim must be divisible by 2 * num_heads");
  }
  if (context_length <= 0) fail("context_length must be positive");
  if (!(noise_epsilon > 0.0 && noise_epsilon < 1.0)) {
    fail("noise_epsilon must lie in (0, 1)");
  }
}

std::size_t ParameterSet::num_parameters() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

void ParameterSet::set_zero() {
  visit([](const std::string&, Matrix& m) { m.setZero(); });
}

bool ParameterSet::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

ParameterSet ParameterSet::zeros_like(const ParameterSet& p) {
  ParameterSet z = p;
  z.set_zero();
  return z;
}

ParameterSet init_parameters(const DenoiserConfig& config, std::uint64_t seed,
                             double init_std) {
  config.validate();
  Rng rng = make_rng(seed, {0x1417});
  const int d = config.embed_dim;
  const int f = d * config.mlp_ratio;
  const int v = config.vocab_size;
  ParameterSet p;
  p.config = config;
  p.tok_emb = randn(v, d, rng, init_std);
  p.type_emb = randn(2, d, rng, init_std);
  p.time_w1 = randn(d, d, rng, init_std);
  p.time_b1 = Matrix::Zero(1, d);
  p.time_w2 = randn(d, d, rng, init_std);
  p.time_b2 = Matrix::Zero(1, d);
  p.blocks.resize(config.num_layers);
  for (auto& b : p.blocks) {
    b.w_mod = randn(d, 4 * d, rng, init_std);
    b.b_mod = Matrix::Zero(1, 4 * d);
    b.wq = randn(d, d, rng, init_std);
    b.wk = randn(d, d, rng, init_std);
    b.wv = randn(d, d, rng, init_std);
    b.wo = randn(d, d, rng, init_std);
    b.bo = Matrix::Zero(1, d);
    b.w1 = randn(d, f, rng, init_std);
    b.b1 = Matrix::Zero(1, f);
    b.w2 = randn(f, d, rng, init_std);
    b.b2 = Matrix::Zero(1, d);
  }
  p.final_w_mod = randn(d, 2 * d, rng, init_std);
  p.final_b_mod = Matrix::Zero(1, 2 * d);
  p.score_w = randn(d, v, rng, init_std);
  p.score_b = Matrix::Zero(1, v);
  p.vel_w = randn(d, 1, rng, init_std);
  p.vel_b = Matrix::Zero(1, 1);
  return p;
}

DenoiserOutput forward(const ParameterSet& params, const DiffusionState& input,
                       ForwardCacheHandle* handle) {
  const DenoiserConfig& cfg = params.config;
  const int L = cfg.context_length;
  const int D = cfg.embed_dim;
  const int H = cfg.num_heads;
  const int dh = cfg.head_dim();
  if (static_cast<int>(input.tokens.size()) != L ||
      static_cast<int>(input.positions.size()) != L ||
      static_cast<int>(input.classes.size()) != L) {
    throw DomainError("denoiser: input length must equal context_length=" +
                      std::to_string(L));
  }
  if (!(input.t > 0.0 && input.t <= 1.0)) {
    throw DomainError("denoiser: t=" + std::to_string(input.t) +
                      " outside (0, 1]");
  }

  ForwardCache local;
  ForwardCache& c = handle != nullptr ? handle->get() : local;
  c.tokens = input.tokens;
  c.types.resize(L);

  Matrix h(L, D);
  for (int i = 0; i < L; ++i) {
    const TokenId tok = input.tokens[i];
    if (tok < 0 || tok >= cfg.vocab_size) {
      throw DomainError("denoiser: token id " + std::to_string(tok) +
                        " outside vocabulary");
    }
    c.types[i] = input.classes[i] == SlotClass::kPrompt ? 0 : 1;
    h.row(i) = params.tok_emb.row(tok) + params.type_emb.row(c.types[i]);
  }

  const int pairs = dh / 2;
  c.cos.resize(L, pairs);
  c.sin.resize(L, pairs);
  for (int i = 0; i < L; ++i) {
    const double pos = input.positions[i] * cfg.rotary_scale;
    for (int j = 0; j < pairs; ++j) {
      const double theta =
          std::pow(cfg.rotary_base, -2.0 * static_cast<double>(j) / dh);
      c.cos(i, j) = std::cos(pos * theta);
      c.sin(i, j) = std::sin(pos * theta);
    }
  }

  c.tfeat = time_features(input.t, D);
  c.c1_pre = c.tfeat * params.time_w1 + params.time_b1;
  c.c1 = c.c1_pre.unaryExpr([](double x) { return silu(x); });
  c.c = c.c1 * params.time_w2 + params.time_b2;
  c.sc = c.c.unaryExpr([](double x) { return silu(x); });

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  c.blocks.resize(params.blocks.size());
  for (std::size_t layer = 0; layer < params.blocks.size(); ++layer) {
    const BlockParams& b = params.blocks[layer];
    BlockCache& bc = c.blocks[layer];
    bc.mod = c.sc * b.w_mod + b.b_mod;
    const RowVector shift1 = bc.mod.segment(0, D);
    const RowVector scale1 = bc.mod.segment(D, D);
    const RowVector shift2 = bc.mod.segment(2 * D, D);
    const RowVector scale2 = bc.mod.segment(3 * D, D);

    bc.n1 = layer_norm(h, bc.inv1);
    bc.u1 = modulate(bc.n1, shift1, scale1);
    bc.q = bc.u1 * b.wq;
    bc.k = bc.u1 * b.wk;
    bc.v = bc.u1 * b.wv;
    apply_rotary(bc.q, c.cos, c.sin, H, dh, 1.0);
    apply_rotary(bc.k, c.cos, c.sin, H, dh, 1.0);
    bc.attn.resize(L, D);
    bc.probs.resize(H);
    for (int hd = 0; hd < H; ++hd) {
      Matrix s = bc.q.middleCols(hd * dh, dh) *
                 bc.k.middleCols(hd * dh, dh).transpose() * inv_sqrt;
      for (int i = 0; i < L; ++i) {
        const double mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp();
        s.row(i) /= s.row(i).sum();
      }
      bc.attn.middleCols(hd * dh, dh) = s * bc.v.middleCols(hd * dh, dh);
      bc.probs[hd] = std::move(s);
    }
    h = h + bc.attn * b.wo;
    h.rowwise() += b.bo.row(0);

    bc.n2 = layer_norm(h, bc.inv2);
    bc.u2 = modulate(bc.n2, shift2, scale2);
    bc.pre = bc.u2 * b.w1;
    bc.pre.rowwise() += b.b1.row(0);
    bc.act = bc.pre.unaryExpr([](double x) { return gelu(x); });
    h = h + bc.act * b.w2;
    h.rowwise() += b.b2.row(0);
    check_finite(h, "block " + std::to_string(layer));
  }

  c.fmod = c.sc * params.final_w_mod + params.final_b_mod;
  c.nf = layer_norm(h, c.invf);
  c.uf = modulate(c.nf, c.fmod.segment(0, D), c.fmod.segment(D, D));

  const NoiseSchedule schedule(cfg.noise_epsilon);
  DenoiserOutput out;
  out.log_scores = c.uf * params.score_w;
  out.log_scores.rowwise() += params.score_b.row(0);
  out.log_scores.array() += schedule.log_ratio(input.t);
  check_finite(out.log_scores, "score head");
  out.scores = out.log_scores.array().exp().matrix();
  const Vector vel = c.uf * params.vel_w.col(0);
  out.velocities.resize(L);
  for (int i = 0; i < L; ++i) out.velocities[i] = vel(i) + params.vel_b(0, 0);
  if (!vel.allFinite()) {
    throw NumericalError("denoiser: non-finite activation in velocity head");
  }
  return out;
}

void backward(const ParameterSet& params, const ForwardCacheHandle& handle,
              const OutputGrad& upstream, ParameterGradients& g) {
  const ForwardCache& c = handle.get();
  const DenoiserConfig& cfg = params.config;
  const int L = cfg.context_length;
  const int D = cfg.embed_dim;
  const int H = cfg.num_heads;
  const int dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Vector dvel(L);
  for (int i = 0; i < L; ++i) dvel(i) = upstream.d_velocities[i];

  // Heads.
  g.score_w.noalias() += c.uf.transpose() * upstream.d_log_scores;
  g.score_b += upstream.d_log_scores.colwise().sum();
  g.vel_w.col(0).noalias() += c.uf.transpose() * dvel;
  g.vel_b(0, 0) += dvel.sum();
  Matrix duf = upstream.d_log_scores * params.score_w.transpose();
  duf.noalias() += dvel * params.vel_w.col(0).transpose();

  RowVector dsc = RowVector::Zero(D);
  RowVector dfmod = RowVector::Zero(2 * D);
  const Matrix dnf = modulate_backward(c.nf, c.fmod.segment(D, D), duf,
                                       dfmod.segment(0, D),
                                       dfmod.segment(D, D));
  g.final_w_mod.noalias() += c.sc.transpose() * dfmod;
  g.final_b_mod += dfmod;
  dsc.noalias() += dfmod * params.final_w_mod.transpose();
  Matrix dh_ = layer_norm_backward(c.nf, c.invf, dnf);

  for (std::size_t layer = params.blocks.size(); layer-- > 0;) {
    const BlockParams& b = params.blocks[layer];
    BlockParams& gb = g.blocks[layer];
    const BlockCache& bc = c.blocks[layer];
    RowVector dmod = RowVector::Zero(4 * D);

    // Feed-forward sublayer.
    gb.w2.noalias() += bc.act.transpose() * dh_;
    gb.b2 += dh_.colwise().sum();
    Matrix dpre = dh_ * b.w2.transpose();
    for (Eigen::Index i = 0; i < dpre.size(); ++i) {
      dpre.data()[i] *= gelu_grad(bc.pre.data()[i]);
    }
    gb.w1.noalias() += bc.u2.transpose() * dpre;
    gb.b1 += dpre.colwise().sum();
    const Matrix du2 = dpre * b.w1.transpose();
    const Matrix dn2 = modulate_backward(bc.n2, bc.mod.segment(3 * D, D), du2,
                                         dmod.segment(2 * D, D),
                                         dmod.segment(3 * D, D));
    dh_ += layer_norm_backward(bc.n2, bc.inv2, dn2);

    // Attention sublayer.
    gb.wo.noalias() += bc.attn.transpose() * dh_;
    gb.bo += dh_.colwise().sum();
    const Matrix dattn = dh_ * b.wo.transpose();
    Matrix dq(L, D), dk(L, D), dv(L, D);
    for (int hd = 0; hd < H; ++hd) {
      const Matrix& p = bc.probs[hd];
      const auto dout = dattn.middleCols(hd * dh, dh);
      Matrix dp = dout * bc.v.middleCols(hd * dh, dh).transpose();
      dv.middleCols(hd * dh, dh).noalias() = p.transpose() * dout;
      for (int i = 0; i < L; ++i) {
        const double dot = dp.row(i).dot(p.row(i));
        dp.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
      }
      dp *= inv_sqrt;
      dq.middleCols(hd * dh, dh).noalias() = dp * bc.k.middleCols(hd * dh, dh);
      dk.middleCols(hd * dh, dh).noalias() =
          dp.transpose() * bc.q.middleCols(hd * dh, dh);
    }
    apply_rotary(dq, c.cos, c.sin, H, dh, -1.0);
    apply_rotary(dk, c.cos, c.sin, H, dh, -1.0);
    gb.wq.noalias() += bc.u1.transpose() * dq;
    gb.wk.noalias() += bc.u1.transpose() * dk;
    gb.wv.noalias() += bc.u1.transpose() * dv;
    Matrix du1 = dq * b.wq.transpose();
    du1.noalias() += dk * b.wk.transpose();
    du1.noalias() += dv * b.wv.transpose();
    const Matrix dn1 =
        modulate_backward(bc.n1, bc.mod.segment(D, D), du1,
                          dmod.segment(0, D), dmod.segment(D, D));
    dh_ += layer_norm_backward(bc.n1, bc.inv1, dn1);

    gb.w_mod.noalias() += c.sc.transpose() * dmod;
    gb.b_mod += dmod;
    dsc.noalias() += dmod * b.w_mod.transpose();
  }

  // Time conditioning.
  RowVector dcv = dsc;
  for (int k = 0; k < D; ++k) dcv(k) *= silu_grad(c.c(k));
  g.time_w2.noalias() += c.c1.transpose() * dcv;
  g.time_b2 += dcv;
  RowVector dc1 = dcv * params.time_w2.transpose();
  for (int k = 0; k < D; ++k) dc1(k) *= silu_grad(c.c1_pre(k));
  g.time_w1.noalias() += c.tfeat.transpose() * dc1;
  g.time_b1 += dc1;

  // Embeddings.
  for (int i = 0; i < L; ++i) {
    g.tok_emb.row(c.tokens[i]) += dh_.row(i);
    g.type_emb.row(c.types[i]) += dh_.row(i);
  }
}

}  // namespace otinfill
