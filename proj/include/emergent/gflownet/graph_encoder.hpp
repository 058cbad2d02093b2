#pragma once

// Message-passing policy over the bipartite agent/item graph of a state.
//
// Nodes are the n agents and n items; every (agent, item) pair is an edge
// whose features are the cell value (one-hot) and the agent's rank of the
// item, expressed size-independently as (r-1)/(n-1) and 1/r. Each layer is
// a GIN-style update with mean aggregation and a residual connection:
//
//   m_v  = mean_u relu(h_u + E x_uv + b_e)
//   h_v' = h_v + W2 relu(W1 (h_v + m_v) + b1) + b2
//
// The action head scores every edge from its endpoints and features; the
// flow head pools the same kind of edge features into a scalar log flow.
// No parameter depends on n, so a model trained at one size runs at any other.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emergent/error.hpp"
#include "emergent/gflownet/policy.hpp"
#include "emergent/random.hpp"

namespace emergent::gfn {

struct GraphEncoderConfig {
  std::size_t hidden = 256;
  std::size_t layers = 5;
  friend bool operator==(const GraphEncoderConfig&, const GraphEncoderConfig&) = default;
};

/// A named block of the flat parameter vector, stored column-major.
struct TensorSlice {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

class GraphPolicy {
 public:
  static constexpr std::size_t kNodeFeatures = 4;  // agent/item x matched/unmatched
  static constexpr std::size_t kEdgeFeatures = 5;  // 3 cell one-hot + 2 rank features

  using Mat = Eigen::MatrixXd;
  using CMap = Eigen::Map<const Mat>;
  using MMap = Eigen::Map<Mat>;

  struct LayerTape {
    Mat h_in, msg_agent, msg_item, pre, act_pre, act;
  };

  struct Tape {
    std::size_t n = 0;
    Mat node_x, edge_x;
    std::vector<LayerTape> layers;
    Mat h_out;
    Mat q_pre, q, g_pre, g;
    Eigen::VectorXd pooled;
  };

  explicit GraphPolicy(GraphEncoderConfig config = {}) : config_(config) {
    if (config.hidden == 0) throw ConfigError("graph encoder hidden width must be positive");
    const std::size_t d = config.hidden;
    add("embed.w", d, kNodeFeatures);
    add("embed.b", d, 1);
    for (std::size_t l = 0; l < config.layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      add(p + "edge.w", d, kEdgeFeatures);
      add(p + "edge.b", d, 1);
      add(p + "mlp1.w", d, d);
      add(p + "mlp1.b", d, 1);
      add(p + "mlp2.w", d, d);
      add(p + "mlp2.b", d, 1);
    }
    for (const char* head : {"policy.", "flow."}) {
      const std::string p = head;
      add(p + "agent.w", d, d);
      add(p + "item.w", d, d);
      add(p + "edge.w", d, kEdgeFeatures);
      add(p + "b", d, 1);
      add(p + "out.w", 1, d);
      add(p + "out.b", 1, 1);
    }
    params_.assign(total_, 0.0);
  }

  const GraphEncoderConfig& config() const { return config_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<TensorSlice>& tensors() const { return slices_; }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& t : slices_) {
      const bool bias = t.name.ends_with(".b");
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
      for (std::size_t k = 0; k < t.size(); ++k) {
        params_[t.offset + k] = bias ? 0.0 : (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
  }

  PolicyOutput forward(const PreferenceProfile& profile, const MatchState& s, Tape* tape) const {
    if (s.is_terminal()) throw ContractError("forward policy is undefined on terminal states");
    Tape local;
    Tape& t = tape ? *tape : local;
    const std::size_t n = s.n();
    const auto nn = static_cast<Eigen::Index>(n);
    const auto edges = static_cast<Eigen::Index>(n * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    t.n = n;
    encode_inputs(profile, s, t);

    const auto emb_w = view(kEmbedW), emb_b = view(kEmbedW + 1);
    Mat h = (emb_w * t.node_x).colwise() + emb_b.col(0);
    t.layers.resize(config_.layers);
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::size_t base = layer_base(l);
      LayerTape& lt = t.layers[l];
      lt.h_in = h;
      const Mat ex = (view(base) * t.edge_x).colwise() + view(base + 1).col(0);
      lt.msg_agent.resize(h.rows(), edges);
      lt.msg_item.resize(h.rows(), edges);
      Mat agg = Mat::Zero(h.rows(), 2 * nn);
      for (Eigen::Index a = 0; a < nn; ++a) {
        for (Eigen::Index i = 0; i < nn; ++i) {
          const Eigen::Index e = a * nn + i;
          lt.msg_agent.col(e) = h.col(nn + i) + ex.col(e);
          lt.msg_item.col(e) = h.col(a) + ex.col(e);
          agg.col(a) += lt.msg_agent.col(e).cwiseMax(0.0);
          agg.col(nn + i) += lt.msg_item.col(e).cwiseMax(0.0);
        }
      }
      lt.pre = h + agg * inv_n;
      lt.act_pre = (view(base + 2) * lt.pre).colwise() + view(base + 3).col(0);
      lt.act = lt.act_pre.cwiseMax(0.0);
      h = lt.h_in + ((view(base + 4) * lt.act).colwise() + view(base + 5).col(0));
    }
    t.h_out = h;

    PolicyOutput out;
    out.logits.assign(n * n, kNegInf);
    {
      const std::size_t b = head_base(0);
      edge_head(t, b, t.q_pre, t.q);
      const Eigen::RowVectorXd scores = (view(b + 4) * t.q).array() + view(b + 5)(0, 0);
      for (Eigen::Index e = 0; e < edges; ++e)
        if (s.cell(static_cast<std::size_t>(e)) == Cell::Undecided) out.logits[e] = scores(e);
    }
    {
      const std::size_t b = head_base(1);
      edge_head(t, b, t.g_pre, t.g);
      t.pooled = t.g.rowwise().mean();
      out.log_flow = (view(b + 4) * t.pooled)(0) + view(b + 5)(0, 0);
    }
    out.log_probs = masked_log_softmax(out.logits, s);
    return out;
  }

  /// Accumulates d(loss)/d(params) given d(loss)/d(logits) and d(loss)/d(log_flow).
  void backward(const Tape& t, std::span<const double> grad_logits, double grad_log_flow,
                std::span<double> grads) const {
    const auto nn = static_cast<Eigen::Index>(t.n);
    const auto edges = nn * nn;
    const double inv_n = 1.0 / static_cast<double>(t.n);
    const auto d = static_cast<Eigen::Index>(config_.hidden);
    Mat dh = Mat::Zero(d, 2 * nn);

    {
      const std::size_t b = head_base(0);
      Eigen::RowVectorXd g(edges);
      for (Eigen::Index e = 0; e < edges; ++e) {
        const double v = grad_logits[static_cast<std::size_t>(e)];
        g(e) = std::isfinite(v) ? v : 0.0;
      }
      gview(grads, b + 4) += g * t.q.transpose();
      gview(grads, b + 5)(0, 0) += g.sum();
      const Mat dq = view(b + 4).transpose() * g;
      edge_head_backward(t, b, t.q_pre, dq, dh, grads);
    }
    {
      const std::size_t b = head_base(1);
      gview(grads, b + 4) += t.pooled.transpose() * grad_log_flow;
      gview(grads, b + 5)(0, 0) += grad_log_flow;
      const Mat dg =
          (view(b + 4).transpose() * (grad_log_flow / static_cast<double>(edges))).replicate(1, edges);
      edge_head_backward(t, b, t.g_pre, dg, dh, grads);
    }

    for (std::size_t l = config_.layers; l-- > 0;) {
      const std::size_t base = layer_base(l);
      const LayerTape& lt = t.layers[l];
      gview(grads, base + 4) += dh * lt.act.transpose();
      gview(grads, base + 5).col(0) += dh.rowwise().sum();
      const Mat dact_pre =
          (view(base + 4).transpose() * dh).cwiseProduct((lt.act_pre.array() > 0.0).cast<double>().matrix());
      gview(grads, base + 2) += dact_pre * lt.pre.transpose();
      gview(grads, base + 3).col(0) += dact_pre.rowwise().sum();
      const Mat dpre = view(base + 2).transpose() * dact_pre;
      Mat dh_in = dh + dpre;
      Mat dex = Mat::Zero(d, edges);
      for (Eigen::Index a = 0; a < nn; ++a) {
        for (Eigen::Index i = 0; i < nn; ++i) {
          const Eigen::Index e = a * nn + i;
          const Eigen::VectorXd to_agent =
              (dpre.col(a) * inv_n).cwiseProduct((lt.msg_agent.col(e).array() > 0.0).cast<double>().matrix());
          const Eigen::VectorXd to_item =
              (dpre.col(nn + i) * inv_n).cwiseProduct((lt.msg_item.col(e).array() > 0.0).cast<double>().matrix());
          dh_in.col(nn + i) += to_agent;
          dh_in.col(a) += to_item;
          dex.col(e) = to_agent + to_item;
        }
      }
      gview(grads, base) += dex * t.edge_x.transpose();
      gview(grads, base + 1).col(0) += dex.rowwise().sum();
      dh = std::move(dh_in);
    }
    gview(grads, kEmbedW) += dh * t.node_x.transpose();
    gview(grads, kEmbedW + 1).col(0) += dh.rowwise().sum();
  }

 private:
  static constexpr std::size_t kEmbedW = 0;
  static constexpr std::size_t kPerLayer = 6;
  static constexpr std::size_t kPerHead = 6;

  std::size_t layer_base(std::size_t l) const { return 2 + l * kPerLayer; }
  std::size_t head_base(std::size_t h) const { return 2 + config_.layers * kPerLayer + h * kPerHead; }

  void add(const std::string& name, std::size_t rows, std::size_t cols) {
    slices_.push_back({name, rows, cols, total_});
    total_ += rows * cols;
  }

  CMap view(std::size_t k) const {
    const auto& t = slices_[k];
    return CMap(params_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
                static_cast<Eigen::Index>(t.cols));
  }

  MMap gview(std::span<double> grads, std::size_t k) const {
    const auto& t = slices_[k];
    return MMap(grads.data() + t.offset, static_cast<Eigen::Index>(t.rows),
                static_cast<Eigen::Index>(t.cols));
  }

  static void encode_inputs(const PreferenceProfile& profile, const MatchState& s, Tape& t) {
    const std::size_t n = s.n();
    const auto nn = static_cast<Eigen::Index>(n);
    t.node_x = Mat::Zero(kNodeFeatures, 2 * nn);
    for (Eigen::Index a = 0; a < nn; ++a) t.node_x(s.agent_matched(a) ? 1 : 0, a) = 1.0;
    for (Eigen::Index i = 0; i < nn; ++i) t.node_x(s.item_matched(i) ? 3 : 2, nn + i) = 1.0;
    t.edge_x = Mat::Zero(kEdgeFeatures, nn * nn);
    const double span = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (Eigen::Index a = 0; a < nn; ++a) {
      for (Eigen::Index i = 0; i < nn; ++i) {
        const Eigen::Index e = a * nn + i;
        const Rank r = profile.rank(static_cast<Agent>(a), static_cast<Item>(i));
        t.edge_x(static_cast<Eigen::Index>(s.cell(static_cast<std::size_t>(e))), e) = 1.0;
        t.edge_x(3, e) = static_cast<double>(r - 1) / span;
        t.edge_x(4, e) = 1.0 / static_cast<double>(r);
      }
    }
  }

  // pre(:, a*n+i) = A h_a + I h_i + X x_ai + b
  void edge_head(const Tape& t, std::size_t b, Mat& pre, Mat& act) const {
    const auto nn = static_cast<Eigen::Index>(t.n);
    const Mat pa = view(b) * t.h_out.leftCols(nn);
    const Mat pi = view(b + 1) * t.h_out.rightCols(nn);
    pre = (view(b + 2) * t.edge_x).colwise() + view(b + 3).col(0);
    for (Eigen::Index a = 0; a < nn; ++a)
      for (Eigen::Index i = 0; i < nn; ++i) pre.col(a * nn + i) += pa.col(a) + pi.col(i);
    act = pre.cwiseMax(0.0);
  }

  void edge_head_backward(const Tape& t, std::size_t b, const Mat& pre, const Mat& dact, Mat& dh,
                          std::span<double> grads) const {
    const auto nn = static_cast<Eigen::Index>(t.n);
    const Mat dpre = dact.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    Mat da = Mat::Zero(dpre.rows(), nn), di = Mat::Zero(dpre.rows(), nn);
    for (Eigen::Index a = 0; a < nn; ++a) {
      for (Eigen::Index i = 0; i < nn; ++i) {
        da.col(a) += dpre.col(a * nn + i);
        di.col(i) += dpre.col(a * nn + i);
      }
    }
    gview(grads, b) += da * t.h_out.leftCols(nn).transpose();
    gview(grads, b + 1) += di * t.h_out.rightCols(nn).transpose();
    gview(grads, b + 2) += dpre * t.edge_x.transpose();
    gview(grads, b + 3).col(0) += dpre.rowwise().sum();
    dh.leftCols(nn) += view(b).transpose() * da;
    dh.rightCols(nn) += view(b + 1).transpose() * di;
  }

  GraphEncoderConfig config_;
  std::vector<TensorSlice> slices_;
  std::size_t total_ = 0;
  std::vector<double> params_;
};

}  // namespace emergent::gfn
