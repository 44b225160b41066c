#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qnee/ansatz.hpp"
#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

namespace qnee {

// ---------------------------------------------------------------------------
// Cost functions on an h-table (one value per bitstring).
//
// Von Neumann form:   C = -sum_s Phat(s) h(s) + sum_i e^{h_i} - 1,
// the first term empirical over the shot set, the second summed over all 2^n
// strings. Renyi form of order alpha (alpha > 0, alpha != 1):
//   C_a = sum_i Phat_i (e^{(a-1)h_i} - 1)/(1-a) + (sum_i e^{a h_i} - 1)/a.
// The lone -1 in the normalization term is not multiplied by 2^n; that is
// what makes the bound saturate at h = ln P with value
// (e^{(1-a)S_a} - 1)/(a(1-a)) and reduce to the von Neumann form as a -> 1.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_h_and_weights(const std::vector<double>& h_table,
                                const std::vector<double>& weights) {
  if (h_table.size() != weights.size())
    throw std::invalid_argument("cost: h_table and weight vector size mismatch");
  if (h_table.empty()) throw std::invalid_argument("cost: empty h_table");
}

}  // namespace detail

inline double cost_vn(const std::vector<double>& h_table, const std::vector<double>& weights) {
  detail::check_h_and_weights(h_table, weights);
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < h_table.size(); ++i) {
    first -= weights[i] * h_table[i];
    second += std::exp(h_table[i]);
  }
  return first + second - 1.0;
}

inline double cost_vn(const std::vector<double>& h_table, const ShotSet& shots) {
  return cost_vn(h_table, shots.frequencies());
}

inline double cost_renyi(const std::vector<double>& h_table, const std::vector<double>& weights,
                         double alpha) {
  if (!(alpha > 0.0) || alpha == 1.0)
    throw std::invalid_argument("cost_renyi: alpha must be positive and != 1");
  detail::check_h_and_weights(h_table, weights);
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < h_table.size(); ++i) {
    first += weights[i] * (std::exp((alpha - 1.0) * h_table[i]) - 1.0) / (1.0 - alpha);
    second += std::exp(alpha * h_table[i]);
  }
  return first + (second - 1.0) / alpha;
}

inline double cost_renyi(const std::vector<double>& h_table, const ShotSet& shots, double alpha) {
  return cost_renyi(h_table, shots.frequencies(), alpha);
}

// Solves (e^{(1-a)S_a} - 1)/(a(1-a)) = c for S_a.
inline double invert_cost_renyi(double c_alpha, double alpha) {
  if (!(alpha > 0.0) || alpha == 1.0)
    throw std::invalid_argument("invert_cost_renyi: alpha must be positive and != 1");
  const double arg = 1.0 + alpha * (1.0 - alpha) * c_alpha;
  if (!(arg > 0.0))
    throw std::range_error("invert_cost_renyi: cost outside invertible range");
  return std::log(arg) / (1.0 - alpha);
}

// ---------------------------------------------------------------------------
// The network: per-string embedding table feeding a 3-hidden-layer ReLU MLP
// with a scalar head. All weights together form Theta_N.
// ---------------------------------------------------------------------------

struct WeightSnapshot {
  struct Array {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<double> data;
  };
  std::vector<Array> arrays;

  const Array* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }

  void save(const std::string& path) const;
  static WeightSnapshot load(const std::string& path);
};

struct TrainConfig {
  double learning_rate = 1e-5;
  double weight_decay = 5e-5;
  int n_iter = 1;
  int batch_size = 0;  // 0 = full batch
  int test_eval_period = 10;
  std::uint64_t seed = 0;
  std::optional<double> alpha;  // empty = von Neumann cost

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (n_iter < 1) throw std::invalid_argument("TrainConfig: n_iter must be >= 1");
    if (test_eval_period < 1) throw std::invalid_argument("TrainConfig: test_eval_period must be >= 1");
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
    if (alpha && (!(*alpha > 0.0) || *alpha == 1.0))
      throw std::invalid_argument("TrainConfig: alpha must be positive and != 1");
  }
};

class EntropyNet {
 public:
  // Linear weights use He-style uniform fan-in init (limit sqrt(6/fan_in)),
  // embedding entries are uniform on [-1, 1); biases start at zero. The head
  // then outputs h near 0, so training starts from the flat table.
  EntropyNet(int n_qubits, int embed_dim = 64, int hidden_width = 256, std::uint64_t seed = 0)
      : n_qubits_(n_qubits),
        embed_dim_(embed_dim),
        hidden_(hidden_width) {
    if (embed_dim < 1 || hidden_width < 1)
      throw std::invalid_argument("EntropyNet: dimensions must be positive");
    const auto b = static_cast<Eigen::Index>(dim_for_qubits(n_qubits));
    std::mt19937_64 rng(mix_seed(seed, 0x4e45));
    embedding_ = Eigen::MatrixXd::Zero(embed_dim_, b);
    for (Eigen::Index c = 0; c < b; ++c)
      for (Eigen::Index r = 0; r < embed_dim_; ++r)
        embedding_(r, c) = uniform(rng, -1.0, 1.0);
    auto he_fill = [&](Eigen::MatrixXd& w, int fan_in) {
      const double lim = std::sqrt(6.0 / fan_in);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng, -lim, lim);
    };
    w1_ = Eigen::MatrixXd(hidden_, embed_dim_);
    w2_ = Eigen::MatrixXd(hidden_, hidden_);
    w3_ = Eigen::MatrixXd(hidden_, hidden_);
    he_fill(w1_, embed_dim_);
    he_fill(w2_, hidden_);
    he_fill(w3_, hidden_);
    b1_ = Eigen::VectorXd::Zero(hidden_);
    b2_ = Eigen::VectorXd::Zero(hidden_);
    b3_ = Eigen::VectorXd::Zero(hidden_);
    head_w_ = Eigen::VectorXd(hidden_);
    {
      const double lim = std::sqrt(6.0 / hidden_);
      for (Eigen::Index r = 0; r < hidden_; ++r) head_w_(r) = uniform(rng, -lim, lim);
    }
    head_b_ = 0.0;
  }

  int n_qubits() const { return n_qubits_; }
  int embed_dim() const { return embed_dim_; }
  int hidden_width() const { return hidden_; }
  std::size_t n_strings() const { return static_cast<std::size_t>(embedding_.cols()); }

  double forward(const BitString& s) const {
    if (s.n_qubits != n_qubits_) throw std::invalid_argument("forward: qubit-count mismatch");
    Eigen::VectorXd z = embedding_.col(static_cast<Eigen::Index>(s.index));
    z = ((w1_ * z + b1_).cwiseMax(0.0)).eval();
    z = ((w2_ * z + b2_).cwiseMax(0.0)).eval();
    z = ((w3_ * z + b3_).cwiseMax(0.0)).eval();
    return head_w_.dot(z) + head_b_;
  }

  std::vector<double> h_table() const {
    Eigen::MatrixXd z1 = ((w1_ * embedding_).colwise() + b1_).cwiseMax(0.0);
    Eigen::MatrixXd z2 = ((w2_ * z1).colwise() + b2_).cwiseMax(0.0);
    Eigen::MatrixXd z3 = ((w3_ * z2).colwise() + b3_).cwiseMax(0.0);
    Eigen::VectorXd h = z3.transpose() * head_w_;
    std::vector<double> out(n_strings());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = h(static_cast<Eigen::Index>(i)) + head_b_;
    return out;
  }

  WeightSnapshot snapshot() const {
    WeightSnapshot snap;
    auto push_mat = [&](const std::string& name, const Eigen::MatrixXd& m) {
      WeightSnapshot::Array a;
      a.name = name;
      a.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
      a.data.assign(m.data(), m.data() + m.size());
      snap.arrays.push_back(std::move(a));
    };
    auto push_vec = [&](const std::string& name, const Eigen::VectorXd& v) {
      WeightSnapshot::Array a;
      a.name = name;
      a.shape = {static_cast<std::uint64_t>(v.size())};
      a.data.assign(v.data(), v.data() + v.size());
      snap.arrays.push_back(std::move(a));
    };
    push_mat("embedding", embedding_);
    push_mat("hidden1.weight", w1_);
    push_vec("hidden1.bias", b1_);
    push_mat("hidden2.weight", w2_);
    push_vec("hidden2.bias", b2_);
    push_mat("hidden3.weight", w3_);
    push_vec("hidden3.bias", b3_);
    push_vec("head.weight", head_w_);
    WeightSnapshot::Array hb;
    hb.name = "head.bias";
    hb.shape = {1};
    hb.data = {head_b_};
    snap.arrays.push_back(std::move(hb));
    return snap;
  }

  void restore(const WeightSnapshot& snap) {
    auto take_mat = [&](const std::string& name, Eigen::MatrixXd& m) {
      const auto* a = snap.find(name);
      if (!a || a->shape.size() != 2 || a->shape[0] != static_cast<std::uint64_t>(m.rows()) ||
          a->shape[1] != static_cast<std::uint64_t>(m.cols()))
        throw std::invalid_argument("restore: missing or mis-shaped array " + name);
      std::copy(a->data.begin(), a->data.end(), m.data());
    };
    auto take_vec = [&](const std::string& name, Eigen::VectorXd& v) {
      const auto* a = snap.find(name);
      if (!a || a->shape.size() != 1 || a->shape[0] != static_cast<std::uint64_t>(v.size()))
        throw std::invalid_argument("restore: missing or mis-shaped array " + name);
      std::copy(a->data.begin(), a->data.end(), v.data());
    };
    take_mat("embedding", embedding_);
    take_mat("hidden1.weight", w1_);
    take_vec("hidden1.bias", b1_);
    take_mat("hidden2.weight", w2_);
    take_vec("hidden2.bias", b2_);
    take_mat("hidden3.weight", w3_);
    take_vec("hidden3.bias", b3_);
    take_vec("head.weight", head_w_);
    const auto* hb = snap.find("head.bias");
    if (!hb || hb->data.size() != 1)
      throw std::invalid_argument("restore: missing or mis-shaped array head.bias");
    head_b_ = hb->data[0];
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(embedding_.size() + w1_.size() + b1_.size() + w2_.size() +
                                    b2_.size() + w3_.size() + b3_.size() + head_w_.size()) +
           1;
  }

  // Flat order: embedding, hidden1.weight, hidden1.bias, hidden2.weight,
  // hidden2.bias, hidden3.weight, hidden3.bias, head.weight, head.bias;
  // matrices column-major.
  std::vector<double> flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    auto push = [&](const double* p, std::size_t k) { out.insert(out.end(), p, p + k); };
    push(embedding_.data(), embedding_.size());
    push(w1_.data(), w1_.size());
    push(b1_.data(), b1_.size());
    push(w2_.data(), w2_.size());
    push(b2_.data(), b2_.size());
    push(w3_.data(), w3_.size());
    push(b3_.data(), b3_.size());
    push(head_w_.data(), head_w_.size());
    out.push_back(head_b_);
    return out;
  }

  void set_flat_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count())
      throw std::invalid_argument("set_flat_parameters: wrong length");
    const double* p = flat.data();
    auto pull = [&](double* dst, std::size_t k) {
      std::copy(p, p + k, dst);
      p += k;
    };
    pull(embedding_.data(), embedding_.size());
    pull(w1_.data(), w1_.size());
    pull(b1_.data(), b1_.size());
    pull(w2_.data(), w2_.size());
    pull(b2_.data(), b2_.size());
    pull(w3_.data(), w3_.size());
    pull(b3_.data(), b3_.size());
    pull(head_w_.data(), head_w_.size());
    head_b_ = *p;
  }

  // Trainer needs raw access to the tensors.
  struct Access;

 private:
  int n_qubits_;
  int embed_dim_;
  int hidden_;
  Eigen::MatrixXd embedding_;        // embed_dim x 2^n, one column per string
  Eigen::MatrixXd w1_, w2_, w3_;
  Eigen::VectorXd b1_, b2_, b3_;
  Eigen::VectorXd head_w_;
  double head_b_;

  friend struct Access;
};

struct EntropyNet::Access {
  static Eigen::MatrixXd& embedding(EntropyNet& n) { return n.embedding_; }
  static Eigen::MatrixXd& w1(EntropyNet& n) { return n.w1_; }
  static Eigen::MatrixXd& w2(EntropyNet& n) { return n.w2_; }
  static Eigen::MatrixXd& w3(EntropyNet& n) { return n.w3_; }
  static Eigen::VectorXd& b1(EntropyNet& n) { return n.b1_; }
  static Eigen::VectorXd& b2(EntropyNet& n) { return n.b2_; }
  static Eigen::VectorXd& b3(EntropyNet& n) { return n.b3_; }
  static Eigen::VectorXd& head_w(EntropyNet& n) { return n.head_w_; }
  static double& head_b(EntropyNet& n) { return n.head_b_; }
};

struct TrainEval {
  int iteration = 0;
  double c_train = 0.0;
  double c_test = 0.0;
};

struct NnResult {
  double c_nn = 0.0;               // lowest recorded test cost
  WeightSnapshot best_weights;     // weights at that record point
  std::vector<double> h_table;     // h from best_weights
  std::vector<TrainEval> history;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, std::vector<TrainEval> hist)
      : std::runtime_error(msg), history(std::move(hist)) {}
  std::vector<TrainEval> history;
};

namespace detail {

// One forward/backward over all 2^n strings. The normalization term needs
// every string anyway, so even minibatch steps run the full-width forward;
// the batch only changes the empirical weights in the output gradient.
struct NnWorkspace {
  Eigen::MatrixXd z1, z2, z3, d;
  Eigen::MatrixXd g_w1, g_w2, g_w3, g_emb;
  Eigen::VectorXd g_b1, g_b2, g_b3, g_head_w;
  double g_head_b = 0.0;
  Eigen::VectorXd h, eh, gh;

  void resize(const EntropyNet& net) {
    const auto b = static_cast<Eigen::Index>(net.n_strings());
    const auto hid = net.hidden_width();
    const auto emb = net.embed_dim();
    z1.resize(hid, b);
    z2.resize(hid, b);
    z3.resize(hid, b);
    d.resize(hid, b);
    g_w1.resize(hid, emb);
    g_w2.resize(hid, hid);
    g_w3.resize(hid, hid);
    g_emb.resize(emb, b);
    g_b1.resize(hid);
    g_b2.resize(hid);
    g_b3.resize(hid);
    g_head_w.resize(hid);
    h.resize(b);
    eh.resize(b);
    gh.resize(b);
  }

  void forward(EntropyNet& net) {
    using A = EntropyNet::Access;
    z1.noalias() = A::w1(net) * A::embedding(net);
    z1 = (z1.colwise() + A::b1(net)).cwiseMax(0.0);
    z2.noalias() = A::w2(net) * z1;
    z2 = (z2.colwise() + A::b2(net)).cwiseMax(0.0);
    z3.noalias() = A::w3(net) * z2;
    z3 = (z3.colwise() + A::b3(net)).cwiseMax(0.0);
    h.noalias() = z3.transpose() * A::head_w(net);
    h.array() += A::head_b(net);
    eh = h.array().exp();
  }

  // Costs evaluated on the h-table produced by the latest forward().
  double cost(const Eigen::VectorXd& weights, const std::optional<double>& alpha) const {
    if (alpha) {
      const double a = *alpha;
      const double first =
          (weights.array() * (((a - 1.0) * h.array()).exp() - 1.0)).sum() / (1.0 - a);
      return first + ((a * h.array()).exp().sum() - 1.0) / a;
    }
    return -weights.dot(h) + eh.sum() - 1.0;
  }

  void output_gradient(const Eigen::VectorXd& weights, const std::optional<double>& alpha) {
    if (alpha) {
      const double a = *alpha;
      gh = -(weights.array() * ((a - 1.0) * h.array()).exp()) + (a * h.array()).exp();
    } else {
      gh = eh - weights;
    }
  }

  // Backprop for the cost whose output gradient is in gh; forward() must have
  // run with the current weights.
  void backward(EntropyNet& net) {
    using A = EntropyNet::Access;
    g_head_w.noalias() = z3 * gh;
    g_head_b = gh.sum();
    d.noalias() = A::head_w(net) * gh.transpose();
    d = (z3.array() > 0.0).select(d, 0.0);
    g_w3.noalias() = d * z2.transpose();
    g_b3 = d.rowwise().sum();
    d = (A::w3(net).transpose() * d).eval();
    d = (z2.array() > 0.0).select(d, 0.0);
    g_w2.noalias() = d * z1.transpose();
    g_b2 = d.rowwise().sum();
    d = (A::w2(net).transpose() * d).eval();
    d = (z1.array() > 0.0).select(d, 0.0);
    g_w1.noalias() = d * A::embedding(net).transpose();
    g_b1 = d.rowwise().sum();
    g_emb.noalias() = A::w1(net).transpose() * d;
  }
};

struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = 1e-5, wd = 5e-5;
  int t = 0;
  Eigen::MatrixXd m_emb, v_emb, m_w1, v_w1, m_w2, v_w2, m_w3, v_w3;
  Eigen::VectorXd m_b1, v_b1, m_b2, v_b2, m_b3, v_b3, m_hw, v_hw;
  double m_hb = 0.0, v_hb = 0.0;

  void init(const EntropyNet& net, const TrainConfig& cfg) {
    lr = cfg.learning_rate;
    wd = cfg.weight_decay;
    const auto b = static_cast<Eigen::Index>(net.n_strings());
    const auto hid = net.hidden_width();
    const auto emb = net.embed_dim();
    m_emb = Eigen::MatrixXd::Zero(emb, b);
    v_emb = m_emb;
    m_w1 = Eigen::MatrixXd::Zero(hid, emb);
    v_w1 = m_w1;
    m_w2 = Eigen::MatrixXd::Zero(hid, hid);
    v_w2 = m_w2;
    m_w3 = m_w2;
    v_w3 = m_w2;
    m_b1 = Eigen::VectorXd::Zero(hid);
    v_b1 = m_b1;
    m_b2 = m_b1;
    v_b2 = m_b1;
    m_b3 = m_b1;
    v_b3 = m_b1;
    m_hw = m_b1;
    v_hw = m_b1;
    m_hb = v_hb = 0.0;
    t = 0;
  }

  template <class W, class G>
  void update_tensor(W& w, const G& g, W& m, W& v, double c1, double c2) {
    // coupled weight decay: decay folds into the gradient before the moments
    auto geff = (g.array() + wd * w.array()).eval();
    m.array() = beta1 * m.array() + (1.0 - beta1) * geff;
    v.array() = beta2 * v.array() + (1.0 - beta2) * geff.square();
    w.array() -= lr * (m.array() * c1) / ((v.array() * c2).sqrt() + eps);
  }

  void step(EntropyNet& net, NnWorkspace& ws) {
    using A = EntropyNet::Access;
    ++t;
    const double c1 = 1.0 / (1.0 - std::pow(beta1, t));
    const double c2 = 1.0 / (1.0 - std::pow(beta2, t));
    update_tensor(A::embedding(net), ws.g_emb, m_emb, v_emb, c1, c2);
    update_tensor(A::w1(net), ws.g_w1, m_w1, v_w1, c1, c2);
    update_tensor(A::b1(net), ws.g_b1, m_b1, v_b1, c1, c2);
    update_tensor(A::w2(net), ws.g_w2, m_w2, v_w2, c1, c2);
    update_tensor(A::b2(net), ws.g_b2, m_b2, v_b2, c1, c2);
    update_tensor(A::w3(net), ws.g_w3, m_w3, v_w3, c1, c2);
    update_tensor(A::b3(net), ws.g_b3, m_b3, v_b3, c1, c2);
    update_tensor(A::head_w(net), ws.g_head_w, m_hw, v_hw, c1, c2);
    const double geff = ws.g_head_b + wd * A::head_b(net);
    m_hb = beta1 * m_hb + (1.0 - beta1) * geff;
    v_hb = beta2 * v_hb + (1.0 - beta2) * geff * geff;
    A::head_b(net) -= lr * (m_hb * c1) / (std::sqrt(v_hb * c2) + eps);
  }
};

inline Eigen::VectorXd to_eigen_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Deterministic Fisher-Yates, independent of std library internals.
inline void shuffle_indices(std::vector<std::uint32_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

// Cost and full analytic gradient w.r.t. Theta_N (flat order), for the given
// first-term weights. Used by the gradient-check tests.
inline std::pair<double, std::vector<double>> nn_cost_and_gradient(
    EntropyNet& net, const std::vector<double>& first_term_weights,
    std::optional<double> alpha = {}) {
  detail::NnWorkspace ws;
  ws.resize(net);
  ws.forward(net);
  const Eigen::VectorXd w = detail::to_eigen_vec(first_term_weights);
  const double c = ws.cost(w, alpha);
  ws.output_gradient(w, alpha);
  ws.backward(net);
  std::vector<double> grad;
  grad.reserve(net.parameter_count());
  auto push = [&](const double* p, std::size_t k) { grad.insert(grad.end(), p, p + k); };
  push(ws.g_emb.data(), ws.g_emb.size());
  push(ws.g_w1.data(), ws.g_w1.size());
  push(ws.g_b1.data(), ws.g_b1.size());
  push(ws.g_w2.data(), ws.g_w2.size());
  push(ws.g_b2.data(), ws.g_b2.size());
  push(ws.g_w3.data(), ws.g_w3.size());
  push(ws.g_b3.data(), ws.g_b3.size());
  push(ws.g_head_w.data(), ws.g_head_w.size());
  grad.push_back(ws.g_head_b);
  return {c, std::move(grad)};
}

namespace detail {

struct BatchPlan {
  // expanded shot indices for minibatch mode; empty means full batch
  std::vector<std::uint32_t> order;
  std::size_t cursor = 0;
  int batch_size = 0;
  std::mt19937_64 rng;

  void init(const ShotSet* shots, const TrainConfig& cfg) {
    batch_size = cfg.batch_size;
    if (batch_size <= 0) return;
    if (!shots)
      throw std::invalid_argument("train: minibatch mode requires a shot set, not exact weights");
    order.reserve(static_cast<std::size_t>(shots->total));
    for (std::size_t s = 0; s < shots->counts.size(); ++s)
      for (std::uint64_t k = 0; k < shots->counts[s]; ++k)
        order.push_back(static_cast<std::uint32_t>(s));
    rng.seed(mix_seed(cfg.seed, 0xb47c));
    shuffle_indices(order, rng);
  }

  // fills freq with the next minibatch's empirical distribution
  void next(Eigen::VectorXd& freq) {
    const std::size_t n = order.size();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(batch_size), n);
    freq.setZero();
    for (std::size_t k = 0; k < take; ++k) {
      if (cursor >= n) {
        shuffle_indices(order, rng);
        cursor = 0;
      }
      freq(static_cast<Eigen::Index>(order[cursor++])) += 1.0;
    }
    freq /= static_cast<double>(take);
  }
};

inline NnResult train_impl(EntropyNet& net, const Eigen::VectorXd& train_freq,
                           const Eigen::VectorXd& test_freq, const TrainConfig& cfg,
                           const ShotSet* train_shots) {
  cfg.validate();
  const auto b = static_cast<Eigen::Index>(net.n_strings());
  if (train_freq.size() != b || test_freq.size() != b)
    throw std::invalid_argument("train: weight vectors do not match the net's string count");

  NnWorkspace ws;
  ws.resize(net);
  AdamState adam;
  adam.init(net, cfg);
  BatchPlan batches;
  batches.init(train_shots, cfg);
  Eigen::VectorXd step_freq = train_freq;

  NnResult result;
  result.c_nn = std::numeric_limits<double>::infinity();
  bool have_best = false;

  auto record = [&](int iter) {
    const double c_train = ws.cost(train_freq, cfg.alpha);
    const double c_test = ws.cost(test_freq, cfg.alpha);
    result.history.push_back(TrainEval{iter, c_train, c_test});
    if (!std::isfinite(c_train) || !std::isfinite(c_test))
      throw TrainingError("train: cost diverged at iteration " + std::to_string(iter),
                          result.history);
    if (c_test < result.c_nn) {
      result.c_nn = c_test;
      result.best_weights = net.snapshot();
      result.h_table.assign(ws.h.data(), ws.h.data() + ws.h.size());
      have_best = true;
    }
  };

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    ws.forward(net);
    if (iter % cfg.test_eval_period == 0) record(iter);
    if (batches.batch_size > 0) {
      batches.next(step_freq);
      ws.output_gradient(step_freq, cfg.alpha);
    } else {
      ws.output_gradient(train_freq, cfg.alpha);
    }
    ws.backward(net);
    adam.step(net, ws);
  }
  ws.forward(net);
  record(cfg.n_iter);

  if (!have_best)
    throw TrainingError("train: no finite test cost recorded", result.history);
  return result;
}

}  // namespace detail

// Adam training of the net against a training shot set, with the test set
// monitored every cfg.test_eval_period iterations. Returns the lowest
// recorded test cost, the weights that produced it, and the evaluation
// history. The net itself is left at the final weights so callers can keep
// warm-starting it.
inline NnResult train(EntropyNet& net, const ShotSet& train_shots, const ShotSet& test_shots,
                      const TrainConfig& cfg) {
  if (train_shots.n_qubits != net.n_qubits() || test_shots.n_qubits != net.n_qubits())
    throw std::invalid_argument("train: shot sets do not match the net's qubit count");
  const auto tf = train_shots.frequencies();
  const auto sf = test_shots.frequencies();
  return detail::train_impl(net, detail::to_eigen_vec(tf), detail::to_eigen_vec(sf), cfg,
                            &train_shots);
}

// Exact-weight variant: train and test terms both use the given distribution
// (the infinite-shot limit). Full-batch only.
inline NnResult train(EntropyNet& net, const std::vector<double>& exact_weights,
                      const TrainConfig& cfg) {
  const Eigen::VectorXd w = detail::to_eigen_vec(exact_weights);
  return detail::train_impl(net, w, w, cfg, nullptr);
}

// ---------------------------------------------------------------------------
// Snapshot serialization: versioned magic, then a count of named arrays, each
// with shape metadata and raw float64 payload, all little-endian.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  put_u64(os, u);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return x;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}

inline double get_f64(std::istream& is) {
  const std::uint64_t u = get_u64(is);
  double x;
  std::memcpy(&x, &u, 8);
  return x;
}

inline constexpr char kSnapshotMagic[9] = "QNEEW001";

}  // namespace detail

inline void WeightSnapshot::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("WeightSnapshot::save: cannot open " + path);
  os.write(detail::kSnapshotMagic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    detail::put_u32(os, static_cast<std::uint32_t>(a.name.size()));
    os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(a.shape.size()));
    std::uint64_t n = 1;
    for (auto s : a.shape) {
      detail::put_u64(os, s);
      n *= s;
    }
    if (n != a.data.size())
      throw std::logic_error("WeightSnapshot::save: shape does not match data length");
    for (double x : a.data) detail::put_f64(os, x);
  }
  if (!os) throw std::runtime_error("WeightSnapshot::save: write failed for " + path);
}

inline WeightSnapshot WeightSnapshot::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("WeightSnapshot::load: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kSnapshotMagic, 8) != 0)
    throw std::runtime_error("WeightSnapshot::load: bad magic in " + path);
  WeightSnapshot snap;
  const std::uint32_t count = detail::get_u32(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    Array a;
    const std::uint32_t name_len = detail::get_u32(is);
    a.name.resize(name_len);
    is.read(a.name.data(), name_len);
    const std::uint32_t ndim = detail::get_u32(is);
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(detail::get_u64(is));
      n *= a.shape.back();
    }
    if (n > (std::uint64_t{1} << 32))
      throw std::runtime_error("WeightSnapshot::load: array too large in " + path);
    a.data.resize(n);
    for (auto& x : a.data) x = detail::get_f64(is);
    if (!is) throw std::runtime_error("WeightSnapshot::load: truncated file " + path);
    snap.arrays.push_back(std::move(a));
  }
  return snap;
}

}  // namespace qnee
