#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "tam/affinity.hpp"
#include "tam/common.hpp"
#include "tam/graph.hpp"
#include "tam/rng.hpp"

namespace tam {

// Local-affinity-maximization network: a two-layer graph convolution trained
// so that representations agree with their neighbors (affinity term) while a
// regularizer pushes them away from the non-neighbor population. Message
// passing runs on a truncated adjacency; the affinity being maximized is
// measured on the original one.

struct LamnetParams {
  Matrix w1;  // M x hidden1
  Matrix w2;  // hidden1 x hidden2
};

struct LamnetGradients {
  Matrix w1;
  Matrix w2;
};

// Regularize against every non-neighbor exactly.
inline constexpr Index kAllNegatives = -1;

struct TrainConfig {
  Index epochs = 500;
  double learning_rate = 1e-5;
  double lambda = 0.0;  // weight of the non-neighbor dissimilarity term
  Index hidden1 = 128;
  Index hidden2 = 128;
  // Non-neighbor term: exact up to 5000 nodes, subsampled to this many
  // draws per node above that. kAllNegatives forces exact at any size.
  Index neg_sample_size = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate))
      throw ValidationError("train: learning_rate must be positive and finite");
    if (!(lambda >= 0) || !std::isfinite(lambda))
      throw ValidationError("train: lambda must be non-negative and finite");
    if (hidden1 < 1 || hidden2 < 1)
      throw ValidationError("train: hidden sizes must be >= 1");
    if (neg_sample_size != kAllNegatives && neg_sample_size < 1)
      throw ValidationError("train: neg_sample_size must be >= 1 or all");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      throw ValidationError("train: Adam betas must lie in [0,1)");
    if (!(epsilon > 0))
      throw ValidationError("train: Adam epsilon must be positive");
  }
};

namespace detail {

// Everything fixed across epochs for one model: the normalized message
// adjacency (truncated graph plus self-loops), its product with the
// attributes, and the adjacency defining neighborhoods for the objective.
struct Objective {
  const Matrix* attributes = nullptr;
  const CsrAdjacency* affinity_adj = nullptr;
  CsrMatrix norm;
  Matrix p;  // norm * attributes
  double lambda = 0.0;
  Index neg_samples = kAllNegatives;  // resolved: exact or a positive count
  std::uint64_t sample_seed = 0;

  Objective(const Matrix& attrs, const CsrAdjacency& message_adj,
            const CsrAdjacency& affinity, double lam, Index neg, std::uint64_t seed)
      : attributes(&attrs),
        affinity_adj(&affinity),
        norm(symmetric_normalize(message_adj, /*add_self_loops=*/true)),
        p(spmm(norm, attrs)),
        lambda(lam),
        neg_samples(neg),
        sample_seed(seed) {
    if (attrs.rows() != message_adj.n || attrs.rows() != affinity.n)
      throw ValidationError("lamnet: attribute rows do not match adjacency size");
  }

  struct Eval {
    double loss = 0.0;
    Matrix h;  // final representations
    LamnetGradients grad;
  };

  Eval operator()(const LamnetParams& params, Index epoch, bool want_grad) const {
    const Matrix& x = *attributes;
    if (params.w1.rows() != x.cols() || params.w2.rows() != params.w1.cols())
      throw ValidationError("lamnet: parameter shapes do not match");
    const NodeId n = x.rows();
    const CsrAdjacency& adj = *affinity_adj;

    // Forward pass.
    Matrix z1 = p * params.w1;
    Matrix h1 = z1.cwiseMax(0.0);
    Matrix q = spmm(norm, h1);
    Matrix z2 = q * params.w2;
    Matrix h = z2.cwiseMax(0.0);

    // Unit rows; a zero row stays zero and is treated as similar to nothing.
    Matrix hat = h;
    Vector rho(n);
    for (NodeId i = 0; i < n; ++i) {
      rho[i] = hat.row(i).norm();
      if (rho[i] == 0.0)
        hat.row(i).setZero();
      else
        hat.row(i) /= rho[i];
    }

    // Per-node neighbor similarity sums and the two objective weights:
    //   loss = sum_i w_i * n_i + lambda-part, w_i = -1/deg_i - beta_i,
    //   beta_i = lambda / (N - deg_i) (the complement includes i itself).
    Vector nsum = Vector::Zero(n);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j : adj.neighbors(i)) nsum[i] += hat.row(i).dot(hat.row(j));

    const bool exact = neg_samples == kAllNegatives || n <= 5000;
    Vector beta = Vector::Zero(n);
    Vector w(n);
    for (NodeId i = 0; i < n; ++i) {
      if (exact && lambda != 0.0)
        beta[i] = lambda / static_cast<double>(n - adj.degree(i));
      w[i] = (adj.degree(i) > 0 ? -1.0 / static_cast<double>(adj.degree(i)) : 0.0) -
             beta[i];
    }

    Eval out;
    for (NodeId i = 0; i < n; ++i) out.loss += w[i] * nsum[i];

    // grad wrt hat rows.
    Matrix ghat;
    if (want_grad) {
      ghat = Matrix::Zero(n, h.cols());
      for (NodeId i = 0; i < n; ++i)
        for (NodeId j : adj.neighbors(i)) ghat.row(i) += (w[i] + w[j]) * hat.row(j);
    }

    if (exact) {
      if (lambda != 0.0) {
        // sum_i beta_i * hat_i . S with S the column sum of hat.
        Eigen::RowVectorXd s = hat.colwise().sum();
        Eigen::RowVectorXd b = beta.transpose() * hat;
        out.loss += b.dot(s);
        if (want_grad)
          for (NodeId i = 0; i < n; ++i) ghat.row(i) += beta[i] * s + b;
      }
    } else if (lambda != 0.0) {
      // Monte Carlo non-neighbor term, fresh draws each epoch.
      Rng rng(derive_seed(sample_seed, "negatives", static_cast<std::uint64_t>(epoch)));
      const double scale = lambda / static_cast<double>(neg_samples);
      for (NodeId i = 0; i < n; ++i) {
        auto nb = adj.neighbors(i);
        for (Index s = 0; s < neg_samples; ++s) {
          NodeId k;
          do {
            k = static_cast<NodeId>(rng.bounded(static_cast<std::uint64_t>(n)));
          } while (std::binary_search(nb.begin(), nb.end(), k));
          out.loss += scale * hat.row(i).dot(hat.row(k));
          if (want_grad) {
            ghat.row(i) += scale * hat.row(k);
            ghat.row(k) += scale * hat.row(i);
          }
        }
      }
    }

    if (!want_grad) {
      out.h = std::move(h);
      return out;
    }

    // hat = h / |h|: project out the radial component, scale by 1/|h|.
    Matrix gh(n, h.cols());
    for (NodeId i = 0; i < n; ++i) {
      if (rho[i] == 0.0) {
        gh.row(i).setZero();
      } else {
        double radial = ghat.row(i).dot(hat.row(i));
        gh.row(i) = (ghat.row(i) - radial * hat.row(i)) / rho[i];
      }
    }

    // Backprop through relu -> matmul -> conv -> relu -> matmul.
    Matrix g2 = ((z2.array() > 0.0).cast<double>() * gh.array()).matrix();
    out.grad.w2 = q.transpose() * g2;
    Matrix gq = g2 * params.w2.transpose();
    Matrix gh1 = spmm(norm, gq);  // norm is symmetric
    Matrix g1 = ((z1.array() > 0.0).cast<double>() * gh1.array()).matrix();
    out.grad.w1 = p.transpose() * g1;
    out.h = std::move(h);
    return out;
  }
};

}  // namespace detail

// Two graph convolutions with ReLU; self-loops are added to the message
// adjacency before symmetric normalization, so isolated nodes keep their own
// signal.
inline Matrix forward(const LamnetParams& params, const Matrix& attributes,
                      const CsrAdjacency& message_adj) {
  detail::Objective obj(attributes, message_adj, message_adj, 0.0, kAllNegatives, 0);
  return obj(params, 0, /*want_grad=*/false).h;
}

inline Matrix forward(const LamnetParams& params, const AttributedGraph& g,
                      const CsrAdjacency& message_adj) {
  return forward(params, g.attributes, message_adj);
}

// Exact objective value: negated mean neighbor similarity per node plus
// lambda times the mean similarity to the node's non-neighbors (self
// included). Neighborhoods come from the original graph.
inline double loss(const LamnetParams& params, const AttributedGraph& g,
                   const CsrAdjacency& message_adj, double lambda) {
  detail::Objective obj(g.attributes, message_adj, g.adjacency, lambda,
                        kAllNegatives, 0);
  return obj(params, 0, /*want_grad=*/false).loss;
}

// Exact reverse-mode gradient of loss() in both weight matrices. The ReLU
// subgradient at 0 is taken as 0, and normalization of a zero row
// contributes no gradient.
inline LamnetGradients gradient(const LamnetParams& params, const AttributedGraph& g,
                                const CsrAdjacency& message_adj, double lambda) {
  detail::Objective obj(g.attributes, message_adj, g.adjacency, lambda,
                        kAllNegatives, 0);
  return obj(params, 0, /*want_grad=*/true).grad;
}

struct LamnetModel {
  LamnetParams params;
  TrainConfig config;
  CsrAdjacency trunc;  // message adjacency the model was trained on
  // loss before any update, after each epoch; size epochs + 1.
  std::vector<double> loss_history;
};

namespace detail {

inline Matrix uniform_init(Rng& rng, Index rows, Index cols) {
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

// Full-batch Adam over the objective. Throws TrainingError when the loss
// leaves the finite range; the carried epoch counts completed updates.
inline LamnetModel train_on_objective(const detail::Objective& obj,
                                      const AttributedGraph& g,
                                      const CsrAdjacency& message_adj,
                                      const TrainConfig& cfg) {
  cfg.validate();
  LamnetModel model;
  model.config = cfg;
  model.trunc = message_adj;

  Rng init_rng(derive_seed(cfg.seed, "init"));
  model.params.w1 = uniform_init(init_rng, g.num_attributes(), cfg.hidden1);
  model.params.w2 = uniform_init(init_rng, cfg.hidden1, cfg.hidden2);

  Matrix m1 = Matrix::Zero(model.params.w1.rows(), model.params.w1.cols());
  Matrix v1 = m1, m2 = Matrix::Zero(model.params.w2.rows(), model.params.w2.cols());
  Matrix v2 = m2;

  auto adam_step = [&](Matrix& w, Matrix& m, Matrix& v, const Matrix& grad, Index t) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    double mc = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    double vc = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    w.array() -= cfg.learning_rate * (m.array() / mc) /
                 ((v.array() / vc).sqrt() + cfg.epsilon);
  };

  model.loss_history.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto eval = obj(model.params, epoch, /*want_grad=*/true);
    if (!std::isfinite(eval.loss))
      throw TrainingError("train: non-finite loss after " + std::to_string(epoch) +
                              " updates",
                          epoch);
    model.loss_history.push_back(eval.loss);
    adam_step(model.params.w1, m1, v1, eval.grad.w1, epoch + 1);
    adam_step(model.params.w2, m2, v2, eval.grad.w2, epoch + 1);
  }
  double final_loss = obj(model.params, cfg.epochs, /*want_grad=*/false).loss;
  if (!std::isfinite(final_loss))
    throw TrainingError("train: non-finite loss after " + std::to_string(cfg.epochs) +
                            " updates",
                        cfg.epochs);
  model.loss_history.push_back(final_loss);
  return model;
}

}  // namespace detail

// Trains one model: seeded uniform init, full-batch Adam on the exact (or,
// past 5000 nodes with a finite neg_sample_size, subsampled) objective.
// Affinity neighborhoods come from the original graph; messages flow over
// message_adj.
inline LamnetModel train(const AttributedGraph& g, const CsrAdjacency& message_adj,
                         const TrainConfig& cfg) {
  cfg.validate();
  detail::Objective obj(g.attributes, message_adj, g.adjacency, cfg.lambda,
                        cfg.neg_sample_size, derive_seed(cfg.seed, "sampling"));
  return detail::train_on_objective(obj, g, message_adj, cfg);
}

// Anomaly scores from one trained model: representations from the model's
// own message adjacency, affinity measured over the original neighborhoods,
// score = negated affinity.
inline ScoreVector score_single(const LamnetModel& model, const AttributedGraph& g) {
  Matrix h = forward(model.params, g, model.trunc);
  ScoreVector out;
  out.scores = -local_affinity(h, g.adjacency).h;
  out.provenance = "lamnet(seed=" + std::to_string(model.config.seed) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = std::move(data);
  return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != m.size())
    throw ParseError("model file: matrix payload size mismatch");
  Index k = 0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index c = 0; c < m.cols(); ++c) m(i, c) = data[static_cast<std::size_t>(k++)].get<double>();
  return m;
}

inline nlohmann::json adjacency_to_json(const CsrAdjacency& a) {
  nlohmann::json j;
  j["n"] = a.n;
  auto edges = a.undirected_edges();
  nlohmann::json e = nlohmann::json::array();
  for (auto [u, v] : edges) e.push_back({u, v});
  j["edges"] = std::move(e);
  return j;
}

inline CsrAdjacency adjacency_from_json(const nlohmann::json& j) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& e : j.at("edges"))
    edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  return build_adjacency(j.at("n").get<NodeId>(), std::move(edges));
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"lambda", c.lambda},
          {"hidden1", c.hidden1},
          {"hidden2", c.hidden2},
          {"neg_sample_size", c.neg_sample_size},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"seed", c.seed}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.hidden1 = j.at("hidden1").get<Index>();
  c.hidden2 = j.at("hidden2").get<Index>();
  c.neg_sample_size = j.at("neg_sample_size").get<Index>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace detail

// JSON round-trip; doubles are written in shortest exact form, so a reloaded
// model scores bit-identically.
inline void save_model(const LamnetModel& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "tam.lamnet";
  j["version"] = 1;
  j["config"] = detail::config_to_json(model.config);
  j["trunc"] = detail::adjacency_to_json(model.trunc);
  j["w1"] = detail::matrix_to_json(model.params.w1);
  j["w2"] = detail::matrix_to_json(model.params.w2);
  j["loss_history"] = model.loss_history;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failure on " + path);
}

inline LamnetModel load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "tam.lamnet")
      throw ParseError(path + ": not a model file");
    LamnetModel model;
    model.config = detail::config_from_json(j.at("config"));
    model.trunc = detail::adjacency_from_json(j.at("trunc"));
    model.params.w1 = detail::matrix_from_json(j.at("w1"));
    model.params.w2 = detail::matrix_from_json(j.at("w2"));
    model.loss_history = j.at("loss_history").get<std::vector<double>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace tam
