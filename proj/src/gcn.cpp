#include "potshape/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace potshape {
namespace {

constexpr int kMaxHalvings = 60;
constexpr int kPlateauStreak = 3;

void glorot_fill_rows(Matrix& w, int first_row, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (static_cast<double>(w.rows()) + w.cols()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (int i = first_row; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
}

Matrix softmax_rows(const Matrix& s) {
  Matrix z(s.rows(), s.cols());
  for (int i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    Eigen::RowVectorXd e = (s.row(i).array() - m).exp();
    z.row(i) = e / e.sum();
  }
  return z;
}

// Mean two-column cross-entropy against soft labels p over the base rows.
double base_loss(const Matrix& z, const BaseCaseSet& bases) {
  double total = 0.0;
  for (size_t b = 0; b < bases.nodes.size(); ++b) {
    const int i = bases.nodes[b];
    const double p = bases.labels(static_cast<Eigen::Index>(b));
    total -= p * std::log(z(i, 1)) + (1.0 - p) * std::log(z(i, 0));
  }
  return total / static_cast<double>(bases.nodes.size());
}

// Mean over ordered neighbour pairs of the squared row difference,
// computed as 2 (sum_v deg_v |z_v|^2 - tr(Z^T A Z)) / sum_vw A_vw.
// Dividing by the adjacency mass keeps eta meaningful across graph
// sizes; an unnormalised sum would drown the handful of anchor labels
// on any grid-sized graph and train to a constant.
double propagation_loss(const Matrix& adjacency, const Matrix& z) {
  const double mass = adjacency.sum();
  if (mass <= 0.0) return 0.0;
  const Vector deg = adjacency.rowwise().sum();
  const double quad = (z.array() * (adjacency * z).array()).sum();
  const double diag = (z.array().square().rowwise().sum() * deg.array()).sum();
  return 2.0 * (diag - quad) / mass;
}

double loss_at(const SpectralOps& ops, const BaseCaseSet& bases, double eta,
               const Matrix& w0, const Matrix& w1) {
  const Matrix z = gcn_forward(ops.t_hat, Matrix(), w0, w1);
  return base_loss(z, bases) + eta * propagation_loss(ops.adjacency, z);
}

}  // namespace

Matrix gcn_forward(const Matrix& t_hat, const Matrix& x, const Matrix& w0, const Matrix& w1) {
  // An empty x stands for identity features (one-hot per node).
  Matrix pre = x.size() == 0 ? Matrix(t_hat * w0) : Matrix(t_hat * (x * w0));
  Matrix h = pre.cwiseMax(0.0);
  return softmax_rows(t_hat * (h * w1));
}

BaseCaseSet select_base_cases(const TrajectoryGraph& g, const SpectralOps& ops) {
  std::vector<int> states;
  for (int s : g.episode_starts()) states.push_back(s);
  for (int s : g.episode_ends()) states.push_back(s);
  for (const auto& [s, r] : g.reward_marks()) states.push_back(s);
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());

  BaseCaseSet out;
  out.labels.resize(static_cast<Eigen::Index>(states.size()));
  const auto& marks = g.reward_marks();
  for (int s : states) {
    auto it = marks.find(s);
    const double r = it == marks.end() ? 0.0 : it->second;
    out.labels(static_cast<Eigen::Index>(out.nodes.size())) = 1.0 / (1.0 + std::exp(-r));
    out.nodes.push_back(ops.node_of(s));
  }
  return out;
}

GcnModel::GcnModel(GcnConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.hidden < 1) throw std::invalid_argument("GcnModel: hidden must be positive");
  if (cfg_.iterations < 0) throw std::invalid_argument("GcnModel: negative iteration budget");
  w0_.resize(0, cfg_.hidden);
  w1_.resize(cfg_.hidden, 2);
  glorot_fill_rows(w1_, 0, rng_);
}

void GcnModel::set_weights(Matrix w0, Matrix w1) {
  if (w0.cols() != cfg_.hidden || w1.rows() != cfg_.hidden || w1.cols() != 2)
    throw std::invalid_argument("set_weights: shape mismatch");
  w0_ = std::move(w0);
  w1_ = std::move(w1);
}

void GcnModel::ensure_input_dim(int n) {
  const int old_rows = static_cast<int>(w0_.rows());
  if (n <= old_rows) return;
  w0_.conservativeResize(n, Eigen::NoChange);
  glorot_fill_rows(w0_, old_rows, rng_);
}

Matrix GcnModel::forward(const SpectralOps& ops) const {
  if (w0_.rows() != ops.t_hat.rows())
    throw std::invalid_argument("forward: weight rows do not match node count");
  return gcn_forward(ops.t_hat, Matrix(), w0_, w1_);
}

double GcnModel::loss(const SpectralOps& ops, const BaseCaseSet& bases) const {
  if (bases.nodes.empty()) throw std::invalid_argument("loss: empty base-case set");
  return loss_at(ops, bases, cfg_.eta, w0_, w1_);
}

GcnModel::Gradients GcnModel::gradients(const SpectralOps& ops, const BaseCaseSet& bases) const {
  if (bases.nodes.empty()) throw std::invalid_argument("gradients: empty base-case set");
  if (w0_.rows() != ops.t_hat.rows())
    throw std::invalid_argument("gradients: weight rows do not match node count");

  const Matrix& t = ops.t_hat;
  const Matrix pre = t * w0_;
  const Matrix h = pre.cwiseMax(0.0);
  const Matrix z = softmax_rows(t * (h * w1_));

  // d(loss)/dZ: cross-entropy rows plus the propagation quadratic,
  // whose gradient is 4 (deg - A) Z / mass row-wise.
  const Vector deg = ops.adjacency.rowwise().sum();
  const double mass = ops.adjacency.sum();
  const double prop_w = mass > 0.0 ? 4.0 * cfg_.eta / mass : 0.0;
  Matrix u = prop_w * (z.array().colwise() * deg.array()).matrix();
  u -= prop_w * (ops.adjacency * z);
  const double inv_b = 1.0 / static_cast<double>(bases.nodes.size());
  for (size_t b = 0; b < bases.nodes.size(); ++b) {
    const int i = bases.nodes[b];
    const double p = bases.labels(static_cast<Eigen::Index>(b));
    u(i, 1) -= inv_b * p / z(i, 1);
    u(i, 0) -= inv_b * (1.0 - p) / z(i, 0);
  }

  // Back through the row softmax: g_i = z_i .* u_i - (u_i . z_i) z_i.
  Matrix gs(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    const double dot = u.row(i).dot(z.row(i));
    gs.row(i) = z.row(i).cwiseProduct(u.row(i)) - dot * z.row(i);
  }

  const Matrix tgs = t * gs;  // T_hat is symmetric
  Gradients out;
  out.w1 = h.transpose() * tgs;
  Matrix dh = tgs * w1_.transpose();
  dh = (pre.array() > 0.0).select(dh, 0.0);
  out.w0 = t * dh;
  out.loss = base_loss(z, bases) + cfg_.eta * propagation_loss(ops.adjacency, z);
  return out;
}

void GcnModel::train_on(const SpectralOps& ops, const BaseCaseSet& bases) {
  losses_.clear();
  Gradients g = gradients(ops, bases);
  if (!std::isfinite(g.loss) || !g.w0.allFinite() || !g.w1.allFinite())
    throw std::runtime_error("train_on: non-finite loss or gradient at start");

  // Adam moments. Raw gradient steps are useless here: the label signal
  // spreads over every weight entry, so per-entry magnitudes are tiny and
  // plain descent crawls. Rescaling each entry by its running RMS gives
  // every parameter a unit-order step.
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kMomentEps = 1e-8;
  Matrix m0 = Matrix::Zero(w0_.rows(), w0_.cols());
  Matrix v0 = Matrix::Zero(w0_.rows(), w0_.cols());
  Matrix m1 = Matrix::Zero(w1_.rows(), w1_.cols());
  Matrix v1 = Matrix::Zero(w1_.rows(), w1_.cols());

  double lr = cfg_.learning_rate;
  int flat_steps = 0;
  for (int iter = 0; iter < cfg_.iterations; ++iter) {
    const double bc1 = 1.0 - std::pow(kBeta1, iter + 1);
    const double bc2 = 1.0 - std::pow(kBeta2, iter + 1);
    m0 = kBeta1 * m0 + (1.0 - kBeta1) * g.w0;
    v0 = kBeta2 * v0 + (1.0 - kBeta2) * g.w0.cwiseAbs2();
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * g.w1;
    v1 = kBeta2 * v1 + (1.0 - kBeta2) * g.w1.cwiseAbs2();
    const Matrix dir0 =
        (m0 / bc1).cwiseQuotient(((v0 / bc2).cwiseSqrt().array() + kMomentEps).matrix());
    const Matrix dir1 =
        (m1 / bc1).cwiseQuotient(((v1 / bc2).cwiseSqrt().array() + kMomentEps).matrix());

    Matrix cand0, cand1;
    double cand_loss = 0.0;
    bool accepted = false;
    for (int half = 0; half <= kMaxHalvings; ++half) {
      cand0 = w0_ - lr * dir0;
      cand1 = w1_ - lr * dir1;
      cand_loss = loss_at(ops, bases, cfg_.eta, cand0, cand1);
      if (std::isfinite(cand_loss) && cand_loss <= g.loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // no descent along this direction at any usable step size

    const Matrix prev0 = std::move(w0_), prev1 = std::move(w1_);
    w0_ = std::move(cand0);
    w1_ = std::move(cand1);
    losses_.push_back(cand_loss);

    const double drop = g.loss - cand_loss;
    flat_steps = drop <= cfg_.plateau_tol * std::max(1.0, std::abs(g.loss)) ? flat_steps + 1 : 0;
    if (flat_steps >= kPlateauStreak) break;

    g = gradients(ops, bases);
    if (!std::isfinite(g.loss) || !g.w0.allFinite() || !g.w1.allFinite()) {
      w0_ = prev0;
      w1_ = prev1;
      throw std::runtime_error("train_on: non-finite loss or gradient; weights rolled back");
    }
    lr = std::min(lr * 2.0, cfg_.learning_rate);
  }
}

namespace {

constexpr char kWeightMagic[8] = {'G', 'C', 'N', 'W', '0', '0', '1', '\n'};

void write_matrix(std::ostream& out, const Matrix& m) {
  const int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) {
      const double x = m(i, j);
      out.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
}

Matrix read_matrix(std::istream& in) {
  int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24))
    throw std::runtime_error("load_weights: corrupt dimension header");
  Matrix m(rows, cols);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) {
      double x = 0.0;
      in.read(reinterpret_cast<char*>(&x), sizeof x);
      m(i, j) = x;
    }
  if (!in) throw std::runtime_error("load_weights: truncated weight data");
  return m;
}

}  // namespace

void save_weights(const GcnModel& model, std::ostream& out) {
  out.write(kWeightMagic, sizeof kWeightMagic);
  write_matrix(out, model.w0());
  write_matrix(out, model.w1());
  if (!out) throw std::runtime_error("save_weights: write failed");
}

void load_weights(GcnModel& model, std::istream& in) {
  char magic[sizeof kWeightMagic] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kWeightMagic, sizeof magic) != 0)
    throw std::runtime_error("load_weights: not a weight checkpoint");
  Matrix w0 = read_matrix(in);
  Matrix w1 = read_matrix(in);
  model.set_weights(std::move(w0), std::move(w1));
}

PotentialTable train_potential(GcnModel& model, const TrajectoryGraph& g, int num_states) {
  const SpectralOps ops = build_spectral(g);
  model.ensure_input_dim(static_cast<int>(ops.states.size()));
  const BaseCaseSet bases = select_base_cases(g, ops);
  if (bases.nodes.empty())
    throw std::invalid_argument("train_potential: graph has no boundary or reward markers");
  model.train_on(ops, bases);

  const Matrix z = model.forward(ops);
  PotentialTable table = PotentialTable::constant(num_states, 0.5);
  table.provenance = Provenance::Gcn;
  table.default_phi = 0.5;
  for (size_t i = 0; i < ops.states.size(); ++i) {
    const int s = ops.states[i];
    if (s < 0 || s >= num_states) throw std::out_of_range("train_potential: state id out of range");
    table.phi(s) = z(static_cast<Eigen::Index>(i), 1);
  }
  return table;
}

}  // namespace potshape
