#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "potshape/graph.hpp"
#include "potshape/shaping.hpp"

namespace potshape {

struct GcnConfig {
  int hidden = 64;
  double eta = 10.0;            // weight of the propagation term
  double learning_rate = 1e-2;
  int iterations = 200;         // gradient steps per train() call
  uint64_t seed = 0;
  double plateau_tol = 1e-10;   // relative loss improvement treated as zero
};

/// Boundary nodes the class model is supervised on: first/last states of
/// episodes and states with observed rewards. Labels are
/// sigmoid(observed reward), i.e. 1/2 for reward-free boundary states.
struct BaseCaseSet {
  std::vector<int> nodes;  // node indices into a SpectralOps
  Vector labels;           // per node, target probability of the good class
};

BaseCaseSet select_base_cases(const TrajectoryGraph& g, const SpectralOps& ops);

/// Two-layer graph convolution over one-hot node features:
///   Z = softmax_rows(T_hat * relu(T_hat * W0) * W1)
/// Column 1 of Z is the potential. The input weight matrix grows a row
/// per node as the graph grows; existing rows are kept (warm start).
class GcnModel {
 public:
  explicit GcnModel(GcnConfig cfg);

  const GcnConfig& config() const { return cfg_; }
  const Matrix& w0() const { return w0_; }
  const Matrix& w1() const { return w1_; }
  void set_weights(Matrix w0, Matrix w1);

  /// Appends freshly initialised rows of W0 until it has `n` of them.
  void ensure_input_dim(int n);

  /// Class probabilities for every node; requires W0 to have exactly one
  /// row per node.
  Matrix forward(const SpectralOps& ops) const;

  double loss(const SpectralOps& ops, const BaseCaseSet& bases) const;

  struct Gradients {
    Matrix w0;
    Matrix w1;
    double loss = 0.0;
  };
  Gradients gradients(const SpectralOps& ops, const BaseCaseSet& bases) const;

  /// Gradient descent from the current weights: per accepted step the
  /// loss never increases (the step size halves on an increase), and the
  /// call exits early once improvements stay below plateau_tol. Losses of
  /// accepted iterates are recorded in last_losses(). A non-finite loss
  /// or gradient aborts the call with the previous weights restored.
  void train_on(const SpectralOps& ops, const BaseCaseSet& bases);

  const std::vector<double>& last_losses() const { return losses_; }

 private:
  GcnConfig cfg_;
  Matrix w0_, w1_;
  std::mt19937_64 rng_;
  std::vector<double> losses_;
};

/// Low-level forward pass with explicit features and weights; the model
/// method is equivalent to calling this with identity features.
Matrix gcn_forward(const Matrix& t_hat, const Matrix& x, const Matrix& w0, const Matrix& w1);

/// Grows the model to the graph, trains, and reads out the potential:
/// phi(s) = P(good class at s) for states in the graph, 1/2 elsewhere.
/// Requires a non-empty base-case set.
PotentialTable train_potential(GcnModel& model, const TrajectoryGraph& g, int num_states);

/// Binary weight checkpoint: dims header then row-major doubles.
void save_weights(const GcnModel& model, std::ostream& out);
/// Restores weights saved by save_weights; the hidden width must match
/// the model's configuration.
void load_weights(GcnModel& model, std::istream& in);

}  // namespace potshape
