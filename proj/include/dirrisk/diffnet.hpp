#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "dirrisk/types.hpp"

namespace dirrisk {

/// Softmax with the max-shift stabilization.
Vector softmax(const Vector& logits);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Vector& logits);

/// Softmax cross-entropy, -log softmax_y(logits), via log-sum-exp.
double loss_ce(const Vector& logits, int y);

/// Multilayer perceptron with ReLU hidden layers and linear output logits.
///
/// Immutable once built; every member function is const and pure, so one
/// instance can be shared by any number of threads.
class Classifier {
 public:
  Classifier(std::vector<int> layer_dims, std::vector<Eigen::MatrixXd> weights,
             std::vector<Vector> biases);

  /// All-zero parameters.
  static Classifier zeros(std::vector<int> layer_dims);
  /// He-normal weights, zero biases.
  static Classifier random(std::vector<int> layer_dims, std::uint64_t seed);

  int input_dim() const { return dims_.front(); }
  int num_classes() const { return dims_.back(); }
  const std::vector<int>& layer_dims() const { return dims_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  Vector forward(const Vector& x) const;
  int predict(const Vector& x) const { return argmax(forward(x)); }
  /// Max softmax probability, i.e. the probability of the predicted class.
  double confidence(const Vector& x) const;
  double loss(const Vector& x, int y) const { return loss_ce(forward(x), y); }

  /// Exact reverse-mode gradient of loss_ce(forward(x), y) with respect to x.
  Vector input_gradient(const Vector& x, int y) const;

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  void check_input(const Vector& x) const;

  std::vector<int> dims_;
  std::vector<Eigen::MatrixXd> weights_;  // weights_[l] is dims_[l+1] x dims_[l]
  std::vector<Vector> biases_;
};

struct TrainOptions {
  int epochs = 50;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainReport {
  Classifier model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Raised when a training loss becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minibatch SGD on mean softmax cross-entropy. Deterministic given the seed,
/// which drives the per-epoch shuffles.
TrainReport train_sgd(const Classifier& model, const Dataset& data, const TrainOptions& options);

double accuracy(const Classifier& model, const Dataset& data);

/// Text format "dirrisk-mlp 1"; floats are written with 17 significant digits
/// so a load of a save reproduces every parameter bit for bit.
void save_classifier(const Classifier& model, std::ostream& out);
Classifier load_classifier(std::istream& in);

}  // namespace dirrisk
