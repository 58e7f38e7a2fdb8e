#include "dirrisk/diffnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "dirrisk/rng.hpp"

namespace dirrisk {

Vector softmax(const Vector& logits) {
  const double shift = logits.maxCoeff();
  Vector e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

int argmax(const Vector& logits) {
  if (logits.size() == 0) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (int c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

double loss_ce(const Vector& logits, int y) {
  if (y < 0 || y >= logits.size()) throw std::invalid_argument("class index out of range");
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  return lse - logits[y];
}

Classifier::Classifier(std::vector<int> layer_dims, std::vector<Eigen::MatrixXd> weights,
                       std::vector<Vector> biases)
    : dims_(std::move(layer_dims)), weights_(std::move(weights)), biases_(std::move(biases)) {
  if (dims_.size() < 2) throw std::invalid_argument("classifier needs at least input and output layers");
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("layer widths must be positive");
  }
  const std::size_t layers = dims_.size() - 1;
  if (weights_.size() != layers || biases_.size() != layers) {
    throw std::invalid_argument("parameter count does not match layer_dims");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (weights_[l].rows() != dims_[l + 1] || weights_[l].cols() != dims_[l] ||
        biases_[l].size() != dims_[l + 1]) {
      throw std::invalid_argument("layer " + std::to_string(l) + " shape mismatch");
    }
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
      throw std::invalid_argument("non-finite parameters");
    }
  }
}

Classifier Classifier::zeros(std::vector<int> layer_dims) {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Vector> b;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    w.push_back(Eigen::MatrixXd::Zero(layer_dims[l + 1], layer_dims[l]));
    b.push_back(Vector::Zero(layer_dims[l + 1]));
  }
  return Classifier(std::move(layer_dims), std::move(w), std::move(b));
}

Classifier Classifier::random(std::vector<int> layer_dims, std::uint64_t seed) {
  Rng rng(RngStream{seed, 0x1417});
  std::vector<Eigen::MatrixXd> w;
  std::vector<Vector> b;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const double scale = std::sqrt(2.0 / layer_dims[l]);
    Eigen::MatrixXd m(layer_dims[l + 1], layer_dims[l]);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.gaussian();
    }
    w.push_back(std::move(m));
    b.push_back(Vector::Zero(layer_dims[l + 1]));
  }
  return Classifier(std::move(layer_dims), std::move(w), std::move(b));
}

void Classifier::check_input(const Vector& x) const {
  if (x.size() != dims_.front()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(dims_.front()));
  }
}

Vector Classifier::forward(const Vector& x) const {
  check_input(x);
  Vector a = x;
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Vector z = weights_[l] * a + biases_[l];
    a = l == last ? std::move(z) : Vector(z.cwiseMax(0.0));
  }
  return a;
}

double Classifier::confidence(const Vector& x) const { return softmax(forward(x)).maxCoeff(); }

namespace {

struct Tape {
  std::vector<Vector> pre;  // pre-activations per layer
  std::vector<Vector> act;  // act[0] = x, act[l+1] = layer output
};

Tape run_forward(const std::vector<Eigen::MatrixXd>& w, const std::vector<Vector>& b, const Vector& x) {
  Tape tape;
  tape.act.push_back(x);
  const std::size_t last = w.size() - 1;
  for (std::size_t l = 0; l < w.size(); ++l) {
    tape.pre.push_back(w[l] * tape.act.back() + b[l]);
    tape.act.push_back(l == last ? tape.pre.back() : Vector(tape.pre.back().cwiseMax(0.0)));
  }
  return tape;
}

// dL/dlogits for softmax cross-entropy.
Vector logit_gradient(const Vector& logits, int y) {
  Vector g = softmax(logits);
  g[y] -= 1.0;
  return g;
}

}  // namespace

Vector Classifier::input_gradient(const Vector& x, int y) const {
  check_input(x);
  if (y < 0 || y >= num_classes()) throw std::invalid_argument("class index out of range");
  const Tape tape = run_forward(weights_, biases_, x);
  Vector grad = logit_gradient(tape.act.back(), y);
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) {
      grad = (tape.pre[l].array() > 0.0).select(grad, 0.0);
    }
    grad = weights_[l].transpose() * grad;
  }
  return grad;
}

double accuracy(const Classifier& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) correct += model.predict(s.x) == s.y ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainReport train_sgd(const Classifier& model, const Dataset& data, const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("training set is empty");
  if (options.epochs < 0 || options.learning_rate <= 0.0 || options.batch_size < 1) {
    throw std::invalid_argument("invalid training hyperparameters");
  }
  for (const auto& s : data) {
    if (s.x.size() != model.input_dim() || s.y < 0 || s.y >= model.num_classes()) {
      throw std::invalid_argument("training sample does not match the model shape");
    }
  }

  std::vector<Eigen::MatrixXd> w = model.weights();
  std::vector<Vector> b = model.biases();
  const std::size_t layers = w.size();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(RngStream{options.seed, 0x7a11});
  double epoch_loss = 0.0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::vector<Eigen::MatrixXd> gw;
      std::vector<Vector> gb;
      for (std::size_t l = 0; l < layers; ++l) {
        gw.push_back(Eigen::MatrixXd::Zero(w[l].rows(), w[l].cols()));
        gb.push_back(Vector::Zero(b[l].size()));
      }
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = data[order[k]];
        const Tape tape = run_forward(w, b, s.x);
        epoch_loss += loss_ce(tape.act.back(), s.y);
        Vector grad = logit_gradient(tape.act.back(), s.y);
        for (std::size_t l = layers; l-- > 0;) {
          if (l + 1 < layers) grad = (tape.pre[l].array() > 0.0).select(grad, 0.0);
          gw[l].noalias() += grad * tape.act[l].transpose();
          gb[l] += grad;
          if (l > 0) grad = w[l].transpose() * grad;
        }
      }
      const double step = options.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < layers; ++l) {
        w[l] -= step * gw[l];
        b[l] -= step * gb[l];
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) +
                            " (non-finite loss); lower the learning rate");
    }
  }

  TrainReport report{Classifier(model.layer_dims(), std::move(w), std::move(b)), 0.0, 0.0};
  report.train_accuracy = accuracy(report.model, data);
  double total = 0.0;
  for (const auto& s : data) total += report.model.loss(s.x, s.y);
  report.final_loss = total / static_cast<double>(data.size());
  return report;
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

std::string expect_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("truncated model file: expected ") + what);
  return tok;
}

double read_double(std::istream& in) {
  const std::string tok = expect_token(in, "number");
  double v = 0.0;
  const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) {
    throw std::runtime_error("malformed number '" + tok + "' in model file");
  }
  return v;
}

}  // namespace

void save_classifier(const Classifier& model, std::ostream& out) {
  const auto& dims = model.layer_dims();
  out << "dirrisk-mlp 1\nlayers " << dims.size();
  for (int d : dims) out << ' ' << d;
  out << '\n';
  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    const auto& w = model.weights()[l];
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        write_double(out, w(i, j));
      }
      out << '\n';
    }
    const auto& b = model.biases()[l];
    out << "bias " << l << ' ' << b.size() << '\n';
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (i) out << ' ';
      write_double(out, b[i]);
    }
    out << '\n';
  }
}

Classifier load_classifier(std::istream& in) {
  if (expect_token(in, "magic") != "dirrisk-mlp") throw std::runtime_error("not a dirrisk model file");
  if (expect_token(in, "version") != "1") throw std::runtime_error("unsupported model file version");
  if (expect_token(in, "layers") != "layers") throw std::runtime_error("model file: missing layers header");
  const int count = std::stoi(expect_token(in, "layer count"));
  if (count < 2 || count > 1024) throw std::runtime_error("model file: bad layer count");
  std::vector<int> dims(count);
  for (int& d : dims) d = std::stoi(expect_token(in, "layer width"));
  std::vector<Eigen::MatrixXd> w;
  std::vector<Vector> b;
  for (int l = 0; l + 1 < count; ++l) {
    if (expect_token(in, "weight") != "weight" || std::stoi(expect_token(in, "index")) != l) {
      throw std::runtime_error("model file: expected weight block " + std::to_string(l));
    }
    const int rows = std::stoi(expect_token(in, "rows"));
    const int cols = std::stoi(expect_token(in, "cols"));
    if (rows != dims[l + 1] || cols != dims[l]) throw std::runtime_error("model file: weight shape mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = read_double(in);
    }
    if (expect_token(in, "bias") != "bias" || std::stoi(expect_token(in, "index")) != l) {
      throw std::runtime_error("model file: expected bias block " + std::to_string(l));
    }
    const int size = std::stoi(expect_token(in, "size"));
    if (size != rows) throw std::runtime_error("model file: bias shape mismatch");
    Vector v(size);
    for (int i = 0; i < size; ++i) v[i] = read_double(in);
    w.push_back(std::move(m));
    b.push_back(std::move(v));
  }
  return Classifier(std::move(dims), std::move(w), std::move(b));
}

}  // namespace dirrisk
