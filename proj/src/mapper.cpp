#include "embmap/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "embmap/errors.hpp"
#include "embmap/parallel.hpp"
#include "embmap/rng.hpp"
#include "embmap/text.hpp"

namespace embmap {

MapperModel MapperModel::zeros(const MapperDims& d) {
  MapperModel m;
  m.w1 = Eigen::MatrixXd::Zero(d.hidden, d.in);
  m.b1 = Eigen::VectorXd::Zero(d.hidden);
  m.w2 = Eigen::MatrixXd::Zero(d.out, d.hidden);
  m.b2 = Eigen::VectorXd::Zero(d.out);
  return m;
}

double hardtanh(double z) { return z < -1.0 ? -1.0 : (z > 1.0 ? 1.0 : z); }

Eigen::VectorXd hardtanh(const Eigen::VectorXd& z) {
  return z.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::VectorXd forward(const MapperModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.w1.cols())
    throw ValidationError("forward: input length " + std::to_string(x.size()) +
                          " != model in_dim " + std::to_string(model.w1.cols()));
  return model.w2 * hardtanh(model.w1 * x + model.b1) + model.b2;
}

Eigen::VectorXd forward(const MapperModel& model, std::span<const double> x) {
  return forward(model, Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                            x.data(), static_cast<Eigen::Index>(x.size()))));
}

double pair_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                 double alpha) {
  if (y.size() != yhat.size())
    throw ValidationError("pair_loss: length mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ValidationError("alpha must be in [0,1]");
  double l1 = 0.0, l2 = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    double r = y[j] - yhat[j];
    l1 += std::abs(r);
    l2 += r * r;
  }
  return alpha * l1 + (1.0 - alpha) * l2;
}

std::vector<double> pack(const MapperModel& model) {
  MapperDims d = model.dims();
  std::vector<double> theta;
  theta.reserve(d.flat_size());
  for (Eigen::Index r = 0; r < model.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < model.w1.cols(); ++c)
      theta.push_back(model.w1(r, c));
  for (Eigen::Index i = 0; i < model.b1.size(); ++i)
    theta.push_back(model.b1[i]);
  for (Eigen::Index r = 0; r < model.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < model.w2.cols(); ++c)
      theta.push_back(model.w2(r, c));
  for (Eigen::Index i = 0; i < model.b2.size(); ++i)
    theta.push_back(model.b2[i]);
  return theta;
}

MapperModel unpack(std::span<const double> theta, const MapperDims& dims) {
  if (theta.size() != dims.flat_size())
    throw ValidationError("unpack: theta length " +
                          std::to_string(theta.size()) + " != expected " +
                          std::to_string(dims.flat_size()));
  MapperModel m = MapperModel::zeros(dims);
  std::size_t p = 0;
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) m.w1(r, c) = theta[p++];
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1[i] = theta[p++];
  for (Eigen::Index r = 0; r < m.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w2.cols(); ++c) m.w2(r, c) = theta[p++];
  for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2[i] = theta[p++];
  return m;
}

namespace {

inline double sign0(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// Block size for the deterministic reduction; fixed so the combine tree does
// not depend on the worker count.
constexpr std::size_t kBlock = 256;

void check_block_finite(std::span<const double> theta, std::size_t begin,
                        std::size_t end, const char* name) {
  for (std::size_t i = begin; i < end; ++i)
    if (!std::isfinite(theta[i]))
      throw NumericError(std::string("non-finite parameter in block ") + name);
}

}  // namespace

Objective::Objective(const TrainingPairs& data, std::size_t hidden_dim,
                     double alpha, double lambda1, double lambda2, int workers)
    : data_(&data),
      dims_{data.in_dim(), hidden_dim, data.out_dim()},
      alpha_(alpha),
      lambda1_(lambda1),
      lambda2_(lambda2),
      workers_(workers) {
  if (data.size() == 0) throw ValidationError("objective: empty training data");
  if (hidden_dim == 0) throw ValidationError("hidden_dim must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ValidationError("alpha must be in [0,1]");
  if (lambda1 < 0.0 || lambda2 < 0.0)
    throw ValidationError("lambda1/lambda2 must be >= 0");
}

double Objective::value_and_grad(std::span<const double> theta,
                                 std::span<double> grad) const {
  const MapperDims& d = dims_;
  if (theta.size() != d.flat_size() || grad.size() != theta.size())
    throw ValidationError("objective: theta/grad length mismatch");

  const std::size_t w1_end = d.hidden * d.in;
  const std::size_t b1_end = w1_end + d.hidden;
  const std::size_t w2_end = b1_end + d.out * d.hidden;
  check_block_finite(theta, 0, w1_end, "W1");
  check_block_finite(theta, w1_end, b1_end, "b1");
  check_block_finite(theta, b1_end, w2_end, "W2");
  check_block_finite(theta, w2_end, theta.size(), "b2");

  const MapperModel model = unpack(theta, d);
  const Eigen::MatrixXd& x = data_->inputs;
  const Eigen::MatrixXd& y = data_->targets;
  const std::size_t n_pairs = data_->size();
  const std::size_t n_blocks = (n_pairs + kBlock - 1) / kBlock;

  std::vector<double> block_value(n_blocks, 0.0);
  std::vector<Eigen::VectorXd> block_grad(n_blocks);

  parallel_for(n_blocks, workers_, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(n_pairs, lo + kBlock);
    Eigen::MatrixXd g_w1 = Eigen::MatrixXd::Zero(d.hidden, d.in);
    Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(d.hidden);
    Eigen::MatrixXd g_w2 = Eigen::MatrixXd::Zero(d.out, d.hidden);
    Eigen::VectorXd g_b2 = Eigen::VectorXd::Zero(d.out);
    double value = 0.0;
    Eigen::VectorXd z(d.hidden), a(d.hidden), r(d.out), delta(d.out),
        dz(d.hidden);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto xi = x.col(static_cast<Eigen::Index>(i));
      const auto yi = y.col(static_cast<Eigen::Index>(i));
      z.noalias() = model.w1 * xi;
      z += model.b1;
      a = hardtanh(z);
      r.noalias() = model.w2 * a;
      r += model.b2;
      r -= yi;  // residual yhat - y
      double l1 = 0.0, l2 = 0.0;
      for (Eigen::Index j = 0; j < r.size(); ++j) {
        l1 += std::abs(r[j]);
        l2 += r[j] * r[j];
        delta[j] = alpha_ * sign0(r[j]) + 2.0 * (1.0 - alpha_) * r[j];
      }
      value += alpha_ * l1 + (1.0 - alpha_) * l2;
      g_b2 += delta;
      g_w2.noalias() += delta * a.transpose();
      dz.noalias() = model.w2.transpose() * delta;
      for (Eigen::Index j = 0; j < dz.size(); ++j)
        if (z[j] < -1.0 || z[j] > 1.0) dz[j] = 0.0;  // derivative 1 at +-1
      g_b1 += dz;
      g_w1.noalias() += dz * xi.transpose();
    }
    block_value[b] = value;
    MapperModel gm;
    gm.w1 = std::move(g_w1);
    gm.b1 = std::move(g_b1);
    gm.w2 = std::move(g_w2);
    gm.b2 = std::move(g_b2);
    std::vector<double> flat = pack(gm);
    block_grad[b] =
        Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  });

  // Fixed pairwise tree over block indices.
  for (std::size_t stride = 1; stride < n_blocks; stride *= 2)
    for (std::size_t i = 0; i + stride < n_blocks; i += 2 * stride) {
      block_value[i] += block_value[i + stride];
      block_grad[i] += block_grad[i + stride];
    }

  double value = block_value[0];
  Eigen::Map<Eigen::VectorXd> g(grad.data(),
                                static_cast<Eigen::Index>(grad.size()));
  g = block_grad[0];

  if (lambda1_ > 0.0 || lambda2_ > 0.0) {
    double norm1 = 0.0, norm2sq = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      norm1 += std::abs(theta[i]);
      norm2sq += theta[i] * theta[i];
      grad[i] += lambda1_ * sign0(theta[i]) + lambda2_ * theta[i];
    }
    value += lambda1_ * norm1 + 0.5 * lambda2_ * norm2sq;
  }

  if (!std::isfinite(value))
    throw NumericError("objective value is non-finite");
  return value;
}

double gradient_check(const MapperDims& dims, const TrainingPairs& data,
                      double alpha, double lambda1, double lambda2,
                      std::uint64_t seed) {
  Objective obj(data, dims.hidden, alpha, lambda1, lambda2, 1);
  const std::size_t len = dims.flat_size();

  // Resample until clear of the kinks: pre-activations off +-1, residuals
  // and parameters off 0.
  std::vector<double> theta(len);
  const double margin = 1e-3;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt > 200)
      throw NumericError("gradient_check: could not sample away from kinks");
    Rng rng(Rng::mix(seed, attempt));
    for (auto& t : theta) {
      t = rng.uniform(-0.6, 0.6);
      if (std::abs(t) < margin) t = t < 0 ? t - margin : t + margin;
    }
    MapperModel m = unpack(theta, dims);
    bool ok = true;
    for (std::size_t i = 0; i < data.size() && ok; ++i) {
      Eigen::VectorXd z =
          m.w1 * data.inputs.col(static_cast<Eigen::Index>(i)) + m.b1;
      for (Eigen::Index j = 0; j < z.size(); ++j)
        if (std::abs(std::abs(z[j]) - 1.0) < margin) ok = false;
      Eigen::VectorXd r =
          forward(m, Eigen::VectorXd(data.inputs.col(static_cast<Eigen::Index>(i)))) -
          data.targets.col(static_cast<Eigen::Index>(i));
      for (Eigen::Index j = 0; j < r.size(); ++j)
        if (std::abs(r[j]) < margin) ok = false;
    }
    if (ok) break;
  }

  std::vector<double> grad(len), probe(len), scratch(len);
  obj.value_and_grad(theta, grad);

  const double h = 1e-5;
  double worst = 0.0;
  probe = theta;
  for (std::size_t k = 0; k < len; ++k) {
    probe[k] = theta[k] + h;
    double fp = obj.value_and_grad(probe, scratch);
    probe[k] = theta[k] - h;
    double fm = obj.value_and_grad(probe, scratch);
    probe[k] = theta[k];
    double numeric = (fp - fm) / (2.0 * h);
    double rel = std::abs(grad[k] - numeric) /
                 std::max({1.0, std::abs(grad[k]), std::abs(numeric)});
    worst = std::max(worst, rel);
  }
  return worst;
}

void save_checkpoint(const MapperModel& model, const std::string& path) {
  std::vector<double> theta = pack(model);
  for (double v : theta)
    if (!std::isfinite(v))
      throw NumericError("refusing to save non-finite checkpoint");
  MapperDims d = model.dims();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << "embmap checkpoint v1\n";
  out << "dims " << d.in << ' ' << d.hidden << ' ' << d.out << '\n';
  out << "order w1-rowmajor b1 w2-rowmajor b2\n";
  out << "values " << theta.size() << '\n';
  for (double v : theta) out << format_exact(v) << '\n';
  if (!out) throw ValidationError("write failed: " + path);
}

MapperModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "embmap checkpoint v1")
    throw ValidationError("bad checkpoint magic in " + path);
  MapperDims d;
  if (!std::getline(in, line))
    throw ValidationError("truncated checkpoint: " + path);
  {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> d.in >> d.hidden >> d.out) || tag != "dims")
      throw ValidationError("bad dims line in " + path);
  }
  if (!std::getline(in, line) || line != "order w1-rowmajor b1 w2-rowmajor b2")
    throw ValidationError("unsupported flattening order in " + path);
  std::size_t expected = 0;
  if (!std::getline(in, line))
    throw ValidationError("truncated checkpoint: " + path);
  {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> expected) || tag != "values" || expected != d.flat_size())
      throw ValidationError("bad values header in " + path);
  }
  std::vector<double> theta;
  theta.reserve(expected);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* begin = line.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + line.size())
      throw ValidationError("bad value '" + line + "' in " + path);
    theta.push_back(v);
  }
  if (theta.size() != expected)
    throw ValidationError("checkpoint value count mismatch in " + path);
  return unpack(theta, d);
}

}  // namespace embmap
