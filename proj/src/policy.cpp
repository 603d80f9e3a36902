#include "ropl/policy.hpp"

#include <cmath>

#include "json.hpp"

namespace ropl {

namespace {

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Index a = 0; a < logits.cols(); ++a) {
      probs(i, a) = std::exp(logits(i, a) - m);
      sum += probs(i, a);
    }
    probs.row(i) /= sum;
  }
  return probs;
}

Matrix linear_logits(const SoftmaxLinearPolicy& p, const Matrix& X) {
  return (X * p.weights.transpose()).rowwise() + p.bias.transpose();
}

struct MlpForward {
  Matrix z1;  // n x hidden, pre-activation
  Matrix a1;  // n x hidden
  Matrix logits;
};

MlpForward mlp_forward(const TwoLayerMlpPolicy& p, const Matrix& X) {
  MlpForward f;
  f.z1 = (X * p.w1.transpose()).rowwise() + p.b1.transpose();
  f.a1 = f.z1.cwiseMax(0.0);
  f.logits = (f.a1 * p.w2.transpose()).rowwise() + p.b2.transpose();
  return f;
}

void append(std::vector<double>& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void append(std::vector<double>& out, const Vector& v) {
  out.insert(out.end(), v.data(), v.data() + v.size());
}

std::size_t read_into(Matrix& m, const std::vector<double>& vals, std::size_t pos) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = vals[pos++];
  return pos;
}

std::size_t read_into(Vector& v, const std::vector<double>& vals, std::size_t pos) {
  for (Index i = 0; i < v.size(); ++i) v[i] = vals[pos++];
  return pos;
}

/// d(value)/d(logits) for value = (1/n) sum_{i,a} c_{i,a} softmax(z_i)_a.
Matrix logit_gradient(const Matrix& probs, const Matrix& coeffs) {
  const double inv_n = 1.0 / static_cast<double>(probs.rows());
  Matrix grad(probs.rows(), probs.cols());
  for (Index i = 0; i < probs.rows(); ++i) {
    const double mean_c = probs.row(i).dot(coeffs.row(i));
    for (Index a = 0; a < probs.cols(); ++a)
      grad(i, a) = inv_n * probs(i, a) * (coeffs(i, a) - mean_c);
  }
  return grad;
}

nlohmann::json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols)
    throw ConfigError("policy JSON: matrix payload size mismatch");
  Matrix m(rows, cols);
  std::size_t pos = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = data[pos++];
  return m;
}

}  // namespace

SoftmaxLinearPolicy SoftmaxLinearPolicy::init(Index k, Index d, std::uint64_t seed) {
  (void)seed;  // zero init is already the uniform policy
  SoftmaxLinearPolicy p;
  p.weights = Matrix::Zero(k, d);
  p.bias = Vector::Zero(k);
  return p;
}

TwoLayerMlpPolicy TwoLayerMlpPolicy::init(Index k, Index d, Index hidden,
                                          std::uint64_t seed) {
  if (hidden < 1) throw std::invalid_argument("hidden size must be positive");
  TwoLayerMlpPolicy p;
  p.w1 = Matrix(hidden, d);
  Rng rng(mix_seed(seed, 0x6d6c70));
  const double scale = std::sqrt(6.0 / static_cast<double>(std::max<Index>(1, d)));
  for (Index i = 0; i < hidden; ++i)
    for (Index j = 0; j < d; ++j) p.w1(i, j) = rng.uniform(-scale, scale);
  p.b1 = Vector::Zero(hidden);
  p.w2 = Matrix::Zero(k, hidden);
  p.b2 = Vector::Zero(k);
  return p;
}

PolicyProbs policy_probs(const ParametricPolicy& policy, const Matrix& contexts) {
  return std::visit(
      [&](const auto& p) -> PolicyProbs {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>)
          return {softmax_rows(linear_logits(p, contexts))};
        else
          return {softmax_rows(mlp_forward(p, contexts).logits)};
      },
      policy);
}

Index param_count(const ParametricPolicy& policy) {
  return std::visit(
      [](const auto& p) -> Index {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>)
          return p.weights.size() + p.bias.size();
        else
          return p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size();
      },
      policy);
}

std::vector<double> get_params(const ParametricPolicy& policy) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(param_count(policy)));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>) {
          append(out, p.weights);
          append(out, p.bias);
        } else {
          append(out, p.w1);
          append(out, p.b1);
          append(out, p.w2);
          append(out, p.b2);
        }
      },
      policy);
  return out;
}

void set_params(ParametricPolicy& policy, const std::vector<double>& values) {
  if (static_cast<Index>(values.size()) != param_count(policy))
    throw std::invalid_argument("parameter vector length mismatch");
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        std::size_t pos = 0;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>) {
          pos = read_into(p.weights, values, pos);
          read_into(p.bias, values, pos);
        } else {
          pos = read_into(p.w1, values, pos);
          pos = read_into(p.b1, values, pos);
          pos = read_into(p.w2, values, pos);
          read_into(p.b2, values, pos);
        }
      },
      policy);
}

Matrix surrogate_coefficients(const LoggedDataset& data, const BoundCertificate& cert) {
  if (!cert.r_star)
    throw std::invalid_argument("surrogate needs a DR certificate carrying r*");
  if (cert.r_star->rows() != data.n() || cert.r_star->cols() != data.k() ||
      cert.p_star.size() != data.n())
    throw std::invalid_argument("certificate shape differs from dataset");
  Matrix coeffs = *cert.r_star;
  for (Index i = 0; i < data.n(); ++i) {
    const int ai = data.actions[i];
    coeffs(i, ai) += (data.rewards[i] - (*cert.r_star)(i, ai)) / cert.p_star[i];
  }
  return coeffs;
}

SurrogateEval surrogate_objective_and_gradient(const ParametricPolicy& policy,
                                               const LoggedDataset& data,
                                               const BoundCertificate& cert) {
  const Matrix coeffs = surrogate_coefficients(data, cert);
  SurrogateEval eval;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>) {
          const Matrix logits = linear_logits(p, data.contexts);
          const Matrix probs = softmax_rows(logits);
          eval.value = probs.cwiseProduct(coeffs).sum() / static_cast<double>(data.n());
          const Matrix gz = logit_gradient(probs, coeffs);  // n x k
          const Matrix gw = gz.transpose() * data.contexts; // k x d
          const Vector gb = gz.colwise().sum().transpose();
          append(eval.gradient, gw);
          append(eval.gradient, gb);
        } else {
          const MlpForward f = mlp_forward(p, data.contexts);
          const Matrix probs = softmax_rows(f.logits);
          eval.value = probs.cwiseProduct(coeffs).sum() / static_cast<double>(data.n());
          const Matrix gz2 = logit_gradient(probs, coeffs);          // n x k
          const Matrix gw2 = gz2.transpose() * f.a1;                 // k x h
          const Vector gb2 = gz2.colwise().sum().transpose();
          Matrix gz1 = gz2 * p.w2;                                   // n x h
          for (Index i = 0; i < gz1.rows(); ++i)
            for (Index j = 0; j < gz1.cols(); ++j)
              if (f.z1(i, j) <= 0.0) gz1(i, j) = 0.0;
          const Matrix gw1 = gz1.transpose() * data.contexts;        // h x d
          const Vector gb1 = gz1.colwise().sum().transpose();
          append(eval.gradient, gw1);
          append(eval.gradient, gb1);
          append(eval.gradient, gw2);
          append(eval.gradient, gb2);
        }
      },
      policy);
  return eval;
}

double surrogate_objective(const ParametricPolicy& policy, const LoggedDataset& data,
                           const BoundCertificate& cert) {
  const Matrix coeffs = surrogate_coefficients(data, cert);
  const PolicyProbs probs = policy_probs(policy, data.contexts);
  return probs.probs.cwiseProduct(coeffs).sum() / static_cast<double>(data.n());
}

std::vector<double> adam_maximize(ParametricPolicy& policy, const LoggedDataset& data,
                                  const BoundCertificate& cert,
                                  const AdamConfig& config) {
  if (config.steps < 0) throw std::invalid_argument("steps must be nonnegative");
  const std::size_t dim = static_cast<std::size_t>(param_count(policy));
  std::vector<double> m(dim, 0.0), v(dim, 0.0);
  std::vector<double> trace;
  trace.reserve(config.steps);
  std::vector<double> params = get_params(policy);
  for (int step = 1; step <= config.steps; ++step) {
    const SurrogateEval eval = surrogate_objective_and_gradient(policy, data, cert);
    trace.push_back(eval.value);
    const double bc1 = 1.0 - std::pow(config.beta1, step);
    const double bc2 = 1.0 - std::pow(config.beta2, step);
    for (std::size_t j = 0; j < dim; ++j) {
      const double g = eval.gradient[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      params[j] += config.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.eps);
    }
    set_params(policy, params);
  }
  return trace;
}

std::string policy_to_json(const ParametricPolicy& policy) {
  nlohmann::json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SoftmaxLinearPolicy>) {
          j["kind"] = "softmax_linear";
          j["weights"] = matrix_json(p.weights);
          j["bias"] = matrix_json(p.bias);
        } else {
          j["kind"] = "two_layer_mlp";
          j["w1"] = matrix_json(p.w1);
          j["b1"] = matrix_json(p.b1);
          j["w2"] = matrix_json(p.w2);
          j["b2"] = matrix_json(p.b2);
        }
      },
      policy);
  return j.dump();
}

ParametricPolicy policy_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "softmax_linear") {
    SoftmaxLinearPolicy p;
    p.weights = matrix_from_json(j.at("weights"));
    p.bias = matrix_from_json(j.at("bias")).col(0);
    return p;
  }
  if (kind == "two_layer_mlp") {
    TwoLayerMlpPolicy p;
    p.w1 = matrix_from_json(j.at("w1"));
    p.b1 = matrix_from_json(j.at("b1")).col(0);
    p.w2 = matrix_from_json(j.at("w2"));
    p.b2 = matrix_from_json(j.at("b2")).col(0);
    return p;
  }
  throw ConfigError("unknown policy kind '" + kind + "'");
}

}  // namespace ropl
