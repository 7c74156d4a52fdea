#include "xrec/encoder.hpp"

#include <cmath>
#include <sstream>

#include "xrec/attention.hpp"
#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

void EncoderConfig::validate() const {
  if (layers < 1) throw ValidationError("encoder: layers must be >= 1");
  if (heads < 1 || model_dim < 1) throw ValidationError("encoder: heads and model_dim must be >= 1");
  if (model_dim % heads != 0) throw ValidationError("encoder: model_dim must be divisible by heads");
  if (ff_dim < 1) throw ValidationError("encoder: ff_dim must be >= 1");
}

std::string EncoderConfig::serialize() const {
  std::ostringstream out;
  out << "layers=" << layers << "\nheads=" << heads << "\nmodel_dim=" << model_dim
      << "\nff_dim=" << ff_dim << "\npositional=" << (positional ? "true" : "false")
      << "\nreadout=" << (readout == Readout::Mean ? "mean" : "cls") << "\nseed=" << seed << '\n';
  return out.str();
}

EncoderConfig EncoderConfig::parse(const std::string& contents) {
  EncoderConfig c;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("<encoder config>", line_no, "expected key=value");
    const std::string key(text::trim(std::string_view(line).substr(0, eq)));
    const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
    auto as_size = [&] { return static_cast<std::size_t>(text::parse_int(value, "<encoder config>", line_no)); };
    if (key == "layers") c.layers = as_size();
    else if (key == "heads") c.heads = as_size();
    else if (key == "model_dim") c.model_dim = as_size();
    else if (key == "ff_dim") c.ff_dim = as_size();
    else if (key == "positional") c.positional = value == "true" || value == "1";
    else if (key == "readout") c.readout = value == "cls" ? Readout::Cls : Readout::Mean;
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_size());
    else throw ParseError("<encoder config>", line_no, "unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace {

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

MatrixXd LayerNorm::forward(const MatrixXd& x, Cache* cache) const {
  const auto d = static_cast<double>(x.cols());
  MatrixXd normalized(x.rows(), x.cols());
  VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const RowVectorXd centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / d;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = centered * inv_std(r);
  }
  MatrixXd y = (normalized.array().rowwise() * gain.array()).rowwise() + bias.array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

MatrixXd LayerNorm::backward(const MatrixXd& dy, const Cache& cache, RowVectorXd& d_gain,
                             RowVectorXd& d_bias) const {
  d_gain += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  d_bias += dy.colwise().sum();
  const auto d = static_cast<double>(dy.cols());
  MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowVectorXd dxhat = dy.row(r).cwiseProduct(gain);
    const double mean_dxhat = dxhat.sum() / d;
    const double mean_proj = dxhat.dot(cache.normalized.row(r)) / d;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.array() - mean_dxhat - cache.normalized.row(r).array() * mean_proj).matrix();
  }
  return dx;
}

MultiHeadAttention::MultiHeadAttention(std::size_t model_dim, std::size_t num_heads,
                                       std::mt19937_64& rng)
    : heads(num_heads) {
  const auto d = static_cast<Eigen::Index>(model_dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(model_dim));
  wq = gaussian(d, d, s, rng);
  wk = gaussian(d, d, s, rng);
  wv = gaussian(d, d, s, rng);
  wo = gaussian(d, d, s, rng);
}

MultiHeadAttention MultiHeadAttention::identity(std::size_t model_dim, std::size_t num_heads) {
  MultiHeadAttention m;
  m.heads = num_heads;
  const auto d = static_cast<Eigen::Index>(model_dim);
  m.wq = m.wk = m.wv = m.wo = MatrixXd::Identity(d, d);
  return m;
}

MatrixXd MultiHeadAttention::forward(const MatrixXd& x, Cache* cache) const {
  if (x.cols() != wq.rows()) throw ValidationError("multi-head attention: input width mismatch");
  if (wq.rows() % static_cast<Eigen::Index>(heads) != 0) {
    throw ValidationError("multi-head attention: model_dim not divisible by heads");
  }
  const Eigen::Index dk = wq.cols() / static_cast<Eigen::Index>(heads);
  MatrixXd q = x * wq;
  MatrixXd k = x * wk;
  MatrixXd v = x * wv;
  MatrixXd concat(x.rows(), wq.cols());
  std::vector<MatrixXd> weights(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dk;
    concat.middleCols(c0, dk) = scaled_dot_attention(q.middleCols(c0, dk), k.middleCols(c0, dk),
                                                     v.middleCols(c0, dk), &weights[h]);
  }
  MatrixXd y = concat * wo;
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->weights = std::move(weights);
  }
  return y;
}

MatrixXd MultiHeadAttention::backward(const MatrixXd& dy, const Cache& cache, Grad& grad) const {
  const Eigen::Index dk = wq.cols() / static_cast<Eigen::Index>(heads);
  grad.wo += cache.concat.transpose() * dy;
  const MatrixXd d_concat = dy * wo.transpose();
  MatrixXd dq(cache.q.rows(), cache.q.cols());
  MatrixXd dk_all(cache.k.rows(), cache.k.cols());
  MatrixXd dv(cache.v.rows(), cache.v.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dk;
    const auto g = scaled_dot_attention_backward<double>(
        cache.q.middleCols(c0, dk), cache.k.middleCols(c0, dk), cache.v.middleCols(c0, dk),
        cache.weights[h], d_concat.middleCols(c0, dk));
    dq.middleCols(c0, dk) = g.dq;
    dk_all.middleCols(c0, dk) = g.dk;
    dv.middleCols(c0, dk) = g.dv;
  }
  grad.wq += cache.x.transpose() * dq;
  grad.wk += cache.x.transpose() * dk_all;
  grad.wv += cache.x.transpose() * dv;
  return dq * wq.transpose() + dk_all * wk.transpose() + dv * wv.transpose();
}

EncoderLayer::EncoderLayer(const EncoderConfig& config, std::mt19937_64& rng)
    : attention(config.model_dim, config.heads, rng),
      norm1(static_cast<Eigen::Index>(config.model_dim)),
      norm2(static_cast<Eigen::Index>(config.model_dim)) {
  const auto d = static_cast<Eigen::Index>(config.model_dim);
  const auto f = static_cast<Eigen::Index>(config.ff_dim);
  w1 = gaussian(d, f, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  w2 = gaussian(f, d, 1.0 / std::sqrt(static_cast<double>(f)), rng);
  b1 = RowVectorXd::Zero(f);
  b2 = RowVectorXd::Zero(d);
}

MatrixXd EncoderLayer::forward(const MatrixXd& x, Cache* cache) const {
  MultiHeadAttention::Cache* ac = cache ? &cache->attention : nullptr;
  const MatrixXd y = norm1.forward(x + attention.forward(x, ac), cache ? &cache->norm1 : nullptr);
  MatrixXd hidden_pre = (y * w1).rowwise() + b1;
  const MatrixXd f = (hidden_pre.cwiseMax(0.0) * w2).rowwise() + b2;
  MatrixXd z = norm2.forward(y + f, cache ? &cache->norm2 : nullptr);
  if (cache) {
    cache->y = y;
    cache->hidden_pre = std::move(hidden_pre);
  }
  return z;
}

MatrixXd EncoderLayer::backward(const MatrixXd& dz, const Cache& cache, Grad& grad) const {
  const MatrixXd ds2 = norm2.backward(dz, cache.norm2, grad.gain2, grad.bias2);
  const MatrixXd hidden = cache.hidden_pre.cwiseMax(0.0);
  grad.w2 += hidden.transpose() * ds2;
  grad.b2 += ds2.colwise().sum();
  const MatrixXd d_hidden =
      (ds2 * w2.transpose()).array() * (cache.hidden_pre.array() > 0.0).cast<double>();
  grad.w1 += cache.y.transpose() * d_hidden;
  grad.b1 += d_hidden.colwise().sum();
  const MatrixXd dy = ds2 + d_hidden * w1.transpose();
  const MatrixXd ds1 = norm1.backward(dy, cache.norm1, grad.gain1, grad.bias1);
  return ds1 + attention.backward(ds1, cache.attention, grad.attention);
}

RowVectorXd sinusoidal_position(std::size_t position, std::size_t dim) {
  RowVectorXd pe(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
    const double angle = static_cast<double>(position) / std::pow(10000.0, exponent);
    pe(static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return pe;
}

DocumentEncoder::DocumentEncoder(const EncoderConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(text::mix_seed(config_.seed, 0xe4c0de));
  layers_.reserve(config_.layers);
  for (std::size_t l = 0; l < config_.layers; ++l) layers_.emplace_back(config_, rng);
}

RowVectorXd DocumentEncoder::token_embedding(const std::string& token) const {
  std::mt19937_64 rng(text::mix_seed(config_.seed, text::fnv1a(token)));
  std::normal_distribution<double> dist(0.0, 1.0);
  RowVectorXd e(static_cast<Eigen::Index>(config_.model_dim));
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = dist(rng);
  return e;
}

MatrixXd DocumentEncoder::embed(const std::vector<std::string>& tokens) const {
  const bool cls = config_.readout == Readout::Cls;
  const auto n = static_cast<Eigen::Index>(tokens.size() + (cls ? 1 : 0));
  MatrixXd x(n, static_cast<Eigen::Index>(config_.model_dim));
  Eigen::Index row = 0;
  if (cls) x.row(row++) = token_embedding("[CLS]");
  for (const auto& t : tokens) x.row(row++) = token_embedding(t);
  if (config_.positional) {
    for (Eigen::Index r = 0; r < n; ++r) {
      x.row(r) += sinusoidal_position(static_cast<std::size_t>(r), config_.model_dim);
    }
  }
  return x;
}

MatrixXd DocumentEncoder::forward(const MatrixXd& x, std::vector<EncoderLayer::Cache>* caches) const {
  if (caches) caches->assign(layers_.size(), {});
  MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(h, caches ? &(*caches)[l] : nullptr);
  }
  return h;
}

MatrixXd DocumentEncoder::backward(const MatrixXd& d_out, const std::vector<EncoderLayer::Cache>& caches,
                                   std::vector<EncoderLayer::Grad>& grads) const {
  if (grads.size() != layers_.size()) {
    grads.clear();
    for (const auto& layer : layers_) {
      EncoderLayer::Grad g;
      g.attention.wq = MatrixXd::Zero(layer.attention.wq.rows(), layer.attention.wq.cols());
      g.attention.wk = g.attention.wv = g.attention.wo = g.attention.wq;
      g.gain1 = g.bias1 = g.gain2 = g.bias2 = RowVectorXd::Zero(layer.b2.size());
      g.w1 = MatrixXd::Zero(layer.w1.rows(), layer.w1.cols());
      g.w2 = MatrixXd::Zero(layer.w2.rows(), layer.w2.cols());
      g.b1 = RowVectorXd::Zero(layer.b1.size());
      g.b2 = RowVectorXd::Zero(layer.b2.size());
      grads.push_back(std::move(g));
    }
  }
  MatrixXd d = d_out;
  for (std::size_t l = layers_.size(); l-- > 0;) d = layers_[l].backward(d, caches[l], grads[l]);
  return d;
}

DocumentEmbedding DocumentEncoder::encode(const std::vector<std::string>& tokens) const {
  DocumentEmbedding out;
  out.source = DocumentEmbedding::Source::Encoded;
  if (tokens.empty()) {
    out.vector = VectorXd::Zero(static_cast<Eigen::Index>(config_.model_dim));
    out.empty_input = true;
    return out;
  }
  const MatrixXd h = forward(embed(tokens));
  if (config_.readout == Readout::Cls) {
    out.vector = h.row(0).transpose();
  } else {
    out.vector = h.colwise().mean().transpose();
  }
  return out;
}

}  // namespace xrec
