#include "henvox/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr double kNormFloor = 1e-6;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint32_t u32(Eigen::Index v) { return static_cast<std::uint32_t>(v); }

ParamView view(const std::string& name, RowMatrix& m, bool trainable = true) {
  return {name, {m.data(), static_cast<std::size_t>(m.size())}, {u32(m.rows()), u32(m.cols())}, trainable};
}

ParamView view(const std::string& name, Eigen::VectorXd& v, bool trainable = true) {
  return {name, {v.data(), static_cast<std::size_t>(v.size())}, {u32(v.size())}, trainable};
}

RowMatrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

bool use_dropout(const ModelParameters& params, Mode mode) {
  return mode == Mode::Train && params.config.dropout > 0.0;
}

std::mt19937_64& require_rng(std::mt19937_64* rng) {
  if (rng == nullptr) throw Error(ErrorKind::InvalidConfig, "train-mode dropout needs a generator");
  return *rng;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

// Runs the feature layer and recurrent stack, filling `cache`.
void encode(const ModelParameters& params, const FeatureMatrix& seq, int channel, Mode mode,
            std::mt19937_64* rng, ChannelCache& cache) {
  const auto& cfg = params.config;
  if (channel < 0 || channel >= cfg.num_channels()) {
    throw Error(ErrorKind::DimMismatch, "channel index " + std::to_string(channel) + " out of range");
  }
  const auto& ch = params.channels[static_cast<std::size_t>(channel)];
  if (seq.rows() < 1) throw Error(ErrorKind::EmptyChannel, "channel " + std::to_string(channel) + " is empty");
  if (seq.cols() != ch.proj.rows()) {
    throw Error(ErrorKind::DimMismatch, "channel " + std::to_string(channel) + " expects " +
                                            std::to_string(ch.proj.rows()) + " features, got " +
                                            std::to_string(seq.cols()));
  }
  const Eigen::Index steps = seq.rows();
  const Eigen::Index hidden = cfg.hidden_size;

  cache.input = ((seq.cast<double>().rowwise() - ch.norm_mean.transpose()).array().rowwise() *
                 ch.norm_scale.transpose().array()).matrix();
  RowMatrix projected = (cache.input * ch.proj).rowwise() + ch.proj_bias.transpose();
  if (use_dropout(params, mode)) {
    cache.proj_mask = dropout_mask(steps, hidden, cfg.dropout, require_rng(rng));
    projected.array() *= cache.proj_mask.array();
  } else {
    cache.proj_mask.resize(0, 0);
  }
  cache.projected = projected;

  cache.layers.resize(ch.layers.size());
  const RowMatrix* layer_in = &cache.projected;
  for (std::size_t l = 0; l < ch.layers.size(); ++l) {
    const auto& lw = ch.layers[l];
    auto& lc = cache.layers[l];
    lc.in = *layer_in;
    const RowMatrix pre = (lc.in * lw.w_input).rowwise() + lw.bias.transpose();
    for (RowMatrix* m : {&lc.i, &lc.f, &lc.g, &lc.o, &lc.c, &lc.tanh_c, &lc.h}) m->resize(steps, hidden);
    Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(hidden);
    Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(hidden);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Eigen::RowVectorXd a = pre.row(t) + h_prev * lw.w_recurrent;
      for (Eigen::Index k = 0; k < hidden; ++k) {
        const double ig = sigmoid(a(k));
        const double fg = sigmoid(a(hidden + k));
        const double gg = std::tanh(a(2 * hidden + k));
        const double og = sigmoid(a(3 * hidden + k));
        const double c = fg * c_prev(k) + ig * gg;
        const double tc = std::tanh(c);
        lc.i(t, k) = ig;
        lc.f(t, k) = fg;
        lc.g(t, k) = gg;
        lc.o(t, k) = og;
        lc.c(t, k) = c;
        lc.tanh_c(t, k) = tc;
        lc.h(t, k) = og * tc;
      }
      h_prev = lc.h.row(t);
      c_prev = lc.c.row(t);
    }
    layer_in = &lc.h;
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (hidden_size < 1 || boom_dim < 1 || num_layers < 1) {
    throw Error(ErrorKind::InvalidConfig, "model dimensions must be >= 1");
  }
  if (num_classes != kNumSubclasses) throw Error(ErrorKind::InvalidConfig, "num_classes must be 8");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout must lie in [0, 1)");
  if (channel_input_dims.empty()) throw Error(ErrorKind::InvalidConfig, "at least one input channel");
  for (int d : channel_input_dims) {
    if (d < 1) throw Error(ErrorKind::InvalidConfig, "channel input dims must be >= 1");
  }
  if (attention_dim != 0 && attention_dim != hidden_size) {
    throw Error(ErrorKind::InvalidConfig, "attention_dim must equal hidden_size (or 0)");
  }
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  std::string dims;
  for (int d : channel_input_dims) dims += (dims.empty() ? "" : ",") + std::to_string(d);
  return {{"kind", "sharnn"},
          {"hidden_size", std::to_string(hidden_size)},
          {"boom_dim", std::to_string(boom_dim)},
          {"num_classes", std::to_string(num_classes)},
          {"dropout", format_double(dropout)},
          {"channel_input_dims", dims},
          {"attention_dim", std::to_string(attention_dim)},
          {"num_layers", std::to_string(num_layers)},
          {"seed", std::to_string(seed)}};
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig cfg;
  try {
    cfg.hidden_size = std::stoi(kv.at("hidden_size"));
    cfg.boom_dim = std::stoi(kv.at("boom_dim"));
    cfg.num_classes = std::stoi(kv.at("num_classes"));
    cfg.dropout = std::stod(kv.at("dropout"));
    cfg.channel_input_dims = parse_int_list(kv.at("channel_input_dims"));
    cfg.attention_dim = std::stoi(kv.at("attention_dim"));
    cfg.num_layers = std::stoi(kv.at("num_layers"));
    cfg.seed = std::stoull(kv.at("seed"));
  } catch (const std::exception& e) {
    throw Error(ErrorKind::BadFormat, std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z = *this;
  for (auto& v : param_views(z)) std::fill(v.values.begin(), v.values.end(), 0.0);
  return z;
}

std::vector<ParamView> param_views(ModelParameters& p) {
  std::vector<ParamView> views;
  for (std::size_t c = 0; c < p.channels.size(); ++c) {
    auto& ch = p.channels[c];
    const std::string pre = "c" + std::to_string(c) + ".";
    views.push_back(view(pre + "proj.w", ch.proj));
    views.push_back(view(pre + "proj.b", ch.proj_bias));
    for (std::size_t l = 0; l < ch.layers.size(); ++l) {
      const std::string lp = pre + "lstm" + std::to_string(l) + ".";
      views.push_back(view(lp + "w_input", ch.layers[l].w_input));
      views.push_back(view(lp + "w_recurrent", ch.layers[l].w_recurrent));
      views.push_back(view(lp + "bias", ch.layers[l].bias));
    }
    views.push_back(view(pre + "query", ch.query));
    views.push_back(view(pre + "norm.mean", ch.norm_mean, false));
    views.push_back(view(pre + "norm.scale", ch.norm_scale, false));
  }
  views.push_back(view("boom.up.w", p.boom_up));
  views.push_back(view("boom.up.b", p.boom_up_bias));
  views.push_back(view("boom.down.w", p.boom_down));
  views.push_back(view("boom.down.b", p.boom_down_bias));
  return views;
}

std::size_t trainable_count(const ModelParameters& params) {
  auto& p = const_cast<ModelParameters&>(params);
  std::size_t n = 0;
  for (const auto& v : param_views(p)) {
    if (v.trainable) n += v.values.size();
  }
  return n;
}

ModelParameters init_params(const ModelConfig& cfg) {
  cfg.validate();
  const Eigen::Index hidden = cfg.hidden_size;
  ModelParameters p;
  p.config = cfg;
  for (int d : cfg.channel_input_dims) {
    ChannelParams ch;
    ch.proj = RowMatrix::Zero(d, hidden);
    ch.proj_bias = Eigen::VectorXd::Zero(hidden);
    for (int l = 0; l < cfg.num_layers; ++l) {
      LstmLayer layer;
      layer.w_input = RowMatrix::Zero(hidden, 4 * hidden);
      layer.w_recurrent = RowMatrix::Zero(hidden, 4 * hidden);
      layer.bias = Eigen::VectorXd::Zero(4 * hidden);
      layer.bias.segment(hidden, hidden).setOnes();
      ch.layers.push_back(std::move(layer));
    }
    ch.query = RowMatrix::Zero(hidden, hidden);
    ch.norm_mean = Eigen::VectorXd::Zero(d);
    ch.norm_scale = Eigen::VectorXd::Ones(d);
    p.channels.push_back(std::move(ch));
  }
  p.boom_up = RowMatrix::Zero(cfg.context_dim(), cfg.boom_dim);
  p.boom_up_bias = Eigen::VectorXd::Zero(cfg.boom_dim);
  p.boom_down = RowMatrix::Zero(cfg.boom_dim, cfg.num_classes);
  p.boom_down_bias = Eigen::VectorXd::Zero(cfg.num_classes);

  std::mt19937_64 rng(cfg.seed);
  for (auto& v : param_views(p)) {
    if (!v.trainable || v.dims.size() != 2) continue;  // biases and buffers keep their values
    const double k = 1.0 / std::sqrt(static_cast<double>(v.dims[0]));
    std::uniform_real_distribution<double> dist(-k, k);
    for (double& x : v.values) x = dist(rng);
  }
  return p;
}

void fit_normalization(ModelParameters& params, std::span<const ChannelInputs> data) {
  for (std::size_t c = 0; c < params.channels.size(); ++c) {
    auto& ch = params.channels[c];
    const Eigen::Index d = ch.proj.rows();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
    double rows = 0.0;
    for (const auto& sample : data) {
      const auto& m = sample[c];
      if (m.cols() != d) throw Error(ErrorKind::DimMismatch, "normalization input width");
      const Eigen::MatrixXd md = m.cast<double>();
      sum += md.colwise().sum().transpose();
      sq += md.array().square().colwise().sum().matrix().transpose();
      rows += static_cast<double>(m.rows());
    }
    if (rows == 0.0) continue;
    ch.norm_mean = sum / rows;
    const Eigen::VectorXd var = (sq / rows - ch.norm_mean.cwiseProduct(ch.norm_mean)).cwiseMax(0.0);
    ch.norm_scale = var.cwiseSqrt().cwiseMax(kNormFloor).cwiseInverse();
  }
}

AttentionResult sha_attention(const RowMatrix& hidden, const RowMatrix& query_proj) {
  const Eigen::Index steps = hidden.rows();
  if (steps < 1) throw Error(ErrorKind::EmptyChannel, "attention over zero steps");
  const Eigen::VectorXd q = query_proj.transpose() * hidden.row(steps - 1).transpose();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hidden.cols()));
  Eigen::VectorXd scores = (hidden * q) * inv_sqrt;
  const double mx = scores.maxCoeff();
  Eigen::VectorXd w = (scores.array() - mx).exp().matrix();
  w /= w.sum();
  return {hidden.transpose() * w, w};
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

RowMatrix encode_channel(const ModelParameters& params, const FeatureMatrix& sequence, int channel,
                         Mode mode, std::mt19937_64* rng) {
  ChannelCache cache;
  encode(params, sequence, channel, mode, rng, cache);
  return cache.layers.back().h;
}

Eigen::VectorXd boom(const ModelParameters& params, const Eigen::VectorXd& v) {
  if (v.size() != params.boom_up.rows()) {
    throw Error(ErrorKind::DimMismatch, "boom expects " + std::to_string(params.boom_up.rows()) +
                                            " inputs, got " + std::to_string(v.size()));
  }
  const Eigen::VectorXd pre = params.boom_up.transpose() * v + params.boom_up_bias;
  const Eigen::VectorXd act = pre.unaryExpr([](double x) { return gelu(x); });
  return params.boom_down.transpose() * act + params.boom_down_bias;
}

ForwardTrace forward(const ModelParameters& params, const ChannelInputs& inputs, Mode mode,
                     std::mt19937_64* rng) {
  const auto& cfg = params.config;
  if (static_cast<int>(inputs.size()) != cfg.num_channels()) {
    throw Error(ErrorKind::DimMismatch, "model has " + std::to_string(cfg.num_channels()) +
                                            " channels, got " + std::to_string(inputs.size()));
  }
  ForwardTrace tr;
  tr.channels.resize(inputs.size());
  tr.boom_input.resize(cfg.context_dim());
  const Eigen::Index hidden = cfg.hidden_size;
  for (std::size_t c = 0; c < inputs.size(); ++c) {
    auto& cache = tr.channels[c];
    encode(params, inputs[c], static_cast<int>(c), mode, rng, cache);
    const auto att = sha_attention(cache.layers.back().h, params.channels[c].query);
    const auto& top = cache.layers.back().h;
    cache.query = params.channels[c].query.transpose() * top.row(top.rows() - 1).transpose();
    cache.weights = att.weights;
    cache.context = att.context;
    if (use_dropout(params, mode)) {
      cache.context_mask = dropout_mask(hidden, 1, cfg.dropout, require_rng(rng)).col(0);
      cache.context.array() *= cache.context_mask.array();
    } else {
      cache.context_mask.resize(0);
    }
    tr.boom_input.segment(static_cast<Eigen::Index>(c) * hidden, hidden) = cache.context;
    tr.attention_weights.push_back(att.weights);
  }
  tr.boom_pre = params.boom_up.transpose() * tr.boom_input + params.boom_up_bias;
  tr.boom_act = tr.boom_pre.unaryExpr([](double x) { return gelu(x); });
  tr.logits = params.boom_down.transpose() * tr.boom_act + params.boom_down_bias;
  return tr;
}

void accumulate_gradients(const ModelParameters& params, const ForwardTrace& tr,
                          const Eigen::VectorXd& dlogits, ModelParameters& grads) {
  const auto& cfg = params.config;
  const Eigen::Index hidden = cfg.hidden_size;

  grads.boom_down.noalias() += tr.boom_act * dlogits.transpose();
  grads.boom_down_bias += dlogits;
  const Eigen::VectorXd d_act = params.boom_down * dlogits;
  const Eigen::VectorXd d_pre =
      d_act.cwiseProduct(tr.boom_pre.unaryExpr([](double x) { return gelu_grad(x); }));
  grads.boom_up.noalias() += tr.boom_input * d_pre.transpose();
  grads.boom_up_bias += d_pre;
  const Eigen::VectorXd d_input = params.boom_up * d_pre;

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t c = 0; c < tr.channels.size(); ++c) {
    const auto& cache = tr.channels[c];
    const auto& pc = params.channels[c];
    auto& gc = grads.channels[c];
    const auto& top = cache.layers.back().h;
    const Eigen::Index steps = top.rows();

    Eigen::VectorXd d_ctx = d_input.segment(static_cast<Eigen::Index>(c) * hidden, hidden);
    if (cache.context_mask.size() > 0) d_ctx.array() *= cache.context_mask.array();

    // context = H^T w, scores = H q / sqrt(H), q = Wq^T h_T
    RowMatrix d_h = cache.weights * d_ctx.transpose();
    const Eigen::VectorXd d_w = top * d_ctx;
    const double dot = cache.weights.dot(d_w);
    const Eigen::VectorXd d_scores = cache.weights.cwiseProduct((d_w.array() - dot).matrix());
    const Eigen::VectorXd d_q = top.transpose() * d_scores * inv_sqrt;
    d_h.noalias() += d_scores * cache.query.transpose() * inv_sqrt;
    const Eigen::VectorXd h_last = top.row(steps - 1).transpose();
    gc.query.noalias() += h_last * d_q.transpose();
    d_h.row(steps - 1).noalias() += (pc.query * d_q).transpose();

    for (std::size_t l = cache.layers.size(); l-- > 0;) {
      const auto& lc = cache.layers[l];
      const auto& lw = pc.layers[l];
      auto& lg = gc.layers[l];
      RowMatrix d_gates(steps, 4 * hidden);
      Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(hidden);
      Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(hidden);
      for (Eigen::Index t = steps; t-- > 0;) {
        const Eigen::RowVectorXd dh = d_h.row(t) + dh_next;
        for (Eigen::Index k = 0; k < hidden; ++k) {
          const double o = lc.o(t, k), tc = lc.tanh_c(t, k), i = lc.i(t, k), f = lc.f(t, k),
                       g = lc.g(t, k);
          const double c_prev = t > 0 ? lc.c(t - 1, k) : 0.0;
          const double dc = dc_next(k) + dh(k) * o * (1.0 - tc * tc);
          d_gates(t, k) = dc * g * i * (1.0 - i);
          d_gates(t, hidden + k) = dc * c_prev * f * (1.0 - f);
          d_gates(t, 2 * hidden + k) = dc * i * (1.0 - g * g);
          d_gates(t, 3 * hidden + k) = dh(k) * tc * o * (1.0 - o);
          dc_next(k) = dc * f;
        }
        dh_next.noalias() = d_gates.row(t) * lw.w_recurrent.transpose();
      }
      lg.w_input.noalias() += lc.in.transpose() * d_gates;
      if (steps > 1) {
        lg.w_recurrent.noalias() +=
            lc.h.topRows(steps - 1).transpose() * d_gates.bottomRows(steps - 1);
      }
      lg.bias += d_gates.colwise().sum().transpose();
      d_h = d_gates * lw.w_input.transpose();  // gradient w.r.t. this layer's input
    }

    RowMatrix d_proj = std::move(d_h);
    if (cache.proj_mask.size() > 0) d_proj.array() *= cache.proj_mask.array();
    gc.proj.noalias() += cache.input.transpose() * d_proj;
    gc.proj_bias += d_proj.colwise().sum().transpose();
  }
}

Checkpoint to_checkpoint(const ModelParameters& params) {
  auto& p = const_cast<ModelParameters&>(params);
  Checkpoint ck;
  ck.config = params.config.to_map();
  for (const auto& v : param_views(p)) {
    ck.arrays.push_back({v.name, v.dims, {v.values.begin(), v.values.end()}});
  }
  return ck;
}

ModelParameters from_checkpoint(const Checkpoint& ck) {
  if (ck.value("kind") != "sharnn") {
    throw Error(ErrorKind::BadFormat, "checkpoint kind '" + ck.value("kind") + "' is not sharnn");
  }
  ModelParameters p = init_params(ModelConfig::from_map(ck.config));
  for (auto& v : param_views(p)) {
    const auto& a = ck.array(v.name);
    if (a.dims != v.dims) throw Error(ErrorKind::BadFormat, "shape mismatch for '" + v.name + "'");
    std::copy(a.data.begin(), a.data.end(), v.values.begin());
  }
  return p;
}

void save_model(const std::filesystem::path& path, const ModelParameters& params) {
  write_checkpoint(path, to_checkpoint(params));
}

ModelParameters load_model(const std::filesystem::path& path) {
  return from_checkpoint(read_checkpoint(path));
}

}  // namespace hv
