#include "hloc/predict.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hloc/error.hpp"
#include "hloc/rng.hpp"

namespace hloc {

static_assert(std::endian::native == std::endian::little, "model files are written in host byte order");

namespace {

constexpr std::string_view kModelMagic = "HLOCMODEL";

struct KindName {
  ModelKind kind;
  std::string_view name;
  std::string_view alias;
};

constexpr KindName kKindNames[] = {
    {ModelKind::TreeEnsemble, "tree-ensemble", "forest"},
    {ModelKind::LinearLogistic, "linear-logistic", "logistic"},
    {ModelKind::FeedForward, "feed-forward", "mlp"},
    {ModelKind::RecurrentPointer, "recurrent-pointer", "recurrent"},
    {ModelKind::ConvolutionalPointer, "convolutional-pointer", "convolutional"},
    {ModelKind::AttentionPointer, "attention-pointer", "attention"},
};

nn::EncoderKind encoder_of(ModelKind kind) {
  switch (kind) {
    case ModelKind::ConvolutionalPointer: return nn::EncoderKind::Convolutional;
    case ModelKind::AttentionPointer: return nn::EncoderKind::Attention;
    default: return nn::EncoderKind::Recurrent;
  }
}

Eigen::RowVectorXd column_mean(const Eigen::MatrixXd& x) { return x.colwise().mean(); }

Eigen::RowVectorXd column_scale(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean) {
  Eigen::RowVectorXd s = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > 1e-12)) s(i) = 1.0;
  }
  return s;
}

Eigen::MatrixXd to_matrix(const TokenRows& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows.cols; ++c) x(r, c) = rows.data[r * rows.cols + c];
  }
  return x;
}

nn::Parameter xavier(const std::string& name, int rows, int cols, Rng& rng) {
  nn::Parameter p{name, nn::Mat::Zero(rows, cols), {}};
  if (rows > 1) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) = rng.uniform(-a, a);
  }
  p.zero_grad();
  return p;
}

// Logits for the dense per-token models: a linear map, or one hidden layer.
nn::Graph::Id dense_forward(nn::Graph& g, std::vector<nn::Parameter>& params, const nn::Mat& x) {
  const nn::Graph::Id in = g.constant(x);
  if (params.size() == 2) return g.add_row(g.matmul(in, g.param(params[0])), g.param(params[1]));
  const nn::Graph::Id h = g.gelu(g.add_row(g.matmul(in, g.param(params[0])), g.param(params[1])));
  return g.add_row(g.matmul(h, g.param(params[2])), g.param(params[3]));
}

std::vector<double> sigmoid(const nn::Mat& logits) {
  std::vector<double> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out[i] = 1.0 / (1.0 + std::exp(-logits(i, 0)));
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  for (const KindName& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const KindName& k : kKindNames) {
    if (name == k.name || name == k.alias) return k.kind;
  }
  throw Error(ErrorKind::Usage, "unknown model kind '" + std::string(name) + "'");
}

bool is_per_token(ModelKind kind) {
  return kind == ModelKind::TreeEnsemble || kind == ModelKind::LinearLogistic || kind == ModelKind::FeedForward;
}

FeatureMode feature_mode(ModelKind kind) { return is_per_token(kind) ? FeatureMode::PerToken : FeatureMode::PerSample; }

ModelKind pointer_kind(nn::EncoderKind encoder) {
  switch (encoder) {
    case nn::EncoderKind::Recurrent: return ModelKind::RecurrentPointer;
    case nn::EncoderKind::Convolutional: return ModelKind::ConvolutionalPointer;
    case nn::EncoderKind::Attention: return ModelKind::AttentionPointer;
  }
  return ModelKind::RecurrentPointer;
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"downsample_ratio", downsample_ratio},
      {"batch_size", batch_size},
      {"epochs", epochs},
      {"learning_rate", learning_rate},
      {"seed", seed},
      {"split_regime", split_regime},
      {"trees", trees},
      {"max_depth", max_depth},
      {"mlp_hidden", mlp_hidden},
      {"encoder",
       {{"kind", nn::to_string(encoder.kind)},
        {"cell", nn::to_string(encoder.cell)},
        {"hidden", encoder.hidden},
        {"layers", encoder.layers},
        {"heads", encoder.heads},
        {"ff_hidden", encoder.ff_hidden},
        {"kernel", encoder.kernel}}},
      {"max_sequence", max_sequence},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& object) {
  if (!object.is_object()) throw Error(ErrorKind::Config, "training config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : object.items()) {
      if (key == "downsample_ratio") c.downsample_ratio = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "split_regime") c.split_regime = value.get<std::string>();
      else if (key == "trees") c.trees = value.get<int>();
      else if (key == "max_depth") c.max_depth = value.get<int>();
      else if (key == "mlp_hidden") c.mlp_hidden = value.get<int>();
      else if (key == "max_sequence") c.max_sequence = value.get<int>();
      else if (key != "encoder") throw Error(ErrorKind::Config, "unknown training option '" + key + "'");
    }
    if (object.contains("encoder")) {
      const nlohmann::json& e = object.at("encoder");
      if (!e.is_object()) throw Error(ErrorKind::Config, "encoder must be a JSON object");
      if (e.contains("kind")) c.encoder = nn::EncoderConfig::defaults(nn::parse_encoder_kind(e.at("kind").get<std::string>()));
      for (const auto& [key, value] : e.items()) {
        if (key == "kind") continue;
        if (key == "cell") c.encoder.cell = nn::parse_recurrent_cell(value.get<std::string>());
        else if (key == "hidden") c.encoder.hidden = value.get<int>();
        else if (key == "layers") c.encoder.layers = value.get<int>();
        else if (key == "heads") c.encoder.heads = value.get<int>();
        else if (key == "ff_hidden") c.encoder.ff_hidden = value.get<int>();
        else if (key == "kernel") c.encoder.kernel = value.get<int>();
        else throw Error(ErrorKind::Config, "unknown encoder option '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad training config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Config, what);
  };
  need(downsample_ratio >= 1.0, "downsample_ratio must be at least 1");
  need(epochs >= 1, "epochs must be at least 1");
  need(batch_size >= 1, "batch_size must be at least 1");
  need(learning_rate > 0.0, "learning_rate must be positive");
  need(trees >= 1, "trees must be at least 1");
  need(max_depth >= 1, "max_depth must be at least 1");
  need(mlp_hidden >= 1, "mlp_hidden must be at least 1");
  need(max_sequence >= 1, "max_sequence must be at least 1");
  need(encoder.hidden >= 1 && encoder.layers >= 1, "encoder hidden and layers must be at least 1");
  if (encoder.kind == nn::EncoderKind::Attention) {
    need(encoder.heads >= 1 && encoder.hidden % encoder.heads == 0, "encoder hidden must be divisible by heads");
    need(encoder.ff_hidden >= 1, "encoder ff_hidden must be at least 1");
  }
  if (encoder.kind == nn::EncoderKind::Convolutional) {
    need(encoder.kernel >= 1 && encoder.kernel % 2 == 1, "encoder kernel must be odd");
  }
}

TokenRows collect_token_rows(std::span<const FeatureMatrix> matrices) {
  TokenRows out;
  for (const FeatureMatrix& m : matrices) {
    if (m.mode != FeatureMode::PerToken) {
      throw Error(ErrorKind::Data, "matrix '" + m.record_id + "' is not a per-token matrix");
    }
    if (out.cols == 0) out.cols = m.cols;
    if (m.cols != out.cols) throw Error(ErrorKind::Data, "matrices have different widths");
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (m.labels[r] == RowLabel::Unlabeled) continue;
      const auto row = m.row(r);
      out.data.insert(out.data.end(), row.begin(), row.end());
      out.labels.push_back(m.labels[r] == RowLabel::Hallucinated ? 1 : 0);
    }
  }
  return out;
}

TokenRows downsample(const TokenRows& rows, double ratio, std::uint64_t seed) {
  if (!(ratio >= 1.0)) throw Error(ErrorKind::Config, "downsample ratio must be at least 1");
  std::vector<std::size_t> correct;
  std::size_t hallucinated = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows.labels[i] == 1) {
      ++hallucinated;
    } else {
      correct.push_back(i);
    }
  }
  if (hallucinated == 0) throw Error(ErrorKind::Data, "no hallucinated rows to train on");
  const auto quota = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(hallucinated)));
  std::vector<char> keep(rows.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) keep[i] = rows.labels[i] == 1;
  if (correct.size() <= quota) {
    for (std::size_t i : correct) keep[i] = 1;
  } else {
    Rng rng(seed);
    for (std::size_t k = 0; k < quota; ++k) {
      std::swap(correct[k], correct[k + rng.below(correct.size() - k)]);
      keep[correct[k]] = 1;
    }
  }
  TokenRows out;
  out.cols = rows.cols;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!keep[i]) continue;
    const auto r = rows.row(i);
    out.data.insert(out.data.end(), r.begin(), r.end());
    out.labels.push_back(rows.labels[i]);
  }
  return out;
}

void PredictorModel::check_matrix(const FeatureMatrix& matrix) const {
  if (matrix.mode != mode()) {
    throw Error(ErrorKind::Data, "model '" + std::string(to_string(kind_)) + "' expects " +
                                     std::string(to_string(mode())) + " features, got " +
                                     std::string(to_string(matrix.mode)));
  }
  if (layout_version_ != kFeatureLayoutVersion || matrix.cols != feature_width(matrix.mode)) {
    throw Error(ErrorKind::Data, "feature layout mismatch for record '" + matrix.record_id + "'");
  }
}

Eigen::MatrixXd PredictorModel::standardized(const FeatureMatrix& matrix, std::size_t rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(matrix.cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < matrix.cols; ++c) x(r, c) = (matrix.at(r, c) - mean_(c)) / scale_(c);
  }
  return x;
}

std::vector<double> PredictorModel::scores(const FeatureMatrix& matrix) const {
  check_matrix(matrix);
  if (!is_per_token(kind_)) throw Error(ErrorKind::Data, "pointer models do not produce per-token scores");
  if (matrix.rows == 0) return {};
  if (kind_ == ModelKind::TreeEnsemble) {
    std::vector<double> out(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) out[r] = forest_.score(matrix.row(r));
    return out;
  }
  nn::Graph g;
  auto params = dense_;
  return sigmoid(g.value(dense_forward(g, params, standardized(matrix, matrix.rows))));
}

Eigen::VectorXd PredictorModel::pointer_logits(const FeatureMatrix& matrix) const {
  check_matrix(matrix);
  if (is_per_token(kind_) || !pointer_) throw Error(ErrorKind::Data, "per-token models do not produce pointer logits");
  if (matrix.rows == 0) throw Error(ErrorKind::Data, "record '" + matrix.record_id + "' has no tokens");
  const std::size_t rows = std::min<std::size_t>(matrix.rows, static_cast<std::size_t>(max_sequence_));
  return pointer_->logits(standardized(matrix, rows));
}

PredictorModel train_token_classifier(std::span<const FeatureMatrix> matrices, ModelKind kind,
                                      const TrainConfig& config) {
  if (!is_per_token(kind)) throw Error(ErrorKind::Usage, "model kind is not a per-token classifier");
  if (config.epochs < 1 || config.batch_size < 1) throw Error(ErrorKind::Config, "epochs and batch size must be positive");
  const TokenRows all = collect_token_rows(matrices);
  if (all.size() == 0) throw Error(ErrorKind::Data, "no labeled per-token rows to train on");
  const TokenRows rows = downsample(all, config.downsample_ratio, config.seed);
  const std::size_t positives = static_cast<std::size_t>(std::count(rows.labels.begin(), rows.labels.end(), 1));
  if (positives == rows.size()) throw Error(ErrorKind::Data, "training rows contain a single class");

  PredictorModel model;
  model.kind_ = kind;
  model.meta_ = config.to_json();
  model.meta_["training_rows"] = rows.size();
  model.meta_["hallucinated_rows"] = positives;

  bool all_constant = true;
  for (std::size_t c = 0; c < rows.cols && all_constant; ++c) {
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows.data[r * rows.cols + c] != rows.data[c]) {
        all_constant = false;
        break;
      }
    }
  }
  if (all_constant) model.warnings_.push_back("every feature column is constant; scores will be constant");

  if (kind == ModelKind::TreeEnsemble) {
    ForestConfig fc;
    fc.trees = config.trees;
    fc.max_depth = config.max_depth;
    fc.seed = config.seed;
    model.forest_ = train_forest(rows.data, rows.cols, rows.labels, fc);
    model.meta_["features_per_split"] = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(rows.cols))));
    return model;
  }

  const Eigen::MatrixXd raw = to_matrix(rows);
  model.mean_ = column_mean(raw);
  model.scale_ = column_scale(raw, model.mean_);
  const Eigen::MatrixXd x = (raw.rowwise() - model.mean_).array().rowwise() / model.scale_.array();
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(i) = rows.labels[i];

  Rng rng(config.seed);
  const int d = static_cast<int>(rows.cols);
  if (kind == ModelKind::LinearLogistic) {
    model.dense_ = {xavier("w", d, 1, rng), xavier("b", 1, 1, rng)};
  } else {
    model.dense_ = {xavier("w1", d, config.mlp_hidden, rng), xavier("b1", 1, config.mlp_hidden, rng),
                    xavier("w2", config.mlp_hidden, 1, rng), xavier("b2", 1, 1, rng)};
  }
  nn::Adam adam(config.learning_rate);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      nn::Mat xb(static_cast<Eigen::Index>(end - start), x.cols());
      Eigen::VectorXd yb(static_cast<Eigen::Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        xb.row(i - start) = x.row(order[i]);
        yb(i - start) = y(order[i]);
      }
      for (nn::Parameter& p : model.dense_) p.zero_grad();
      nn::Graph g;
      g.backward(g.bce_with_logits(dense_forward(g, model.dense_, xb), yb));
      adam.step(model.dense_);
    }
  }
  return model;
}

std::optional<int> first_crossing(std::span<const double> scores, double threshold) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

std::optional<int> predict_scan(const PredictorModel& model, const FeatureMatrix& matrix, double threshold) {
  const std::vector<double> s = model.scores(matrix);
  return first_crossing(s, threshold);
}

int argmax_first(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw Error(ErrorKind::Data, "cannot point into an empty sequence");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return static_cast<int>(best + 1);
}

int predict_pointer(const PredictorModel& model, const FeatureMatrix& matrix) {
  return argmax_first(model.pointer_logits(matrix));
}

PredictorModel train_pointer(std::span<const FeatureMatrix> matrices, const TrainConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1) throw Error(ErrorKind::Config, "epochs and batch size must be positive");
  if (matrices.empty()) throw Error(ErrorKind::Data, "no samples to train on");
  const std::size_t cap = static_cast<std::size_t>(config.max_sequence);
  std::size_t total_rows = 0;
  for (const FeatureMatrix& m : matrices) {
    if (m.mode != FeatureMode::PerSample || m.cols != feature_width(FeatureMode::PerSample)) {
      throw Error(ErrorKind::Data, "matrix '" + m.record_id + "' is not a per-sample matrix");
    }
    if (!m.gold_index || *m.gold_index < 1 || static_cast<std::size_t>(*m.gold_index) > m.rows) {
      throw Error(ErrorKind::Data, "sample '" + m.record_id + "' has no gold index within its " +
                                       std::to_string(m.rows) + " tokens");
    }
    if (static_cast<std::size_t>(*m.gold_index) > cap) {
      throw Error(ErrorKind::Data, "sample '" + m.record_id + "' has its gold index past the " +
                                       std::to_string(cap) + "-token cap");
    }
    total_rows += std::min(m.rows, cap);
  }

  PredictorModel model;
  model.kind_ = pointer_kind(config.encoder.kind);
  model.max_sequence_ = config.max_sequence;
  model.meta_ = config.to_json();
  model.meta_["training_samples"] = matrices.size();

  const std::size_t cols = matrices.front().cols;
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(cols));
  Eigen::Index at = 0;
  for (const FeatureMatrix& m : matrices) {
    for (std::size_t r = 0; r < std::min(m.rows, cap); ++r, ++at) {
      for (std::size_t c = 0; c < cols; ++c) pooled(at, c) = m.at(r, c);
    }
  }
  model.mean_ = column_mean(pooled);
  model.scale_ = column_scale(pooled, model.mean_);

  std::vector<Eigen::MatrixXd> inputs;
  inputs.reserve(matrices.size());
  for (const FeatureMatrix& m : matrices) inputs.push_back(model.standardized(m, std::min(m.rows, cap)));

  Rng rng(config.seed);
  model.pointer_ = std::make_shared<nn::PointerNetwork>(config.encoder, static_cast<int>(cols), rng);
  auto& params = model.pointer_->parameters();
  nn::Adam adam(config.learning_rate);
  std::vector<std::size_t> order(matrices.size());
  std::iota(order.begin(), order.end(), 0);
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (nn::Parameter& p : params) p.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t s = order[i];
        nn::Graph g;
        const nn::Graph::Id loss =
            g.softmax_cross_entropy(model.pointer_->forward(g, inputs[s]), *matrices[s].gold_index - 1);
        epoch_loss += g.value(loss)(0, 0);
        g.backward(loss);
      }
      adam.step(params, 1.0 / static_cast<double>(end - start));
    }
    last_epoch_loss = epoch_loss / static_cast<double>(order.size());
  }
  model.meta_["final_epoch_loss"] = last_epoch_loss;
  return model;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

struct ArrayWriter {
  nlohmann::json table = nlohmann::json::array();
  std::string blob;

  template <typename T>
  void add(const std::string& name, const std::string& dtype, std::vector<std::int64_t> shape, const T* data,
           std::size_t count) {
    table.push_back({{"name", name}, {"dtype", dtype}, {"shape", shape}, {"offset", blob.size()}, {"count", count}});
    blob.append(reinterpret_cast<const char*>(data), count * sizeof(T));
  }
  void add_i32(const std::string& name, const std::vector<std::int32_t>& v) {
    add(name, "i32", {static_cast<std::int64_t>(v.size())}, v.data(), v.size());
  }
  void add_f64(const std::string& name, const std::vector<double>& v) {
    add(name, "f64", {static_cast<std::int64_t>(v.size())}, v.data(), v.size());
  }
  void add_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    // Row-major on disk.
    std::vector<double> flat(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
    }
    add(name, "f64", {m.rows(), m.cols()}, flat.data(), flat.size());
  }
};

struct ArrayReader {
  const nlohmann::json& table;
  std::string_view blob;
  std::string origin;

  const nlohmann::json& entry(const std::string& name) const {
    for (const auto& e : table) {
      if (e.at("name") == name) return e;
    }
    throw Error(ErrorKind::Schema, origin + ": missing array '" + name + "'");
  }
  template <typename T>
  std::vector<T> read(const nlohmann::json& e, const char* dtype) const {
    if (e.at("dtype") != dtype) throw Error(ErrorKind::Schema, origin + ": array has the wrong dtype");
    const std::size_t offset = e.at("offset").get<std::size_t>();
    const std::size_t count = e.at("count").get<std::size_t>();
    if (offset > blob.size() || count > (blob.size() - offset) / sizeof(T)) {
      throw Error(ErrorKind::Io, origin + ": model file is truncated");
    }
    std::vector<T> out(count);
    std::memcpy(out.data(), blob.data() + offset, count * sizeof(T));
    return out;
  }
  std::vector<std::int32_t> i32(const std::string& name) const { return read<std::int32_t>(entry(name), "i32"); }
  std::vector<double> f64(const std::string& name) const { return read<double>(entry(name), "f64"); }
  Eigen::MatrixXd matrix_at(const nlohmann::json& e) const {
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 2) throw Error(ErrorKind::Schema, origin + ": matrix array needs two dimensions");
    const std::vector<double> flat = read<double>(e, "f64");
    if (static_cast<std::int64_t>(flat.size()) != shape[0] * shape[1]) {
      throw Error(ErrorKind::Schema, origin + ": matrix shape does not match its element count");
    }
    Eigen::MatrixXd m(shape[0], shape[1]);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[r * m.cols() + c];
    }
    return m;
  }
  Eigen::MatrixXd matrix(const std::string& name) const { return matrix_at(entry(name)); }
};

}  // namespace

std::string serialize_model(const PredictorModel& model) {
  ArrayWriter w;
  nlohmann::json header = {
      {"kind", to_string(model.kind_)},
      {"format_version", kModelFormatVersion},
      {"feature_layout_version", model.layout_version_},
      {"feature_mode", to_string(model.mode())},
      {"training_meta", model.meta_},
      {"warnings", model.warnings_},
  };
  if (model.kind_ == ModelKind::TreeEnsemble) {
    const RandomForest& f = model.forest_;
    header["features"] = f.features;
    w.add_i32("tree_offsets", f.tree_offsets);
    w.add_i32("feature", f.feature);
    w.add_f64("threshold", f.threshold);
    w.add_i32("left", f.left);
    w.add_i32("right", f.right);
    w.add_f64("value", f.value);
  } else {
    w.add_matrix("mean", model.mean_);
    w.add_matrix("scale", model.scale_);
    const std::vector<nn::Parameter>& params = model.pointer_ ? model.pointer_->parameters() : model.dense_;
    nlohmann::json names = nlohmann::json::array();
    for (const nn::Parameter& p : params) {
      names.push_back(p.name);
      w.add_matrix("param." + p.name, p.value);
    }
    header["parameters"] = names;
    if (model.pointer_) {
      const nn::EncoderConfig& c = model.pointer_->config();
      header["encoder"] = {{"kind", nn::to_string(c.kind)}, {"cell", nn::to_string(c.cell)},
                           {"hidden", c.hidden},          {"layers", c.layers},
                           {"heads", c.heads},            {"ff_hidden", c.ff_hidden},
                           {"kernel", c.kernel},          {"input_dim", model.pointer_->input_dim()},
                           {"max_sequence", model.max_sequence_}};
    }
  }
  header["arrays"] = w.table;
  header["blob_bytes"] = w.blob.size();
  std::string out(kModelMagic);
  out += "\n";
  out += header.dump();
  out += "\n";
  out += w.blob;
  return out;
}

PredictorModel deserialize_model(std::string_view bytes, const std::string& origin) {
  if (bytes.substr(0, kModelMagic.size() + 1) != std::string(kModelMagic) + "\n") {
    throw Error(ErrorKind::Schema, origin + ": not a model file");
  }
  bytes.remove_prefix(kModelMagic.size() + 1);
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw Error(ErrorKind::Io, origin + ": model file is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, origin + ": unreadable model header: " + e.what());
  }
  const std::string_view blob = bytes.substr(eol + 1);

  PredictorModel model;
  try {
    const int format = header.at("format_version").get<int>();
    if (format != kModelFormatVersion) {
      throw Error(ErrorKind::Version, origin + ": model format version " + std::to_string(format) +
                                          " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const int layout = header.at("feature_layout_version").get<int>();
    if (layout != kFeatureLayoutVersion) {
      throw Error(ErrorKind::Version, origin + ": model was trained on feature layout " + std::to_string(layout) +
                                          ", this build uses layout " + std::to_string(kFeatureLayoutVersion));
    }
    if (blob.size() < header.at("blob_bytes").get<std::size_t>()) {
      throw Error(ErrorKind::Io, origin + ": model file is truncated");
    }
    model.kind_ = parse_model_kind(header.at("kind").get<std::string>());
    model.layout_version_ = layout;
    model.meta_ = header.at("training_meta");
    model.warnings_ = header.value("warnings", std::vector<std::string>{});
    const ArrayReader r{header.at("arrays"), blob, origin};
    if (model.kind_ == ModelKind::TreeEnsemble) {
      RandomForest& f = model.forest_;
      f.features = header.at("features").get<std::int32_t>();
      f.tree_offsets = r.i32("tree_offsets");
      f.feature = r.i32("feature");
      f.threshold = r.f64("threshold");
      f.left = r.i32("left");
      f.right = r.i32("right");
      f.value = r.f64("value");
      const std::size_t n = f.feature.size();
      if (f.threshold.size() != n || f.left.size() != n || f.right.size() != n || f.value.size() != n) {
        throw Error(ErrorKind::Schema, origin + ": tree arrays differ in length");
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (f.feature[i] >= f.features ||
            (f.feature[i] >= 0 && (f.left[i] <= static_cast<std::int32_t>(i) || f.right[i] <= static_cast<std::int32_t>(i) ||
                                   static_cast<std::size_t>(f.left[i]) >= n || static_cast<std::size_t>(f.right[i]) >= n))) {
          throw Error(ErrorKind::Schema, origin + ": malformed tree node " + std::to_string(i));
        }
      }
    } else {
      model.mean_ = r.matrix("mean").row(0);
      model.scale_ = r.matrix("scale").row(0);
      std::vector<nn::Parameter> params;
      for (const auto& name : header.at("parameters")) {
        nn::Parameter p{name.get<std::string>(), r.matrix("param." + name.get<std::string>()), {}};
        p.zero_grad();
        params.push_back(std::move(p));
      }
      if (is_per_token(model.kind_)) {
        model.dense_ = std::move(params);
        const std::size_t expected = model.kind_ == ModelKind::LinearLogistic ? 2 : 4;
        if (model.dense_.size() != expected) throw Error(ErrorKind::Schema, origin + ": wrong parameter count");
      } else {
        const auto& e = header.at("encoder");
        nn::EncoderConfig c;
        c.kind = nn::parse_encoder_kind(e.at("kind").get<std::string>());
        c.cell = nn::parse_recurrent_cell(e.at("cell").get<std::string>());
        c.hidden = e.at("hidden");
        c.layers = e.at("layers");
        c.heads = e.at("heads");
        c.ff_hidden = e.at("ff_hidden");
        c.kernel = e.at("kernel");
        if (c.kind != encoder_of(model.kind_)) throw Error(ErrorKind::Schema, origin + ": encoder does not match kind");
        model.max_sequence_ = e.at("max_sequence");
        model.pointer_ = std::make_shared<nn::PointerNetwork>(c, e.at("input_dim").get<int>(), std::move(params));
      }
      const auto width = static_cast<Eigen::Index>(feature_width(model.mode()));
      if (model.mean_.size() != width || model.scale_.size() != width) {
        throw Error(ErrorKind::Schema, origin + ": standardization arrays have the wrong width");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, origin + ": malformed model header: " + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const PredictorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

PredictorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str(), path.string());
}

}  // namespace hloc
