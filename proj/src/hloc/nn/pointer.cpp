#include "hloc/nn/pointer.hpp"

#include <cmath>
#include <string>

#include "hloc/error.hpp"

namespace hloc::nn {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Recurrent: return "recurrent";
    case EncoderKind::Convolutional: return "convolutional";
    case EncoderKind::Attention: return "attention";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "recurrent" || name == "lstm" || name == "rnn") return EncoderKind::Recurrent;
  if (name == "convolutional" || name == "conv" || name == "cnn") return EncoderKind::Convolutional;
  if (name == "attention" || name == "transformer") return EncoderKind::Attention;
  throw Error(ErrorKind::Usage, "unknown encoder '" + std::string(name) + "'");
}

std::string_view to_string(RecurrentCell cell) { return cell == RecurrentCell::Lstm ? "lstm" : "gru"; }

RecurrentCell parse_recurrent_cell(std::string_view name) {
  if (name == "lstm") return RecurrentCell::Lstm;
  if (name == "gru") return RecurrentCell::Gru;
  throw Error(ErrorKind::Usage, "unknown recurrent cell '" + std::string(name) + "'");
}

EncoderConfig EncoderConfig::defaults(EncoderKind kind) {
  EncoderConfig c;
  c.kind = kind;
  switch (kind) {
    case EncoderKind::Recurrent: c.hidden = 512; c.layers = 2; break;
    case EncoderKind::Convolutional: c.hidden = 512; c.layers = 4; c.kernel = 3; break;
    case EncoderKind::Attention: c.hidden = 256; c.layers = 4; c.heads = 8; c.ff_hidden = 1024; break;
  }
  return c;
}

Mat sinusoidal_positions(Eigen::Index length, Eigen::Index width) {
  Mat pe(length, width);
  for (Eigen::Index t = 0; t < length; ++t) {
    for (Eigen::Index i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      pe(t, i) = i % 2 == 0 ? std::sin(static_cast<double>(t) * rate) : std::cos(static_cast<double>(t) * rate);
    }
  }
  return pe;
}

PointerNetwork::PointerNetwork(const EncoderConfig& config, int input_dim, Rng& rng)
    : config_(config), input_dim_(input_dim) {
  build(&rng);
}

PointerNetwork::PointerNetwork(const EncoderConfig& config, int input_dim, std::vector<Parameter> params)
    : config_(config), input_dim_(input_dim) {
  build(nullptr);
  if (params.size() != params_.size()) {
    throw Error(ErrorKind::Schema, "pointer model has " + std::to_string(params.size()) +
                                       " parameter arrays, expected " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter& src = params[i];
    Parameter& dst = params_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() ||
        src.value.cols() != dst.value.cols()) {
      throw Error(ErrorKind::Schema, "pointer model parameter '" + src.name + "' does not match '" +
                                         dst.name + "'");
    }
    dst.value = src.value;
  }
}

int PointerNetwork::add(const std::string& name, int rows, int cols, Rng* rng, double fill) {
  Parameter p;
  p.name = name;
  p.value = Mat::Constant(rows, cols, fill);
  if (rng && rows > 1) {
    // Xavier uniform for weight matrices; row vectors keep their fill.
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) = rng->uniform(-a, a);
  }
  p.zero_grad();
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size() - 1);
}

void PointerNetwork::build(Rng* rng) {
  const EncoderConfig& c = config_;
  if (c.hidden < 1 || c.layers < 1 || input_dim_ < 1) {
    throw Error(ErrorKind::Config, "encoder sizes must be positive");
  }
  int out_dim = c.hidden;
  switch (c.kind) {
    case EncoderKind::Recurrent: {
      const int gates = c.cell == RecurrentCell::Lstm ? 4 : 3;
      for (int l = 0; l < c.layers; ++l) {
        const int in = l == 0 ? input_dim_ : 2 * c.hidden;
        for (const char* dir : {"fwd", "bwd"}) {
          const std::string pre = "rnn" + std::to_string(l) + "." + dir + ".";
          RecurrentLayer layer{};
          layer.wx = add(pre + "wx", in, gates * c.hidden, rng);
          layer.bx = add(pre + "bx", 1, gates * c.hidden, rng);
          if (rng && c.cell == RecurrentCell::Lstm) {
            params_[layer.bx].value.middleCols(c.hidden, c.hidden).setOnes();
          }
          layer.wh = add(pre + "wh", c.hidden, gates * c.hidden, rng);
          layer.bh = add(pre + "bh", 1, gates * c.hidden, rng);
          recurrent_.push_back(layer);
        }
      }
      out_dim = 2 * c.hidden;
      break;
    }
    case EncoderKind::Convolutional: {
      if (c.kernel < 1 || c.kernel % 2 == 0) throw Error(ErrorKind::Config, "kernel size must be odd");
      for (int l = 0; l < c.layers; ++l) {
        const int in = l == 0 ? input_dim_ : c.hidden;
        const std::string pre = "conv" + std::to_string(l) + ".";
        conv_.push_back({add(pre + "w", c.kernel * in, c.hidden, rng), add(pre + "b", 1, c.hidden, rng)});
      }
      break;
    }
    case EncoderKind::Attention: {
      if (c.heads < 1 || c.hidden % c.heads != 0) {
        throw Error(ErrorKind::Config, "attention width must be divisible by the head count");
      }
      in_w_ = add("in.w", input_dim_, c.hidden, rng);
      in_b_ = add("in.b", 1, c.hidden, rng);
      for (int l = 0; l < c.layers; ++l) {
        const std::string pre = "attn" + std::to_string(l) + ".";
        const int d = c.hidden;
        AttentionLayer a{};
        a.wq = add(pre + "wq", d, d, rng);
        a.bq = add(pre + "bq", 1, d, rng);
        a.wk = add(pre + "wk", d, d, rng);
        a.bk = add(pre + "bk", 1, d, rng);
        a.wv = add(pre + "wv", d, d, rng);
        a.bv = add(pre + "bv", 1, d, rng);
        a.wo = add(pre + "wo", d, d, rng);
        a.bo = add(pre + "bo", 1, d, rng);
        a.ln1_g = add(pre + "ln1.g", 1, d, rng, 1.0);
        a.ln1_b = add(pre + "ln1.b", 1, d, rng);
        a.w1 = add(pre + "ff.w1", d, c.ff_hidden, rng);
        a.b1 = add(pre + "ff.b1", 1, c.ff_hidden, rng);
        a.w2 = add(pre + "ff.w2", c.ff_hidden, d, rng);
        a.b2 = add(pre + "ff.b2", 1, d, rng);
        a.ln2_g = add(pre + "ln2.g", 1, d, rng, 1.0);
        a.ln2_b = add(pre + "ln2.b", 1, d, rng);
        attention_.push_back(a);
      }
      break;
    }
  }
  head_w_ = add("head.w", out_dim, out_dim, rng);
  head_b_ = add("head.b", 1, out_dim, rng);
  head_v_ = add("head.v", out_dim, 1, rng);
}

Graph::Id PointerNetwork::run_direction(Graph& g, Graph::Id x, const RecurrentLayer& layer, bool reverse,
                                        Eigen::Index length) {
  const int H = config_.hidden;
  const Graph::Id proj = g.add_row(g.matmul(x, p(g, layer.wx)), p(g, layer.bx));
  const Graph::Id wh = p(g, layer.wh);
  const Graph::Id bh = p(g, layer.bh);
  Graph::Id h = g.constant(Mat::Zero(1, H));
  Graph::Id c = g.constant(Mat::Zero(1, H));
  std::vector<Graph::Id> states(static_cast<std::size_t>(length));
  for (Eigen::Index step = 0; step < length; ++step) {
    const Eigen::Index t = reverse ? length - 1 - step : step;
    const Graph::Id gx = g.rows(proj, static_cast<int>(t), 1);
    const Graph::Id gh = g.add_row(g.matmul(h, wh), bh);
    if (config_.cell == RecurrentCell::Lstm) {
      const Graph::Id gates = g.add(gx, gh);
      const Graph::Id i = g.sigmoid(g.cols(gates, 0, H));
      const Graph::Id f = g.sigmoid(g.cols(gates, H, H));
      const Graph::Id cand = g.tanh(g.cols(gates, 2 * H, H));
      const Graph::Id o = g.sigmoid(g.cols(gates, 3 * H, H));
      c = g.add(g.mul(f, c), g.mul(i, cand));
      h = g.mul(o, g.tanh(c));
    } else {
      const Graph::Id r = g.sigmoid(g.add(g.cols(gx, 0, H), g.cols(gh, 0, H)));
      const Graph::Id z = g.sigmoid(g.add(g.cols(gx, H, H), g.cols(gh, H, H)));
      const Graph::Id n = g.tanh(g.add(g.cols(gx, 2 * H, H), g.mul(r, g.cols(gh, 2 * H, H))));
      h = g.add(g.mul(g.one_minus(z), n), g.mul(z, h));
    }
    states[static_cast<std::size_t>(t)] = h;
  }
  return g.vstack(states);
}

Graph::Id PointerNetwork::encode_recurrent(Graph& g, Graph::Id x, Eigen::Index length) {
  Graph::Id cur = x;
  for (int l = 0; l < config_.layers; ++l) {
    const Graph::Id fwd = run_direction(g, cur, recurrent_[2 * l], false, length);
    const Graph::Id bwd = run_direction(g, cur, recurrent_[2 * l + 1], true, length);
    cur = g.hstack({fwd, bwd});
  }
  return cur;
}

Graph::Id PointerNetwork::encode_conv(Graph& g, Graph::Id x) {
  const int half = config_.kernel / 2;
  Graph::Id cur = x;
  for (const ConvLayer& layer : conv_) {
    std::vector<Graph::Id> taps;
    for (int k = -half; k <= half; ++k) taps.push_back(k == 0 ? cur : g.shift_rows(cur, k));
    cur = g.gelu(g.add_row(g.matmul(g.hstack(taps), p(g, layer.w)), p(g, layer.b)));
  }
  return cur;
}

Graph::Id PointerNetwork::encode_attention(Graph& g, Graph::Id x, Eigen::Index length) {
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Graph::Id cur = g.add_row(g.matmul(x, p(g, in_w_)), p(g, in_b_));
  cur = g.add(cur, g.constant(sinusoidal_positions(length, d)));
  for (const AttentionLayer& a : attention_) {
    const Graph::Id q = g.add_row(g.matmul(cur, p(g, a.wq)), p(g, a.bq));
    const Graph::Id k = g.add_row(g.matmul(cur, p(g, a.wk)), p(g, a.bk));
    const Graph::Id v = g.add_row(g.matmul(cur, p(g, a.wv)), p(g, a.bv));
    std::vector<Graph::Id> heads;
    for (int h = 0; h < config_.heads; ++h) {
      const Graph::Id qh = g.cols(q, h * dh, dh);
      const Graph::Id kh = g.cols(k, h * dh, dh);
      const Graph::Id vh = g.cols(v, h * dh, dh);
      const Graph::Id w = g.softmax_rows(g.scale(g.matmul_transposed(qh, kh), scale));
      heads.push_back(g.matmul(w, vh));
    }
    const Graph::Id attn = g.add_row(g.matmul(g.hstack(heads), p(g, a.wo)), p(g, a.bo));
    cur = g.layer_norm_rows(g.add(cur, attn), p(g, a.ln1_g), p(g, a.ln1_b));
    const Graph::Id ff = g.add_row(
        g.matmul(g.gelu(g.add_row(g.matmul(cur, p(g, a.w1)), p(g, a.b1))), p(g, a.w2)), p(g, a.b2));
    cur = g.layer_norm_rows(g.add(cur, ff), p(g, a.ln2_g), p(g, a.ln2_b));
  }
  return cur;
}

Graph::Id PointerNetwork::forward(Graph& g, const Mat& x) {
  if (x.cols() != input_dim_ || x.rows() < 1) {
    throw Error(ErrorKind::Data, "sequence width " + std::to_string(x.cols()) + " does not match model input " +
                                     std::to_string(input_dim_));
  }
  const Graph::Id in = g.constant(x);
  Graph::Id hidden = 0;
  switch (config_.kind) {
    case EncoderKind::Recurrent: hidden = encode_recurrent(g, in, x.rows()); break;
    case EncoderKind::Convolutional: hidden = encode_conv(g, in); break;
    case EncoderKind::Attention: hidden = encode_attention(g, in, x.rows()); break;
  }
  const Graph::Id act = g.tanh(g.add_row(g.matmul(hidden, p(g, head_w_)), p(g, head_b_)));
  return g.matmul(act, p(g, head_v_));
}

Eigen::VectorXd PointerNetwork::logits(const Mat& x) {
  Graph g;
  return g.value(forward(g, x)).col(0);
}

}  // namespace hloc::nn
