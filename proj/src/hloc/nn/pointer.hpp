#pragma once

#include <string_view>
#include <vector>

#include "hloc/nn/graph.hpp"
#include "hloc/rng.hpp"

namespace hloc::nn {

enum class EncoderKind { Recurrent, Convolutional, Attention };
enum class RecurrentCell { Lstm, Gru };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);
std::string_view to_string(RecurrentCell cell);
RecurrentCell parse_recurrent_cell(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Recurrent;
  RecurrentCell cell = RecurrentCell::Lstm;
  int hidden = 512;   // per direction for recurrent encoders, model width otherwise
  int layers = 2;
  int heads = 8;      // attention only
  int ff_hidden = 1024;  // attention only
  int kernel = 3;     // convolutional only, odd

  static EncoderConfig defaults(EncoderKind kind);
};

/// Sequence encoder plus pointer head: one logit per input row.
class PointerNetwork {
 public:
  PointerNetwork(const EncoderConfig& config, int input_dim, Rng& rng);
  PointerNetwork(const EncoderConfig& config, int input_dim, std::vector<Parameter> params);

  const EncoderConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

  /// Returns the L x 1 logits node for an L x input_dim sequence.
  Graph::Id forward(Graph& g, const Mat& x);
  Eigen::VectorXd logits(const Mat& x);

 private:
  struct RecurrentLayer {
    int wx, bx, wh, bh;
  };
  struct ConvLayer {
    int w, b;
  };
  struct AttentionLayer {
    int wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };

  void build(Rng* rng);
  int add(const std::string& name, int rows, int cols, Rng* rng, double fill = 0.0);
  Graph::Id p(Graph& g, int index) { return g.param(params_[index]); }

  Graph::Id encode_recurrent(Graph& g, Graph::Id x, Eigen::Index length);
  Graph::Id run_direction(Graph& g, Graph::Id x, const RecurrentLayer& layer, bool reverse,
                          Eigen::Index length);
  Graph::Id encode_conv(Graph& g, Graph::Id x);
  Graph::Id encode_attention(Graph& g, Graph::Id x, Eigen::Index length);

  EncoderConfig config_;
  int input_dim_;
  std::vector<Parameter> params_;
  std::vector<RecurrentLayer> recurrent_;  // layer-major, forward then backward
  std::vector<ConvLayer> conv_;
  std::vector<AttentionLayer> attention_;
  int in_w_ = -1, in_b_ = -1;  // attention input projection
  int head_w_ = -1, head_b_ = -1, head_v_ = -1;
};

/// Fixed sinusoidal position table, length x width.
Mat sinusoidal_positions(Eigen::Index length, Eigen::Index width);

}  // namespace hloc::nn
