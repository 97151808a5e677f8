#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "aerje/rng.hpp"

namespace aerje::nn {

using Mat = Eigen::MatrixXd;  // rows = sequence positions, cols = features
using Vec = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Vocabulary: whitespace word-level with reserved specials. Case is kept
// (API casing and prompt markers are meaningful).
// ---------------------------------------------------------------------------
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kCls = 4;

  std::vector<std::string> words;  // index -> word, specials first
  std::unordered_map<std::string, int> index;

  Vocab();
  int add(const std::string& word);
  int id(const std::string& word) const;
  int size() const { return static_cast<int>(words.size()); }

  static std::vector<std::string> split_words(const std::string& text);
  static Vocab build(const std::vector<std::string>& texts);

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;  // space-joined words

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);
};

// ---------------------------------------------------------------------------
// Parameters and optimizer
// ---------------------------------------------------------------------------
struct Param {
  Mat w, g, m, v;

  void init(int rows, int cols, double stddev, Rng& rng);
  void zero_grad() { g.setZero(); }
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Param*> params, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);
  // One update with the given learning rate; grads are scaled by grad_scale
  // (1/batch) before the moment update and zeroed afterwards.
  void step(double lr, double grad_scale);

 private:
  std::vector<Param*> params_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Linear warmup then linear decay to zero; step is 1-based.
double linear_schedule_lr(double base_lr, long step, long total_steps, double warmup_fraction);

// ---------------------------------------------------------------------------
// Layers (pre-norm transformer blocks, ReLU feed-forward)
// ---------------------------------------------------------------------------
struct LayerNorm {
  Param gamma, beta;
  struct Cache {
    Mat x_hat;
    Vec inv_std;
  };
  void init(int dim, Rng& rng);
  Mat forward(const Mat& x, Cache& c) const;
  Mat backward(const Mat& dy, const Cache& c);
  void collect(std::vector<Param*>& out);
};

struct MultiHeadAttention {
  int d_model = 0, n_heads = 0, d_head = 0;
  Param wq, wk, wv, wo;
  struct Cache {
    Mat xq, xkv, q, k, v, concat;
    std::vector<Mat> attn;  // one Tq x Tk softmax per head
  };
  void init(int d_model, int n_heads, Rng& rng);
  Mat forward(const Mat& xq, const Mat& xkv, bool causal, Cache& c) const;
  // Accumulates input grads into dxq/dxkv (self-attention passes the same
  // matrix for both).
  void backward(const Mat& dy, const Cache& c, Mat& dxq, Mat& dxkv, bool causal);
  void collect(std::vector<Param*>& out);
};

struct FeedForward {
  Param w1, b1, w2, b2;
  struct Cache {
    Mat x, pre;
  };
  void init(int d_model, int ffn_dim, Rng& rng);
  Mat forward(const Mat& x, Cache& c) const;
  Mat backward(const Mat& dy, const Cache& c);
  void collect(std::vector<Param*>& out);
};

struct EncoderLayer {
  MultiHeadAttention self;
  FeedForward ffn;
  LayerNorm ln1, ln2;
  struct Cache {
    LayerNorm::Cache ln1c, ln2c;
    MultiHeadAttention::Cache attc;
    FeedForward::Cache ffnc;
  };
  void init(int d_model, int n_heads, int ffn_dim, Rng& rng);
  Mat forward(const Mat& x, Cache& c) const;
  Mat backward(const Mat& dy, const Cache& c);
  void collect(std::vector<Param*>& out);
};

struct DecoderLayer {
  MultiHeadAttention self, cross;
  FeedForward ffn;
  LayerNorm ln1, ln2, ln3;
  struct Cache {
    LayerNorm::Cache ln1c, ln2c, ln3c;
    MultiHeadAttention::Cache selfc, crossc;
    FeedForward::Cache ffnc;
  };
  void init(int d_model, int n_heads, int ffn_dim, Rng& rng);
  Mat forward(const Mat& x, const Mat& enc_out, Cache& c) const;
  // Returns dx; accumulates the cross-attention gradient into denc.
  Mat backward(const Mat& dy, const Cache& c, Mat& denc);
  void collect(std::vector<Param*>& out);
};

// ---------------------------------------------------------------------------
// Encoder stack shared by the classifier and the seq2seq model
// ---------------------------------------------------------------------------
struct EncoderConfig {
  int vocab = 0;
  int d_model = 64;
  int n_heads = 4;
  int ffn_dim = 128;
  int layers = 2;
  int max_len = 512;
};

class Encoder {
 public:
  void init(const EncoderConfig& cfg, Rng& rng);
  struct Cache {
    std::vector<int> ids;
    Mat x0;
    std::vector<EncoderLayer::Cache> layer_caches;
    std::vector<Mat> layer_inputs;
    LayerNorm::Cache final_c;
  };
  Mat forward(const std::vector<int>& ids, Cache& c) const;
  void backward(const Mat& dH, const Cache& c);
  void collect(std::vector<Param*>& out);
  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Param tok_emb_, pos_emb_;
  std::vector<EncoderLayer> layers_;
  LayerNorm final_ln_;
};

// ---------------------------------------------------------------------------
// Sequence-to-sequence model
// ---------------------------------------------------------------------------
struct Seq2SeqConfig {
  int vocab = 0;
  int d_model = 64;
  int n_heads = 4;
  int ffn_dim = 128;
  int enc_layers = 2;
  int dec_layers = 2;
  int max_src = 512;
  int max_tgt = 256;
};

class Seq2Seq {
 public:
  void init(const Seq2SeqConfig& cfg, uint64_t seed);

  // Teacher-forced loss: sum over target positions of -log p(y_i | y_<i, src).
  // The gradient accumulates into every parameter.
  double train_pair(const std::vector<int>& src, const std::vector<int>& tgt_with_eos);
  // Forward-only variants.
  double pair_loss(const std::vector<int>& src, const std::vector<int>& tgt_with_eos) const;
  std::vector<double> token_log_probs(const std::vector<int>& src,
                                      const std::vector<int>& tgt_with_eos) const;

  std::vector<int> greedy_decode(const std::vector<int>& src, int max_out) const;
  std::vector<int> beam_decode(const std::vector<int>& src, int max_out, int beam) const;

  std::vector<Param*> params();
  const Seq2SeqConfig& config() const { return cfg_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  struct DecCache;
  Mat decode_logits(const std::vector<int>& dec_in, const Mat& enc_out, DecCache& c) const;

  Seq2SeqConfig cfg_;
  Encoder encoder_;
  Param dec_tok_emb_, dec_pos_emb_;
  std::vector<DecoderLayer> dec_layers_;
  LayerNorm dec_final_ln_;
  Param w_out_, b_out_;
};

// Row-wise log-softmax of one row vector.
Vec log_softmax_row(const Vec& logits);

// Raw parameter (de)serialization in registration order.
void save_params(std::ostream& out, const std::vector<Param*>& params);
void load_params(std::istream& in, const std::vector<Param*>& params);

}  // namespace aerje::nn
