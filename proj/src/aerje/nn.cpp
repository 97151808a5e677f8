#include "aerje/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "aerje/common.hpp"

namespace aerje::nn {

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

Vocab::Vocab() {
  for (const char* w : {"<pad>", "<unk>", "<bos>", "<eos>", "<cls>"}) add(w);
}

int Vocab::add(const std::string& word) {
  auto it = index.find(word);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(words.size());
  words.push_back(word);
  index.emplace(word, id);
  return id;
}

int Vocab::id(const std::string& word) const {
  auto it = index.find(word);
  return it == index.end() ? kUnk : it->second;
}

std::vector<std::string> Vocab::split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  Vocab v;
  for (const auto& t : texts) {
    for (const auto& w : split_words(t)) v.add(w);
  }
  return v;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& w : split_words(text)) out.push_back(id(w));
  return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) {
    if (i == kPad || i == kBos || i == kEos || i == kCls) continue;
    if (i < 0 || i >= size()) continue;
    if (!out.empty()) out += ' ';
    out += words[static_cast<size_t>(i)];
  }
  return out;
}

void Vocab::save(const std::string& path) const {
  std::string content;
  for (const auto& w : words) {
    content += w;
    content += '\n';
  }
  write_file(path, content);
}

Vocab Vocab::load(const std::string& path) {
  Vocab v;
  auto lines = split_on(read_file(path), '\n');
  size_t i = 0;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    if (i < v.words.size()) {
      // Specials are written first; keep the reserved layout.
      if (v.words[i] != line) fail("vocab file does not start with the reserved specials");
    } else {
      v.add(line);
    }
    ++i;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Param / Adam
// ---------------------------------------------------------------------------

void Param::init(int rows, int cols, double stddev, Rng& rng) {
  w.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) w(r, c) = stddev == 0.0 ? 0.0 : stddev * rng.normal();
  }
  g = Mat::Zero(rows, cols);
  m = Mat::Zero(rows, cols);
  v = Mat::Zero(rows, cols);
}

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(double lr, double grad_scale) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Param* p : params_) {
    Mat g = p->g * grad_scale;
    p->m = beta1_ * p->m + (1.0 - beta1_) * g;
    p->v = beta2_ * p->v + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat m_hat = p->m / bc1;
    Mat v_hat = p->v / bc2;
    p->w -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
    p->zero_grad();
  }
}

double linear_schedule_lr(double base_lr, long step, long total_steps, double warmup_fraction) {
  if (total_steps <= 0) return base_lr;
  long warmup = std::max<long>(1, std::lround(warmup_fraction * static_cast<double>(total_steps)));
  if (step <= warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  double denom = static_cast<double>(total_steps + 1 - warmup);
  return base_lr * static_cast<double>(total_steps + 1 - step) / denom;
}

// ---------------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------------

namespace {
constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.08;
}  // namespace

void LayerNorm::init(int dim, Rng& rng) {
  (void)rng;
  gamma.init(1, dim, 0.0, rng);
  gamma.w.setOnes();
  beta.init(1, dim, 0.0, rng);
}

Mat LayerNorm::forward(const Mat& x, Cache& c) const {
  const auto rows = x.rows();
  const auto dim = x.cols();
  c.x_hat.resize(rows, dim);
  c.inv_std.resize(rows);
  Mat y(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().mean();
    double inv = 1.0 / std::sqrt(var + kLnEps);
    c.inv_std(r) = inv;
    c.x_hat.row(r) = (x.row(r).array() - mean) * inv;
    y.row(r) = c.x_hat.row(r).cwiseProduct(gamma.w.row(0)) + beta.w.row(0);
  }
  return y;
}

Mat LayerNorm::backward(const Mat& dy, const Cache& c) {
  const auto rows = dy.rows();
  const auto dim = dy.cols();
  Mat dx(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r) {
    gamma.g.row(0) += dy.row(r).cwiseProduct(c.x_hat.row(r));
    beta.g.row(0) += dy.row(r);
    Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(gamma.w.row(0));
    double mean_dxhat = dxhat.mean();
    double mean_dxhat_xhat = dxhat.cwiseProduct(c.x_hat.row(r)).mean();
    dx.row(r) = c.inv_std(r) *
                (dxhat.array() - mean_dxhat - c.x_hat.row(r).array() * mean_dxhat_xhat);
  }
  return dx;
}

void LayerNorm::collect(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------------------
// Multi-head attention
// ---------------------------------------------------------------------------

void MultiHeadAttention::init(int d, int heads, Rng& rng) {
  d_model = d;
  n_heads = heads;
  d_head = d / heads;
  if (d_head * heads != d) fail("d_model must be divisible by n_heads");
  wq.init(d, d, kInitStd, rng);
  wk.init(d, d, kInitStd, rng);
  wv.init(d, d, kInitStd, rng);
  wo.init(d, d, kInitStd, rng);
}

namespace {

void softmax_rows_inplace(Mat& scores) {
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    double mx = scores.row(r).maxCoeff();
    scores.row(r) = (scores.row(r).array() - mx).exp();
    scores.row(r) /= scores.row(r).sum();
  }
}

}  // namespace

Mat MultiHeadAttention::forward(const Mat& xq, const Mat& xkv, bool causal, Cache& c) const {
  c.xq = xq;
  c.xkv = xkv;
  c.q = xq * wq.w;
  c.k = xkv * wk.w;
  c.v = xkv * wv.w;
  const auto tq = xq.rows();
  const auto tk = xkv.rows();
  double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
  c.attn.assign(static_cast<size_t>(n_heads), Mat());
  c.concat.resize(tq, d_model);
  for (int h = 0; h < n_heads; ++h) {
    auto qh = c.q.middleCols(h * d_head, d_head);
    auto kh = c.k.middleCols(h * d_head, d_head);
    auto vh = c.v.middleCols(h * d_head, d_head);
    Mat scores = qh * kh.transpose() * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < tq; ++i) {
        for (Eigen::Index j = i + 1; j < tk; ++j) scores(i, j) = -1e30;
      }
    }
    softmax_rows_inplace(scores);
    c.attn[static_cast<size_t>(h)] = scores;
    c.concat.middleCols(h * d_head, d_head) = scores * vh;
  }
  return c.concat * wo.w;
}

void MultiHeadAttention::backward(const Mat& dy, const Cache& c, Mat& dxq, Mat& dxkv,
                                  bool causal) {
  (void)causal;  // masked entries have zero attention, so gradients vanish there
  wo.g += c.concat.transpose() * dy;
  Mat dconcat = dy * wo.w.transpose();

  Mat dq = Mat::Zero(c.q.rows(), c.q.cols());
  Mat dk = Mat::Zero(c.k.rows(), c.k.cols());
  Mat dv = Mat::Zero(c.v.rows(), c.v.cols());
  double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
  for (int h = 0; h < n_heads; ++h) {
    const Mat& attn = c.attn[static_cast<size_t>(h)];
    auto vh = c.v.middleCols(h * d_head, d_head);
    auto qh = c.q.middleCols(h * d_head, d_head);
    auto kh = c.k.middleCols(h * d_head, d_head);
    Mat dctx = dconcat.middleCols(h * d_head, d_head);

    Mat dattn = dctx * vh.transpose();
    dv.middleCols(h * d_head, d_head) += attn.transpose() * dctx;

    // Softmax backward per row: a .* (da - sum(da .* a)).
    Mat dscores(attn.rows(), attn.cols());
    for (Eigen::Index r = 0; r < attn.rows(); ++r) {
      double dot = dattn.row(r).cwiseProduct(attn.row(r)).sum();
      dscores.row(r) = attn.row(r).cwiseProduct(dattn.row(r).array().matrix() -
                                                Eigen::RowVectorXd::Constant(attn.cols(), dot));
    }
    dq.middleCols(h * d_head, d_head) += dscores * kh * scale;
    dk.middleCols(h * d_head, d_head) += dscores.transpose() * qh * scale;
  }
  wq.g += c.xq.transpose() * dq;
  wk.g += c.xkv.transpose() * dk;
  wv.g += c.xkv.transpose() * dv;
  dxq += dq * wq.w.transpose();
  dxkv += dk * wk.w.transpose();
  dxkv += dv * wv.w.transpose();
}

void MultiHeadAttention::collect(std::vector<Param*>& out) {
  out.push_back(&wq);
  out.push_back(&wk);
  out.push_back(&wv);
  out.push_back(&wo);
}

// ---------------------------------------------------------------------------
// Feed-forward
// ---------------------------------------------------------------------------

void FeedForward::init(int d_model, int ffn_dim, Rng& rng) {
  w1.init(d_model, ffn_dim, kInitStd, rng);
  b1.init(1, ffn_dim, 0.0, rng);
  w2.init(ffn_dim, d_model, kInitStd, rng);
  b2.init(1, d_model, 0.0, rng);
}

Mat FeedForward::forward(const Mat& x, Cache& c) const {
  c.x = x;
  c.pre = x * w1.w;
  c.pre.rowwise() += b1.w.row(0);
  Mat act = c.pre.cwiseMax(0.0);
  Mat y = act * w2.w;
  y.rowwise() += b2.w.row(0);
  return y;
}

Mat FeedForward::backward(const Mat& dy, const Cache& c) {
  Mat act = c.pre.cwiseMax(0.0);
  w2.g += act.transpose() * dy;
  b2.g.row(0) += dy.colwise().sum();
  Mat dact = dy * w2.w.transpose();
  Mat dpre = (c.pre.array() > 0.0).cast<double>() * dact.array();
  w1.g += c.x.transpose() * dpre;
  b1.g.row(0) += dpre.colwise().sum();
  return dpre * w1.w.transpose();
}

void FeedForward::collect(std::vector<Param*>& out) {
  out.push_back(&w1);
  out.push_back(&b1);
  out.push_back(&w2);
  out.push_back(&b2);
}

// ---------------------------------------------------------------------------
// Encoder layer
// ---------------------------------------------------------------------------

void EncoderLayer::init(int d_model, int n_heads, int ffn_dim, Rng& rng) {
  self.init(d_model, n_heads, rng);
  ffn.init(d_model, ffn_dim, rng);
  ln1.init(d_model, rng);
  ln2.init(d_model, rng);
}

Mat EncoderLayer::forward(const Mat& x, Cache& c) const {
  Mat a = ln1.forward(x, c.ln1c);
  Mat x1 = x + self.forward(a, a, /*causal=*/false, c.attc);
  Mat b = ln2.forward(x1, c.ln2c);
  return x1 + ffn.forward(b, c.ffnc);
}

Mat EncoderLayer::backward(const Mat& dy, const Cache& c) {
  Mat db = ffn.backward(dy, c.ffnc);
  Mat dx1 = dy + ln2.backward(db, c.ln2c);
  Mat da = Mat::Zero(dx1.rows(), dx1.cols());
  self.backward(dx1, c.attc, da, da, false);
  return dx1 + ln1.backward(da, c.ln1c);
}

void EncoderLayer::collect(std::vector<Param*>& out) {
  self.collect(out);
  ffn.collect(out);
  ln1.collect(out);
  ln2.collect(out);
}

// ---------------------------------------------------------------------------
// Decoder layer
// ---------------------------------------------------------------------------

void DecoderLayer::init(int d_model, int n_heads, int ffn_dim, Rng& rng) {
  self.init(d_model, n_heads, rng);
  cross.init(d_model, n_heads, rng);
  ffn.init(d_model, ffn_dim, rng);
  ln1.init(d_model, rng);
  ln2.init(d_model, rng);
  ln3.init(d_model, rng);
}

Mat DecoderLayer::forward(const Mat& x, const Mat& enc_out, Cache& c) const {
  Mat a = ln1.forward(x, c.ln1c);
  Mat x1 = x + self.forward(a, a, /*causal=*/true, c.selfc);
  Mat b = ln2.forward(x1, c.ln2c);
  Mat x2 = x1 + cross.forward(b, enc_out, /*causal=*/false, c.crossc);
  Mat cc = ln3.forward(x2, c.ln3c);
  return x2 + ffn.forward(cc, c.ffnc);
}

Mat DecoderLayer::backward(const Mat& dy, const Cache& c, Mat& denc) {
  Mat dcc = ffn.backward(dy, c.ffnc);
  Mat dx2 = dy + ln3.backward(dcc, c.ln3c);
  Mat db = Mat::Zero(dx2.rows(), dx2.cols());
  cross.backward(dx2, c.crossc, db, denc, false);
  Mat dx1 = dx2 + ln2.backward(db, c.ln2c);
  Mat da = Mat::Zero(dx1.rows(), dx1.cols());
  self.backward(dx1, c.selfc, da, da, true);
  return dx1 + ln1.backward(da, c.ln1c);
}

void DecoderLayer::collect(std::vector<Param*>& out) {
  self.collect(out);
  cross.collect(out);
  ffn.collect(out);
  ln1.collect(out);
  ln2.collect(out);
  ln3.collect(out);
}

// ---------------------------------------------------------------------------
// Encoder stack
// ---------------------------------------------------------------------------

void Encoder::init(const EncoderConfig& cfg, Rng& rng) {
  cfg_ = cfg;
  tok_emb_.init(cfg.vocab, cfg.d_model, kInitStd, rng);
  pos_emb_.init(cfg.max_len, cfg.d_model, 0.02, rng);
  layers_.resize(static_cast<size_t>(cfg.layers));
  for (auto& l : layers_) l.init(cfg.d_model, cfg.n_heads, cfg.ffn_dim, rng);
  final_ln_.init(cfg.d_model, rng);
}

Mat Encoder::forward(const std::vector<int>& ids, Cache& c) const {
  c.ids = ids;
  const auto t = static_cast<Eigen::Index>(ids.size());
  c.x0.resize(t, cfg_.d_model);
  for (Eigen::Index i = 0; i < t; ++i) {
    c.x0.row(i) = tok_emb_.w.row(ids[static_cast<size_t>(i)]) + pos_emb_.w.row(i);
  }
  c.layer_caches.resize(layers_.size());
  c.layer_inputs.clear();
  Mat x = c.x0;
  for (size_t l = 0; l < layers_.size(); ++l) {
    c.layer_inputs.push_back(x);
    x = layers_[l].forward(x, c.layer_caches[l]);
  }
  c.layer_inputs.push_back(x);
  return final_ln_.forward(x, c.final_c);
}

void Encoder::backward(const Mat& dH, const Cache& c) {
  Mat dx = final_ln_.backward(dH, c.final_c);
  for (size_t l = layers_.size(); l-- > 0;) {
    dx = layers_[l].backward(dx, c.layer_caches[l]);
  }
  for (Eigen::Index i = 0; i < dx.rows(); ++i) {
    tok_emb_.g.row(c.ids[static_cast<size_t>(i)]) += dx.row(i);
    pos_emb_.g.row(i) += dx.row(i);
  }
}

void Encoder::collect(std::vector<Param*>& out) {
  out.push_back(&tok_emb_);
  out.push_back(&pos_emb_);
  for (auto& l : layers_) l.collect(out);
  final_ln_.collect(out);
}

// ---------------------------------------------------------------------------
// Seq2Seq
// ---------------------------------------------------------------------------

struct Seq2Seq::DecCache {
  std::vector<int> ids;
  Mat x0;
  std::vector<DecoderLayer::Cache> layer_caches;
  std::vector<Mat> layer_inputs;
  LayerNorm::Cache final_c;
  Mat final_out;
};

void Seq2Seq::init(const Seq2SeqConfig& cfg, uint64_t seed) {
  cfg_ = cfg;
  Rng rng(seed);
  EncoderConfig ec;
  ec.vocab = cfg.vocab;
  ec.d_model = cfg.d_model;
  ec.n_heads = cfg.n_heads;
  ec.ffn_dim = cfg.ffn_dim;
  ec.layers = cfg.enc_layers;
  ec.max_len = cfg.max_src;
  encoder_.init(ec, rng);
  dec_tok_emb_.init(cfg.vocab, cfg.d_model, kInitStd, rng);
  dec_pos_emb_.init(cfg.max_tgt, cfg.d_model, 0.02, rng);
  dec_layers_.resize(static_cast<size_t>(cfg.dec_layers));
  for (auto& l : dec_layers_) l.init(cfg.d_model, cfg.n_heads, cfg.ffn_dim, rng);
  dec_final_ln_.init(cfg.d_model, rng);
  w_out_.init(cfg.d_model, cfg.vocab, kInitStd, rng);
  b_out_.init(1, cfg.vocab, 0.0, rng);
}

Mat Seq2Seq::decode_logits(const std::vector<int>& dec_in, const Mat& enc_out,
                           DecCache& c) const {
  c.ids = dec_in;
  const auto t = static_cast<Eigen::Index>(dec_in.size());
  c.x0.resize(t, cfg_.d_model);
  for (Eigen::Index i = 0; i < t; ++i) {
    c.x0.row(i) = dec_tok_emb_.w.row(dec_in[static_cast<size_t>(i)]) + dec_pos_emb_.w.row(i);
  }
  c.layer_caches.resize(dec_layers_.size());
  c.layer_inputs.clear();
  Mat x = c.x0;
  for (size_t l = 0; l < dec_layers_.size(); ++l) {
    c.layer_inputs.push_back(x);
    x = dec_layers_[l].forward(x, enc_out, c.layer_caches[l]);
  }
  c.layer_inputs.push_back(x);
  c.final_out = dec_final_ln_.forward(x, c.final_c);
  Mat logits = c.final_out * w_out_.w;
  logits.rowwise() += b_out_.w.row(0);
  return logits;
}

Vec log_softmax_row(const Vec& logits) {
  double mx = logits.maxCoeff();
  Vec shifted = logits.array() - mx;
  double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

namespace {

std::vector<int> teacher_input(const std::vector<int>& tgt_with_eos) {
  std::vector<int> dec_in;
  dec_in.push_back(Vocab::kBos);
  for (size_t i = 0; i + 1 < tgt_with_eos.size(); ++i) dec_in.push_back(tgt_with_eos[i]);
  return dec_in;
}

}  // namespace

double Seq2Seq::train_pair(const std::vector<int>& src, const std::vector<int>& tgt_with_eos) {
  Encoder::Cache ec;
  Mat enc_out = encoder_.forward(src, ec);
  std::vector<int> dec_in = teacher_input(tgt_with_eos);
  DecCache dc;
  Mat logits = decode_logits(dec_in, enc_out, dc);

  double loss = 0.0;
  Mat dlogits(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Vec ls = log_softmax_row(logits.row(i).transpose());
    int label = tgt_with_eos[static_cast<size_t>(i)];
    loss -= ls(label);
    dlogits.row(i) = ls.array().exp().matrix().transpose();
    dlogits(i, label) -= 1.0;
  }

  w_out_.g += dc.final_out.transpose() * dlogits;
  b_out_.g.row(0) += dlogits.colwise().sum();
  Mat dfinal = dlogits * w_out_.w.transpose();
  Mat dx = dec_final_ln_.backward(dfinal, dc.final_c);
  Mat denc = Mat::Zero(enc_out.rows(), enc_out.cols());
  for (size_t l = dec_layers_.size(); l-- > 0;) {
    dx = dec_layers_[l].backward(dx, dc.layer_caches[l], denc);
  }
  for (Eigen::Index i = 0; i < dx.rows(); ++i) {
    dec_tok_emb_.g.row(dc.ids[static_cast<size_t>(i)]) += dx.row(i);
    dec_pos_emb_.g.row(i) += dx.row(i);
  }
  encoder_.backward(denc, ec);
  return loss;
}

double Seq2Seq::pair_loss(const std::vector<int>& src,
                          const std::vector<int>& tgt_with_eos) const {
  double total = 0.0;
  for (double lp : token_log_probs(src, tgt_with_eos)) total -= lp;
  return total;
}

std::vector<double> Seq2Seq::token_log_probs(const std::vector<int>& src,
                                             const std::vector<int>& tgt_with_eos) const {
  Encoder::Cache ec;
  Mat enc_out = encoder_.forward(src, ec);
  DecCache dc;
  Mat logits = decode_logits(teacher_input(tgt_with_eos), enc_out, dc);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Vec ls = log_softmax_row(logits.row(i).transpose());
    out.push_back(ls(tgt_with_eos[static_cast<size_t>(i)]));
  }
  return out;
}

std::vector<int> Seq2Seq::greedy_decode(const std::vector<int>& src, int max_out) const {
  Encoder::Cache ec;
  Mat enc_out = encoder_.forward(src, ec);
  std::vector<int> dec_in{Vocab::kBos};
  std::vector<int> out;
  int limit = std::min(max_out, cfg_.max_tgt - 1);
  for (int step = 0; step < limit; ++step) {
    DecCache dc;
    Mat logits = decode_logits(dec_in, enc_out, dc);
    Eigen::Index best = 0;
    logits.row(logits.rows() - 1).maxCoeff(&best);
    int tok = static_cast<int>(best);
    if (tok == Vocab::kEos) break;
    out.push_back(tok);
    dec_in.push_back(tok);
  }
  return out;
}

std::vector<int> Seq2Seq::beam_decode(const std::vector<int>& src, int max_out, int beam) const {
  if (beam <= 1) return greedy_decode(src, max_out);
  Encoder::Cache ec;
  Mat enc_out = encoder_.forward(src, ec);

  struct Hyp {
    std::vector<int> ids{Vocab::kBos};
    double logp = 0.0;
    bool done = false;
  };
  std::vector<Hyp> beams{Hyp{}};
  int limit = std::min(max_out, cfg_.max_tgt - 1);
  for (int step = 0; step < limit; ++step) {
    bool all_done = true;
    std::vector<Hyp> candidates;
    for (const auto& hyp : beams) {
      if (hyp.done) {
        candidates.push_back(hyp);
        continue;
      }
      all_done = false;
      DecCache dc;
      Mat logits = decode_logits(hyp.ids, enc_out, dc);
      Vec ls = log_softmax_row(logits.row(logits.rows() - 1).transpose());
      std::vector<int> order(static_cast<size_t>(ls.size()));
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (ls(a) != ls(b)) return ls(a) > ls(b);
        return a < b;
      });
      for (int k = 0; k < beam && k < static_cast<int>(order.size()); ++k) {
        Hyp next = hyp;
        next.logp += ls(order[static_cast<size_t>(k)]);
        if (order[static_cast<size_t>(k)] == Vocab::kEos) {
          next.done = true;
        } else {
          next.ids.push_back(order[static_cast<size_t>(k)]);
        }
        candidates.push_back(std::move(next));
      }
    }
    if (all_done) break;
    std::sort(candidates.begin(), candidates.end(), [](const Hyp& a, const Hyp& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return a.ids < b.ids;
    });
    if (static_cast<int>(candidates.size()) > beam) candidates.resize(static_cast<size_t>(beam));
    beams = std::move(candidates);
  }
  const Hyp* best = &beams.front();
  for (const auto& h : beams) {
    if (h.done && !best->done) best = &h;
  }
  std::vector<int> out(best->ids.begin() + 1, best->ids.end());
  return out;
}

std::vector<Param*> Seq2Seq::params() {
  std::vector<Param*> out;
  encoder_.collect(out);
  out.push_back(&dec_tok_emb_);
  out.push_back(&dec_pos_emb_);
  for (auto& l : dec_layers_) l.collect(out);
  dec_final_ln_.collect(out);
  out.push_back(&w_out_);
  out.push_back(&b_out_);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_params(std::ostream& out, const std::vector<Param*>& params) {
  uint64_t count = params.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const Param* p : params) {
    uint64_t rows = static_cast<uint64_t>(p->w.rows());
    uint64_t cols = static_cast<uint64_t>(p->w.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(p->w.data()),
              static_cast<std::streamsize>(sizeof(double) * rows * cols));
  }
}

void load_params(std::istream& in, const std::vector<Param*>& params) {
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != params.size()) fail("checkpoint parameter count mismatch");
  for (Param* p : params) {
    uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (rows != static_cast<uint64_t>(p->w.rows()) ||
        cols != static_cast<uint64_t>(p->w.cols())) {
      fail("checkpoint parameter shape mismatch");
    }
    in.read(reinterpret_cast<char*>(p->w.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!in) fail("truncated checkpoint");
  }
}

void Seq2Seq::save(std::ostream& out) const {
  int32_t header[8] = {cfg_.vocab,     cfg_.d_model,  cfg_.n_heads, cfg_.ffn_dim,
                       cfg_.enc_layers, cfg_.dec_layers, cfg_.max_src, cfg_.max_tgt};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  auto params = const_cast<Seq2Seq*>(this)->params();
  save_params(out, params);
}

void Seq2Seq::load(std::istream& in) {
  int32_t header[8];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) fail("truncated checkpoint header");
  Seq2SeqConfig cfg;
  cfg.vocab = header[0];
  cfg.d_model = header[1];
  cfg.n_heads = header[2];
  cfg.ffn_dim = header[3];
  cfg.enc_layers = header[4];
  cfg.dec_layers = header[5];
  cfg.max_src = header[6];
  cfg.max_tgt = header[7];
  init(cfg, 0);
  load_params(in, params());
}

}  // namespace aerje::nn
