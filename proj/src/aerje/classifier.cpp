#include "aerje/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"
#include "aerje/nn.hpp"
#include "aerje/rng.hpp"

namespace aerje {

using nlohmann::json;
namespace fs = std::filesystem;

std::array<double, kRelationTypeCount> softmax7(const std::array<double, kRelationTypeCount>& z) {
  std::array<double, kRelationTypeCount> out{};
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (int i = 0; i < kRelationTypeCount; ++i) {
    out[static_cast<size_t>(i)] = std::exp(z[static_cast<size_t>(i)] - mx);
    sum += out[static_cast<size_t>(i)];
  }
  for (auto& p : out) p /= sum;
  return out;
}

double classifier_loss(const std::array<double, kRelationTypeCount>& z, int c) {
  if (c < 0 || c >= kRelationTypeCount) fail("classifier loss: class out of range");
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return -z[static_cast<size_t>(c)] + (mx + std::log(sum));
}

void RelationClassifier::save(const std::string&) const {
  fail("this classifier does not support checkpointing");
}

std::vector<std::pair<RelationType, double>> predict_topn(const RelationClassifier& classifier,
                                                          const std::string& text, int n) {
  if (n < 1 || n > kRelationTypeCount)
    fail("predict_topn: n must be in [1, " + std::to_string(kRelationTypeCount) + "], got " +
         std::to_string(n));
  ClassifierOutput out = classifier.classify(text);
  std::vector<int> order(kRelationTypeCount);
  for (int i = 0; i < kRelationTypeCount; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double pa = out.probs[static_cast<size_t>(a)], pb = out.probs[static_cast<size_t>(b)];
    if (pa != pb) return pa > pb;
    return a < b;  // ties go to the enum-earlier type
  });
  std::vector<std::pair<RelationType, double>> result;
  for (int i = 0; i < n; ++i) {
    int idx = order[static_cast<size_t>(i)];
    result.push_back({static_cast<RelationType>(idx), out.probs[static_cast<size_t>(idx)]});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Keyword stub
// ---------------------------------------------------------------------------

namespace {

class KeywordStub : public RelationClassifier {
 public:
  ClassifierOutput classify(const std::string& text) const override {
    static const std::vector<std::pair<std::string, RelationType>> table = {
        {"instead of", RelationType::FunctionReplace},
        {"faster than", RelationType::EfficiencyComparison},
        {"convert", RelationType::TypeConversion},
        {"same as", RelationType::FunctionSimilarity},
        {"similar", RelationType::FunctionSimilarity},
        {"whereas", RelationType::BehaviorDifference},
        {"but", RelationType::BehaviorDifference},
        {"before", RelationType::LogicConstraint},
        {"after", RelationType::LogicConstraint},
        {"need to", RelationType::LogicConstraint},
        {"together", RelationType::FunctionCollaboration},
        {"then", RelationType::FunctionCollaboration},
    };
    std::string low = lower_copy(text);
    std::set<std::string> words;
    for (const auto& w : nn::Vocab::split_words(low)) {
      std::string stripped;
      for (char c : w) {
        if (std::isalnum(static_cast<unsigned char>(c))) stripped.push_back(c);
      }
      if (!stripped.empty()) words.insert(stripped);
    }
    ClassifierOutput out;
    for (const auto& [phrase, type] : table) {
      bool hit = phrase.find(' ') != std::string::npos ? low.find(phrase) != std::string::npos
                                                       : words.count(phrase) > 0;
      if (hit) out.logits[static_cast<size_t>(relation_index(type))] += 4.0;
    }
    out.probs = softmax7(out.logits);
    return out;
  }

  void save(const std::string& dir) const override {
    fs::create_directories(dir);
    json sidecar;
    sidecar["kind"] = "keyword";
    write_file((fs::path(dir) / "sidecar.json").string(), sidecar.dump(2));
  }
};

}  // namespace

std::unique_ptr<RelationClassifier> keyword_stub() { return std::make_unique<KeywordStub>(); }

// ---------------------------------------------------------------------------
// Trainable encoder classifier: token embeddings + transformer encoder, the
// first-position pooled vector through a 7-way linear layer.
// ---------------------------------------------------------------------------

namespace {

struct EncoderPreset {
  nn::EncoderConfig cfg;  // vocab filled at train time
};

EncoderPreset encoder_preset(const std::string& name) {
  EncoderPreset p;
  if (name == "tiny-encoder") {
    p.cfg.d_model = 48;
    p.cfg.n_heads = 4;
    p.cfg.ffn_dim = 96;
    p.cfg.layers = 1;
    p.cfg.max_len = 128;
    return p;
  }
  if (name == "tiny-encoder-small") {
    p.cfg.d_model = 24;
    p.cfg.n_heads = 2;
    p.cfg.ffn_dim = 48;
    p.cfg.layers = 1;
    p.cfg.max_len = 96;
    return p;
  }
  fail("unknown classifier encoder '" + name +
       "' (available: tiny-encoder, tiny-encoder-small)");
}

class TrainedClassifier : public RelationClassifier {
 public:
  TrainedClassifier(nn::Vocab vocab, const nn::EncoderConfig& cfg, uint64_t seed,
                    ClassifierConfig train_cfg)
      : vocab_(std::move(vocab)), train_cfg_(std::move(train_cfg)) {
    Rng rng(seed);
    encoder_.init(cfg, rng);
    head_w_.init(cfg.d_model, kRelationTypeCount, 0.08, rng);
    head_b_.init(1, kRelationTypeCount, 0.0, rng);
  }

  std::vector<int> encode(const std::string& text) const {
    std::vector<int> ids{nn::Vocab::kCls};
    for (int id : vocab_.encode(text)) {
      if (static_cast<int>(ids.size()) >= encoder_.config().max_len) break;
      ids.push_back(id);
    }
    return ids;
  }

  ClassifierOutput classify(const std::string& text) const override {
    nn::Encoder::Cache cache;
    nn::Mat h = encoder_.forward(encode(text), cache);
    Eigen::RowVectorXd logits = h.row(0) * head_w_.w + head_b_.w.row(0);
    ClassifierOutput out;
    for (int i = 0; i < kRelationTypeCount; ++i) out.logits[static_cast<size_t>(i)] = logits(i);
    out.probs = softmax7(out.logits);
    return out;
  }

  // One teacher-forced instance; returns the loss and accumulates grads.
  double train_instance(const std::vector<int>& ids, int label) {
    nn::Encoder::Cache cache;
    nn::Mat h = encoder_.forward(ids, cache);
    Eigen::RowVectorXd logits = h.row(0) * head_w_.w + head_b_.w.row(0);
    std::array<double, kRelationTypeCount> z{};
    for (int i = 0; i < kRelationTypeCount; ++i) z[static_cast<size_t>(i)] = logits(i);
    double loss = classifier_loss(z, label);

    auto probs = softmax7(z);
    Eigen::RowVectorXd dlogits(kRelationTypeCount);
    for (int i = 0; i < kRelationTypeCount; ++i) dlogits(i) = probs[static_cast<size_t>(i)];
    dlogits(label) -= 1.0;

    head_w_.g += h.row(0).transpose() * dlogits;
    head_b_.g.row(0) += dlogits;
    nn::Mat dh = nn::Mat::Zero(h.rows(), h.cols());
    dh.row(0) = dlogits * head_w_.w.transpose();
    encoder_.backward(dh, cache);
    return loss;
  }

  std::vector<nn::Param*> params() {
    std::vector<nn::Param*> out;
    encoder_.collect(out);
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
  }

  void save(const std::string& dir) const override {
    fs::create_directories(dir);
    vocab_.save((fs::path(dir) / "vocab.txt").string());
    std::ofstream bin((fs::path(dir) / "weights.bin").string(), std::ios::binary);
    if (!bin) fail("cannot write classifier weights");
    const auto& cfg = encoder_.config();
    int32_t header[6] = {cfg.vocab, cfg.d_model, cfg.n_heads, cfg.ffn_dim, cfg.layers,
                         cfg.max_len};
    bin.write(reinterpret_cast<const char*>(header), sizeof(header));
    auto ps = const_cast<TrainedClassifier*>(this)->params();
    nn::save_params(bin, ps);

    json sidecar;
    sidecar["kind"] = "tiny-encoder";
    json order = json::array();
    for (auto t : all_relation_types()) order.push_back(std::string(relation_name(t)));
    sidecar["relation_order"] = order;
    sidecar["config"] = {{"encoder_name", train_cfg_.encoder_name},
                         {"learning_rate", train_cfg_.learning_rate},
                         {"epochs", train_cfg_.epochs},
                         {"batch_size", train_cfg_.batch_size},
                         {"seed", train_cfg_.seed}};
    sidecar["metrics"] = {{"epoch_mean_loss", epoch_losses_}};
    write_file((fs::path(dir) / "sidecar.json").string(), sidecar.dump(2));
  }

  static std::unique_ptr<TrainedClassifier> load(const std::string& dir) {
    nn::Vocab vocab = nn::Vocab::load((fs::path(dir) / "vocab.txt").string());
    std::ifstream bin((fs::path(dir) / "weights.bin").string(), std::ios::binary);
    if (!bin) fail("cannot read classifier weights in " + dir);
    int32_t header[6];
    bin.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!bin) fail("truncated classifier checkpoint");
    nn::EncoderConfig cfg;
    cfg.vocab = header[0];
    cfg.d_model = header[1];
    cfg.n_heads = header[2];
    cfg.ffn_dim = header[3];
    cfg.layers = header[4];
    cfg.max_len = header[5];
    auto out = std::make_unique<TrainedClassifier>(std::move(vocab), cfg, 0, ClassifierConfig{});
    auto ps = out->params();
    nn::load_params(bin, ps);
    return out;
  }

  std::vector<double> epoch_losses_;

 private:
  nn::Vocab vocab_;
  nn::Encoder encoder_;
  nn::Param head_w_, head_b_;
  ClassifierConfig train_cfg_;
};

}  // namespace

std::unique_ptr<RelationClassifier> train_classifier(const Dataset& train_set,
                                                     const ClassifierConfig& config,
                                                     ClassifierTrainReport* report) {
  if (train_set.examples.empty()) fail("classifier training set is empty");

  // One instance per distinct relation type present in the sentence.
  std::vector<std::pair<std::string, int>> instances;
  std::vector<std::string> texts;
  for (const auto& ex : train_set.examples) {
    if (ex.record.relations.empty())
      fail("classifier training requires relations in every sentence; '" +
           ex.sentence.sentence_id + "' has none");
    std::set<int> types;
    for (const auto& r : ex.record.relations) types.insert(relation_index(r.relation));
    for (int t : types) instances.push_back({ex.sentence.text, t});
    texts.push_back(ex.sentence.text);
  }

  auto preset = encoder_preset(config.encoder_name);
  nn::Vocab vocab = nn::Vocab::build(texts);
  preset.cfg.vocab = vocab.size();
  auto model = std::make_unique<TrainedClassifier>(std::move(vocab), preset.cfg, config.seed,
                                                   config);
  nn::AdamOptimizer opt(model->params());

  Rng shuffle_rng(config.seed + 1);
  std::vector<size_t> order(instances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  ClassifierTrainReport local;
  local.training_instances = instances.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t batch_count = 0;
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), at + static_cast<size_t>(config.batch_size));
      for (size_t k = at; k < end; ++k) {
        const auto& [text, label] = instances[order[k]];
        epoch_loss += model->train_instance(model->encode(text), label);
      }
      ++batch_count;
      opt.step(config.learning_rate, 1.0 / static_cast<double>(end - at));
    }
    (void)batch_count;
    model->epoch_losses_.push_back(epoch_loss / static_cast<double>(instances.size()));
  }
  if (report) {
    report->epoch_mean_loss = model->epoch_losses_;
    report->training_instances = instances.size();
  }
  return model;
}

std::unique_ptr<RelationClassifier> open_classifier(const std::string& spec) {
  if (spec == "keyword") return keyword_stub();
  fs::path sidecar_path = fs::path(spec) / "sidecar.json";
  if (!fs::exists(sidecar_path)) fail("no classifier found at '" + spec + "'");
  json sidecar = json::parse(read_file(sidecar_path.string()));
  std::string kind = sidecar.value("kind", "");
  if (kind == "keyword") return keyword_stub();
  if (kind == "tiny-encoder") return TrainedClassifier::load(spec);
  fail("unknown classifier kind '" + kind + "' in " + spec);
}

}  // namespace aerje
