#include "aerje/extractor.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "aerje/common.hpp"
#include "aerje/nn.hpp"
#include "aerje/prompt.hpp"
#include "aerje/rng.hpp"

namespace aerje {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Stub adapter: exact-match lookup, "()" for unknown prompts. finetune
// memorizes the supplied pairs.
// ---------------------------------------------------------------------------

namespace {

class StubAdapter : public Seq2SeqAdapter {
 public:
  explicit StubAdapter(std::map<std::string, std::string> table) : table_(std::move(table)) {}

  GenerationResult generate(const std::string& prompt) override {
    auto it = table_.find(prompt);
    return {it == table_.end() ? "()" : it->second, false};
  }

  std::vector<double> token_log_probs(const std::string& prompt,
                                      const std::string& target) override {
    // The stub is a delta distribution over its table.
    auto it = table_.find(prompt);
    std::string answer = it == table_.end() ? "()" : it->second;
    size_t n = nn::Vocab::split_words(target).size() + 1;
    return std::vector<double>(n, answer == target ? 0.0 : -30.0);
  }

  void memorize(const std::vector<TrainPair>& pairs) {
    for (const auto& p : pairs) table_[p.prompt_text] = p.target_sel;
  }

  void save(const std::string& dir) const override {
    fs::create_directories(dir);
    json sidecar;
    sidecar["kind"] = "stub";
    write_file((fs::path(dir) / "sidecar.json").string(), sidecar.dump(2));
    json table;
    for (const auto& [k, v] : table_) table[k] = v;
    write_file((fs::path(dir) / "table.json").string(), table.dump(2));
  }

  std::string backbone_name() const override { return "stub"; }

 private:
  std::map<std::string, std::string> table_;
};

// ---------------------------------------------------------------------------
// Tiny trainable transformer adapter
// ---------------------------------------------------------------------------

struct BackbonePreset {
  nn::Seq2SeqConfig cfg;  // vocab filled at finetune time
};

BackbonePreset backbone_preset(const std::string& name, const GenerationConfig& gen) {
  BackbonePreset p;
  p.cfg.max_src = gen.max_input_tokens;
  p.cfg.max_tgt = gen.max_output_tokens + 2;
  if (name == "tiny") {
    p.cfg.d_model = 64;
    p.cfg.n_heads = 4;
    p.cfg.ffn_dim = 128;
    p.cfg.enc_layers = 2;
    p.cfg.dec_layers = 2;
    return p;
  }
  if (name == "tiny-small") {
    p.cfg.d_model = 32;
    p.cfg.n_heads = 2;
    p.cfg.ffn_dim = 64;
    p.cfg.enc_layers = 1;
    p.cfg.dec_layers = 1;
    return p;
  }
  if (name == "tiny-wide") {
    p.cfg.d_model = 96;
    p.cfg.n_heads = 6;
    p.cfg.ffn_dim = 192;
    p.cfg.enc_layers = 3;
    p.cfg.dec_layers = 3;
    return p;
  }
  fail("unknown backbone '" + name + "' (available: " + join_with(available_backbones(), ", ") +
       ")");
}

class TinyAdapter : public Seq2SeqAdapter {
 public:
  TinyAdapter(std::string name, const GenerationConfig& gen, uint64_t seed)
      : name_(std::move(name)), gen_(gen), seed_(seed) {}

  bool trained() const { return trained_; }

  std::vector<int> encode_src(const std::string& prompt, bool* truncated) const {
    auto ids = vocab_.encode(prompt);
    if (static_cast<int>(ids.size()) > model_.config().max_src) {
      ids.resize(static_cast<size_t>(model_.config().max_src));
      if (truncated) *truncated = true;
    }
    return ids;
  }

  std::vector<int> encode_tgt(const std::string& target, bool* truncated) const {
    auto ids = vocab_.encode(target);
    if (static_cast<int>(ids.size()) > model_.config().max_tgt - 1) {
      ids.resize(static_cast<size_t>(model_.config().max_tgt - 1));
      if (truncated) *truncated = true;
    }
    ids.push_back(nn::Vocab::kEos);
    return ids;
  }

  GenerationResult generate(const std::string& prompt) override {
    if (!trained_) fail("backbone '" + name_ + "' has no trained weights; fine-tune or load first");
    GenerationResult result;
    auto src = encode_src(prompt, &result.input_truncated);
    if (src.empty()) src.push_back(nn::Vocab::kUnk);
    auto out = gen_.beam_size > 1 ? model_.beam_decode(src, gen_.max_output_tokens, gen_.beam_size)
                                  : model_.greedy_decode(src, gen_.max_output_tokens);
    result.text = vocab_.decode(out);
    return result;
  }

  std::vector<double> token_log_probs(const std::string& prompt,
                                      const std::string& target) override {
    if (!trained_) fail("backbone '" + name_ + "' has no trained weights");
    auto src = encode_src(prompt, nullptr);
    if (src.empty()) src.push_back(nn::Vocab::kUnk);
    return model_.token_log_probs(src, encode_tgt(target, nullptr));
  }

  FinetuneReport run_finetune(const std::vector<TrainPair>& pairs, const FinetuneConfig& cfg) {
    if (!trained_) {
      std::vector<std::string> texts;
      for (const auto& p : pairs) {
        texts.push_back(p.prompt_text);
        texts.push_back(p.target_sel);
      }
      // "()" is what fault recovery falls back to; keep it in vocabulary.
      texts.push_back("()");
      vocab_ = nn::Vocab::build(texts);
      auto preset = backbone_preset(name_, gen_);
      preset.cfg.vocab = vocab_.size();
      model_.init(preset.cfg, seed_);
      trained_ = true;
    }

    FinetuneReport report;
    std::vector<std::vector<int>> srcs, tgts;
    for (const auto& p : pairs) {
      bool tsrc = false, ttgt = false;
      srcs.push_back(encode_src(p.prompt_text, &tsrc));
      tgts.push_back(encode_tgt(p.target_sel, &ttgt));
      if (srcs.back().empty()) srcs.back().push_back(nn::Vocab::kUnk);
      report.truncated_inputs += tsrc ? 1 : 0;
      report.truncated_targets += ttgt ? 1 : 0;
    }

    nn::AdamOptimizer opt(model_.params());
    Rng shuffle_rng(cfg.seed + 17);
    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    long steps_per_epoch =
        static_cast<long>((pairs.size() + static_cast<size_t>(cfg.batch_size) - 1) /
                          static_cast<size_t>(cfg.batch_size));
    long total_steps = steps_per_epoch * cfg.epochs;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double epoch_loss = 0.0;
      for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch_size)) {
        size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch_size));
        for (size_t k = at; k < end; ++k) {
          epoch_loss += model_.train_pair(srcs[order[k]], tgts[order[k]]);
        }
        ++step;
        double lr = cfg.schedule == "linear"
                        ? nn::linear_schedule_lr(cfg.learning_rate, step, total_steps,
                                                 cfg.warmup_fraction)
                        : cfg.learning_rate;
        opt.step(lr, 1.0 / static_cast<double>(end - at));
      }
      report.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));
    }
    epoch_losses_ = report.epoch_mean_loss;
    return report;
  }

  void save(const std::string& dir) const override {
    if (!trained_) fail("cannot save an untrained backbone");
    fs::create_directories(dir);
    vocab_.save((fs::path(dir) / "vocab.txt").string());
    std::ofstream bin((fs::path(dir) / "weights.bin").string(), std::ios::binary);
    if (!bin) fail("cannot write adapter weights");
    model_.save(bin);
    json sidecar;
    sidecar["kind"] = "tiny-seq2seq";
    sidecar["backbone"] = name_;
    sidecar["generation"] = {{"max_input_tokens", gen_.max_input_tokens},
                             {"max_output_tokens", gen_.max_output_tokens},
                             {"beam_size", gen_.beam_size}};
    sidecar["metrics"] = {{"epoch_mean_loss", epoch_losses_}};
    sidecar["corpus_fingerprint"] = corpus_fingerprint_;
    write_file((fs::path(dir) / "sidecar.json").string(), sidecar.dump(2));
  }

  static std::unique_ptr<TinyAdapter> load(const std::string& dir) {
    json sidecar = json::parse(read_file((fs::path(dir) / "sidecar.json").string()));
    GenerationConfig gen;
    gen.max_input_tokens = sidecar["generation"].value("max_input_tokens", 512);
    gen.max_output_tokens = sidecar["generation"].value("max_output_tokens", 256);
    gen.beam_size = sidecar["generation"].value("beam_size", 1);
    auto out = std::make_unique<TinyAdapter>(sidecar.value("backbone", "tiny"), gen, 0);
    out->vocab_ = nn::Vocab::load((fs::path(dir) / "vocab.txt").string());
    std::ifstream bin((fs::path(dir) / "weights.bin").string(), std::ios::binary);
    if (!bin) fail("cannot read adapter weights in " + dir);
    out->model_.load(bin);
    out->trained_ = true;
    return out;
  }

  std::string backbone_name() const override { return name_; }

  std::string corpus_fingerprint_;
  std::vector<double> epoch_losses_;

 private:
  std::string name_;
  GenerationConfig gen_;
  uint64_t seed_;
  nn::Vocab vocab_;
  nn::Seq2Seq model_;
  bool trained_ = false;
};

}  // namespace

std::vector<std::string> available_backbones() {
  return {"stub", "tiny", "tiny-small", "tiny-wide"};
}

std::unique_ptr<Seq2SeqAdapter> stub_adapter(std::map<std::string, std::string> table) {
  return std::make_unique<StubAdapter>(std::move(table));
}

std::unique_ptr<Seq2SeqAdapter> make_adapter(const std::string& backbone_name,
                                             const GenerationConfig& generation, uint64_t seed) {
  if (backbone_name == "stub") return stub_adapter();
  backbone_preset(backbone_name, generation);  // validates the name
  return std::make_unique<TinyAdapter>(backbone_name, generation, seed);
}

std::unique_ptr<Seq2SeqAdapter> load_adapter(const std::string& dir) {
  fs::path sidecar_path = fs::path(dir) / "sidecar.json";
  if (!fs::exists(sidecar_path)) fail("no adapter checkpoint at '" + dir + "'");
  json sidecar = json::parse(read_file(sidecar_path.string()));
  std::string kind = sidecar.value("kind", "");
  if (kind == "stub") {
    std::map<std::string, std::string> table;
    fs::path table_path = fs::path(dir) / "table.json";
    if (fs::exists(table_path)) {
      json t = json::parse(read_file(table_path.string()));
      for (auto it = t.begin(); it != t.end(); ++it) table[it.key()] = it.value();
    }
    return stub_adapter(std::move(table));
  }
  if (kind == "tiny-seq2seq") return TinyAdapter::load(dir);
  fail("unknown adapter kind '" + kind + "' in " + dir);
}

// ---------------------------------------------------------------------------
// Corpus construction, fine-tuning, generation, end-to-end extraction
// ---------------------------------------------------------------------------

std::vector<TrainPair> build_training_corpus(const Dataset& dataset, PromptMode mode,
                                             const RelationClassifier* classifier, int top_n) {
  if (mode == PromptMode::Dynamic && classifier == nullptr)
    fail("dynamic prompt corpus needs a classifier");
  std::vector<TrainPair> pairs;
  pairs.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    Prompt p = mode == PromptMode::Static
                   ? build_static_prompt(ex.sentence.text)
                   : build_dynamic_prompt(ex.sentence.text, *classifier, top_n);
    pairs.push_back({render(p), encode_sel(ex.record)});
  }
  return pairs;
}

FinetuneReport finetune(Seq2SeqAdapter& adapter, const std::vector<TrainPair>& pairs,
                        const FinetuneConfig& config) {
  if (pairs.empty()) fail("finetune: empty training corpus");
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : pairs) {
    h = fnv1a64(p.prompt_text, h);
    h = fnv1a64(p.target_sel, h);
  }
  std::string fingerprint = to_hex(h);

  if (config.epochs == 0) {
    FinetuneReport report;
    report.corpus_fingerprint = fingerprint;
    return report;  // identity: the adapter is untouched
  }
  FinetuneReport report;
  if (auto* stub = dynamic_cast<StubAdapter*>(&adapter)) {
    stub->memorize(pairs);
    report.epoch_mean_loss.assign(static_cast<size_t>(config.epochs), 0.0);
  } else if (auto* tiny = dynamic_cast<TinyAdapter*>(&adapter)) {
    report = tiny->run_finetune(pairs, config);
    tiny->corpus_fingerprint_ = fingerprint;
  } else {
    fail("finetune: unsupported adapter implementation");
  }
  report.corpus_fingerprint = fingerprint;
  return report;
}

SELSequence generate_sel(Seq2SeqAdapter& adapter, const std::string& prompt_text) {
  GenerationResult g;
  try {
    g = adapter.generate(prompt_text);
  } catch (const Error& e) {
    fail(std::string("generation backend failure: ") + e.what());
  }
  SELSequence seq;
  seq.text = g.text;
  seq.diagnostics = validate_sel(g.text);
  return seq;
}

ExtractOutcome extract(const ExtractPipeline& pipeline, const Sentence& sentence) {
  if (pipeline.adapter == nullptr) fail("extract: adapter not loaded");
  ExtractOutcome out;
  Prompt prompt;
  if (pipeline.mode == PromptMode::Static) {
    prompt = build_static_prompt(sentence.text);
  } else {
    if (pipeline.classifier == nullptr) fail("extract: dynamic mode needs a classifier");
    prompt = build_dynamic_prompt(sentence.text, *pipeline.classifier, pipeline.top_n);
  }
  out.prompt = render(prompt);
  out.sel = generate_sel(*pipeline.adapter, out.prompt);
  std::vector<SELDiagnostic> decode_diags;
  out.record = decode_sel(out.sel.text, sentence, &decode_diags);
  out.sel.diagnostics = std::move(decode_diags);

  std::set<int> offered;
  for (auto t : prompt.relation_types) offered.insert(relation_index(t));
  for (const auto& r : out.record.relations) {
    if (!offered.count(relation_index(r.relation))) ++out.off_prompt_relations;
  }
  return out;
}

}  // namespace aerje
