#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aerje/classifier.hpp"
#include "aerje/dataset.hpp"
#include "aerje/sel.hpp"

namespace aerje {

struct GenerationConfig {
  int max_input_tokens = 512;
  int max_output_tokens = 256;
  int beam_size = 1;  // 1 = greedy
};

struct GenerationResult {
  std::string text;
  bool input_truncated = false;
};

// Text-in/text-out conditional generator with trainable encoder and decoder
// parameters behind it. Deterministic under greedy decoding and fixed seed.
class Seq2SeqAdapter {
 public:
  virtual ~Seq2SeqAdapter() = default;
  virtual GenerationResult generate(const std::string& prompt) = 0;
  // Scoring interface: per-token log probabilities of the target given the
  // prompt, independent of the training path.
  virtual std::vector<double> token_log_probs(const std::string& prompt,
                                              const std::string& target) = 0;
  virtual void save(const std::string& dir) const = 0;
  virtual std::string backbone_name() const = 0;
};

struct TrainPair {
  std::string prompt_text;
  std::string target_sel;  // must parse strictly
};

struct FinetuneConfig {
  int epochs = 50;
  int batch_size = 10;
  double learning_rate = 1e-4;
  double warmup_fraction = 0.06;
  std::string schedule = "linear";
  std::string optimizer = "adam";
  uint64_t seed = 0;
  std::string backbone_name = "tiny";
  GenerationConfig generation;
};

struct FinetuneReport {
  std::vector<double> epoch_mean_loss;  // mean per pair, one entry per epoch
  int truncated_targets = 0;
  int truncated_inputs = 0;
  std::string corpus_fingerprint;
};

// Backbone registry. "stub" memorizes its training table; the tiny-* names
// are trainable transformer presets of increasing width.
std::unique_ptr<Seq2SeqAdapter> make_adapter(const std::string& backbone_name,
                                             const GenerationConfig& generation = {},
                                             uint64_t seed = 0);
std::vector<std::string> available_backbones();

std::unique_ptr<Seq2SeqAdapter> stub_adapter(std::map<std::string, std::string> table = {});

// Loads a checkpoint directory written by Seq2SeqAdapter::save.
std::unique_ptr<Seq2SeqAdapter> load_adapter(const std::string& dir);

enum class PromptMode { Dynamic, Static };

// One pair per example: the prompt per mode and the full gold SEL as target.
// In dynamic mode the prompt is guidance only; gold relation types outside
// the top-n candidates stay in the target.
std::vector<TrainPair> build_training_corpus(const Dataset& dataset, PromptMode mode,
                                             const RelationClassifier* classifier, int top_n = 3);

// Teacher-forcing fine-tuning pass. Empty corpus -> error; zero epochs ->
// the adapter is returned untouched. Over-length prompts/targets truncate
// with a warning count in the report.
FinetuneReport finetune(Seq2SeqAdapter& adapter, const std::vector<TrainPair>& pairs,
                        const FinetuneConfig& config);

// Runs generation and attaches strict-grammar diagnostics to the raw text.
SELSequence generate_sel(Seq2SeqAdapter& adapter, const std::string& prompt_text);

struct ExtractPipeline {
  const RelationClassifier* classifier = nullptr;  // required for dynamic mode
  Seq2SeqAdapter* adapter = nullptr;
  PromptMode mode = PromptMode::Dynamic;
  int top_n = 3;
};

struct ExtractOutcome {
  ExtractionRecord record;
  SELSequence sel;
  std::string prompt;
  // Predicted relations whose type was not offered in the prompt; they are
  // kept (the extractor's output is authoritative) but counted.
  int off_prompt_relations = 0;
};

ExtractOutcome extract(const ExtractPipeline& pipeline, const Sentence& sentence);

}  // namespace aerje
