#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "aerje/dataset.hpp"
#include "aerje/relations.hpp"

namespace aerje {

// Scores for one sentence; index i maps to the canonical enum order.
struct ClassifierOutput {
  std::array<double, kRelationTypeCount> logits{};
  std::array<double, kRelationTypeCount> probs{};  // softmax(logits)
};

class RelationClassifier {
 public:
  virtual ~RelationClassifier() = default;
  virtual ClassifierOutput classify(const std::string& text) const = 0;
  virtual void save(const std::string& dir) const;
};

// Descending probability, ties broken by canonical enum order. n in [1, 7].
std::vector<std::pair<RelationType, double>> predict_topn(const RelationClassifier& classifier,
                                                          const std::string& text, int n);

// Deterministic phrase-table classifier for hermetic runs. Matched cue
// phrases boost their relation's logit; text with no cue gives uniform probs.
std::unique_ptr<RelationClassifier> keyword_stub();

struct ClassifierConfig {
  std::string encoder_name = "tiny-encoder";
  double learning_rate = 2e-5;
  int epochs = 10;
  int batch_size = 16;
  uint64_t seed = 0;
};

struct ClassifierTrainReport {
  std::vector<double> epoch_mean_loss;
  size_t training_instances = 0;
};

// Trains the encoder-based classifier. Every example must carry at least one
// relation; a sentence with k distinct relation types contributes k
// single-label instances.
std::unique_ptr<RelationClassifier> train_classifier(const Dataset& train_set,
                                                     const ClassifierConfig& config,
                                                     ClassifierTrainReport* report = nullptr);

// Loads a checkpoint directory written by RelationClassifier::save, or the
// keyword stub when spec == "keyword".
std::unique_ptr<RelationClassifier> open_classifier(const std::string& spec);

// Softmax over 7 logits (numerically stabilized).
std::array<double, kRelationTypeCount> softmax7(const std::array<double, kRelationTypeCount>& z);

// The classifier training loss for logits z and gold class c:
//   Loss(z, c) = -z[c] + log(sum_j exp(z[j]))
double classifier_loss(const std::array<double, kRelationTypeCount>& z, int c);

}  // namespace aerje
