#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csner/model.hpp"
#include "csner/nn.hpp"

namespace csner {

/// When the learning rate is divided by `decay`: after every epoch, or only
/// after epochs that did not improve the dev score.
enum class DecayMode { kEveryEpoch, kOnPlateau };

struct TrainingConfig {
  ModelDims dims;
  std::size_t batch_size = 64;
  double dropout = 0.4;
  double learning_rate = 0.01;
  double decay = std::sqrt(2.0);
  DecayMode decay_mode = DecayMode::kOnPlateau;
  std::size_t patience = 2;
  std::uint64_t seed = 1;
  std::size_t max_epochs = 50;
  bool float64 = false;  // keep parameters in double instead of rounding to float
  bool dev_postprocess = true;

  /// Throws ContractViolation on non-positive sizes/rates or patience < 1.
  void validate() const;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Stable sort by length (longest first), then consecutive chunks of
/// `batch_size`, each padded to its own longest sentence.
std::vector<Batch> make_batches(const std::vector<Example>& examples, std::size_t batch_size,
                                const Vocabulary& vocab, const CharVocabulary& chars);

/// lr0 / decay^epoch.
double lr_schedule(double lr0, std::size_t epoch, double decay = std::sqrt(2.0));

/// Dev-set measurement after an epoch. A result improves on another when its
/// score is higher, or the score ties and the loss is lower.
struct DevResult {
  double score = 0.0;
  double loss = 0.0;

  bool better_than(const DevResult& o) const {
    return score > o.score || (score == o.score && loss < o.loss);
  }
};

/// Tracks the best dev result; stop() once `patience` epochs in a row failed
/// to beat it.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when `r` is a new best.
  bool update(const DevResult& r);
  bool update(double score) { return update(DevResult{score, 0.0}); }
  bool stop() const { return bad_epochs_ >= patience_; }
  std::optional<DevResult> best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  /// Epochs so far that did not improve.
  std::size_t stalls() const { return stalls_; }

 private:
  std::size_t patience_;
  std::size_t bad_epochs_ = 0;
  std::size_t stalls_ = 0;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::optional<DevResult> best_;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double loss = 0.0;
  double dev_score = 0.0;
  double dev_loss = 0.0;
  bool best = false;
};

std::string format_epoch_log(const EpochLog& e);

/// Snapshot of a trained model.
struct Checkpoint {
  TrainingConfig config;
  std::size_t epoch = 0;
  double dev_score = 0.0;
  std::shared_ptr<const EmbeddingTable> words;
  CharVocabulary chars;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

Checkpoint snapshot(const TaggerModel& model, const TrainingConfig& cfg, std::size_t epoch,
                    double dev_score);
/// Rebuilds a model whose parameters equal the checkpoint tensors.
TaggerModel restore(const Checkpoint& c);

class Trainer {
 public:
  Trainer(TaggerModel& model, TrainingConfig cfg);

  /// One pass over `batches`: forward, loss, backward, Adam. Returns the
  /// token-weighted mean loss. Throws TrainingError on a non-finite loss.
  double train_epoch(const std::vector<Batch>& batches, double lr);

  using DevScorer = std::function<DevResult(TaggerModel&)>;
  /// Called after every epoch; returning false ends training.
  using EpochObserver = std::function<bool(const EpochLog&)>;

  /// Trains until early stopping or max_epochs; returns the best checkpoint.
  Checkpoint fit(const std::vector<Batch>& batches, const DevScorer& dev_score,
                 const EpochObserver& observer = {});

  const std::vector<EpochLog>& history() const { return history_; }
  Adam& optimizer() { return adam_; }
  Rng& rng() { return rng_; }

 private:
  TaggerModel& model_;
  TrainingConfig cfg_;
  Adam adam_;
  Rng rng_;
  std::vector<EpochLog> history_;
};

/// Harmonic-mean F1 of the model's (optionally post-processed) predictions.
double dev_harmonic_f1(TaggerModel& model, const std::vector<Example>& dev, const Dataset& gold,
                       bool postprocess, std::size_t batch_size = 64);

/// Token-weighted mean cross-entropy in inference mode.
double mean_loss(TaggerModel& model, const std::vector<Batch>& batches);

/// Builds a model for `cfg` over the given tables and fits it.
struct FitResult {
  Checkpoint best;
  std::vector<EpochLog> history;
};
FitResult fit(const Dataset& train, const Dataset& dev, std::shared_ptr<const EmbeddingTable> words,
              const TrainingConfig& cfg, const Trainer::EpochObserver& observer = {});

}  // namespace csner
