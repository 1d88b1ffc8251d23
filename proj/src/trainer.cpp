#include "csner/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "csner/error.hpp"
#include "csner/eval.hpp"
#include "csner/postprocess.hpp"

namespace csner {

void TrainingConfig::validate() const {
  require(dims.char_dim > 0 && dims.char_hidden > 0 && dims.word_dim > 0 &&
              dims.word_hidden > 0 && dims.num_tags > 0,
          "model dimensions must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(decay > 0.0, "decay must be positive");
  require(patience >= 1, "patience must be at least 1");
  require(max_epochs > 0, "max epochs must be positive");
}

std::vector<Batch> make_batches(const std::vector<Example>& examples, std::size_t batch_size,
                                const Vocabulary& vocab, const CharVocabulary& chars) {
  require(batch_size >= 1, "make_batches: batch size must be at least 1");
  require(!examples.empty(), "make_batches: empty dataset");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].size() > examples[b].size();
  });
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<const Example*> ptrs;
    std::vector<std::size_t> keys(order.begin() + static_cast<long>(start),
                                  order.begin() + static_cast<long>(end));
    for (std::size_t k : keys) ptrs.push_back(&examples[k]);
    out.push_back(build_batch(ptrs, keys, vocab, chars));
  }
  return out;
}

double lr_schedule(double lr0, std::size_t epoch, double decay) {
  return lr0 / std::pow(decay, static_cast<double>(epoch));
}

bool EarlyStopping::update(const DevResult& r) {
  ++epochs_;
  if (!best_ || r.better_than(*best_)) {
    best_ = r;
    best_epoch_ = epochs_;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  ++stalls_;
  return false;
}

std::string format_epoch_log(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch %zu lr %.8g loss %.8f dev_f1 %.6f dev_loss %.8f%s\n",
                e.epoch, e.learning_rate, e.loss, e.dev_score, e.dev_loss, e.best ? " *" : "");
  return buf;
}

Checkpoint snapshot(const TaggerModel& model, const TrainingConfig& cfg, std::size_t epoch,
                    double dev_score) {
  Checkpoint c;
  c.config = cfg;
  c.config.dims = model.dims();
  c.epoch = epoch;
  c.dev_score = dev_score;
  c.words = model.word_table_ptr();
  c.chars = model.char_vocab();
  for (const Parameter* p : model.parameters()) c.tensors.emplace_back(p->name, p->value);
  return c;
}

TaggerModel restore(const Checkpoint& c) {
  Rng rng(0);
  TaggerModel model(c.config.dims, c.words, c.chars, rng);
  auto params = model.parameters();
  if (params.size() != c.tensors.size()) {
    throw LoadError("checkpoint holds " + std::to_string(c.tensors.size()) +
                    " tensors, model expects " + std::to_string(params.size()));
  }
  for (const auto& [name, value] : c.tensors) {
    Parameter* p = model.find(name);
    if (!p) throw LoadError("checkpoint tensor '" + name + "' is not a model parameter");
    if (!p->value.same_shape(value)) {
      throw LoadError("checkpoint tensor '" + name + "' has shape " +
                      std::to_string(value.rows()) + "x" + std::to_string(value.cols()) +
                      ", model expects " + std::to_string(p->value.rows()) + "x" +
                      std::to_string(p->value.cols()));
    }
    p->value = value;
    p->zero_grad();
  }
  return model;
}

Trainer::Trainer(TaggerModel& model, TrainingConfig cfg)
    : model_(model), cfg_(std::move(cfg)), rng_(cfg_.seed ^ 0x9E3779B97F4A7C15ull) {
  cfg_.validate();
  if (!cfg_.float64) model_.round_to_float();
}

double Trainer::train_epoch(const std::vector<Batch>& batches, double lr) {
  auto params = model_.parameters();
  double total = 0.0;
  std::size_t tokens = 0;
  for (const Batch& b : batches) {
    model_.zero_grad();
    Tape tape;
    Var loss = model_.loss(tape, b, true, cfg_.dropout, rng_);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw TrainingError("non-finite loss on batch starting at sentence " +
                          std::to_string(b.keys.front() + 1));
    }
    tape.backward(loss);
    adam_.step(params, lr);
    if (!cfg_.float64) model_.round_to_float();
    total += value * static_cast<double>(b.token_count());
    tokens += b.token_count();
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

Checkpoint Trainer::fit(const std::vector<Batch>& batches, const DevScorer& dev_score,
                        const EpochObserver& observer) {
  EarlyStopping stopper(cfg_.patience);
  Checkpoint best;
  for (std::size_t epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch + 1;
    const std::size_t decays =
        cfg_.decay_mode == DecayMode::kEveryEpoch ? epoch : stopper.stalls();
    log.learning_rate = lr_schedule(cfg_.learning_rate, decays, cfg_.decay);
    log.loss = train_epoch(batches, log.learning_rate);
    const DevResult dev = dev_score(model_);
    log.dev_score = dev.score;
    log.dev_loss = dev.loss;
    log.best = stopper.update(dev);
    if (log.best) best = snapshot(model_, cfg_, log.epoch, log.dev_score);
    history_.push_back(log);
    const bool go_on = !observer || observer(log);
    if (!go_on || stopper.stop()) break;
  }
  return best;
}

double dev_harmonic_f1(TaggerModel& model, const std::vector<Example>& dev, const Dataset& gold,
                       bool postprocess, std::size_t batch_size) {
  auto preds = predict_all(model, dev, batch_size);
  Dataset pred = gold;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto tags = to_tags(preds[i]);
    pred.sentences[i].tags = postprocess ? postprocess_sentence(std::move(tags)) : tags;
  }
  return score(gold, pred).harmonic_f1;
}

double mean_loss(TaggerModel& model, const std::vector<Batch>& batches) {
  double total = 0.0;
  std::size_t tokens = 0;
  Rng rng(0);
  for (const Batch& b : batches) {
    Tape tape;
    total += model.loss(tape, b, false, 0.0, rng).value()[0] * static_cast<double>(b.token_count());
    tokens += b.token_count();
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

FitResult fit(const Dataset& train, const Dataset& dev, std::shared_ptr<const EmbeddingTable> words,
              const TrainingConfig& cfg, const Trainer::EpochObserver& observer) {
  cfg.validate();
  require(!train.empty(), "fit: empty training set");
  require(dev.labeled(), "fit: dev set needs gold tags");
  Rng init(cfg.seed);
  TaggerModel model(cfg.dims, words, build_char_vocab(train), init);
  const auto train_ex = make_examples(train, words->vocab);
  const auto dev_ex = make_examples(dev, words->vocab);
  const auto batches = make_batches(train_ex, cfg.batch_size, words->vocab, model.char_vocab());
  const auto dev_batches = make_batches(dev_ex, cfg.batch_size, words->vocab, model.char_vocab());
  Trainer trainer(model, cfg);
  Checkpoint best = trainer.fit(batches, [&](TaggerModel& m) {
    return DevResult{dev_harmonic_f1(m, dev_ex, dev, cfg.dev_postprocess, cfg.batch_size),
                     mean_loss(m, dev_batches)};
  }, observer);
  return {std::move(best), trainer.history()};
}

}  // namespace csner
