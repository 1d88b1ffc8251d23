#include "csner/model.hpp"

#include <algorithm>
#include <map>

#include "csner/error.hpp"
#include "csner/preprocess.hpp"

namespace csner {

std::vector<Example> make_examples(const Dataset& d, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(d.sentences.size());
  for (const auto& s : d.sentences) {
    Example ex;
    ex.surface = s.tokens;
    ex.words.reserve(s.size());
    for (const auto& tok : s.tokens) {
      ex.words.push_back(normalize_token(replace_token(tok), vocab).result);
    }
    if (s.tags) {
      for (const Tag& t : *s.tags) ex.tags.push_back(t.index());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::size_t Batch::length(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < steps; ++t) n += mask[at(b, t)] != 0.0;
  return n;
}

std::size_t Batch::token_count() const {
  std::size_t n = 0;
  for (double m : mask) n += m != 0.0;
  return n;
}

Batch build_batch(std::span<const Example* const> examples, std::span<const std::size_t> keys,
                  const Vocabulary& vocab, const CharVocabulary& chars) {
  require(!examples.empty(), "build_batch: no examples");
  require(keys.size() == examples.size(), "build_batch: one key per example");
  Batch b;
  b.batch = examples.size();
  for (const Example* ex : examples) {
    require(ex->size() > 0, "build_batch: empty sentence");
    require(ex->surface.size() == ex->size(), "build_batch: surface/word length mismatch");
    b.steps = std::max(b.steps, ex->size());
  }
  const bool labeled = !examples[0]->tags.empty();
  const std::size_t cells = b.batch * b.steps;
  b.word_ids.assign(cells, Vocabulary::kPad);
  b.word_ref.assign(cells, -1);
  b.mask.assign(cells, 0.0);
  if (labeled) b.gold.assign(cells, 0);
  b.keys.assign(keys.begin(), keys.end());

  std::map<std::string, int> seen;
  for (std::size_t r = 0; r < b.batch; ++r) {
    const Example& ex = *examples[r];
    require(labeled == !ex.tags.empty(), "build_batch: mixes labeled and unlabeled examples");
    require(!labeled || ex.tags.size() == ex.size(), "build_batch: tag count mismatch");
    for (std::size_t t = 0; t < ex.size(); ++t) {
      const std::size_t cell = b.at(r, t);
      b.word_ids[cell] = vocab.lookup(ex.words[t]);
      b.mask[cell] = 1.0;
      if (labeled) b.gold[cell] = ex.tags[t];
      auto [it, inserted] = seen.emplace(ex.surface[t], static_cast<int>(b.word_chars.size()));
      if (inserted) {
        auto ids = chars.encode(ex.surface[t]);
        require(!ids.empty(), "build_batch: empty surface token");
        b.word_chars.push_back(std::move(ids));
      }
      b.word_ref[cell] = it->second;
    }
  }
  return b;
}

TaggerModel::TaggerModel(ModelDims dims, std::shared_ptr<const EmbeddingTable> words,
                         CharVocabulary chars, Rng& rng, double init)
    : dims_(dims), words_(std::move(words)), chars_(std::move(chars)) {
  require(words_ != nullptr, "model needs a word table");
  require(words_->dim == dims_.word_dim, "word table dimension differs from model word_dim");
  require(words_->special_rows <= words_->rows(), "word table special rows out of range");
  char_embedding = Parameter("char_embedding",
                             uniform_tensor(chars_.size(), dims_.char_dim, init, rng));
  char_fwd = LstmParams("char_fwd", dims_.char_dim, dims_.char_hidden, rng, init);
  char_bwd = LstmParams("char_bwd", dims_.char_dim, dims_.char_hidden, rng, init);
  word_fwd = LstmParams("word_fwd", dims_.word_input(), dims_.word_hidden, rng, init);
  word_bwd = LstmParams("word_bwd", dims_.word_input(), dims_.word_hidden, rng, init);
  out_weight = Parameter("out_weight",
                         uniform_tensor(dims_.encoding(), dims_.num_tags, init, rng));
  out_bias = Parameter("out_bias", uniform_tensor(1, dims_.num_tags, init, rng));
  Tensor special(words_->special_rows, dims_.word_dim);
  for (std::size_t r = 0; r < words_->special_rows; ++r) {
    auto src = words_->row(r);
    for (std::size_t k = 0; k < dims_.word_dim; ++k) special(r, k) = src[k];
  }
  word_special = Parameter("word_special", std::move(special));
}

std::vector<Parameter*> TaggerModel::parameters() {
  std::vector<Parameter*> out{&char_embedding};
  for (LstmParams* l : {&char_fwd, &char_bwd, &word_fwd, &word_bwd}) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  out.push_back(&out_weight);
  out.push_back(&out_bias);
  out.push_back(&word_special);
  return out;
}

std::vector<const Parameter*> TaggerModel::parameters() const {
  auto ps = const_cast<TaggerModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

Parameter* TaggerModel::find(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void TaggerModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

void TaggerModel::round_to_float() {
  for (Parameter* p : parameters()) {
    for (auto& v : p->value.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

Var TaggerModel::char_encode(Tape& tape, const std::vector<std::vector<int>>& words) {
  require(!words.empty(), "char_encode: no words");
  const std::size_t count = words.size();
  std::size_t steps = 0;
  for (const auto& w : words) {
    require(!w.empty(), "char_encode: empty word");
    steps = std::max(steps, w.size());
  }
  std::vector<int> ids(steps * count, CharVocabulary::kPad);
  std::vector<double> mask(steps * count, 0.0);
  for (std::size_t u = 0; u < count; ++u) {
    for (std::size_t l = 0; l < words[u].size(); ++l) {
      const int id = words[u][l];
      require(id >= 0 && static_cast<std::size_t>(id) < chars_.size(),
              "char_encode: character index out of range");
      ids[l * count + u] = id;
      mask[l * count + u] = 1.0;
    }
  }
  Var emb = ad::gather_rows(tape.param(char_embedding), std::move(ids));
  auto fwd = LstmVars::bind(tape, char_fwd);
  auto bwd = LstmVars::bind(tape, char_bwd);
  Var last_fwd = run_lstm(fwd, emb, steps, count, mask, false).final.h;
  Var last_bwd = run_lstm(bwd, emb, steps, count, mask, true).final.h;
  return ad::concat(last_fwd, last_bwd);
}

Var TaggerModel::encode(Tape& tape, const Batch& batch, bool training, double dropout_rate,
                        Rng& rng) {
  const std::size_t B = batch.batch;
  const std::size_t T = batch.steps;
  const std::size_t wd = dims_.word_dim;
  const std::size_t specials = words_->special_rows;

  // time-major views of the batch
  std::vector<double> mask(T * B);
  std::vector<int> ref(T * B);
  std::vector<int> special_ids(T * B);
  Tensor fixed(T * B, wd);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t row = t * B + b;
      const std::size_t cell = batch.at(b, t);
      mask[row] = batch.mask[cell];
      ref[row] = batch.word_ref[cell];
      const int id = batch.word_ids[cell];
      require(id >= 0 && static_cast<std::size_t>(id) < words_->rows(),
              "encode: word index out of range");
      if (static_cast<std::size_t>(id) < specials) {
        special_ids[row] = id;
      } else {
        special_ids[row] = -1;
        auto src = words_->row(static_cast<std::size_t>(id));
        for (std::size_t k = 0; k < wd; ++k) fixed(row, k) = src[k];
      }
    }
  }

  Var chars_unique = char_encode(tape, batch.word_chars);
  Var char_repr = ad::gather_rows(chars_unique, std::move(ref));
  char_repr = dropout(char_repr, dropout_rate, training, rng);

  Var word_repr = ad::add(tape.constant(std::move(fixed)),
                          ad::gather_rows(tape.param(word_special), std::move(special_ids)));
  Var u = ad::concat(word_repr, char_repr);

  auto fwd = LstmVars::bind(tape, word_fwd);
  auto bwd = LstmVars::bind(tape, word_bwd);
  Var hf = run_lstm(fwd, u, T, B, mask, false).outputs;
  Var hb = run_lstm(bwd, u, T, B, mask, true).outputs;
  Var c = ad::concat(hf, hb);
  return dropout(c, dropout_rate, training, rng);
}

Var TaggerModel::logits(Tape& tape, Var encoding) {
  return ad::add_bias(ad::matmul(encoding, tape.param(out_weight)), tape.param(out_bias));
}

Var TaggerModel::loss(Tape& tape, const Batch& batch, bool training, double dropout_rate,
                      Rng& rng) {
  require(batch.labeled(), "loss needs a labeled batch");
  Var z = logits(tape, encode(tape, batch, training, dropout_rate, rng));
  const std::size_t B = batch.batch;
  const std::size_t T = batch.steps;
  std::vector<int> targets(T * B);
  std::vector<double> mask(T * B);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      targets[t * B + b] = batch.gold[batch.at(b, t)];
      mask[t * B + b] = batch.mask[batch.at(b, t)];
    }
  }
  return ad::masked_softmax_cross_entropy(z, std::move(targets), std::move(mask));
}

namespace {

Batch single_batch(const Example& s, const Vocabulary& vocab, const CharVocabulary& chars) {
  Example copy{s.words, s.surface, {}};
  const Example* ptr = &copy;
  const std::size_t key = 0;
  return build_batch(std::span(&ptr, 1), std::span(&key, 1), vocab, chars);
}

}  // namespace

Tensor TaggerModel::char_encode(const std::string& word) {
  Tape tape;
  auto ids = chars_.encode(word);
  require(!ids.empty(), "char_encode: empty word");
  return char_encode(tape, {ids}).value();
}

Tensor TaggerModel::encode_sentence(const Example& sentence) {
  Tape tape;
  Rng rng(0);
  return encode(tape, single_batch(sentence, words_->vocab, chars_), false, 0.0, rng).value();
}

Tensor TaggerModel::tag_logits(const Example& sentence) {
  Tape tape;
  Rng rng(0);
  Var enc = encode(tape, single_batch(sentence, words_->vocab, chars_), false, 0.0, rng);
  return logits(tape, enc).value();
}

std::vector<std::vector<int>> TaggerModel::predict(const Batch& batch) {
  Tape tape;
  Rng rng(0);
  const Tensor& z = logits(tape, encode(tape, batch, false, 0.0, rng)).value();
  std::vector<std::vector<int>> out(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::size_t len = batch.length(b);
    for (std::size_t t = 0; t < len; ++t) {
      auto row = z.row(t * batch.batch + b);
      std::size_t best = 0;
      for (std::size_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[best]) best = c;
      }
      out[b].push_back(static_cast<int>(best));
    }
  }
  return out;
}

std::vector<int> TaggerModel::predict(const Example& sentence) {
  return predict(single_batch(sentence, words_->vocab, chars_)).front();
}

std::vector<std::vector<int>> predict_all(TaggerModel& model, const std::vector<Example>& examples,
                                          std::size_t batch_size) {
  require(batch_size > 0, "predict_all: batch size must be positive");
  std::vector<std::vector<int>> out(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    std::vector<const Example*> ptrs;
    std::vector<std::size_t> keys;
    for (std::size_t i = start; i < end; ++i) {
      ptrs.push_back(&examples[i]);
      keys.push_back(i);
    }
    Batch b = build_batch(ptrs, keys, model.word_table().vocab, model.char_vocab());
    // predictions do not need gold tags
    b.gold.clear();
    auto preds = model.predict(b);
    for (std::size_t r = 0; r < preds.size(); ++r) out[b.keys[r]] = std::move(preds[r]);
  }
  return out;
}

std::vector<Tag> to_tags(const std::vector<int>& ids) {
  std::vector<Tag> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(Tag::from_index(id));
  return out;
}

}  // namespace csner
