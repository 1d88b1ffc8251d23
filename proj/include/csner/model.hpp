#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csner/autodiff.hpp"
#include "csner/corpus.hpp"
#include "csner/embeddings.hpp"
#include "csner/nn.hpp"

namespace csner {

struct ModelDims {
  std::size_t char_dim = 150;
  std::size_t char_hidden = 150;  // per direction
  std::size_t word_dim = 300;
  std::size_t word_hidden = 200;  // per direction
  std::size_t num_tags = kNumTags;

  std::size_t char_repr() const { return 2 * char_hidden; }
  std::size_t word_input() const { return word_dim + char_repr(); }
  std::size_t encoding() const { return 2 * word_hidden; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// One sentence as the model sees it: normalized words for the vector lookup,
/// surface tokens for the character encoder, optional gold tag indices.
struct Example {
  std::vector<std::string> words;
  std::vector<std::string> surface;
  std::vector<int> tags;

  std::size_t size() const { return words.size(); }
};

/// Preprocesses `d` against `vocab` and keeps the raw tokens alongside.
std::vector<Example> make_examples(const Dataset& d, const Vocabulary& vocab);

/// Padded batch. Matrices are row-major B x T; mask(b, t) = 1 iff t < length b.
/// Characters are stored once per distinct surface word.
struct Batch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<int> word_ids;      // B x T, PAD in padded cells
  std::vector<int> word_ref;      // B x T index into words_chars, -1 in padded cells
  std::vector<std::vector<int>> word_chars;
  std::vector<double> mask;       // B x T
  std::vector<int> gold;          // B x T, 0 in padded cells; empty when unlabeled
  std::vector<std::size_t> keys;  // source position of each row

  std::size_t at(std::size_t b, std::size_t t) const { return b * steps + t; }
  std::size_t length(std::size_t b) const;
  std::size_t token_count() const;
  bool labeled() const { return !gold.empty(); }
};

/// Pads `examples` to their longest member. keys[i] is stored per row.
Batch build_batch(std::span<const Example* const> examples, std::span<const std::size_t> keys,
                  const Vocabulary& vocab, const CharVocabulary& chars);

/// Bilingual character BiLSTM feeding a word-level BiLSTM tagger.
class TaggerModel {
 public:
  TaggerModel(ModelDims dims, std::shared_ptr<const EmbeddingTable> words, CharVocabulary chars,
              Rng& rng, double init = 0.1);

  const ModelDims& dims() const { return dims_; }
  const EmbeddingTable& word_table() const { return *words_; }
  std::shared_ptr<const EmbeddingTable> word_table_ptr() const { return words_; }
  const CharVocabulary& char_vocab() const { return chars_; }

  /// Trainable tensors in a fixed order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(const std::string& name);

  void zero_grad();
  /// Rounds every parameter to the nearest float.
  void round_to_float();

  /// Character encoding of a batch of words: U x 2*char_hidden.
  Var char_encode(Tape& tape, const std::vector<std::vector<int>>& words);
  /// Word-level encodings c_t, time-major (row t*B + b), T*B x 2*word_hidden.
  Var encode(Tape& tape, const Batch& batch, bool training, double dropout_rate, Rng& rng);
  /// Affine tag scores, time-major, T*B x num_tags.
  Var logits(Tape& tape, Var encoding);
  /// Mean masked cross-entropy over the real tokens of a labeled batch.
  Var loss(Tape& tape, const Batch& batch, bool training, double dropout_rate, Rng& rng);

  /// Single-sentence conveniences (inference mode).
  Tensor char_encode(const std::string& word);
  Tensor encode_sentence(const Example& sentence);
  Tensor tag_logits(const Example& sentence);
  std::vector<int> predict(const Example& sentence);

  /// Argmax per real token, lowest index on ties; one vector per batch row.
  std::vector<std::vector<int>> predict(const Batch& batch);

  Parameter char_embedding;
  LstmParams char_fwd;
  LstmParams char_bwd;
  LstmParams word_fwd;
  LstmParams word_bwd;
  Parameter out_weight;
  Parameter out_bias;
  /// Trainable leading rows of the word table (PAD, UNK, USR, URL).
  Parameter word_special;

 private:
  ModelDims dims_;
  std::shared_ptr<const EmbeddingTable> words_;
  CharVocabulary chars_;
};

/// Batched inference over many examples; results in input order.
std::vector<std::vector<int>> predict_all(TaggerModel& model, const std::vector<Example>& examples,
                                          std::size_t batch_size = 64);

std::vector<Tag> to_tags(const std::vector<int>& ids);

}  // namespace csner
