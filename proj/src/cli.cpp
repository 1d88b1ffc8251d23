#include "csner/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csner/checkpoint.hpp"
#include "csner/corpus.hpp"
#include "csner/error.hpp"
#include "csner/eval.hpp"
#include "csner/postprocess.hpp"
#include "csner/preprocess.hpp"

namespace csner::cli {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "train",      "dev",         "test",     "vec_eng",    "vec_spa",  "checkpoint",
      "out",        "log",         "prune_to", "seed",       "max_epochs", "hidden",
      "char_hidden", "char_dim",   "batch_size", "dropout",  "lr",       "decay",
      "decay_mode", "patience",   "no_post",     "float64"};
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

bool is_known(const std::string& key) {
  const auto& keys = config_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) {
    throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  }
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path);
  out << data;
}

void require_path(const std::string& value, const char* what) {
  if (value.empty()) throw std::invalid_argument(std::string("missing --") + what);
}

void require_readable(const std::string& path, const char* what) {
  require_path(path, what);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(std::string(what) + " file not readable: " + path);
}

void require_writable(const std::string& path, const char* what) {
  require_path(path, what);
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw LoadError(std::string(what) + " directory does not exist: " + parent.string());
  }
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = normalize_key(trim(std::string_view(t).substr(0, eq)));
    if (!is_known(key)) throw ParseError("unknown config key '" + key + "'", line_no);
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

namespace {

DecayMode to_decay_mode(const std::string& value) {
  if (value == "epoch") return DecayMode::kEveryEpoch;
  if (value == "plateau") return DecayMode::kOnPlateau;
  throw std::invalid_argument("decay_mode: expected 'epoch' or 'plateau', got '" + value + "'");
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  TrainingConfig& tc = cfg.training;
  if (key == "train") cfg.train = value;
  else if (key == "dev") cfg.dev = value;
  else if (key == "test") cfg.test = value;
  else if (key == "vec_eng") cfg.vec_eng = value;
  else if (key == "vec_spa") cfg.vec_spa = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "out") cfg.out = value;
  else if (key == "log") cfg.log = value;
  else if (key == "prune_to") cfg.prune_to = value;
  else if (key == "seed") tc.seed = to_uint(key, value);
  else if (key == "max_epochs") tc.max_epochs = to_uint(key, value);
  else if (key == "hidden") tc.dims.word_hidden = to_uint(key, value);
  else if (key == "char_hidden") tc.dims.char_hidden = to_uint(key, value);
  else if (key == "char_dim") tc.dims.char_dim = to_uint(key, value);
  else if (key == "batch_size") tc.batch_size = to_uint(key, value);
  else if (key == "dropout") tc.dropout = to_real(key, value);
  else if (key == "lr") tc.learning_rate = to_real(key, value);
  else if (key == "decay") tc.decay = to_real(key, value);
  else if (key == "decay_mode") tc.decay_mode = to_decay_mode(value);
  else if (key == "patience") tc.patience = to_uint(key, value);
  else if (key == "no_post") cfg.no_post = to_bool(key, value);
  else if (key == "float64") tc.float64 = to_bool(key, value);
  else throw std::invalid_argument("unknown setting '" + key + "'");
}

namespace {

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_readable(cfg.train, "train");
  require_readable(cfg.dev, "dev");
  require_readable(cfg.vec_eng, "vec-eng");
  require_readable(cfg.vec_spa, "vec-spa");
  if (!cfg.test.empty()) require_readable(cfg.test, "test");
  if (!cfg.prune_to.empty()) require_readable(cfg.prune_to, "prune-to");
  require_writable(cfg.checkpoint, "checkpoint");
  const std::string log_path = cfg.log.empty() ? cfg.checkpoint + ".log" : cfg.log;
  require_writable(log_path, "log");

  const Dataset train = read_conll_file(cfg.train, Split::kTrain);
  const Dataset dev = read_conll_file(cfg.dev, Split::kDev);
  if (train.empty()) throw std::invalid_argument("training corpus is empty");
  if (!dev.labeled()) throw std::invalid_argument("dev corpus needs gold tags");

  auto keep = lookup_candidates(train);
  keep.merge(lookup_candidates(dev));
  if (!cfg.test.empty()) keep.merge(lookup_candidates(read_conll_file(cfg.test, Split::kTest)));
  if (!cfg.prune_to.empty()) keep.merge(lookup_candidates(read_conll_file(cfg.prune_to)));

  err << "loading " << cfg.vec_eng << "\n";
  const EmbeddingTable eng = load_vec(cfg.vec_eng, &keep);
  err << "loading " << cfg.vec_spa << "\n";
  const EmbeddingTable spa = load_vec(cfg.vec_spa, &keep);
  auto words = std::make_shared<const EmbeddingTable>(merge_tables(eng, spa));

  TrainingConfig tc = cfg.training;
  tc.dims.word_dim = words->dim;
  FitResult result = fit(train, dev, words, tc, [&err](const EpochLog& e) {
    err << format_epoch_log(e);
    return true;
  });

  std::string log;
  for (const auto& e : result.history) log += format_epoch_log(e);
  write_file(log_path, log);
  save_checkpoint(result.best, cfg.checkpoint);
  out << "best epoch " << result.best.epoch << " dev harmonic F1 " << percent(result.best.dev_score)
      << " after " << result.history.size() << " epochs\n";
  out << "checkpoint " << cfg.checkpoint << "\nlog " << log_path << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  require_readable(cfg.checkpoint, "checkpoint");
  require_readable(cfg.test, "test");
  if (!cfg.out.empty()) require_writable(cfg.out, "out");
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  TaggerModel model = restore(ckpt);
  Dataset input = read_conll_file(cfg.test, Split::kTest);
  const auto examples = make_examples(input, model.word_table().vocab);
  const auto preds = predict_all(model, examples, ckpt.config.batch_size);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (int id : preds[i]) {
      if (id >= kNumTags) throw LoadError("checkpoint predicts tags outside the tag set");
    }
    auto tags = to_tags(preds[i]);
    input.sentences[i].tags = cfg.no_post ? tags : postprocess_sentence(std::move(tags));
  }
  const std::string text = write_conll(input);
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_file(cfg.out, text);
  }
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path, std::ostream& out) {
  require_readable(gold_path, "gold");
  require_readable(pred_path, "prediction");
  const Dataset gold = read_conll_file(gold_path, Split::kTest);
  const Dataset pred = read_conll_file(pred_path, Split::kTest);
  out << format_report(score(gold, pred));
  return 0;
}

int cmd_stats(const std::vector<std::pair<std::string, std::string>>& inputs, std::ostream& out) {
  if (inputs.empty()) throw std::invalid_argument("stats needs at least one corpus");
  std::vector<DatasetStats> stats;
  for (const auto& [name, path] : inputs) {
    require_readable(path, name.c_str());
    stats.push_back(dataset_stats(read_conll_file(path)));
  }
  auto row = [&](const std::string& label, auto get) {
    out << label;
    for (const auto& s : stats) out << '\t' << get(s);
    out << '\n';
  };
  out << "corpus";
  for (const auto& in : inputs) out << '\t' << in.first;
  out << '\n';
  row("# Sentences", [](const DatasetStats& s) { return s.sentences; });
  row("# Words", [](const DatasetStats& s) { return s.words; });
  for (int c = 0; c < kNumCategories; ++c) {
    std::string name(category_name(static_cast<Category>(c)));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    row("# " + name, [c](const DatasetStats& s) { return s.entities[c]; });
  }
  return 0;
}

int cmd_preprocess(const RunConfig& cfg, const std::string& input_path, std::ostream& out,
                   std::ostream& err) {
  require_readable(input_path, "input");
  require_readable(cfg.vec_eng, "vec-eng");
  require_readable(cfg.vec_spa, "vec-spa");
  if (!cfg.train.empty()) require_readable(cfg.train, "train");
  if (!cfg.out.empty()) require_writable(cfg.out, "out");

  const Dataset input = read_conll_file(input_path);
  auto keep = lookup_candidates(input);
  err << "loading " << cfg.vec_eng << "\n";
  const EmbeddingTable eng = load_vec(cfg.vec_eng, &keep);
  err << "loading " << cfg.vec_spa << "\n";
  const EmbeddingTable spa = load_vec(cfg.vec_spa, &keep);
  const EmbeddingTable merged = merge_tables(eng, spa);

  const Dataset replaced = replace_dataset(input);
  const Dataset normalized = preprocess_dataset(input, merged.vocab);

  struct Row {
    std::string label;
    OovRate rate;
  };
  std::vector<Row> rows;
  if (!cfg.train.empty()) {
    Vocabulary train_vocab;
    for (const auto& s : read_conll_file(cfg.train).sentences) {
      for (const auto& t : s.tokens) train_vocab.add(t);
    }
    rows.push_back({"Corpus", oov_report(input, train_vocab)});
  }
  rows.push_back({"FastText (eng)", oov_report(input, eng.vocab)});
  rows.push_back({"+ FastText (spa)", oov_report(input, merged.vocab)});
  rows.push_back({"+ token replacement", oov_report(replaced, merged.vocab)});
  rows.push_back({"+ token normalization", oov_report(normalized, merged.vocab)});

  const bool entity = input.labeled();
  out << "OOV rate\tAll" << (entity ? "\tEntity" : "") << '\n';
  for (const auto& r : rows) {
    out << r.label << '\t' << percent(r.rate.all());
    if (entity) out << '\t' << percent(r.rate.entity());
    out << '\n';
  }
  if (!cfg.out.empty()) write_conll_file(cfg.out, normalized);
  return 0;
}

int cmd_postprocess(const RunConfig& cfg, const std::string& input_path, std::ostream& out) {
  require_readable(input_path, "input");
  if (!cfg.out.empty()) require_writable(cfg.out, "out");
  Dataset d = read_conll_file(input_path);
  if (!d.labeled()) throw std::invalid_argument("postprocess needs tagged input: " + input_path);
  const std::string text = write_conll(postprocess_dataset(std::move(d)));
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_file(cfg.out, text);
  }
  return 0;
}

struct Settings {
  std::string config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool no_post = false;
  bool float64 = false;
};

void add_settings(CLI::App* app, Settings& s) {
  app->add_option("--config", s.config, "key = value settings file");
  for (const auto& key : config_keys()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (key == "no_post") {
      s.options[key] = app->add_flag(flag, s.no_post, "skip IOB post-processing");
    } else if (key == "float64") {
      s.options[key] = app->add_flag(flag, s.float64, "keep parameters in double precision");
    } else {
      s.options[key] = app->add_option(flag, s.values[key]);
    }
  }
}

RunConfig resolve(const Settings& s) {
  RunConfig cfg;
  if (!s.config.empty()) {
    for (const auto& [k, v] : parse_config_text(read_file(s.config))) apply_setting(cfg, k, v);
  }
  for (const auto& [key, opt] : s.options) {
    if (opt->count() == 0) continue;
    if (key == "no_post") {
      cfg.no_post = s.no_post;
    } else if (key == "float64") {
      cfg.training.float64 = s.float64;
    } else {
      apply_setting(cfg, key, s.values.at(key));
    }
  }
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Named-entity tagger for code-switched English-Spanish text", "csner"};
  app.require_subcommand(1);

  Settings train_s, predict_s, eval_s, stats_s, pre_s, post_s;
  auto* train = app.add_subcommand("train", "train a model and write the best checkpoint");
  add_settings(train, train_s);
  auto* predict = app.add_subcommand("predict", "tag a corpus with a checkpoint");
  add_settings(predict, predict_s);
  auto* eval = app.add_subcommand("eval", "score predictions against gold tags");
  std::vector<std::string> eval_files;
  eval->add_option("files", eval_files, "GOLD PRED")->expected(2)->required();
  add_settings(eval, eval_s);
  auto* stats = app.add_subcommand("stats", "word and entity counts");
  std::vector<std::string> stats_files;
  stats->add_option("files", stats_files, "corpora");
  add_settings(stats, stats_s);
  auto* pre = app.add_subcommand("preprocess", "OOV report and preprocessed corpus");
  std::string pre_input;
  pre->add_option("input", pre_input, "corpus to preprocess")->required();
  add_settings(pre, pre_s);
  auto* post = app.add_subcommand("postprocess", "repair IOB sequences in a tagged corpus");
  std::string post_input;
  post->add_option("input", post_input, "tagged corpus")->required();
  add_settings(post, post_s);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) return cmd_train(resolve(train_s), out, err);
    if (*predict) return cmd_predict(resolve(predict_s), out);
    if (*eval) {
      resolve(eval_s);
      return cmd_eval(eval_files[0], eval_files[1], out);
    }
    if (*stats) {
      RunConfig cfg = resolve(stats_s);
      std::vector<std::pair<std::string, std::string>> inputs;
      if (!cfg.train.empty()) inputs.emplace_back("train", cfg.train);
      if (!cfg.dev.empty()) inputs.emplace_back("dev", cfg.dev);
      if (!cfg.test.empty()) inputs.emplace_back("test", cfg.test);
      for (const auto& f : stats_files) inputs.emplace_back(f, f);
      return cmd_stats(inputs, out);
    }
    if (*pre) return cmd_preprocess(resolve(pre_s), pre_input, out, err);
    if (*post) return cmd_postprocess(resolve(post_s), post_input, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace csner::cli
