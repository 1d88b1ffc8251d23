#include "csner/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "csner/error.hpp"
#include "csner/utf8.hpp"

namespace csner {

namespace {

std::uint64_t fnv1a(std::string_view a, std::string_view b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::string_view s : {a, b}) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(std::string_view in, std::size_t pos) {
  const std::uint32_t bits = get_u32(in, pos);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void put_strings(std::string& out, const std::vector<std::string>& items) {
  for (const auto& s : items) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
  }
}

std::vector<std::string> get_strings(std::string_view blob, std::size_t count) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (pos + 4 > blob.size()) throw LoadError("checkpoint vocabulary is truncated");
    const std::size_t len = get_u32(blob, pos);
    pos += 4;
    if (pos + len > blob.size()) throw LoadError("checkpoint vocabulary is truncated");
    out.emplace_back(blob.substr(pos, len));
    pos += len;
  }
  if (pos != blob.size()) throw LoadError("checkpoint vocabulary has trailing bytes");
  return out;
}

std::size_t to_size(const std::string& s) {
  if (s.empty()) throw LoadError("checkpoint header: expected a number");
  std::size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw LoadError("checkpoint header: bad number '" + s + "'");
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw LoadError("checkpoint header: bad number '" + s + "'");
  }
  return v;
}

struct BlobRef {
  std::size_t offset = 0;
  std::size_t bytes = 0;
  std::size_t count = 0;
};

struct TensorRef {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
};

}  // namespace

std::string config_to_string(const TrainingConfig& cfg) {
  std::ostringstream s;
  s << "char_dim=" << cfg.dims.char_dim << " char_hidden=" << cfg.dims.char_hidden
    << " word_dim=" << cfg.dims.word_dim << " word_hidden=" << cfg.dims.word_hidden
    << " num_tags=" << cfg.dims.num_tags << " batch_size=" << cfg.batch_size
    << " dropout=" << fmt_double(cfg.dropout) << " learning_rate=" << fmt_double(cfg.learning_rate)
    << " decay=" << fmt_double(cfg.decay)
    << " decay_mode=" << (cfg.decay_mode == DecayMode::kEveryEpoch ? "epoch" : "plateau")
    << " patience=" << cfg.patience << " seed=" << cfg.seed
    << " max_epochs=" << cfg.max_epochs << " float64=" << (cfg.float64 ? 1 : 0)
    << " dev_postprocess=" << (cfg.dev_postprocess ? 1 : 0);
  return s.str();
}

namespace {

TrainingConfig config_from_fields(const std::vector<std::string>& fields) {
  TrainingConfig cfg;
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos) throw LoadError("checkpoint header: bad config entry");
    kv[fields[i].substr(0, eq)] = fields[i].substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw LoadError(std::string("checkpoint config lacks ") + key);
    return it->second;
  };
  cfg.dims.char_dim = to_size(get("char_dim"));
  cfg.dims.char_hidden = to_size(get("char_hidden"));
  cfg.dims.word_dim = to_size(get("word_dim"));
  cfg.dims.word_hidden = to_size(get("word_hidden"));
  cfg.dims.num_tags = to_size(get("num_tags"));
  cfg.batch_size = to_size(get("batch_size"));
  cfg.dropout = to_double(get("dropout"));
  cfg.learning_rate = to_double(get("learning_rate"));
  cfg.decay = to_double(get("decay"));
  const std::string& mode = get("decay_mode");
  if (mode == "epoch") {
    cfg.decay_mode = DecayMode::kEveryEpoch;
  } else if (mode == "plateau") {
    cfg.decay_mode = DecayMode::kOnPlateau;
  } else {
    throw LoadError("checkpoint config: unknown decay_mode '" + mode + "'");
  }
  cfg.patience = to_size(get("patience"));
  cfg.seed = to_size(get("seed"));
  cfg.max_epochs = to_size(get("max_epochs"));
  cfg.float64 = get("float64") == "1";
  cfg.dev_postprocess = get("dev_postprocess") == "1";
  if (kv.size() != 15) throw LoadError("checkpoint config has unknown entries");
  return cfg;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const std::size_t sp = line.find(' ', pos);
    const std::size_t end = sp == std::string_view::npos ? line.size() : sp;
    out.emplace_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  require(c.words != nullptr, "checkpoint has no word table");
  const EmbeddingTable& words = *c.words;

  std::string payload;
  std::string header;
  header += std::string(kCheckpointMagic) + "\n";
  header += "config " + config_to_string(c.config) + "\n";
  header += "epoch " + std::to_string(c.epoch) + "\n";
  header += "dev_score " + fmt_double(c.dev_score) + "\n";
  header += "special_rows " + std::to_string(words.special_rows) + "\n";

  {
    const std::size_t off = payload.size();
    put_strings(payload, words.vocab.tokens());
    header += "vocab words " + std::to_string(off) + " " + std::to_string(payload.size() - off) +
              " " + std::to_string(words.vocab.size()) + "\n";
  }
  {
    std::vector<std::string> chars;
    for (char32_t ch : c.chars.chars()) chars.push_back(utf8::encode(ch));
    const std::size_t off = payload.size();
    put_strings(payload, chars);
    header += "vocab chars " + std::to_string(off) + " " + std::to_string(payload.size() - off) +
              " " + std::to_string(chars.size()) + "\n";
  }
  {
    const std::size_t off = payload.size();
    for (float v : words.vectors) put_f32(payload, v);
    header += "tensor word_vectors " + std::to_string(words.rows()) + " " +
              std::to_string(words.dim) + " " + std::to_string(off) + "\n";
  }
  for (const auto& [name, t] : c.tensors) {
    const std::size_t off = payload.size();
    for (double v : t.values()) put_f32(payload, static_cast<float>(v));
    header += "tensor " + name + " " + std::to_string(t.rows()) + " " + std::to_string(t.cols()) +
              " " + std::to_string(off) + "\n";
  }
  header += "payload " + std::to_string(payload.size()) + "\n";
  char sum[40];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(fnv1a(header, payload)));
  header += "checksum " + std::string(sum) + "\nend\n";
  return header + payload;
}

namespace {

struct ParsedHeader {
  std::size_t header_bytes = 0;
  std::size_t checksummed_bytes = 0;
  std::size_t payload_bytes = 0;
  std::string checksum;
  std::vector<std::vector<std::string>> lines;
};

ParsedHeader read_header(std::string_view bytes) {
  ParsedHeader h;
  std::size_t pos = 0;
  bool first = true;
  for (;;) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw LoadError("checkpoint header is truncated");
    std::string_view line = bytes.substr(pos, nl - pos);
    const std::size_t line_start = pos;
    pos = nl + 1;
    if (first) {
      if (line != kCheckpointMagic) throw LoadError("not a checkpoint (bad magic)");
      first = false;
      continue;
    }
    if (line == "end") break;
    auto fields = split_fields(line);
    if (fields.empty()) throw LoadError("checkpoint header has an empty line");
    if (fields[0] == "checksum") {
      if (fields.size() != 2) throw LoadError("checkpoint header: bad checksum line");
      h.checksum = fields[1];
      h.checksummed_bytes = line_start;
      continue;
    }
    if (fields[0] == "payload") {
      if (fields.size() != 2) throw LoadError("checkpoint header: bad payload line");
      h.payload_bytes = to_size(fields[1]);
    }
    h.lines.push_back(std::move(fields));
  }
  h.header_bytes = pos;
  if (h.checksum.empty()) throw LoadError("checkpoint header lacks a checksum");
  return h;
}

}  // namespace

CheckpointLayout checkpoint_layout(std::string_view bytes) {
  ParsedHeader h = read_header(bytes);
  CheckpointLayout l;
  l.header_bytes = h.header_bytes;
  l.payload_bytes = h.payload_bytes;
  for (const auto& f : h.lines) {
    if (f[0] == "tensor" && f.size() == 5) l.tensor_bytes += to_size(f[2]) * to_size(f[3]) * 4;
    if (f[0] == "vocab" && f.size() == 5) l.vocab_bytes += to_size(f[3]);
  }
  return l;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  ParsedHeader h = read_header(bytes);
  const std::string_view payload = bytes.substr(h.header_bytes);
  if (payload.size() != h.payload_bytes) {
    throw LoadError("checkpoint payload is " + std::to_string(payload.size()) +
                    " bytes, header declares " + std::to_string(h.payload_bytes));
  }
  char sum[40];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a(bytes.substr(0, h.checksummed_bytes), payload)));
  if (h.checksum != sum) throw LoadError("checkpoint checksum mismatch (corrupted file)");

  Checkpoint c;
  std::optional<BlobRef> word_blob, char_blob;
  std::vector<TensorRef> tensors;
  std::size_t special_rows = 0;
  bool have_config = false;
  for (const auto& f : h.lines) {
    const std::string& key = f[0];
    if (key == "config") {
      c.config = config_from_fields(f);
      have_config = true;
    } else if (key == "epoch" && f.size() == 2) {
      c.epoch = to_size(f[1]);
    } else if (key == "dev_score" && f.size() == 2) {
      c.dev_score = to_double(f[1]);
    } else if (key == "special_rows" && f.size() == 2) {
      special_rows = to_size(f[1]);
    } else if (key == "vocab" && f.size() == 5) {
      BlobRef ref{to_size(f[2]), to_size(f[3]), to_size(f[4])};
      if (f[1] == "words") {
        word_blob = ref;
      } else if (f[1] == "chars") {
        char_blob = ref;
      } else {
        throw LoadError("checkpoint header: unknown vocabulary '" + f[1] + "'");
      }
    } else if (key == "tensor" && f.size() == 5) {
      tensors.push_back({f[1], to_size(f[2]), to_size(f[3]), to_size(f[4])});
    } else if (key == "payload") {
      continue;
    } else {
      throw LoadError("checkpoint header: unexpected line '" + key + "'");
    }
  }
  if (!have_config || !word_blob || !char_blob) {
    throw LoadError("checkpoint header is missing required entries");
  }
  auto blob = [&](const BlobRef& r) {
    if (r.offset + r.bytes > payload.size()) throw LoadError("checkpoint blob out of range");
    return payload.substr(r.offset, r.bytes);
  };
  auto table = std::make_shared<EmbeddingTable>();
  {
    auto tokens = get_strings(blob(*word_blob), word_blob->count);
    if (tokens.size() < 2 || tokens[0] != Vocabulary::kPadToken ||
        tokens[1] != Vocabulary::kUnkToken) {
      throw LoadError("checkpoint word vocabulary lacks PAD/UNK");
    }
    for (std::size_t i = 2; i < tokens.size(); ++i) {
      if (table->vocab.add(tokens[i]) != static_cast<int>(i)) {
        throw LoadError("checkpoint word vocabulary has duplicates");
      }
    }
  }
  {
    std::vector<char32_t> chars;
    for (const auto& s : get_strings(blob(*char_blob), char_blob->count)) {
      auto cps = utf8::decode(s);
      if (cps.size() != 1) throw LoadError("checkpoint character vocabulary is malformed");
      chars.push_back(cps[0]);
    }
    c.chars = CharVocabulary(std::move(chars));
    if (c.chars.chars().size() != char_blob->count) {
      throw LoadError("checkpoint character vocabulary has duplicates");
    }
  }
  bool have_words = false;
  for (const auto& t : tensors) {
    const std::size_t bytes_needed = t.rows * t.cols * 4;
    if (t.offset + bytes_needed > payload.size()) {
      throw LoadError("checkpoint tensor '" + t.name + "' runs past the payload");
    }
    if (t.name == "word_vectors") {
      if (t.rows != table->vocab.size()) {
        throw LoadError("checkpoint word_vectors rows disagree with the vocabulary");
      }
      table->dim = t.cols;
      table->vectors.resize(t.rows * t.cols);
      for (std::size_t i = 0; i < table->vectors.size(); ++i) {
        table->vectors[i] = get_f32(payload, t.offset + 4 * i);
      }
      have_words = true;
      continue;
    }
    Tensor value(t.rows, t.cols);
    for (std::size_t i = 0; i < value.size(); ++i) {
      value[i] = static_cast<double>(get_f32(payload, t.offset + 4 * i));
    }
    c.tensors.emplace_back(t.name, std::move(value));
  }
  if (!have_words) throw LoadError("checkpoint lacks word_vectors");
  if (special_rows == 0 || special_rows > table->rows()) {
    throw LoadError("checkpoint special_rows out of range");
  }
  table->special_rows = special_rows;
  c.words = std::move(table);
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint: " + path);
  out << serialize_checkpoint(c);
  if (!out) throw LoadError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_checkpoint(ss.str());
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

}  // namespace csner
