#include "csner/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "csner/error.hpp"

namespace csner {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, &p, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> inputs,
                 std::function<void(std::size_t)> backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    require(&v.tape() == this, "op mixes vars from different tapes");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr,
                        needs ? std::move(backward) : std::function<void(std::size_t)>{}});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  require(&out.tape() == this, "backward on foreign var");
  require(out.value().size() == 1, "backward needs a scalar output");
  grad(out.id()).fill(1.0);
  for (std::size_t id = out.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(id);
    if (n.param) n.param->grad.add(n.grad);
  }
}

namespace ad {

namespace {

Tape& tape_of(Var a) { return a.tape(); }

void check_same_shape(Var a, Var b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ContractViolation(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  Tensor out;
  gemm(a.value(), false, b.value(), false, out, false);
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [&t, a, b](std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) gemm(g, false, b.value(), true, t.grad(a.id()), true);
    if (t.requires_grad(b.id())) gemm(a.value(), true, g, false, t.grad(b.id()), true);
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  out.add(b.value());
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [&t, a, b](std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) t.grad(a.id()).add(g);
    if (t.requires_grad(b.id())) t.grad(b.id()).add(g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [&t, a, b](std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) t.grad(a.id()).add(g);
    if (t.requires_grad(b.id())) {
      Tensor& gb = t.grad(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [&t, a, b](std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) {
      Tensor& ga = t.grad(a.id());
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id())) {
      Tensor& gb = t.grad(b.id());
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias: bias must be 1 x cols");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  const std::size_t n = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r, c) += bias.value()[c];
  }
  const Var in[] = {a, bias};
  return t.record(std::move(out), in, [&t, a, bias](std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) t.grad(a.id()).add(g);
    if (t.requires_grad(bias.id())) {
      Tensor& gb = t.grad(bias.id());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      }
    }
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  const Var in[] = {a};
  return t.record(std::move(out), in, [&t, a](std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  const Var in[] = {a};
  return t.record(std::move(out), in, [&t, a](std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var concat(std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<long>(off));
    }
    off += v.cols();
  }
  std::vector<Var> in(parts.begin(), parts.end());
  return t.record(std::move(out), in, [&t, in](std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : in) {
      const std::size_t pc = p.cols();
      if (t.requires_grad(p.id())) {
        Tensor& gp = t.grad(p.id());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += g(r, off + c);
        }
      }
      off += pc;
    }
  });
}

Var concat(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat(parts);
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  require(start + count <= a.cols(), "slice_cols out of range");
  Tape& t = tape_of(a);
  Tensor out(a.rows(), count);
  const Tensor& v = a.value();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = v(r, start + c);
  }
  const Var in[] = {a};
  return t.record(std::move(out), in, [&t, a, start, count](std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a.id());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) ga(r, start + c) += g(r, c);
    }
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  require(start + count <= a.rows(), "slice_rows out of range");
  Tape& t = tape_of(a);
  const Tensor& v = a.value();
  const std::size_t n = v.cols();
  std::vector<double> data(v.data() + start * n, v.data() + (start + count) * n);
  const Var in[] = {a};
  return t.record(Tensor(count, n, std::move(data)), in, [&t, a, start](std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a.id());
    double* dst = ga.data() + start * g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Var stack_rows(std::span<const Var> parts) {
  require(!parts.empty(), "stack_rows of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t cols = parts[0].cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "stack_rows: column counts differ");
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
    rows += p.rows();
  }
  std::vector<Var> in(parts.begin(), parts.end());
  return t.record(Tensor(rows, cols, std::move(data)), in, [&t, in](std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : in) {
      const std::size_t n = p.value().size();
      if (t.requires_grad(p.id())) {
        Tensor& gp = t.grad(p.id());
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var gather_rows(Var table, std::vector<int> index) {
  Tape& t = tape_of(table);
  const Tensor& v = table.value();
  const std::size_t n = v.cols();
  Tensor out(index.size(), n);
  for (std::size_t r = 0; r < index.size(); ++r) {
    const int src = index[r];
    if (src < 0) continue;
    require(static_cast<std::size_t>(src) < v.rows(), "gather_rows: index out of range");
    std::copy(v.row(src).begin(), v.row(src).end(), out.row(r).begin());
  }
  const Var in[] = {table};
  return t.record(std::move(out), in, [&t, table, index = std::move(index)](std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad(table.id());
    for (std::size_t r = 0; r < index.size(); ++r) {
      if (index[r] < 0) continue;
      auto dst = gt.row(static_cast<std::size_t>(index[r]));
      auto src = g.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Var scale(Var a, Tensor factor) {
  require(a.value().same_shape(factor), "scale: shape mismatch");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  const Var in[] = {a};
  return t.record(std::move(out), in, [&t, a, factor = std::move(factor)](std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor[i];
  });
}

Var blend(Var a, Var b, std::vector<double> mask) {
  check_same_shape(a, b, "blend");
  require(mask.size() == a.rows(), "blend: mask length must equal row count");
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    require(mask[r] == 0.0 || mask[r] == 1.0, "blend: mask entries must be 0 or 1");
    const auto src = mask[r] == 1.0 ? av.row(r) : bv.row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const Var in[] = {a, b};
  return t.record(std::move(out), in, [&t, a, b, mask = std::move(mask)](std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const Var& target = mask[r] == 1.0 ? a : b;
      if (!t.requires_grad(target.id())) continue;
      auto dst = t.grad(target.id()).row(r);
      auto src = g.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const Var in[] = {a};
  return t.record(Tensor(1, 1, s), in, [&t, a](std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(a.id()).values()) v += g;
  });
}

namespace {

void softmax_row(std::span<const double> z, std::span<double> out) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    s += out[i];
  }
  for (auto& v : out) v /= s;
}

void check_targets(const Tensor& v, const std::vector<int>& targets,
                   const std::vector<double>& mask, double& denom) {
  require(targets.size() == v.rows() && mask.size() == v.rows(),
          "loss: targets/mask length must equal row count");
  denom = 0.0;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    require(mask[r] == 0.0 || mask[r] == 1.0, "loss: mask entries must be 0 or 1");
    if (mask[r] == 0.0) continue;
    require(targets[r] >= 0 && static_cast<std::size_t>(targets[r]) < v.cols(),
            "loss: target out of range");
    denom += 1.0;
  }
  require(denom > 0.0, "loss: mask has no active positions");
}

}  // namespace

Var softmax(Var logits) {
  Tape& t = tape_of(logits);
  const Tensor& z = logits.value();
  Tensor out(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) softmax_row(z.row(r), out.row(r));
  const Var in[] = {logits};
  return t.record(std::move(out), in, [&t, logits](std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gz = t.grad(logits.id());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gz(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var masked_nll(Var probs, std::vector<int> targets, std::vector<double> mask) {
  Tape& t = tape_of(probs);
  const Tensor& p = probs.value();
  double denom = 0.0;
  check_targets(p, targets, mask, denom);
  double loss = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    if (mask[r] == 0.0) continue;
    loss -= std::log(p(r, static_cast<std::size_t>(targets[r])));
  }
  loss /= denom;
  const Var in[] = {probs};
  return t.record(Tensor(1, 1, loss), in,
                  [&t, probs, targets = std::move(targets), mask = std::move(mask),
                   denom](std::size_t self) {
                    const double g = t.grad(self)[0];
                    const Tensor& p = probs.value();
                    Tensor& gp = t.grad(probs.id());
                    for (std::size_t r = 0; r < p.rows(); ++r) {
                      if (mask[r] == 0.0) continue;
                      const auto c = static_cast<std::size_t>(targets[r]);
                      gp(r, c) -= g / (denom * p(r, c));
                    }
                  });
}

Var masked_softmax_cross_entropy(Var logits, std::vector<int> targets, std::vector<double> mask) {
  Tape& t = tape_of(logits);
  const Tensor& z = logits.value();
  double denom = 0.0;
  check_targets(z, targets, mask, denom);
  Tensor probs(z.rows(), z.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (mask[r] == 0.0) continue;
    auto row = z.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double log_z = mx + std::log(s);
    loss -= row[static_cast<std::size_t>(targets[r])] - log_z;
    for (std::size_t c = 0; c < row.size(); ++c) probs(r, c) = std::exp(row[c] - log_z);
  }
  loss /= denom;
  const Var in[] = {logits};
  return t.record(Tensor(1, 1, loss), in,
                  [&t, logits, targets = std::move(targets), mask = std::move(mask), denom,
                   probs = std::move(probs)](std::size_t self) {
                    const double g = t.grad(self)[0] / denom;
                    Tensor& gz = t.grad(logits.id());
                    for (std::size_t r = 0; r < probs.rows(); ++r) {
                      if (mask[r] == 0.0) continue;
                      for (std::size_t c = 0; c < probs.cols(); ++c) {
                        gz(r, c) += g * probs(r, c);
                      }
                      gz(r, static_cast<std::size_t>(targets[r])) -= g;
                    }
                  });
}

}  // namespace ad
}  // namespace csner
