#include "csner/nn.hpp"

#include <algorithm>
#include <cmath>

#include "csner/error.hpp"

namespace csner {

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double range, Rng& rng) {
  Tensor t(rows, cols);
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

LstmParams::LstmParams(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng,
                       double init)
    : input_size(input),
      hidden_size(hidden),
      w_input(name + ".w_input", uniform_tensor(input, 4 * hidden, init, rng)),
      w_hidden(name + ".w_hidden", uniform_tensor(hidden, 4 * hidden, init, rng)),
      bias(name + ".bias", uniform_tensor(1, 4 * hidden, init, rng)) {
  for (std::size_t k = hidden; k < 2 * hidden; ++k) bias.value[k] = 1.0;
}

LstmVars LstmVars::bind(Tape& tape, LstmParams& p) {
  return {tape.param(p.w_input), tape.param(p.w_hidden), tape.param(p.bias), p.hidden_size};
}

LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden) {
  Var zero = tape.constant(Tensor(rows, hidden));
  return {zero, zero};
}

LstmState lstm_step_projected(const LstmVars& p, Var gates_in, const LstmState& prev) {
  const std::size_t h = p.hidden_size;
  require(gates_in.cols() == 4 * h, "lstm_step: gate width must be 4 * hidden");
  require(prev.h.cols() == h && prev.c.cols() == h, "lstm_step: state width must equal hidden");
  Var gates = ad::add(gates_in, ad::matmul(prev.h, p.w_hidden));
  Var i = ad::sigmoid(ad::slice_cols(gates, 0, h));
  Var f = ad::sigmoid(ad::slice_cols(gates, h, h));
  Var g = ad::tanh(ad::slice_cols(gates, 2 * h, h));
  Var o = ad::sigmoid(ad::slice_cols(gates, 3 * h, h));
  Var c = ad::add(ad::mul(f, prev.c), ad::mul(i, g));
  Var hn = ad::mul(o, ad::tanh(c));
  return {hn, c};
}

LstmState lstm_step(const LstmVars& p, Var x, const LstmState& prev) {
  require(x.cols() == p.w_input.rows(), "lstm_step: input width must equal input size");
  Var proj = ad::add_bias(ad::matmul(x, p.w_input), p.bias);
  return lstm_step_projected(p, proj, prev);
}

LstmRun run_lstm(const LstmVars& p, Var inputs, std::size_t steps, std::size_t batch,
                 const std::vector<double>& mask, bool reverse) {
  require(inputs.rows() == steps * batch, "run_lstm: inputs must have steps * batch rows");
  require(mask.size() == steps * batch, "run_lstm: mask must have steps * batch entries");
  require(steps > 0, "run_lstm: empty sequence");
  Tape& tape = inputs.tape();
  Var proj = ad::add_bias(ad::matmul(inputs, p.w_input), p.bias);
  LstmState state = lstm_zero_state(tape, batch, p.hidden_size);
  std::vector<Var> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    std::vector<double> m(mask.begin() + static_cast<long>(t * batch),
                          mask.begin() + static_cast<long>((t + 1) * batch));
    LstmState next = lstm_step_projected(p, ad::slice_rows(proj, t * batch, batch), state);
    if (std::all_of(m.begin(), m.end(), [](double v) { return v == 1.0; })) {
      state = next;
    } else {
      state = {ad::blend(next.h, state.h, m), ad::blend(next.c, state.c, std::move(m))};
    }
    outputs[t] = state.h;
  }
  return {ad::stack_rows(outputs), state};
}

Var dropout(Var x, double rate, bool training, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  Tensor keep(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - rate);
  for (auto& v : keep.values()) {
    v = std::generate_canonical<double, 53>(rng) < rate ? 0.0 : scale;
  }
  return ad::scale(x, std::move(keep));
}

void Adam::step(std::span<Parameter* const> params, double lr) {
  if (slots_.empty()) {
    for (const Parameter* p : params) {
      slots_.push_back({Tensor(p->value.rows(), p->value.cols()),
                        Tensor(p->value.rows(), p->value.cols())});
    }
  }
  require(slots_.size() == params.size(), "adam: parameter list changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    require(p.grad.same_shape(p.value) && slots_[k].m.same_shape(p.value),
            "adam: gradient/state shape mismatch");
    for (double g : p.grad.values()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in " + p.name);
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Slot& s = slots_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[i] / c1;
      const double vhat = s.v[i] / c2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

double relative_error(double analytic, double numeric, double floor) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / den;
}

GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                  std::span<Parameter* const> params, double h) {
  require(h > 0.0, "finite_diff_check: step must be positive");
  GradCheckResult res;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss();
      p->value[i] = saved - h;
      const double down = loss();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(p->grad[i], numeric);
      if (res.worst_param.empty() || err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_param = p->name;
        res.worst_index = i;
        res.analytic = p->grad[i];
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace csner
