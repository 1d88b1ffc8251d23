#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csner/autodiff.hpp"

namespace csner {

using Rng = std::mt19937_64;

/// Uniform(-range, range) fill.
Tensor uniform_tensor(std::size_t rows, std::size_t cols, double range, Rng& rng);

/// Gate layout along the 4*hidden axis: input, forget, candidate, output.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Parameter w_input;   // input x 4H
  Parameter w_hidden;  // H x 4H
  Parameter bias;      // 1 x 4H

  LstmParams() = default;
  /// Weights ~ U(-init, init); forget-gate bias 1, other biases ~ U(-init, init).
  LstmParams(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng,
             double init = 0.1);

  std::vector<Parameter*> parameters() { return {&w_input, &w_hidden, &bias}; }
};

/// Parameters of one LSTM bound to a tape.
struct LstmVars {
  Var w_input;
  Var w_hidden;
  Var bias;
  std::size_t hidden_size = 0;

  static LstmVars bind(Tape& tape, LstmParams& p);
};

struct LstmState {
  Var h;
  Var c;
};

/// Zero state for a batch of `rows` sequences.
LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden);

/// One gated update on a batch: x is rows x input.
LstmState lstm_step(const LstmVars& p, Var x, const LstmState& prev);

/// Same update from already projected input (x * W_input + bias).
LstmState lstm_step_projected(const LstmVars& p, Var gates_in, const LstmState& prev);

/// Runs an LSTM over `steps` time steps of a time-major batch:
/// inputs has steps*batch rows, row t*batch+b. mask[t*batch+b] = 0 keeps the
/// previous state for that sequence. With `reverse` the steps run from last
/// to first. Returns the per-step hidden states (time-major, same layout) and
/// the final state.
struct LstmRun {
  Var outputs;
  LstmState final;
};
LstmRun run_lstm(const LstmVars& p, Var inputs, std::size_t steps, std::size_t batch,
                 const std::vector<double>& mask, bool reverse);

/// Inverted dropout. Identity when !training or rate == 0.
Var dropout(Var x, double rate, bool training, Rng& rng);

/// Adam with bias correction.
class Adam {
 public:
  struct Slot {
    Tensor m;
    Tensor v;
  };

  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every parameter from its grad. Throws TrainingError before
  /// touching anything if a gradient is not finite.
  void step(std::span<Parameter* const> params, double lr);

  std::uint64_t steps() const { return step_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t step_ = 0;
  std::vector<Slot> slots_;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

inline constexpr double kGradCheckFloor = 1e-6;

/// Relative error |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = kGradCheckFloor);

/// Compares each parameter's `grad` (filled by the caller) against central
/// differences (f(x+h) - f(x-h)) / 2h of `loss`. Parameter values are
/// restored afterwards.
GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                  std::span<Parameter* const> params, double h);

}  // namespace csner
