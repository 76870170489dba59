#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hlstm/matrix.h"

namespace hlstm {

// Read-only view of one LSTM's weights. Gates are stacked in the order
// input, forget, candidate, output: input_weights is 4c x in,
// recurrent_weights is 4c x c, bias is 4c x 1.
struct LstmWeights {
  const Matrix& input_weights;
  const Matrix& recurrent_weights;
  const Matrix& bias;

  std::size_t cell_size() const { return recurrent_weights.cols(); }
  std::size_t input_size() const { return input_weights.cols(); }
};

struct LstmGrads {
  Matrix& input_weights;
  Matrix& recurrent_weights;
  Matrix& bias;
};

// Activations of one time step, kept for the backward pass.
struct LstmStep {
  Vec gates;  // post-activation [i, f, g, o], 4c
  Vec cell;
  Vec hidden;
};

LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmWeights& w);

// One direction of an unrolled LSTM over the real positions of a sequence.
struct LstmRun {
  std::vector<std::size_t> order;  // positions in processing order
  std::vector<LstmStep> steps;     // steps[t] belongs to order[t]
};

struct BiLstmTrace {
  std::size_t length = 0;
  std::size_t cell_size = 0;
  Mask mask;
  std::vector<Vec> inputs;   // per position; empty for masked positions
  LstmRun forward;
  LstmRun backward;
  std::vector<Vec> outputs;  // per position [h_fwd ; h_bwd], zero when masked
};

// Runs a forward LSTM left to right and a backward LSTM right to left over
// the unmasked positions; masked positions are skipped and output zeros.
BiLstmTrace bilstm(std::vector<Vec> inputs, std::span<const std::uint8_t> mask,
                   const LstmWeights& fwd, const LstmWeights& bwd);

// Accumulates weight gradients given dL/d(outputs) and returns dL/d(inputs)
// (empty vectors at masked positions).
std::vector<Vec> bilstm_backward(const BiLstmTrace& trace, const std::vector<Vec>& d_outputs,
                                 const LstmWeights& fwd, LstmGrads fwd_grads,
                                 const LstmWeights& bwd, LstmGrads bwd_grads);

// tanh projection W h + b (a x 2c, a x 1) scored against a context vector (a x 1).
struct AttentionWeights {
  const Matrix& projection;
  const Matrix& bias;
  const Matrix& context;
};

struct AttentionGrads {
  Matrix& projection;
  Matrix& bias;
  Matrix& context;
};

struct AttentionTrace {
  Mask mask;
  std::vector<Vec> projected;  // tanh(W h_j + b) per unmasked position
  Vec weights;                 // masked softmax of projected_j . context
  Vec pooled;                  // sum_j weights_j h_j
};

AttentionTrace attention_pool(const std::vector<Vec>& hiddens, std::span<const std::uint8_t> mask,
                              const AttentionWeights& w);

// Backward through attention pooling. `d_weights` (may be empty) carries any
// loss term applied directly to the attention distribution. Returns
// dL/d(hiddens).
std::vector<Vec> attention_backward(const AttentionTrace& trace, const std::vector<Vec>& hiddens,
                                    std::span<const double> d_pooled,
                                    std::span<const double> d_weights,
                                    const AttentionWeights& w, AttentionGrads grads);

}  // namespace hlstm
