#include "hlstm/layers.h"

#include <algorithm>
#include <cmath>

#include "hlstm/error.h"

namespace hlstm {

LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmWeights& w) {
  const std::size_t c = w.cell_size();
  if (h_prev.size() != c || c_prev.size() != c || w.input_weights.rows() != 4 * c ||
      w.bias.size() != 4 * c) {
    throw InternalError("lstm_cell: dimension mismatch");
  }
  LstmStep step;
  step.gates = w.bias.values();
  gemv_add(w.input_weights, x, step.gates);
  gemv_add(w.recurrent_weights, h_prev, step.gates);

  step.cell.resize(c);
  step.hidden.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    double& i = step.gates[k];
    double& f = step.gates[c + k];
    double& g = step.gates[2 * c + k];
    double& o = step.gates[3 * c + k];
    i = sigmoid(i);
    f = sigmoid(f);
    g = std::tanh(g);
    o = sigmoid(o);
    step.cell[k] = f * c_prev[k] + i * g;
    step.hidden[k] = o * std::tanh(step.cell[k]);
  }
  return step;
}

namespace {

LstmRun run_direction(const std::vector<Vec>& inputs, std::vector<std::size_t> order,
                      const LstmWeights& w) {
  const std::size_t c = w.cell_size();
  LstmRun run;
  run.order = std::move(order);
  run.steps.reserve(run.order.size());
  const Vec zeros(c, 0.0);
  for (std::size_t t = 0; t < run.order.size(); ++t) {
    const Vec& h_prev = t ? run.steps[t - 1].hidden : zeros;
    const Vec& c_prev = t ? run.steps[t - 1].cell : zeros;
    run.steps.push_back(lstm_cell(inputs[run.order[t]], h_prev, c_prev, w));
  }
  return run;
}

// BPTT for one direction. d_hidden[t] is the external gradient on the
// hidden output of step t; input gradients are added into d_inputs.
void backprop_direction(const LstmRun& run, const std::vector<Vec>& inputs,
                        const std::vector<Vec>& d_hidden, const LstmWeights& w, LstmGrads g,
                        std::vector<Vec>& d_inputs) {
  const std::size_t c = w.cell_size();
  const Vec zeros(c, 0.0);
  Vec dh_next(c, 0.0);
  Vec dc_next(c, 0.0);
  Vec d_pre(4 * c);
  for (std::size_t t = run.steps.size(); t-- > 0;) {
    const LstmStep& step = run.steps[t];
    const Vec& c_prev = t ? run.steps[t - 1].cell : zeros;
    const Vec& h_prev = t ? run.steps[t - 1].hidden : zeros;
    for (std::size_t k = 0; k < c; ++k) {
      const double i = step.gates[k];
      const double f = step.gates[c + k];
      const double gg = step.gates[2 * c + k];
      const double o = step.gates[3 * c + k];
      const double tc = std::tanh(step.cell[k]);
      const double dh = d_hidden[t][k] + dh_next[k];
      const double dc = dc_next[k] + dh * o * (1.0 - tc * tc);
      d_pre[k] = dc * gg * i * (1.0 - i);
      d_pre[c + k] = dc * c_prev[k] * f * (1.0 - f);
      d_pre[2 * c + k] = dc * i * (1.0 - gg * gg);
      d_pre[3 * c + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    const std::size_t pos = run.order[t];
    outer_add(g.input_weights, d_pre, inputs[pos]);
    outer_add(g.recurrent_weights, d_pre, h_prev);
    axpy(1.0, d_pre, g.bias.values());
    gemv_transpose_add(w.input_weights, d_pre, d_inputs[pos]);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    gemv_transpose_add(w.recurrent_weights, d_pre, dh_next);
  }
}

}  // namespace

BiLstmTrace bilstm(std::vector<Vec> inputs, std::span<const std::uint8_t> mask,
                   const LstmWeights& fwd, const LstmWeights& bwd) {
  if (inputs.size() != mask.size()) throw InternalError("bilstm: inputs and mask differ in length");
  if (fwd.cell_size() != bwd.cell_size()) throw InternalError("bilstm: cell sizes differ");
  BiLstmTrace trace;
  trace.length = inputs.size();
  trace.cell_size = fwd.cell_size();
  trace.mask.assign(mask.begin(), mask.end());

  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    if (mask[j]) {
      if (inputs[j].size() != fwd.input_size() || inputs[j].size() != bwd.input_size()) {
        throw InternalError("bilstm: input dimension mismatch");
      }
      order.push_back(j);
    } else {
      inputs[j].clear();
    }
  }
  trace.inputs = std::move(inputs);
  trace.forward = run_direction(trace.inputs, order, fwd);
  std::vector<std::size_t> reversed(order.rbegin(), order.rend());
  trace.backward = run_direction(trace.inputs, std::move(reversed), bwd);

  const std::size_t c = trace.cell_size;
  trace.outputs.assign(trace.length, Vec(2 * c, 0.0));
  for (std::size_t t = 0; t < order.size(); ++t) {
    Vec& out = trace.outputs[trace.forward.order[t]];
    std::copy(trace.forward.steps[t].hidden.begin(), trace.forward.steps[t].hidden.end(),
              out.begin());
    Vec& out_b = trace.outputs[trace.backward.order[t]];
    std::copy(trace.backward.steps[t].hidden.begin(), trace.backward.steps[t].hidden.end(),
              out_b.begin() + static_cast<std::ptrdiff_t>(c));
  }
  return trace;
}

std::vector<Vec> bilstm_backward(const BiLstmTrace& trace, const std::vector<Vec>& d_outputs,
                                 const LstmWeights& fwd, LstmGrads fwd_grads,
                                 const LstmWeights& bwd, LstmGrads bwd_grads) {
  if (d_outputs.size() != trace.length) throw InternalError("bilstm_backward: length mismatch");
  const std::size_t c = trace.cell_size;
  std::vector<Vec> d_inputs(trace.length);
  for (std::size_t j = 0; j < trace.length; ++j) {
    if (trace.mask[j]) d_inputs[j].assign(trace.inputs[j].size(), 0.0);
  }

  auto split = [&](const LstmRun& run, std::size_t offset) {
    std::vector<Vec> d_hidden(run.order.size());
    for (std::size_t t = 0; t < run.order.size(); ++t) {
      const Vec& d = d_outputs[run.order[t]];
      if (d.size() != 2 * c) throw InternalError("bilstm_backward: gradient dimension mismatch");
      d_hidden[t].assign(d.begin() + static_cast<std::ptrdiff_t>(offset),
                         d.begin() + static_cast<std::ptrdiff_t>(offset + c));
    }
    return d_hidden;
  };
  backprop_direction(trace.forward, trace.inputs, split(trace.forward, 0), fwd, fwd_grads,
                     d_inputs);
  backprop_direction(trace.backward, trace.inputs, split(trace.backward, c), bwd, bwd_grads,
                     d_inputs);
  return d_inputs;
}

AttentionTrace attention_pool(const std::vector<Vec>& hiddens, std::span<const std::uint8_t> mask,
                              const AttentionWeights& w) {
  if (hiddens.size() != mask.size()) throw InternalError("attention_pool: length mismatch");
  const std::size_t a = w.projection.rows();
  const std::size_t dim = w.projection.cols();
  if (w.bias.size() != a || w.context.size() != a) {
    throw InternalError("attention_pool: parameter shape mismatch");
  }
  AttentionTrace trace;
  trace.mask.assign(mask.begin(), mask.end());
  trace.projected.resize(hiddens.size());
  Vec scores(hiddens.size(), 0.0);
  for (std::size_t j = 0; j < hiddens.size(); ++j) {
    if (!mask[j]) continue;
    if (hiddens[j].size() != dim) throw InternalError("attention_pool: hidden dimension mismatch");
    Vec proj = w.bias.values();
    gemv_add(w.projection, hiddens[j], proj);
    for (double& v : proj) v = std::tanh(v);
    scores[j] = dot(proj, w.context.values());
    trace.projected[j] = std::move(proj);
  }
  trace.weights = masked_softmax(scores, mask);
  trace.pooled.assign(dim, 0.0);
  for (std::size_t j = 0; j < hiddens.size(); ++j) {
    if (mask[j]) axpy(trace.weights[j], hiddens[j], trace.pooled);
  }
  return trace;
}

std::vector<Vec> attention_backward(const AttentionTrace& trace, const std::vector<Vec>& hiddens,
                                    std::span<const double> d_pooled,
                                    std::span<const double> d_weights,
                                    const AttentionWeights& w, AttentionGrads grads) {
  const std::size_t n = hiddens.size();
  if (trace.weights.size() != n || d_pooled.size() != w.projection.cols() ||
      (!d_weights.empty() && d_weights.size() != n)) {
    throw InternalError("attention_backward: shape mismatch");
  }
  Vec d_alpha(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!trace.mask[j]) continue;
    d_alpha[j] = dot(d_pooled, hiddens[j]) + (d_weights.empty() ? 0.0 : d_weights[j]);
  }
  const Vec d_scores = masked_softmax_backward(trace.weights, d_alpha, trace.mask);

  std::vector<Vec> d_hiddens(n);
  const std::size_t a = w.projection.rows();
  Vec d_pre(a);
  for (std::size_t j = 0; j < n; ++j) {
    if (!trace.mask[j]) continue;
    const Vec& proj = trace.projected[j];
    axpy(d_scores[j], proj, grads.context.values());
    for (std::size_t k = 0; k < a; ++k) {
      d_pre[k] = d_scores[j] * w.context[k] * (1.0 - proj[k] * proj[k]);
    }
    outer_add(grads.projection, d_pre, hiddens[j]);
    axpy(1.0, d_pre, grads.bias.values());

    d_hiddens[j].assign(hiddens[j].size(), 0.0);
    axpy(trace.weights[j], d_pooled, d_hiddens[j]);
    gemv_transpose_add(w.projection, d_pre, d_hiddens[j]);
  }
  return d_hiddens;
}

}  // namespace hlstm
