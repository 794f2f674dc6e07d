#include "nlnde/encoder.hpp"

#include "nlnde/errors.hpp"

namespace nlnde {

std::pair<Tensor, Tensor> lstm_step(const LstmCellParams& params,
                                    const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  const std::size_t h = h_prev.size();
  Tensor gates = add(affine(x_t, params.w, params.b), matvec(params.u, h_prev));
  Tensor i = sigmoid(slice(gates, 0, h));
  Tensor f = sigmoid(slice(gates, h, h));
  Tensor c_hat = tanh(slice(gates, 2 * h, h));
  Tensor o = sigmoid(slice(gates, 3 * h, h));
  Tensor c_t = add(mul(f, c_prev), mul(i, c_hat));
  Tensor h_t = mul(o, tanh(c_t));
  return {h_t, c_t};
}

BiLstmEncoder::BiLstmEncoder(BiLstmConfig config, ParameterStore& store,
                             Rng& rng, const std::string& prefix)
    : config_(config) {
  if (config_.layers < 1) throw ContractError("encoder needs at least 1 layer");
  if (config_.inter_layer_dropout < 0.0 || config_.inter_layer_dropout >= 1.0)
    throw ContractError("inter_layer_dropout must lie in [0,1)");
  const std::size_t h = config_.hidden;
  for (std::size_t layer = 0; layer < config_.layers; ++layer) {
    const std::size_t in = layer == 0 ? config_.input_dim : 2 * h;
    std::array<LstmCellParams, 2> pair;
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const std::string base =
          prefix + ".l" + std::to_string(layer) + (dir == 0 ? ".fwd" : ".bwd");
      LstmCellParams cell;
      cell.w = store.create_glorot(base + ".w", {4 * h, in}, rng);
      cell.u = store.create_glorot(base + ".u", {4 * h, h}, rng);
      std::vector<double> bias(4 * h, 0.0);
      for (std::size_t k = h; k < 2 * h; ++k) bias[k] = 1.0;  // forget gate
      cell.b = store.create(base + ".b", {4 * h}, std::move(bias));
      pair[dir] = std::move(cell);
    }
    cells_.push_back(std::move(pair));
  }
}

Tensor BiLstmEncoder::encode(const Tensor& embedded, bool training,
                             Rng* dropout_rng) const {
  if (embedded.rank() != 2)
    throw DimensionError("encode expects a [T, input_dim] tensor");
  const std::size_t t_len = embedded.rows();
  const std::size_t h = config_.hidden;

  Tensor input = embedded;
  for (std::size_t layer = 0; layer < cells_.size(); ++layer) {
    std::vector<Tensor> fwd(t_len), bwd(t_len);
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const LstmCellParams& cell = cells_[layer][dir];
      Tensor h_t = Tensor::zeros({h});
      Tensor c_t = Tensor::zeros({h});
      for (std::size_t step = 0; step < t_len; ++step) {
        const std::size_t t = dir == 0 ? step : t_len - 1 - step;
        std::tie(h_t, c_t) = lstm_step(cell, row(input, t), h_t, c_t);
        (dir == 0 ? fwd : bwd)[t] = h_t;
      }
    }
    std::vector<Tensor> rows;
    rows.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t)
      rows.push_back(concat({fwd[t], bwd[t]}));
    Tensor out = stack_rows(rows);

    const bool last = layer + 1 == cells_.size();
    if (!last && training && config_.inter_layer_dropout > 0.0) {
      if (!dropout_rng)
        throw ContractError("training-mode encode needs a dropout rng");
      const double keep = 1.0 - config_.inter_layer_dropout;
      std::vector<double> mask(out.size());
      for (auto& m : mask)
        m = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      out = mul(out, Tensor::constant(out.shape(), std::move(mask)));
    }
    input = out;
  }
  return input;
}

}  // namespace nlnde
