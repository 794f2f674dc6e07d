#ifndef NLNDE_ENCODER_HPP
#define NLNDE_ENCODER_HPP

#include <array>
#include <string>
#include <vector>

#include "nlnde/tensor.hpp"

namespace nlnde {

struct BiLstmConfig {
  std::size_t layers = 1;
  std::size_t hidden = 16;  // per direction
  std::size_t input_dim = 16;
  double inter_layer_dropout = 0.1;
};

// One direction of one layer. Gate blocks within the 4H rows are ordered
// input, forget, cell, output; the forget block of the bias starts at 1.
struct LstmCellParams {
  Tensor w;  // [4H, in]
  Tensor u;  // [4H, H]
  Tensor b;  // [4H]
};

// Standard LSTM cell update. Returns (h_t, c_t), both [H].
std::pair<Tensor, Tensor> lstm_step(const LstmCellParams& params,
                                    const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev);

// Stacked bidirectional LSTM. Layer k consumes layer k-1 output; each layer
// concatenates its forward and backward passes, so output is [T, 2*hidden].
class BiLstmEncoder {
 public:
  BiLstmEncoder(BiLstmConfig config, ParameterStore& store, Rng& rng,
                const std::string& prefix = "encoder");

  // embedded: [T, input_dim]. Inter-layer dropout (inverted scaling) fires
  // only when `training` is set and needs the caller's rng.
  Tensor encode(const Tensor& embedded, bool training = false,
                Rng* dropout_rng = nullptr) const;

  const BiLstmConfig& config() const { return config_; }
  std::size_t output_dim() const { return 2 * config_.hidden; }

  LstmCellParams& cell(std::size_t layer, std::size_t direction) {
    return cells_[layer][direction];
  }
  const LstmCellParams& cell(std::size_t layer, std::size_t direction) const {
    return cells_[layer][direction];
  }

 private:
  BiLstmConfig config_;
  std::vector<std::array<LstmCellParams, 2>> cells_;  // [layer][fwd=0/bwd=1]
};

}  // namespace nlnde

#endif  // NLNDE_ENCODER_HPP
