#ifndef NLNDE_TRAINING_HPP
#define NLNDE_TRAINING_HPP

#include <cstdint>
#include <functional>

namespace nlnde {

// Mini-batch schedule shared by both taggers. The learning rate is halved
// whenever the dev loss fails to improve for `anneal_patience` consecutive
// epochs; without a dev split it stays fixed.
struct TrainSchedule {
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  double lr = 0.1;
  std::size_t anneal_patience = 3;
  double anneal_factor = 0.5;
  std::uint64_t seed = 1;

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;
};

}  // namespace nlnde

#endif  // NLNDE_TRAINING_HPP
