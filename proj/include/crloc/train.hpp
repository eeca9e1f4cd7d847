#pragma once

#include "crloc/neural.hpp"
#include "crloc/synthgen.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crloc::train {

struct TrainConfig {
  int stage = 1;
  int epochs_max = 700;
  int batch_size = 4;
  int samples_per_epoch = 1000;
  neural::AdamParams adam;  // stage 1 default 1e-4; stage 2 runs drop it
  int early_stop_patience = 25;
  int validation_size = 300;
  uint64_t seed = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> val_errors;    // index 0 = before training, then per epoch
  std::vector<double> epoch_wall_ms;  // same indexing
  int best_epoch = 0;                // index into val_errors
  double best_error = 0.0;
  std::string stop_reason;  // "max_epochs" | "early_stop" | "diverged"
  double wall_ms = 0.0;
};

/// Infinite deterministic stream of unique samples: index i draws from
/// seed hash(seed, i). Training and validation use disjoint seed domains.
class SampleStream {
public:
  SampleStream(synth::StageDistributions dist, int stage, uint64_t seed);

  synth::SceneSpec scene_at(uint64_t index) const;
  synth::LabeledSample at(uint64_t index) const;

private:
  synth::StageDistributions dist_;
  int stage_;
  uint64_t domain_seed_;
};

uint64_t train_domain_seed(uint64_t seed);
uint64_t validation_domain_seed(uint64_t seed);

std::vector<synth::LabeledSample> make_validation_set(const synth::StageDistributions& dist,
                                                      int stage, uint64_t seed, int count);

/// Mean Euclidean prediction error in pixels.
double validate(const neural::NetworkF& net, std::span<const synth::LabeledSample> samples);

/// Adam/MSE training on the stage stream with per-epoch validation,
/// best-weights retention and early stopping.
std::pair<neural::NetworkF, TrainReport> run_stage1(neural::NetworkF net,
                                                    const synth::StageDistributions& dist,
                                                    const TrainConfig& cfg);

/// Fine-tuning: freezes the first two conv blocks, then trains on the
/// stage-2 stream. The incoming weights are scored before the first epoch,
/// so the result is never worse than its initialization.
std::pair<neural::NetworkF, TrainReport> run_stage2(neural::NetworkF net,
                                                    const synth::StageDistributions& dist,
                                                    const TrainConfig& cfg);

void write_report_csv(const std::string& path, const TrainReport& report, uint64_t seed);

}  // namespace crloc::train
