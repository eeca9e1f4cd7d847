#include "crloc/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace crloc::train {

namespace {

constexpr uint64_t kTrainDomain = 0x74726169;  // keep train/validation streams apart
constexpr uint64_t kValDomain = 0x76616c69;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

uint64_t train_domain_seed(uint64_t seed) { return mix64(seed ^ kTrainDomain); }
uint64_t validation_domain_seed(uint64_t seed) { return mix64(seed ^ kValDomain); }

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw std::invalid_argument("TrainConfig: stage must be 1 or 2");
  if (epochs_max <= 0 || batch_size <= 0 || samples_per_epoch <= 0 || validation_size <= 0 ||
      early_stop_patience <= 0)
    throw std::invalid_argument("TrainConfig: counts must be positive");
  if (adam.learning_rate < 0.0) throw std::invalid_argument("TrainConfig: negative learning rate");
}

SampleStream::SampleStream(synth::StageDistributions dist, int stage, uint64_t seed)
    : dist_(dist), stage_(stage), domain_seed_(train_domain_seed(seed)) {
  if (stage != 1 && stage != 2) throw std::invalid_argument("SampleStream: stage must be 1 or 2");
}

synth::SceneSpec SampleStream::scene_at(uint64_t index) const {
  const uint64_t s = derive_seed(domain_seed_, index);
  return stage_ == 1 ? synth::sample_stage1(dist_, s) : synth::sample_stage2(dist_, s);
}

synth::LabeledSample SampleStream::at(uint64_t index) const {
  return synth::render_scene(scene_at(index));
}

std::vector<synth::LabeledSample> make_validation_set(const synth::StageDistributions& dist,
                                                      int stage, uint64_t seed, int count) {
  const uint64_t domain = validation_domain_seed(seed);
  std::vector<synth::LabeledSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const uint64_t s = derive_seed(domain, static_cast<uint64_t>(i));
    out.push_back(synth::render_scene(stage == 1 ? synth::sample_stage1(dist, s)
                                                 : synth::sample_stage2(dist, s)));
  }
  return out;
}

double validate(const neural::NetworkF& net, std::span<const synth::LabeledSample> samples) {
  if (samples.empty()) throw std::invalid_argument("validate: empty sample set");
  double sum = 0.0;
  for (const auto& s : samples) sum += (net.predict(s.image) - s.truth).norm();
  return sum / static_cast<double>(samples.size());
}

namespace {

std::pair<neural::NetworkF, TrainReport> run_stage(neural::NetworkF net,
                                                   const synth::StageDistributions& dist,
                                                   const TrainConfig& cfg) {
  cfg.validate();
  const double t_start = now_ms();
  SampleStream stream(dist, cfg.stage, cfg.seed);
  const auto val_set = make_validation_set(dist, cfg.stage, cfg.seed, cfg.validation_size);

  TrainReport report;
  neural::NetworkF best = net;
  double t_mark = t_start;

  // Epoch 0: score the incoming weights so retention covers the init.
  report.val_errors.push_back(validate(net, val_set));
  report.epoch_wall_ms.push_back(now_ms() - t_mark);
  report.best_epoch = 0;
  report.best_error = report.val_errors[0];

  const int steps = cfg.samples_per_epoch / cfg.batch_size;
  uint64_t next_index = 0;
  std::vector<ImagePatch> batch(cfg.batch_size);
  std::vector<Vec2> truth(cfg.batch_size);

  report.stop_reason = "max_epochs";
  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    t_mark = now_ms();
    for (int step = 0; step < steps; ++step) {
      for (int b = 0; b < cfg.batch_size; ++b) {
        synth::LabeledSample s = stream.at(next_index++);
        batch[b] = std::move(s.image);
        truth[b] = s.truth;
      }
      net.train_step(batch, truth, cfg.adam);
    }
    const double err = validate(net, val_set);
    report.val_errors.push_back(err);
    report.epoch_wall_ms.push_back(now_ms() - t_mark);
    if (!std::isfinite(err)) {
      report.stop_reason = "diverged";
      break;
    }
    if (err < report.best_error) {
      report.best_error = err;
      report.best_epoch = epoch;
      best = net;
    } else if (epoch - report.best_epoch >= cfg.early_stop_patience) {
      report.stop_reason = "early_stop";
      break;
    }
  }
  report.wall_ms = now_ms() - t_start;
  return {std::move(best), std::move(report)};
}

}  // namespace

std::pair<neural::NetworkF, TrainReport> run_stage1(neural::NetworkF net,
                                                    const synth::StageDistributions& dist,
                                                    const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.stage = 1;
  return run_stage(std::move(net), dist, c);
}

std::pair<neural::NetworkF, TrainReport> run_stage2(neural::NetworkF net,
                                                    const synth::StageDistributions& dist,
                                                    const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.stage = 2;
  net.freeze_first_conv_blocks(2);
  return run_stage(std::move(net), dist, c);
}

void write_report_csv(const std::string& path, const TrainReport& report, uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_report_csv: cannot open " + path);
  os << "# seed: " << seed << "\n";
  os << "# best_epoch: " << report.best_epoch << "\n";
  os << "# best_error: " << report.best_error << "\n";
  os << "# stop_reason: " << report.stop_reason << "\n";
  os << "epoch,val_error,wall_ms\n";
  for (size_t i = 0; i < report.val_errors.size(); ++i)
    os << i << "," << report.val_errors[i] << "," << report.epoch_wall_ms[i] << "\n";
}

}  // namespace crloc::train
