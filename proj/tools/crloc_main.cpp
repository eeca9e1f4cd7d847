// crloc command-line tool: every workflow as a subcommand, with an
// optional JSON config file (flags override config values) and a single
// --seed from which all randomness is derived.

#include "crloc/evaluate.hpp"
#include "crloc/io.hpp"
#include "crloc/metrics.hpp"
#include "crloc/neural.hpp"
#include "crloc/pipeline.hpp"
#include "crloc/synthgen.hpp"
#include "crloc/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingFile = 3;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError{code, msg}; }

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) fail(kExitMissingFile, what + " not found: " + path);
}

// Known config keys per section; anything else is rejected with its path.
const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"synth", {"stage", "n", "out", "preset"}},
      {"train",
       {"preset", "out", "report", "epochs", "samples_per_epoch", "batch_size", "lr",
        "patience", "val_size"}},
      {"finetune",
       {"model", "out", "report", "epochs", "samples_per_epoch", "batch_size", "lr",
        "patience", "val_size"}},
      {"eval-sweep",
       {"out", "series", "stride", "methods", "model", "image_size", "threshold", "min_area",
        "max_area", "min_circularity", "resume"}},
      {"eval-oracle", {"out", "image_size"}},
      {"eval-precision",
       {"out", "methods", "model", "frames", "seeds", "sigma", "r", "A", "E", "I",
        "image_size", "threshold", "min_area", "max_area", "min_circularity"}},
      {"pipeline",
       {"frames", "out", "fps", "cr_threshold", "pupil_threshold", "cr_min_area",
        "cr_max_area", "pupil_min_area", "pupil_max_area", "min_circularity", "cutout",
        "mask_radius", "refiner", "model", "downsample", "roi", "scan_thresholds"}},
      {"metrics", {"in", "out", "targets", "window", "pixels_per_degree"}},
      {"calibrate", {"in", "targets", "out", "method"}},
      {"model-info", {"model"}},
  };
  return schema;
}

json load_config(const std::string& path) {
  require_file(path, "config file");
  std::ifstream is(path);
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::parse_error& e) {
    fail(kExitConfig, std::string("config parse error: ") + e.what());
  }
  if (!cfg.is_object()) fail(kExitConfig, "config root must be an object");
  const auto& schema = config_schema();
  for (const auto& [key, value] : cfg.items()) {
    if (key == "seed" || key == "jobs") continue;
    auto it = schema.find(key);
    if (it == schema.end()) fail(kExitConfig, "unknown config key: " + key);
    if (!value.is_object()) fail(kExitConfig, "config section must be an object: " + key);
    for (const auto& [k2, v2] : value.items()) {
      if (!it->second.count(k2)) fail(kExitConfig, "unknown config key: " + key + "." + k2);
    }
  }
  return cfg;
}

// Applies section values to options the user did not pass on the command line.
struct ConfigBinder {
  CLI::App* cmd;
  const json* section = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(const json&)>>> bindings;

  template <typename T>
  void bind(CLI::Option* opt, T& target, const std::string& key) {
    bindings.emplace_back(opt, [&target, key](const json& j) { target = j.at(key).get<T>(); });
    keys.push_back(key);
  }
  std::vector<std::string> keys;

  void apply() {
    if (!section) return;
    for (size_t i = 0; i < bindings.size(); ++i) {
      if (bindings[i].first->count() > 0) continue;
      if (section->contains(keys[i])) {
        try {
          bindings[i].second(*section);
        } catch (const json::exception& e) {
          fail(kExitConfig, "bad config value for " + keys[i] + ": " + e.what());
        }
      }
    }
  }
};

// Output destinations never affect content, so they stay out of the hash;
// rendering the same dataset into two directories gives identical bytes.
uint64_t hash_resolved(const std::string& subcommand, json resolved) {
  for (const char* key : {"out", "report", "series"}) resolved.erase(key);
  return io::fnv1a(subcommand + ":" + resolved.dump());
}

void log_resolved(const std::string& subcommand, const json& resolved) {
  std::cerr << "# resolved-config " << subcommand << ": " << resolved.dump() << "\n";
}

synth::StageDistributions preset_by_name(const std::string& name) {
  if (name == "paper") return synth::StageDistributions::paper();
  if (name == "desk") return synth::StageDistributions::desk();
  fail(kExitConfig, "unknown preset: " + name + " (expected paper|desk)");
}

neural::NetworkSpec net_preset_by_name(const std::string& name) {
  if (name == "paper") return neural::NetworkSpec::paper();
  if (name == "desk") return neural::NetworkSpec::desk();
  fail(kExitConfig, "unknown preset: " + name + " (expected paper|desk)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct MethodOptions {
  double threshold = 0.5;
  double min_area = 3.0;
  double max_area = 5000.0;
  double min_circularity = 0.3;
  std::string model_path;
  int image_size = 180;
};

std::optional<neural::NetworkF> g_model;  // loaded once per run

eval::MethodSpec make_method(const std::string& name, const MethodOptions& opt) {
  localize::ThresholdParams tp{opt.threshold, opt.min_area, opt.max_area, opt.min_circularity};
  if (name == "threshold") return eval::make_threshold_method(tp, opt.image_size);
  if (name == "radial_symmetry") return eval::make_radial_symmetry_method(opt.image_size);
  if (name == "intensity_com") return eval::make_intensity_method(opt.image_size);
  if (name == "oracle_com") return eval::make_oracle_method(opt.image_size);
  if (name == "cnn") {
    if (opt.model_path.empty()) fail(kExitConfig, "method cnn requires --model");
    require_file(opt.model_path, "model file");
    if (!g_model) g_model = neural::load_model(opt.model_path);
    return eval::make_cnn_method(&*g_model);
  }
  fail(kExitConfig, "unknown method: " + name);
}

std::vector<metrics::FixationTarget> read_targets(const std::string& path) {
  require_file(path, "targets file");
  std::ifstream is(path);
  std::vector<metrics::FixationTarget> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 4) fail(kExitConfig, "targets row needs h,v,onset,offset: " + line);
    metrics::FixationTarget t;
    t.position = Vec2(std::stod(fields[0]), std::stod(fields[1]));
    t.onset = std::stod(fields[2]);
    t.offset = std::stod(fields[3]);
    out.push_back(t);
  }
  if (out.empty()) fail(kExitConfig, "targets file has no rows: " + path);
  return out;
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct GlobalOpts {
  uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  int effective_jobs() const {
    return jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
};

int run_synth(const GlobalOpts& g, int stage, int n, const std::string& out_dir,
              const std::string& preset) {
  const synth::StageDistributions dist = preset_by_name(preset);
  json resolved{{"stage", stage}, {"n", n}, {"out", out_dir}, {"preset", preset},
                {"seed", g.seed}};
  log_resolved("synth", resolved);
  const uint64_t config_hash = hash_resolved("synth", resolved);
  fs::create_directories(out_dir);
  train::SampleStream stream(dist, stage, g.seed);
  std::vector<io::ManifestRecord> records;
  records.reserve(n);
  char name[32];
  for (int i = 0; i < n; ++i) {
    const synth::SceneSpec scene = stream.scene_at(i);
    const synth::LabeledSample sample = synth::render_scene(scene);
    std::snprintf(name, sizeof(name), "img_%06d.pgm", i);
    io::write_pgm((fs::path(out_dir) / name).string(), sample.image);
    records.push_back({name, scene, stage, derive_seed(train::train_domain_seed(g.seed), i)});
  }
  io::write_manifest((fs::path(out_dir) / "manifest.csv").string(), records, config_hash,
                     g.seed);
  std::cout << "wrote " << n << " images + manifest to " << out_dir << "\n";
  return kExitOk;
}

int run_train_common(const GlobalOpts& g, int stage, const std::string& preset_or_model,
                     const std::string& out, const std::string& report_path, int epochs,
                     int samples_per_epoch, int batch_size, double lr, int patience,
                     int val_size) {
  train::TrainConfig cfg;
  cfg.stage = stage;
  cfg.epochs_max = epochs;
  cfg.samples_per_epoch = samples_per_epoch;
  cfg.batch_size = batch_size;
  cfg.adam.learning_rate = lr;
  cfg.early_stop_patience = patience;
  cfg.validation_size = val_size;
  cfg.seed = g.seed;

  neural::NetworkF net;
  synth::StageDistributions dist;
  if (stage == 1) {
    dist = preset_by_name(preset_or_model);
    net = neural::NetworkF(net_preset_by_name(preset_or_model), derive_seed(g.seed, 0xC0FFEE));
  } else {
    require_file(preset_or_model, "model file");
    net = neural::load_model(preset_or_model);
    dist = net.spec().input_h == 180 ? synth::StageDistributions::paper()
                                     : synth::StageDistributions::desk();
    if (net.spec().input_h != dist.image_size)
      fail(kExitConfig, "model input size has no matching distribution preset");
  }

  json resolved{{"stage", stage},   {"source", preset_or_model},
                {"out", out},       {"epochs", epochs},
                {"samples_per_epoch", samples_per_epoch}, {"batch_size", batch_size},
                {"lr", lr},         {"patience", patience},
                {"val_size", val_size}, {"seed", g.seed}};
  log_resolved(stage == 1 ? "train" : "finetune", resolved);

  auto [trained, report] =
      stage == 1 ? train::run_stage1(std::move(net), dist, cfg)
                 : train::run_stage2(std::move(net), dist, cfg);
  neural::save_model(trained, out);
  if (!report_path.empty()) train::write_report_csv(report_path, report, g.seed);
  std::cout << "best validation error " << report.best_error << " px at epoch "
            << report.best_epoch << " (" << report.stop_reason << "); model saved to " << out
            << "\n";
  return kExitOk;
}

int run_eval_sweep(const GlobalOpts& g, const std::string& out, const std::string& series,
                   int stride, const std::string& methods_csv, const MethodOptions& mopt,
                   bool resume) {
  json resolved{{"out", out},       {"series", series},
                {"stride", stride}, {"methods", methods_csv},
                {"model", mopt.model_path}, {"image_size", mopt.image_size},
                {"threshold", mopt.threshold}, {"seed", g.seed}};
  log_resolved("eval-sweep", resolved);
  const uint64_t config_hash = hash_resolved("eval-sweep", resolved);

  const synth::GridStride gs{stride, stride, stride, stride, stride};
  std::vector<synth::GridPoint> grid = synth::build_eval_grid(gs);
  std::vector<eval::MethodSpec> methods;
  for (const std::string& m : split_list(methods_csv)) methods.push_back(make_method(m, mopt));
  if (methods.empty()) fail(kExitConfig, "eval-sweep: no methods given");

  std::map<std::string, std::string> done;
  if (resume)
    for (auto& [key, line] : io::read_sweep_rows(out)) done[key] = line;

  // Compute missing rows, then rewrite the table in canonical order so the
  // output bytes do not depend on the resume history.
  std::vector<std::pair<size_t, size_t>> todo;  // (grid idx, method idx)
  for (size_t gi = 0; gi < grid.size(); ++gi)
    for (size_t mi = 0; mi < methods.size(); ++mi)
      if (!done.count(io::sweep_key(grid[gi], methods[mi].id))) todo.emplace_back(gi, mi);

  std::vector<eval::SweepResult> results(todo.size());
  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const auto [gi, mi] = todo[i];
      results[i] = eval::subpixel_sweep(grid[gi], methods[mi], derive_seed(g.seed, gi));
    }
  };
  const int jobs = g.effective_jobs();
  if (jobs <= 1 || todo.size() < 2) {
    run_range(0, todo.size());
  } else {
    std::vector<std::thread> pool;
    const size_t workers = std::min<size_t>(jobs, todo.size());
    for (size_t w = 0; w < workers; ++w)
      pool.emplace_back(run_range, todo.size() * w / workers, todo.size() * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }

  std::map<std::string, std::string> lines = std::move(done);
  std::vector<eval::SweepResult> computed_rows;
  for (auto& r : results) {
    lines[io::sweep_key(r.point, r.method)] = io::format_sweep_row(r);
    computed_rows.push_back(std::move(r));
  }
  std::ofstream os(out);
  if (!os) fail(kExitError, "cannot open " + out);
  io::write_audit_header(os, config_hash, g.seed);
  os << "r,A,sigma_n,E,I,method,mean_abs_err,max_abs_err,bias,fail_count\n";
  size_t written = 0;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      auto it = lines.find(io::sweep_key(grid[gi], methods[mi].id));
      if (it != lines.end()) {
        os << it->second << "\n";
        ++written;
      }
    }
  }
  if (!series.empty()) io::write_sweep_series(series, computed_rows, config_hash, g.seed);
  std::cout << "wrote " << written << " sweep rows to " << out << "\n";
  return kExitOk;
}

int run_eval_oracle(const GlobalOpts& g, const std::string& out, int image_size) {
  json resolved{{"out", out}, {"image_size", image_size}, {"seed", g.seed}};
  log_resolved("eval-oracle", resolved);
  const auto rows = eval::optimal_benchmark(g.seed, image_size, g.effective_jobs());
  io::write_sweep_table(out, rows, hash_resolved("eval-oracle", resolved), g.seed);
  std::cout << "wrote " << rows.size() << " oracle rows to " << out << "\n";
  return kExitOk;
}

int run_eval_precision(const GlobalOpts& g, const std::string& out,
                       const std::string& methods_csv, const MethodOptions& mopt, int frames,
                       int seeds, const std::string& sigma_csv, double r, double A,
                       const std::string& E_str, double I) {
  json resolved{{"out", out},     {"methods", methods_csv}, {"frames", frames},
                {"seeds", seeds}, {"sigma", sigma_csv},     {"r", r},
                {"A", A},         {"E", E_str},             {"I", I},
                {"seed", g.seed}};
  log_resolved("eval-precision", resolved);

  std::optional<double> E;
  if (E_str != "none") E = std::stod(E_str);
  std::ofstream os(out);
  if (!os) fail(kExitError, "cannot open " + out);
  io::write_audit_header(os, hash_resolved("eval-precision", resolved), g.seed);
  os << "method,sigma_n,seed_index,rms,fail_count\n";
  for (const std::string& m : split_list(methods_csv)) {
    const eval::MethodSpec method = make_method(m, mopt);
    for (const std::string& sig : split_list(sigma_csv)) {
      const double sigma = std::stod(sig);
      for (int s = 0; s < seeds; ++s) {
        const synth::GridPoint point{r, A, sigma, E, I};
        const auto res =
            eval::precision_sweep(point, method, frames, derive_seed(g.seed, s));
        os << m << "," << sigma << "," << s << "," << res.rms << "," << res.fail_count << "\n";
      }
    }
  }
  std::cout << "wrote precision table to " << out << "\n";
  return kExitOk;
}

int run_pipeline(const GlobalOpts& g, const std::string& frames_dir, const std::string& out,
                 double fps, pipeline::PipelineConfig& cfg, const std::string& model_path,
                 const std::string& refiner_name, const std::string& scan_csv) {
  require_file(frames_dir, "frames directory");
  json resolved{{"frames", frames_dir}, {"out", out},
                {"fps", fps},           {"cr_threshold", cfg.cr_blob.threshold},
                {"pupil_threshold", cfg.pupil_blob.threshold},
                {"cutout", cfg.cutout_size}, {"mask_radius", cfg.mask_radius},
                {"refiner", refiner_name},   {"model", model_path},
                {"downsample", cfg.downsample}, {"seed", g.seed}};
  log_resolved("pipeline", resolved);
  const uint64_t config_hash = hash_resolved("pipeline", resolved);

  if (cfg.refiner == pipeline::Refiner::cnn) {
    require_file(model_path, "model file");
    g_model = neural::load_model(model_path);
    cfg.model = &*g_model;
    cfg.cutout_size = g_model->spec().input_h;
  }
  const std::vector<ImagePatch> frames = io::read_frame_dir(frames_dir);

  if (!scan_csv.empty()) {
    std::vector<double> thresholds;
    for (const std::string& t : split_list(scan_csv)) thresholds.push_back(std::stod(t));
    const auto rows = pipeline::scan_cr_thresholds(frames, cfg, thresholds);
    std::ofstream os(out);
    if (!os) fail(kExitError, "cannot open " + out);
    io::write_audit_header(os, config_hash, g.seed);
    os << "threshold,rms_s2s,fail_count\n";
    for (const auto& row : rows)
      os << row.threshold << "," << row.rms_s2s << "," << row.fail_count << "\n";
    std::cout << "wrote threshold scan to " << out << "\n";
    return kExitOk;
  }

  const auto results = pipeline::process_sequence(frames, cfg, g.effective_jobs());
  io::write_frame_table(out, results, fps,
                        cfg.refiner == pipeline::Refiner::none ? "" : refiner_name, config_hash,
                        g.seed);
  std::cout << "processed " << frames.size() << " frames into " << out << "\n";
  return kExitOk;
}

int run_metrics(const GlobalOpts& g, const std::string& in, const std::string& out,
                const std::string& targets_path, double window_s) {
  require_file(in, "frame table");
  json resolved{{"in", in}, {"out", out}, {"targets", targets_path}, {"window", window_s},
                {"seed", g.seed}};
  log_resolved("metrics", resolved);
  const io::FrameTable table = io::read_frame_table(in);
  if (table.t.size() < 2) fail(kExitError, "metrics: fewer than 2 frames in " + in);
  const double rate = (table.t.size() - 1) / (table.t.back() - table.t.front());

  std::vector<metrics::FixationTarget> targets;
  if (!targets_path.empty()) targets = read_targets(targets_path);

  std::ofstream os(out);
  if (!os) fail(kExitError, "cannot open " + out);
  io::write_audit_header(os, hash_resolved("metrics", resolved), g.seed);
  os << "trial,method,signal,rms_s2s,std,accuracy\n";

  auto record_for = [&](int signal_idx) {
    metrics::GazeRecord rec;
    rec.rate = rate;
    for (size_t i = 0; i < table.t.size(); ++i) {
      if (!table.positions[signal_idx][i]) continue;
      rec.t.push_back(table.t[i]);
      rec.s.push_back(*table.positions[signal_idx][i]);
    }
    return rec;
  };

  const int pupil_idx = table.signal_index("pupil");
  for (size_t si = 0; si < table.signals.size(); ++si) {
    const std::string& name = table.signals[si];
    const metrics::GazeRecord rec = record_for(static_cast<int>(si));
    if (rec.s.size() < 2) continue;
    const double rms = metrics::rms_s2s(rec, window_s);
    const double stdp = metrics::std_precision(rec, window_s);
    os << "0," << name << ",raw_px," << rms << "," << stdp << ",nan\n";

    // Calibrated gaze metrics for CR signals when targets are available.
    if (!targets.empty() && pupil_idx >= 0 && name.starts_with("cr_")) {
      metrics::GazeRecord pcr;
      pcr.rate = rate;
      for (size_t i = 0; i < table.t.size(); ++i) {
        if (!table.positions[si][i] || !table.positions[pupil_idx][i]) continue;
        pcr.t.push_back(table.t[i]);
        pcr.s.push_back(*table.positions[pupil_idx][i] - *table.positions[si][i]);
      }
      if (pcr.s.size() < 6) continue;
      const metrics::Calibration cal = metrics::fit_calibration(pcr, targets);
      metrics::GazeRecord gaze;
      gaze.rate = rate;
      gaze.t = pcr.t;
      gaze.s = metrics::apply_calibration(cal, pcr.s);
      const auto acc = metrics::accuracy(gaze, targets);
      os << "0," << name << ",gaze_deg," << metrics::rms_s2s(gaze, window_s) << ","
         << metrics::std_precision(gaze, window_s) << "," << acc.mean_offset << "\n";
    }
  }
  std::cout << "wrote metrics to " << out << "\n";
  return kExitOk;
}

int run_calibrate(const GlobalOpts& g, const std::string& in, const std::string& targets_path,
                  const std::string& out, const std::string& method) {
  require_file(in, "frame table");
  json resolved{{"in", in}, {"targets", targets_path}, {"out", out}, {"method", method},
                {"seed", g.seed}};
  log_resolved("calibrate", resolved);
  const io::FrameTable table = io::read_frame_table(in);
  const int pupil_idx = table.signal_index("pupil");
  const int cr_idx = table.signal_index("cr_" + method);
  if (pupil_idx < 0 || cr_idx < 0)
    fail(kExitConfig, "calibrate: table lacks pupil or cr_" + method + " columns");
  const auto targets = read_targets(targets_path);
  if (table.t.size() < 2) fail(kExitError, "calibrate: fewer than 2 frames");

  metrics::GazeRecord pcr;
  pcr.rate = (table.t.size() - 1) / (table.t.back() - table.t.front());
  for (size_t i = 0; i < table.t.size(); ++i) {
    if (!table.positions[cr_idx][i] || !table.positions[pupil_idx][i]) continue;
    pcr.t.push_back(table.t[i]);
    pcr.s.push_back(*table.positions[pupil_idx][i] - *table.positions[cr_idx][i]);
  }
  const metrics::Calibration cal = metrics::fit_calibration(pcr, targets);
  std::ofstream os(out);
  if (!os) fail(kExitError, "cannot open " + out);
  io::write_audit_header(os, hash_resolved("calibrate", resolved), g.seed);
  os << "axis,a,b,c,d,e,f,residual_rms\n";
  os << "x";
  for (int i = 0; i < 6; ++i) os << "," << cal.coeff_x(i);
  os << "," << cal.residual_rms << "\n";
  os << "y";
  for (int i = 0; i < 6; ++i) os << "," << cal.coeff_y(i);
  os << "," << cal.residual_rms << "\n";
  std::cout << "wrote calibration to " << out << "\n";
  return kExitOk;
}

int run_model_info(const std::string& model_path) {
  require_file(model_path, "model file");
  const neural::NetworkF net = neural::load_model(model_path);
  std::cout << net.spec().to_text();
  size_t params = 0;
  for (size_t li = 0; li < net.spec().layers.size(); ++li) {
    if (!net.has_params(static_cast<int>(li))) continue;
    params += static_cast<size_t>(net.weights(static_cast<int>(li)).size()) +
              static_cast<size_t>(net.bias(static_cast<int>(li)).size());
  }
  std::cout << "parameters " << params << "\n";
  std::cout << "adam_steps " << net.adam_step_count() << "\n";
  std::cout << "init_seed " << net.init_seed() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crloc: synthetic corneal-reflection localization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed/--jobs/--config may follow the subcommand

  GlobalOpts g;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags take precedence)");
  auto* seed_opt = app.add_option("--seed", g.seed, "global seed; all randomness derives from it");
  auto* jobs_opt = app.add_option("--jobs", g.jobs, "worker threads (default: cores; 1 = serial)");

  // synth ------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset + manifest");
  int synth_stage = 1, synth_n = 100;
  std::string synth_out = "dataset", synth_preset = "paper";
  ConfigBinder synth_bind{synth_cmd};
  synth_bind.bind(synth_cmd->add_option("--stage", synth_stage)->check(CLI::Range(1, 2)),
                  synth_stage, "stage");
  synth_bind.bind(synth_cmd->add_option("--n", synth_n), synth_n, "n");
  synth_bind.bind(synth_cmd->add_option("--out", synth_out), synth_out, "out");
  synth_bind.bind(synth_cmd->add_option("--preset", synth_preset), synth_preset, "preset");

  // train / finetune ---------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "stage-1 training on the broad distribution");
  std::string train_preset = "desk", train_out = "model.crcnn", train_report;
  int train_epochs = 100, train_spe = 1000, train_batch = 4, train_patience = 25,
      train_val = 300;
  double train_lr = 1e-4;
  ConfigBinder train_bind{train_cmd};
  train_bind.bind(train_cmd->add_option("--preset", train_preset), train_preset, "preset");
  train_bind.bind(train_cmd->add_option("--out", train_out), train_out, "out");
  train_bind.bind(train_cmd->add_option("--report", train_report), train_report, "report");
  train_bind.bind(train_cmd->add_option("--epochs", train_epochs), train_epochs, "epochs");
  train_bind.bind(train_cmd->add_option("--samples-per-epoch", train_spe), train_spe,
                  "samples_per_epoch");
  train_bind.bind(train_cmd->add_option("--batch-size", train_batch), train_batch, "batch_size");
  train_bind.bind(train_cmd->add_option("--lr", train_lr), train_lr, "lr");
  train_bind.bind(train_cmd->add_option("--patience", train_patience), train_patience,
                  "patience");
  train_bind.bind(train_cmd->add_option("--val-size", train_val), train_val, "val_size");

  auto* fine_cmd = app.add_subcommand("finetune", "stage-2 fine-tuning with frozen blocks");
  std::string fine_model, fine_out = "model_stage2.crcnn", fine_report;
  int fine_epochs = 100, fine_spe = 1000, fine_batch = 4, fine_patience = 25, fine_val = 300;
  double fine_lr = 1e-6;
  ConfigBinder fine_bind{fine_cmd};
  fine_bind.bind(fine_cmd->add_option("--model", fine_model)->required(), fine_model, "model");
  fine_bind.bind(fine_cmd->add_option("--out", fine_out), fine_out, "out");
  fine_bind.bind(fine_cmd->add_option("--report", fine_report), fine_report, "report");
  fine_bind.bind(fine_cmd->add_option("--epochs", fine_epochs), fine_epochs, "epochs");
  fine_bind.bind(fine_cmd->add_option("--samples-per-epoch", fine_spe), fine_spe,
                 "samples_per_epoch");
  fine_bind.bind(fine_cmd->add_option("--batch-size", fine_batch), fine_batch, "batch_size");
  fine_bind.bind(fine_cmd->add_option("--lr", fine_lr), fine_lr, "lr");
  fine_bind.bind(fine_cmd->add_option("--patience", fine_patience), fine_patience, "patience");
  fine_bind.bind(fine_cmd->add_option("--val-size", fine_val), fine_val, "val_size");

  // eval-sweep ---------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("eval-sweep", "sub-pixel sweeps over the parameter grid");
  std::string sweep_out = "sweep.csv", sweep_series, sweep_methods = "threshold";
  int sweep_stride = 1;
  bool sweep_resume = false;
  MethodOptions sweep_mopt;
  ConfigBinder sweep_bind{sweep_cmd};
  sweep_bind.bind(sweep_cmd->add_option("--out", sweep_out), sweep_out, "out");
  sweep_bind.bind(sweep_cmd->add_option("--series", sweep_series), sweep_series, "series");
  sweep_bind.bind(sweep_cmd->add_option("--stride", sweep_stride)->check(CLI::PositiveNumber),
                  sweep_stride, "stride");
  sweep_bind.bind(sweep_cmd->add_option("--methods", sweep_methods), sweep_methods, "methods");
  sweep_bind.bind(sweep_cmd->add_option("--model", sweep_mopt.model_path), sweep_mopt.model_path,
                  "model");
  sweep_bind.bind(sweep_cmd->add_option("--image-size", sweep_mopt.image_size),
                  sweep_mopt.image_size, "image_size");
  sweep_bind.bind(sweep_cmd->add_option("--threshold", sweep_mopt.threshold),
                  sweep_mopt.threshold, "threshold");
  sweep_bind.bind(sweep_cmd->add_option("--min-area", sweep_mopt.min_area), sweep_mopt.min_area,
                  "min_area");
  sweep_bind.bind(sweep_cmd->add_option("--max-area", sweep_mopt.max_area), sweep_mopt.max_area,
                  "max_area");
  sweep_bind.bind(sweep_cmd->add_option("--min-circularity", sweep_mopt.min_circularity),
                  sweep_mopt.min_circularity, "min_circularity");
  sweep_bind.bind(sweep_cmd->add_flag("--resume", sweep_resume), sweep_resume, "resume");

  // eval-oracle ---------------------------------------------------------------
  auto* oracle_cmd = app.add_subcommand("eval-oracle", "best-achievable benchmark table");
  std::string oracle_out = "oracle.csv";
  int oracle_size = 180;
  ConfigBinder oracle_bind{oracle_cmd};
  oracle_bind.bind(oracle_cmd->add_option("--out", oracle_out), oracle_out, "out");
  oracle_bind.bind(oracle_cmd->add_option("--image-size", oracle_size), oracle_size,
                   "image_size");

  // eval-precision -------------------------------------------------------------
  auto* prec_cmd = app.add_subcommand("eval-precision", "frame-to-frame precision comparison");
  std::string prec_out = "precision.csv", prec_methods = "threshold,cnn",
              prec_sigma = "4,10", prec_E = "0";
  int prec_frames = 200, prec_seeds = 10;
  double prec_r = 8.0, prec_A = 50.0, prec_I = 102.0;
  MethodOptions prec_mopt;
  prec_mopt.threshold = 0.75;
  ConfigBinder prec_bind{prec_cmd};
  prec_bind.bind(prec_cmd->add_option("--out", prec_out), prec_out, "out");
  prec_bind.bind(prec_cmd->add_option("--methods", prec_methods), prec_methods, "methods");
  prec_bind.bind(prec_cmd->add_option("--model", prec_mopt.model_path), prec_mopt.model_path,
                 "model");
  prec_bind.bind(prec_cmd->add_option("--frames", prec_frames), prec_frames, "frames");
  prec_bind.bind(prec_cmd->add_option("--seeds", prec_seeds), prec_seeds, "seeds");
  prec_bind.bind(prec_cmd->add_option("--sigma", prec_sigma), prec_sigma, "sigma");
  prec_bind.bind(prec_cmd->add_option("--r", prec_r), prec_r, "r");
  prec_bind.bind(prec_cmd->add_option("--A", prec_A), prec_A, "A");
  prec_bind.bind(prec_cmd->add_option("--E", prec_E), prec_E, "E");
  prec_bind.bind(prec_cmd->add_option("--I", prec_I), prec_I, "I");
  prec_bind.bind(prec_cmd->add_option("--image-size", prec_mopt.image_size),
                 prec_mopt.image_size, "image_size");
  prec_bind.bind(prec_cmd->add_option("--threshold", prec_mopt.threshold), prec_mopt.threshold,
                 "threshold");

  // pipeline ---------------------------------------------------------------
  auto* pipe_cmd = app.add_subcommand("pipeline", "frame-wise coarse+refine processing");
  std::string pipe_frames, pipe_out = "frames.csv", pipe_refiner = "none", pipe_model,
              pipe_scan;
  double pipe_fps = 500.0;
  pipeline::PipelineConfig pcfg;
  std::vector<int> pipe_roi;
  ConfigBinder pipe_bind{pipe_cmd};
  pipe_bind.bind(pipe_cmd->add_option("--frames", pipe_frames)->required(), pipe_frames,
                 "frames");
  pipe_bind.bind(pipe_cmd->add_option("--out", pipe_out), pipe_out, "out");
  pipe_bind.bind(pipe_cmd->add_option("--fps", pipe_fps), pipe_fps, "fps");
  pipe_bind.bind(pipe_cmd->add_option("--cr-threshold", pcfg.cr_blob.threshold),
                 pcfg.cr_blob.threshold, "cr_threshold");
  pipe_bind.bind(pipe_cmd->add_option("--pupil-threshold", pcfg.pupil_blob.threshold),
                 pcfg.pupil_blob.threshold, "pupil_threshold");
  pipe_bind.bind(pipe_cmd->add_option("--cr-min-area", pcfg.cr_blob.min_area),
                 pcfg.cr_blob.min_area, "cr_min_area");
  pipe_bind.bind(pipe_cmd->add_option("--cr-max-area", pcfg.cr_blob.max_area),
                 pcfg.cr_blob.max_area, "cr_max_area");
  pipe_bind.bind(pipe_cmd->add_option("--pupil-min-area", pcfg.pupil_blob.min_area),
                 pcfg.pupil_blob.min_area, "pupil_min_area");
  pipe_bind.bind(pipe_cmd->add_option("--pupil-max-area", pcfg.pupil_blob.max_area),
                 pcfg.pupil_blob.max_area, "pupil_max_area");
  pipe_bind.bind(pipe_cmd->add_option("--cutout", pcfg.cutout_size), pcfg.cutout_size, "cutout");
  pipe_bind.bind(pipe_cmd->add_option("--mask-radius", pcfg.mask_radius), pcfg.mask_radius,
                 "mask_radius");
  pipe_bind.bind(pipe_cmd->add_option("--refiner", pipe_refiner), pipe_refiner, "refiner");
  pipe_bind.bind(pipe_cmd->add_option("--model", pipe_model), pipe_model, "model");
  pipe_bind.bind(pipe_cmd->add_option("--downsample", pcfg.downsample)->check(CLI::Range(1, 2)),
                 pcfg.downsample, "downsample");
  pipe_bind.bind(pipe_cmd->add_option("--roi", pipe_roi)->expected(4), pipe_roi, "roi");
  pipe_bind.bind(pipe_cmd->add_option("--scan-thresholds", pipe_scan), pipe_scan,
                 "scan_thresholds");

  // metrics / calibrate ---------------------------------------------------------
  auto* metrics_cmd = app.add_subcommand("metrics", "data-quality metrics from a frame table");
  std::string metrics_in, metrics_out = "metrics.csv", metrics_targets;
  double metrics_window = 0.2;
  ConfigBinder metrics_bind{metrics_cmd};
  metrics_bind.bind(metrics_cmd->add_option("--in", metrics_in)->required(), metrics_in, "in");
  metrics_bind.bind(metrics_cmd->add_option("--out", metrics_out), metrics_out, "out");
  metrics_bind.bind(metrics_cmd->add_option("--targets", metrics_targets), metrics_targets,
                    "targets");
  metrics_bind.bind(metrics_cmd->add_option("--window", metrics_window), metrics_window,
                    "window");

  auto* cal_cmd = app.add_subcommand("calibrate", "fit the P-CR calibration polynomial");
  std::string cal_in, cal_targets, cal_out = "calibration.csv", cal_method = "threshold";
  ConfigBinder cal_bind{cal_cmd};
  cal_bind.bind(cal_cmd->add_option("--in", cal_in)->required(), cal_in, "in");
  cal_bind.bind(cal_cmd->add_option("--targets", cal_targets)->required(), cal_targets,
                "targets");
  cal_bind.bind(cal_cmd->add_option("--out", cal_out), cal_out, "out");
  cal_bind.bind(cal_cmd->add_option("--method", cal_method), cal_method, "method");

  // model-info ---------------------------------------------------------------
  auto* info_cmd = app.add_subcommand("model-info", "print a model's layer spec");
  std::string info_model;
  ConfigBinder info_bind{info_cmd};
  info_bind.bind(info_cmd->add_option("--model", info_model)->required(), info_model, "model");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << kExitConfig << ": " << e.what() << "\n";
      return kExitConfig;
    }

    json cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (cfg.contains("seed") && seed_opt->count() == 0) g.seed = cfg["seed"].get<uint64_t>();
    if (cfg.contains("jobs") && jobs_opt->count() == 0) g.jobs = cfg["jobs"].get<int>();
    auto apply_section = [&cfg](ConfigBinder& b, const std::string& name) {
      if (cfg.contains(name)) b.section = &cfg[name];
      b.apply();
    };
    apply_section(synth_bind, "synth");
    apply_section(train_bind, "train");
    apply_section(fine_bind, "finetune");
    apply_section(sweep_bind, "eval-sweep");
    apply_section(oracle_bind, "eval-oracle");
    apply_section(prec_bind, "eval-precision");
    apply_section(pipe_bind, "pipeline");
    apply_section(metrics_bind, "metrics");
    apply_section(cal_bind, "calibrate");
    apply_section(info_bind, "model-info");

    if (synth_cmd->parsed()) return run_synth(g, synth_stage, synth_n, synth_out, synth_preset);
    if (train_cmd->parsed())
      return run_train_common(g, 1, train_preset, train_out, train_report, train_epochs,
                              train_spe, train_batch, train_lr, train_patience, train_val);
    if (fine_cmd->parsed())
      return run_train_common(g, 2, fine_model, fine_out, fine_report, fine_epochs, fine_spe,
                              fine_batch, fine_lr, fine_patience, fine_val);
    if (sweep_cmd->parsed())
      return run_eval_sweep(g, sweep_out, sweep_series, sweep_stride, sweep_methods, sweep_mopt,
                            sweep_resume);
    if (oracle_cmd->parsed()) return run_eval_oracle(g, oracle_out, oracle_size);
    if (prec_cmd->parsed())
      return run_eval_precision(g, prec_out, prec_methods, prec_mopt, prec_frames, prec_seeds,
                                prec_sigma, prec_r, prec_A, prec_E, prec_I);
    if (pipe_cmd->parsed()) {
      if (pipe_refiner == "none")
        pcfg.refiner = pipeline::Refiner::none;
      else if (pipe_refiner == "radial_symmetry")
        pcfg.refiner = pipeline::Refiner::radial_symmetry;
      else if (pipe_refiner == "cnn")
        pcfg.refiner = pipeline::Refiner::cnn;
      else
        fail(kExitConfig, "unknown refiner: " + pipe_refiner);
      if (pipe_roi.size() == 4) pcfg.roi = {pipe_roi[0], pipe_roi[1], pipe_roi[2], pipe_roi[3]};
      return run_pipeline(g, pipe_frames, pipe_out, pipe_fps, pcfg, pipe_model, pipe_refiner,
                          pipe_scan);
    }
    if (metrics_cmd->parsed())
      return run_metrics(g, metrics_in, metrics_out, metrics_targets, metrics_window);
    if (cal_cmd->parsed()) return run_calibrate(g, cal_in, cal_targets, cal_out, cal_method);
    if (info_cmd->parsed()) return run_model_info(info_model);
    std::cerr << "error: " << kExitConfig << ": no subcommand\n";
    return kExitConfig;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.code << ": " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << kExitError << ": " << e.what() << "\n";
    return kExitError;
  }
}
