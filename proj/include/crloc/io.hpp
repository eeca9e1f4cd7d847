#pragma once

#include "crloc/evaluate.hpp"
#include "crloc/image.hpp"
#include "crloc/pipeline.hpp"
#include "crloc/synthgen.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace crloc::io {

inline constexpr const char* kVersion = "0.1.0";

/// Binary PGM (P5), the dataset's lossless 8-bit grayscale format.
void write_pgm(const std::string& path, const ImagePatch& img);
ImagePatch read_pgm(const std::string& path);

uint64_t fnv1a(const std::string& text);

/// Comment header written at the top of every output file so reruns are
/// auditable: version, resolved-config hash, seed, timestamp.
void write_audit_header(std::ostream& os, uint64_t config_hash, uint64_t seed,
                        bool with_timestamp = true);

/// Dataset manifest: one record per image with the full scene parameters.
struct ManifestRecord {
  std::string filename;
  synth::SceneSpec scene;
  int stage = 0;
  uint64_t sample_seed = 0;
};

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records,
                    uint64_t config_hash, uint64_t seed);
std::vector<ManifestRecord> read_manifest(const std::string& path);

/// Sweep summary table (r, A, sigma_n, E, I, method, mean_abs_err,
/// max_abs_err, bias, fail_count).
void write_sweep_table(const std::string& path, const std::vector<eval::SweepResult>& rows,
                       uint64_t config_hash, uint64_t seed);

/// Raw per-step error series companion file.
void write_sweep_series(const std::string& path, const std::vector<eval::SweepResult>& rows,
                        uint64_t config_hash, uint64_t seed);

/// One formatted summary row (no trailing newline).
std::string format_sweep_row(const eval::SweepResult& r);

/// Rows already present in a sweep table, keyed "r|A|sigma|E|I|method";
/// used for resuming partial grid runs. Missing file gives an empty map.
std::vector<std::pair<std::string, std::string>> read_sweep_rows(const std::string& path);
std::string sweep_key(const synth::GridPoint& p, localize::Method m);

/// Per-frame pipeline table (frame, t, pupil_x/y, cr_threshold_x/y,
/// refined columns when enabled, flags).
void write_frame_table(const std::string& path, const std::vector<pipeline::FrameResult>& rows,
                       double frame_rate_hz, const std::string& refined_name,
                       uint64_t config_hash, uint64_t seed);

/// Zero-padded numeric PGM frames of one directory, sorted by name.
std::vector<ImagePatch> read_frame_dir(const std::string& dir);

/// Parsed per-frame table: timestamps plus one optional-position column
/// pair per signal ("pupil", "cr_threshold", "cr_cnn", ...).
struct FrameTable {
  std::vector<double> t;
  std::vector<std::string> signals;
  std::vector<std::vector<std::optional<Vec2>>> positions;  // [signal][frame]

  int signal_index(const std::string& name) const;
};

FrameTable read_frame_table(const std::string& path);

}  // namespace crloc::io
