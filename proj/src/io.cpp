#include "crloc/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace crloc::io {

void write_pgm(const std::string& path, const ImagePatch& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  os << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> row(img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      row[x] = static_cast<unsigned char>(img.level(x, y));
    os.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!os) throw std::runtime_error("write_pgm: write failed for " + path);
}

ImagePatch read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm: not a binary PGM: " + path);
  auto next_token = [&is, &path]() {
    std::string tok;
    while (is >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("read_pgm: truncated header: " + path);
  };
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 255) throw std::runtime_error("read_pgm: expected 8-bit maxval: " + path);
  is.get();  // single whitespace after maxval
  ImagePatch img(w, h);
  std::vector<unsigned char> row(w);
  for (int y = 0; y < h; ++y) {
    is.read(reinterpret_cast<char*>(row.data()), w);
    if (!is) throw std::runtime_error("read_pgm: truncated pixel data: " + path);
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(row[x]) / 255.0f;
  }
  return img;
}

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_audit_header(std::ostream& os, uint64_t config_hash, uint64_t seed,
                        bool with_timestamp) {
  os << "# crloc " << kVersion << "\n";
  os << "# config_hash: " << std::hex << config_hash << std::dec << "\n";
  os << "# seed: " << seed << "\n";
  if (with_timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    os << "# timestamp: " << std::put_time(std::gmtime(&tt), "%Y-%m-%dT%H:%M:%SZ") << "\n";
  }
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records,
                    uint64_t config_hash, uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_manifest: cannot open " + path);
  write_audit_header(os, config_hash, seed);
  os << "filename,x_c,y_c,r,A,sigma_n,bg_present,line_x,line_y,line_angle,"
        "dark,light,edge_width,noise_seed,stage\n";
  for (const ManifestRecord& rec : records) {
    const synth::SceneSpec& s = rec.scene;
    if (!s.cr) throw std::runtime_error("write_manifest: record without CR");
    const synth::BackgroundSpec& bg = s.background;
    os << rec.filename << "," << fmt(s.cr->center.x()) << "," << fmt(s.cr->center.y()) << ","
       << fmt(s.cr->radius) << "," << fmt(s.cr->amplitude) << "," << fmt(s.noise.sigma) << ","
       << (bg.present ? 1 : 0) << "," << fmt(bg.line_point.x()) << "," << fmt(bg.line_point.y())
       << "," << fmt(bg.line_angle) << "," << fmt(bg.dark_intensity) << ","
       << fmt(bg.light_intensity) << "," << fmt(bg.edge_width) << "," << s.noise.seed << ","
       << rec.stage << "\n";
  }
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_manifest: cannot open " + path);
  std::vector<ManifestRecord> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 15)
      throw std::runtime_error("read_manifest: malformed row: " + line);
    ManifestRecord rec;
    rec.filename = fields[0];
    synth::CrSpec cr;
    cr.center = Vec2(std::stod(fields[1]), std::stod(fields[2]));
    cr.radius = std::stod(fields[3]);
    cr.amplitude = std::stod(fields[4]);
    rec.scene.cr = cr;
    rec.scene.noise.sigma = std::stod(fields[5]);
    rec.scene.background.present = fields[6] == "1";
    rec.scene.background.line_point = Vec2(std::stod(fields[7]), std::stod(fields[8]));
    rec.scene.background.line_angle = std::stod(fields[9]);
    rec.scene.background.dark_intensity = std::stod(fields[10]);
    rec.scene.background.light_intensity = std::stod(fields[11]);
    rec.scene.background.edge_width = std::stod(fields[12]);
    rec.scene.noise.seed = std::stoull(fields[13]);
    rec.stage = std::stoi(fields[14]);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string sweep_key(const synth::GridPoint& p, localize::Method m) {
  std::ostringstream os;
  os << p.r << "|" << p.A << "|" << p.sigma_n << "|";
  if (p.E)
    os << *p.E;
  else
    os << "none";
  os << "|" << p.I << "|" << localize::method_name(m);
  return os.str();
}

std::string format_sweep_row(const eval::SweepResult& r) {
  std::ostringstream os;
  os << r.point.r << "," << r.point.A << "," << r.point.sigma_n << ",";
  if (r.point.E)
    os << *r.point.E;
  else
    os << "none";
  os << "," << r.point.I << "," << localize::method_name(r.method) << "," << fmt(r.mean_abs)
     << "," << fmt(r.max_abs) << "," << fmt(r.bias) << "," << r.fail_count;
  return os.str();
}

void write_sweep_table(const std::string& path, const std::vector<eval::SweepResult>& rows,
                       uint64_t config_hash, uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sweep_table: cannot open " + path);
  write_audit_header(os, config_hash, seed);
  os << "r,A,sigma_n,E,I,method,mean_abs_err,max_abs_err,bias,fail_count\n";
  for (const eval::SweepResult& r : rows) os << format_sweep_row(r) << "\n";
}

void write_sweep_series(const std::string& path, const std::vector<eval::SweepResult>& rows,
                        uint64_t config_hash, uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sweep_series: cannot open " + path);
  write_audit_header(os, config_hash, seed);
  os << "r,A,sigma_n,E,I,method,step,error\n";
  for (const eval::SweepResult& r : rows) {
    for (size_t k = 0; k < r.errors.size(); ++k) {
      os << r.point.r << "," << r.point.A << "," << r.point.sigma_n << ",";
      if (r.point.E)
        os << *r.point.E;
      else
        os << "none";
      os << "," << r.point.I << "," << localize::method_name(r.method) << "," << k << ","
         << (std::isnan(r.errors[k]) ? std::string("nan") : fmt(r.errors[k])) << "\n";
    }
  }
}

std::vector<std::pair<std::string, std::string>> read_sweep_rows(const std::string& path) {
  std::ifstream is(path);
  std::vector<std::pair<std::string, std::string>> rows;
  if (!is) return rows;
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
    if (fields.size() < 6) continue;
    rows.emplace_back(fields[0] + "|" + fields[1] + "|" + fields[2] + "|" + fields[3] + "|" +
                          fields[4] + "|" + fields[5],
                      line);
  }
  return rows;
}

void write_frame_table(const std::string& path, const std::vector<pipeline::FrameResult>& rows,
                       double frame_rate_hz, const std::string& refined_name,
                       uint64_t config_hash, uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_frame_table: cannot open " + path);
  write_audit_header(os, config_hash, seed);
  os << "frame,t,pupil_x,pupil_y,cr_threshold_x,cr_threshold_y";
  if (!refined_name.empty())
    os << ",cr_" << refined_name << "_x,cr_" << refined_name << "_y,refine_fallback";
  os << ",pupil_found,cr_found\n";
  auto put = [&os](const std::optional<Vec2>& v, bool x_axis) {
    if (v)
      os << fmt(x_axis ? v->x() : v->y());
    else
      os << "nan";
  };
  for (const pipeline::FrameResult& r : rows) {
    os << r.frame_index << "," << fmt(frame_rate_hz > 0 ? r.frame_index / frame_rate_hz : 0.0)
       << ",";
    put(r.pupil, true);
    os << ",";
    put(r.pupil, false);
    os << ",";
    put(r.cr_threshold, true);
    os << ",";
    put(r.cr_threshold, false);
    if (!refined_name.empty()) {
      os << ",";
      put(r.cr_refined, true);
      os << ",";
      put(r.cr_refined, false);
      os << "," << (r.refine_fallback ? 1 : 0);
    }
    os << "," << (r.pupil ? 1 : 0) << "," << (r.cr_threshold ? 1 : 0) << "\n";
  }
}

int FrameTable::signal_index(const std::string& name) const {
  for (size_t i = 0; i < signals.size(); ++i)
    if (signals[i] == name) return static_cast<int>(i);
  return -1;
}

FrameTable read_frame_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_frame_table: cannot open " + path);
  FrameTable table;
  std::string line;
  std::vector<std::string> columns;
  // Column pairs ending in _x/_y become signals.
  std::vector<std::pair<int, int>> xy_cols;
  int t_col = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (columns.empty()) {
      columns = fields;
      for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == "t") t_col = static_cast<int>(i);
        if (columns[i].size() > 2 && columns[i].ends_with("_x")) {
          const std::string base = columns[i].substr(0, columns[i].size() - 2);
          for (size_t j = 0; j < columns.size(); ++j) {
            if (columns[j] == base + "_y") {
              table.signals.push_back(base);
              xy_cols.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
          }
        }
      }
      if (t_col < 0) throw std::runtime_error("read_frame_table: no 't' column in " + path);
      table.positions.resize(table.signals.size());
      continue;
    }
    if (fields.size() != columns.size())
      throw std::runtime_error("read_frame_table: ragged row: " + line);
    table.t.push_back(std::stod(fields[t_col]));
    for (size_t si = 0; si < xy_cols.size(); ++si) {
      const std::string& xs = fields[xy_cols[si].first];
      const std::string& ys = fields[xy_cols[si].second];
      if (xs == "nan" || ys == "nan")
        table.positions[si].push_back(std::nullopt);
      else
        table.positions[si].push_back(Vec2(std::stod(xs), std::stod(ys)));
    }
  }
  return table;
}

std::vector<ImagePatch> read_frame_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      files.push_back(entry.path());
  }
  if (files.empty()) throw std::runtime_error("read_frame_dir: no .pgm frames in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<ImagePatch> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(read_pgm(f.string()));
  return frames;
}

}  // namespace crloc::io
