#include "protonet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "protonet/png_io.hpp"

namespace fs = std::filesystem;

namespace protonet {

void Dataset::validate() const {
  std::set<int> seen;
  auto check = [&](const std::vector<int>& part, const char* name) {
    for (int i : part) {
      if (i < 0 || i >= int(samples.size()))
        throw Error("invalid-dataset",
                    std::string(name) + " index out of range");
      if (!seen.insert(i).second)
        throw Error("invalid-dataset", "partitions overlap at index " +
                                           std::to_string(i));
    }
  };
  check(train_idx, "train");
  check(val_idx, "val");
  check(test_idx, "test");
  for (const Sample& s : samples)
    if (s.label < 0 || s.label >= int(class_ids.size()))
      throw Error("invalid-dataset", "sample label outside class list");
}

void SynthConfig::validate() const {
  if (num_classes < 1) throw Error("invalid-config", "num_classes must be >= 1");
  if (samples_per_class < 3)
    throw Error("invalid-config",
                "samples_per_class must be >= 3 to fill three partitions");
  if (image_side < 2 || prototype_side < 2)
    throw Error("invalid-config", "image sides must be >= 2");
  const CorruptionConfig& c = corruption;
  if (c.rotation_max_deg < 0 || c.translation_max_px < 0 ||
      c.brightness_jitter < 0 || c.contrast_jitter < 0 ||
      c.gaussian_noise_sigma < 0 || c.background_clutter_level < 0)
    throw Error("invalid-config", "corruption magnitudes must be non-negative");
  if (!(c.scale_min > 0) || c.scale_max < c.scale_min)
    throw Error("invalid-config", "need 0 < scale_min <= scale_max");
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr float kBackground = 0.1f;

// Primitive rasterizers on a supersampled canvas; coordinates in canvas px.
struct Canvas {
  Plane p;
  explicit Canvas(int side) : p(Plane::Constant(side, side, kBackground)) {}
  int side() const { return int(p.rows()); }
};

void draw_bar(Canvas& cv, double cx, double cy, double len, double wid,
              double angle, float value) {
  const double ux = std::cos(angle), uy = std::sin(angle);
  for (int y = 0; y < cv.side(); ++y)
    for (int x = 0; x < cv.side(); ++x) {
      const double dx = x - cx, dy = y - cy;
      const double along = dx * ux + dy * uy;
      const double across = -dx * uy + dy * ux;
      if (std::abs(along) <= len / 2 && std::abs(across) <= wid / 2)
        cv.p(y, x) = value;
    }
}

void draw_ring(Canvas& cv, double cx, double cy, double r_outer,
               double r_inner, float value, double arc_from = 0,
               double arc_span = 2 * std::numbers::pi) {
  for (int y = 0; y < cv.side(); ++y)
    for (int x = 0; x < cv.side(); ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r = std::hypot(dx, dy);
      if (r > r_outer || r < r_inner) continue;
      if (arc_span < 2 * std::numbers::pi) {
        double a = std::atan2(dy, dx) - arc_from;
        a -= 2 * std::numbers::pi * std::floor(a / (2 * std::numbers::pi));
        if (a > arc_span) continue;
      }
      cv.p(y, x) = value;
    }
}

void draw_triangle(Canvas& cv, const double (&vx)[3], const double (&vy)[3],
                   float value) {
  auto edge = [](double ax, double ay, double bx, double by, double px,
                 double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  };
  for (int y = 0; y < cv.side(); ++y)
    for (int x = 0; x < cv.side(); ++x) {
      const double e0 = edge(vx[0], vy[0], vx[1], vy[1], x, y);
      const double e1 = edge(vx[1], vy[1], vx[2], vy[2], x, y);
      const double e2 = edge(vx[2], vy[2], vx[0], vy[0], x, y);
      if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0))
        cv.p(y, x) = value;
    }
}

Image render_glyph(int prototype_side, std::mt19937_64& rng) {
  const int ss = prototype_side * 2;  // supersampled, downscaled for AA
  Canvas cv(ss);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> num_prims(2, 4);
  std::uniform_int_distribution<int> prim_kind(0, 4);
  const double margin = 0.18 * ss;
  const double span = ss - 2 * margin;
  auto coord = [&] { return margin + unit(rng) * span; };
  auto intensity = [&] { return float(0.55 + 0.4 * unit(rng)); };

  const int n = num_prims(rng);
  for (int i = 0; i < n; ++i) {
    switch (prim_kind(rng)) {
      case 0:  // bar
        draw_bar(cv, coord(), coord(), (0.35 + 0.45 * unit(rng)) * span,
                 (0.06 + 0.10 * unit(rng)) * span,
                 unit(rng) * std::numbers::pi, intensity());
        break;
      case 1: {  // ring
        const double r = (0.12 + 0.22 * unit(rng)) * span;
        draw_ring(cv, coord(), coord(), r, r * (0.45 + 0.25 * unit(rng)),
                  intensity());
        break;
      }
      case 2: {  // disk
        draw_ring(cv, coord(), coord(), (0.08 + 0.16 * unit(rng)) * span, 0,
                  intensity());
        break;
      }
      case 3: {  // triangle
        const double vx[3] = {coord(), coord(), coord()};
        const double vy[3] = {coord(), coord(), coord()};
        draw_triangle(cv, vx, vy, intensity());
        break;
      }
      default: {  // arc
        const double r = (0.16 + 0.24 * unit(rng)) * span;
        draw_ring(cv, coord(), coord(), r, r * 0.6, intensity(),
                  unit(rng) * 2 * std::numbers::pi,
                  (0.3 + 0.5 * unit(rng)) * 2 * std::numbers::pi);
        break;
      }
    }
  }
  return Image(resize_bilinear(cv.p, prototype_side, prototype_side));
}

std::string class_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "class_%02d", index);
  return buf;
}

// Quantize to the 8-bit grid so the PNG round trip is lossless.
void quantize_255(Image& img) {
  for (Plane& p : img.planes)
    p = (p.array().min(1.0f).max(0.0f) * 255.0f).round() / 255.0f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    out.push_back(field);
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Image>> generate_templates(
    const SynthConfig& config) {
  config.validate();
  const HogConfig hog;  // distinctness measured in the default embedding space
  std::vector<std::pair<std::string, Image>> out;
  std::vector<Eigen::VectorXd> embeddings;
  for (int ci = 0; ci < config.num_classes; ++ci) {
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      std::mt19937_64 rng(
          mix_seed(config.template_seed, std::uint64_t(ci) * 131 + attempt));
      Image glyph = render_glyph(config.prototype_side, rng);
      Eigen::VectorXd emb;
      try {
        emb = hog_embed_prototype(glyph, hog);
      } catch (const Error&) {
        continue;  // featureless draw; re-sample
      }
      bool collides = false;
      for (const auto& prev : embeddings)
        if (prev.dot(emb) > 0.999) {
          collides = true;
          break;
        }
      if (collides) continue;
      quantize_255(glyph);
      out.emplace_back(class_name(ci), std::move(glyph));
      embeddings.push_back(std::move(emb));
      accepted = true;
    }
    if (!accepted)
      throw Error("template-collision-exhausted",
                  "could not draw a distinct template for class " +
                      std::to_string(ci));
  }
  return out;
}

Image corrupt(const Image& template_image, const CorruptionConfig& corruption,
              int image_side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto jitter = [&](double mag) { return (2.0 * unit(rng) - 1.0) * mag; };

  const double rot = jitter(corruption.rotation_max_deg) * std::numbers::pi / 180.0;
  const double scale =
      corruption.scale_min +
      unit(rng) * (corruption.scale_max - corruption.scale_min);
  const double tx = jitter(corruption.translation_max_px);
  const double ty = jitter(corruption.translation_max_px);
  const double brightness = jitter(corruption.brightness_jitter);
  const double contrast = jitter(corruption.contrast_jitter);

  const Plane gray = to_grayscale(template_image);
  Plane out;
  if (rot == 0 && scale == 1 && tx == 0 && ty == 0) {
    out = resize_bilinear(gray, image_side, image_side);
  } else {
    out.resize(image_side, image_side);
    const int th = int(gray.rows()), tw = int(gray.cols());
    const double ratio_y = double(th) / image_side;
    const double ratio_x = double(tw) / image_side;
    const double ocy = (image_side - 1) / 2.0, ocx = (image_side - 1) / 2.0;
    const double tcy = (th - 1) / 2.0, tcx = (tw - 1) / 2.0;
    const double ca = std::cos(-rot), sa = std::sin(-rot);
    for (int y = 0; y < image_side; ++y)
      for (int x = 0; x < image_side; ++x) {
        const double u = (x - ocx - tx), v = (y - ocy - ty);
        const double ur = (ca * u - sa * v) / scale;
        const double vr = (sa * u + ca * v) / scale;
        double sx = ur * ratio_x + tcx;
        double sy = vr * ratio_y + tcy;
        sx = std::clamp(sx, 0.0, double(tw - 1));
        sy = std::clamp(sy, 0.0, double(th - 1));
        const int x0 = int(sx), y0 = int(sy);
        const int x1 = std::min(x0 + 1, tw - 1), y1 = std::min(y0 + 1, th - 1);
        const double wx = sx - x0, wy = sy - y0;
        out(y, x) = float((1 - wy) * ((1 - wx) * gray(y0, x0) + wx * gray(y0, x1)) +
                          wy * ((1 - wx) * gray(y1, x0) + wx * gray(y1, x1)));
      }
  }

  if (brightness != 0 || contrast != 0)
    out = ((out.array() - 0.5f) * float(1.0 + contrast) + 0.5f +
           float(brightness))
              .matrix();

  if (corruption.gaussian_noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, corruption.gaussian_noise_sigma);
    for (int y = 0; y < image_side; ++y)
      for (int x = 0; x < image_side; ++x) out(y, x) += float(noise(rng));
  }
  out = out.array().min(1.0f).max(0.0f).matrix();

  if (corruption.background_clutter_level > 0) {
    const int patches = 1 + int(corruption.background_clutter_level * 5.0);
    std::uniform_int_distribution<int> extent(2, std::max(2, image_side / 8));
    for (int i = 0; i < patches; ++i) {
      const int pw = extent(rng), ph = extent(rng);
      const int px = int(unit(rng) * (image_side - pw));
      const int py = int(unit(rng) * (image_side - ph));
      const float val = float(unit(rng));
      out.block(py, px, ph, pw).setConstant(val);
    }
  }
  out = out.array().min(1.0f).max(0.0f).matrix();
  return Image(std::move(out));
}

SyntheticData build_synthetic(const SynthConfig& config,
                              std::uint64_t master_seed) {
  config.validate();
  SyntheticData data;
  data.templates = generate_templates(config);
  Dataset& ds = data.dataset;
  ds.provenance = "synthetic";
  const int n = config.samples_per_class;
  const int n_val = n / 5, n_test = n / 5;

  for (int ci = 0; ci < config.num_classes; ++ci) {
    ds.class_ids.push_back(data.templates[size_t(ci)].first);
    const Image& tmpl = data.templates[size_t(ci)].second;
    std::vector<int> local(static_cast<size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
      Image img = corrupt(tmpl, config.corruption, config.image_side,
                          mix_seed(master_seed, std::uint64_t(ci) * n + j));
      quantize_255(img);
      local[size_t(j)] = int(ds.samples.size());
      ds.samples.push_back(Sample{std::move(img), ci});
    }
    std::mt19937_64 part_rng(mix_seed(master_seed ^ 0x5D4F3C2B1A090807ULL, ci));
    std::shuffle(local.begin(), local.end(), part_rng);
    ds.val_idx.insert(ds.val_idx.end(), local.begin(), local.begin() + n_val);
    ds.test_idx.insert(ds.test_idx.end(), local.begin() + n_val,
                       local.begin() + n_val + n_test);
    ds.train_idx.insert(ds.train_idx.end(), local.begin() + n_val + n_test,
                        local.end());
  }
  // stable order so a directory round trip reproduces the index lists
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  ds.validate();
  return data;
}

void save_dataset(const Dataset& dataset, const std::string& root) {
  dataset.validate();
  fs::create_directories(root);
  std::vector<std::string> partition(dataset.samples.size());
  for (int i : dataset.train_idx) partition[size_t(i)] = "train";
  for (int i : dataset.val_idx) partition[size_t(i)] = "val";
  for (int i : dataset.test_idx) partition[size_t(i)] = "test";

  std::ostringstream manifest;
  manifest << "path,class_id,partition\n";
  std::vector<int> per_class_counter(dataset.class_ids.size(), 0);
  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    const std::string& cid = dataset.class_ids[size_t(s.label)];
    const std::string rel = "images/" + cid + "/" +
                            std::to_string(per_class_counter[size_t(s.label)]++) +
                            ".png";
    fs::create_directories(fs::path(root) / "images" / cid);
    write_png_gray((fs::path(root) / rel).string(),
                   to_grayscale(s.image));
    manifest << rel << ',' << cid << ',' << partition[i] << '\n';
  }
  std::ofstream f(fs::path(root) / "manifest.csv", std::ios::binary);
  f << manifest.str();
}

void save_prototypes(const std::vector<std::pair<std::string, Image>>& protos,
                     const std::string& root) {
  fs::create_directories(fs::path(root) / "prototypes");
  std::ofstream manifest(fs::path(root) / "prototypes" / "prototypes.csv",
                         std::ios::binary);
  manifest << "class_id,path\n";
  for (const auto& [id, img] : protos) {
    const std::string rel = id + ".png";
    write_png_gray((fs::path(root) / "prototypes" / rel).string(),
                   to_grayscale(img));
    manifest << id << ',' << rel << '\n';
  }
}

Dataset load_directory(const std::string& root, const std::string& manifest,
                       int resize_side) {
  std::ifstream f(manifest);
  if (!f) throw Error("missing-file", manifest);
  std::string line;
  if (!std::getline(f, line)) throw Error("bad-manifest", "empty manifest");
  const std::vector<std::string> header = split_csv_line(line);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : int(std::distance(header.begin(), it));
  };
  const int c_path = col("path"), c_class = col("class_id"),
            c_part = col("partition");
  const int c_x = col("x"), c_y = col("y"), c_w = col("w"), c_h = col("h");
  if (c_path < 0 || c_class < 0 || c_part < 0)
    throw Error("bad-manifest", "need columns path,class_id,partition");
  const bool has_crop = c_x >= 0 && c_y >= 0 && c_w >= 0 && c_h >= 0;

  Dataset ds;
  ds.provenance = root;
  int row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const int needed = std::max({c_path, c_class, c_part});
    if (int(fields.size()) <= needed)
      throw Error("bad-manifest", "row " + std::to_string(row) + " truncated");

    Image img = read_png((fs::path(root) / fields[size_t(c_path)]).string());
    if (has_crop && int(fields.size()) > std::max({c_x, c_y, c_w, c_h}) &&
        !fields[size_t(c_x)].empty()) {
      const int x = std::stoi(fields[size_t(c_x)]);
      const int y = std::stoi(fields[size_t(c_y)]);
      const int w = std::stoi(fields[size_t(c_w)]);
      const int h = std::stoi(fields[size_t(c_h)]);
      if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() ||
          y + h > img.height())
        throw Error("bad-crop", "row " + std::to_string(row) +
                                    ": crop outside image bounds");
      for (Plane& p : img.planes) p = Plane(p.block(y, x, h, w));
    }
    if (resize_side > 0) img = resize_bilinear(img, resize_side, resize_side);

    const std::string& cid = fields[size_t(c_class)];
    auto it = std::find(ds.class_ids.begin(), ds.class_ids.end(), cid);
    int label;
    if (it == ds.class_ids.end()) {
      label = int(ds.class_ids.size());
      ds.class_ids.push_back(cid);
    } else {
      label = int(std::distance(ds.class_ids.begin(), it));
    }
    const int idx = int(ds.samples.size());
    const std::string& part = fields[size_t(c_part)];
    if (part == "train")
      ds.train_idx.push_back(idx);
    else if (part == "val")
      ds.val_idx.push_back(idx);
    else if (part == "test")
      ds.test_idx.push_back(idx);
    else
      throw Error("unknown-partition",
                  "row " + std::to_string(row) + ": '" + part + "'");
    ds.samples.push_back(Sample{std::move(img), label});
  }
  ds.validate();
  return ds;
}

std::vector<std::pair<std::string, Image>> load_prototype_images(
    const std::string& root) {
  std::vector<std::pair<std::string, Image>> out;
  const fs::path dir(root);
  const fs::path csv = dir / "prototypes.csv";
  if (fs::exists(csv)) {
    std::ifstream f(csv);
    std::string line;
    std::getline(f, line);  // header class_id,path
    while (std::getline(f, line)) {
      if (line.empty() || line == "\r") continue;
      const auto fields = split_csv_line(line);
      if (fields.size() < 2) throw Error("bad-manifest", "prototypes.csv row");
      out.emplace_back(fields[0], read_png((dir / fields[1]).string()));
    }
  } else {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) throw Error("missing-file", root);
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files)
      out.emplace_back(p.stem().string(), read_png(p.string()));
  }
  if (out.empty()) throw Error("missing-file", "no prototypes under " + root);
  return out;
}

}  // namespace protonet
