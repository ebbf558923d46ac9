#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "protonet/hog.hpp"
#include "protonet/train.hpp"

namespace protonet {

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_ids;  // label i <-> class_ids[i]
  std::vector<int> train_idx, val_idx, test_idx;
  std::string provenance;

  void validate() const;
};

struct CorruptionConfig {
  double rotation_max_deg = 12.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double translation_max_px = 3.0;
  double brightness_jitter = 0.12;
  double contrast_jitter = 0.15;
  double gaussian_noise_sigma = 0.04;
  double background_clutter_level = 0.1;  // 0 disables clutter patches
};

struct SynthConfig {
  int num_classes = 10;
  int samples_per_class = 100;
  std::uint64_t template_seed = 7;
  CorruptionConfig corruption;
  int image_side = 48;       // sample resolution
  int prototype_side = 100;  // template/prototype resolution

  void validate() const;
};

// Deterministic seed stream: parallel and serial generation agree because
// each sample owns seed mix(master, index).
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

// Renders num_classes distinct glyph templates (seeded compositions of
// geometric primitives) at prototype resolution, grayscale. Re-samples any
// template whose default-HOG embedding comes within cosine 0.999 of an
// earlier one; throws "template-collision-exhausted" after 100 retries.
std::vector<std::pair<std::string, Image>> generate_templates(
    const SynthConfig& config);

// Applies, in order: rotation/scale/translation (bilinear), brightness and
// contrast jitter, additive Gaussian noise (clipped), clutter patches.
// Output at image_side resolution; deterministic per seed. With all
// magnitudes zero this is exactly resize_bilinear(template, image_side).
Image corrupt(const Image& template_image, const CorruptionConfig& corruption,
              int image_side, std::uint64_t seed);

struct SyntheticData {
  Dataset dataset;
  std::vector<std::pair<std::string, Image>> templates;
};

// Templates become prototypes; corruptions become samples; per-class
// partitions split 60/20/20 by seeded shuffle.
SyntheticData build_synthetic(const SynthConfig& config,
                              std::uint64_t master_seed);

// Directory layout: images/<class_id>/<n>.png + manifest.csv
// (path,class_id,partition). Prototypes go to prototypes/<class_id>.png.
void save_dataset(const Dataset& dataset, const std::string& root);
void save_prototypes(const std::vector<std::pair<std::string, Image>>& protos,
                     const std::string& root);

// Loads per a manifest CSV with header path,class_id,partition and optional
// crop columns x,y,w,h. resize_side 0 keeps native resolution.
Dataset load_directory(const std::string& root, const std::string& manifest,
                       int resize_side);

// prototypes/<class_id>.png convention, or a prototypes.csv manifest with
// header class_id,path.
std::vector<std::pair<std::string, Image>> load_prototype_images(
    const std::string& root);

}  // namespace protonet
