#pragma once

#include <string>
#include <vector>

#include "protonet/hog.hpp"
#include "protonet/net.hpp"
#include "protonet/proto.hpp"

namespace protonet {

// Trunk architecture up to (and excluding) the embedding/output head.
struct NetworkPreset {
  struct LayerDef {
    std::string kind;  // conv | maxpool | fc | act | dropout
    int maps = 0, kernel = 0, window = 0, out = 0;
    double rate = 0;
  };
  std::string name = "desk";
  Shape input{48, 48, 1};
  std::string activation = "relu";  // or "tanh"
  std::vector<LayerDef> layers;
  HogConfig hog;  // embedding space paired with this trunk
};

// Shipped presets: "desk" (shrunk widths, s=60) and "paper-ref" (full-scale
// trunk, s=100).
NetworkPreset preset_by_name(const std::string& name);
NetworkPreset preset_from_json_file(const std::string& path);
std::string preset_to_json(const NetworkPreset& preset);
NetworkPreset preset_from_json(const std::string& json_text);

enum class HeadKind { prototype, learned };

// Trunk + penultimate k-wide linear layer + fixed prototype head, or trunk
// + learnable C-wide output for the standard baseline.
Network<float> build_network(const NetworkPreset& preset,
                             const PrototypeSet& prototypes,
                             std::uint64_t seed);
Network<float> build_network_learned(const NetworkPreset& preset,
                                     int num_classes, std::uint64_t seed);

// On-disk model: structured-text header (preset, head kind, class list,
// format version) followed by raw little-endian float32 parameter tensors in
// layer-declaration order.
struct Model {
  NetworkPreset preset;
  HeadKind head = HeadKind::prototype;
  std::vector<std::string> class_ids;
  PrototypeSet prototypes;  // populated for prototype heads
  Network<float> net;
};

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// temp-file + rename so readers never observe partial output
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace protonet
