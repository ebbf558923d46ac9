#include "protonet/model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace protonet {

using nlohmann::json;

namespace {

json hog_to_json(const HogConfig& h) {
  return json{{"resize_side", h.resize_side},
              {"cell_size", h.cell_size},
              {"block_size", h.block_size},
              {"block_overlap", h.block_overlap},
              {"num_bins", h.num_bins},
              {"signed_orientations", h.signed_orientations},
              {"epsilon", h.epsilon}};
}

HogConfig hog_from_json(const json& j) {
  HogConfig h;
  h.resize_side = j.value("resize_side", h.resize_side);
  h.cell_size = j.value("cell_size", h.cell_size);
  h.block_size = j.value("block_size", h.block_size);
  h.block_overlap = j.value("block_overlap", h.block_overlap);
  h.num_bins = j.value("num_bins", h.num_bins);
  h.signed_orientations = j.value("signed_orientations", h.signed_orientations);
  h.epsilon = j.value("epsilon", h.epsilon);
  return h;
}

json preset_to_json_obj(const NetworkPreset& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    json jl{{"kind", l.kind}};
    if (l.kind == "conv") {
      jl["maps"] = l.maps;
      jl["kernel"] = l.kernel;
    } else if (l.kind == "maxpool") {
      jl["window"] = l.window;
    } else if (l.kind == "fc") {
      jl["out"] = l.out;
    } else if (l.kind == "dropout") {
      jl["rate"] = l.rate;
    }
    layers.push_back(jl);
  }
  return json{{"name", p.name},
              {"input", {p.input.h, p.input.w, p.input.c}},
              {"activation", p.activation},
              {"layers", layers},
              {"hog", hog_to_json(p.hog)}};
}

NetworkPreset preset_from_json_obj(const json& j) {
  NetworkPreset p;
  p.name = j.value("name", "custom");
  if (j.contains("input")) {
    p.input.h = j["input"][0];
    p.input.w = j["input"][1];
    p.input.c = j["input"][2];
  }
  p.activation = j.value("activation", "relu");
  if (p.activation != "relu" && p.activation != "tanh")
    throw Error("invalid-config", "activation must be relu or tanh");
  for (const auto& jl : j.at("layers")) {
    NetworkPreset::LayerDef l;
    l.kind = jl.at("kind");
    l.maps = jl.value("maps", 0);
    l.kernel = jl.value("kernel", 0);
    l.window = jl.value("window", 0);
    l.out = jl.value("out", 0);
    l.rate = jl.value("rate", 0.0);
    p.layers.push_back(l);
  }
  if (j.contains("hog")) p.hog = hog_from_json(j["hog"]);
  return p;
}

void append_trunk(Network<float>& net, const NetworkPreset& preset,
                  std::mt19937_64& rng) {
  const auto fn = preset.activation == "tanh" ? ActivationLayer<float>::Fn::tanh
                                              : ActivationLayer<float>::Fn::relu;
  Shape shape = preset.input;
  net.input_shape = shape;
  for (const auto& l : preset.layers) {
    if (l.kind == "conv")
      net.layers.push_back(
          std::make_unique<ConvLayer<float>>(shape, l.maps, l.kernel, rng));
    else if (l.kind == "maxpool")
      net.layers.push_back(std::make_unique<MaxPoolLayer<float>>(shape, l.window));
    else if (l.kind == "fc")
      net.layers.push_back(
          std::make_unique<FullyConnectedLayer<float>>(shape, l.out, rng));
    else if (l.kind == "act")
      net.layers.push_back(std::make_unique<ActivationLayer<float>>(shape, fn));
    else if (l.kind == "dropout")
      net.layers.push_back(std::make_unique<DropoutLayer<float>>(shape, l.rate));
    else
      throw Error("invalid-config", "unknown layer kind '" + l.kind + "'");
    shape = net.layers.back()->output_shape();
  }
}

}  // namespace

NetworkPreset preset_by_name(const std::string& name) {
  NetworkPreset p;
  p.name = name;
  using L = NetworkPreset::LayerDef;
  if (name == "desk") {
    p.input = Shape{48, 48, 1};
    p.hog.resize_side = 60;
    p.layers = {L{.kind = "conv", .maps = 8, .kernel = 7},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "conv", .maps = 16, .kernel = 4},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "conv", .maps = 32, .kernel = 4},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "fc", .out = 64},
                L{.kind = "act"},
                L{.kind = "dropout", .rate = 0.5}};
  } else if (name == "paper-ref") {
    p.input = Shape{48, 48, 3};
    p.hog.resize_side = 100;
    p.layers = {L{.kind = "conv", .maps = 100, .kernel = 7},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "conv", .maps = 150, .kernel = 4},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "conv", .maps = 250, .kernel = 4},
                L{.kind = "act"},
                L{.kind = "maxpool", .window = 2},
                L{.kind = "fc", .out = 300},
                L{.kind = "act"},
                L{.kind = "dropout", .rate = 0.5}};
  } else {
    throw Error("invalid-config", "unknown preset '" + name + "'");
  }
  return p;
}

NetworkPreset preset_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("missing-file", path);
  std::stringstream ss;
  ss << f.rdbuf();
  return preset_from_json(ss.str());
}

std::string preset_to_json(const NetworkPreset& preset) {
  return preset_to_json_obj(preset).dump(2);
}

NetworkPreset preset_from_json(const std::string& json_text) {
  return preset_from_json_obj(json::parse(json_text));
}

Network<float> build_network(const NetworkPreset& preset,
                             const PrototypeSet& prototypes,
                             std::uint64_t seed) {
  prototypes.validate();
  if (!(prototypes.hog_config == preset.hog))
    throw Error("hog-config-mismatch",
                "prototype embeddings were produced under a different HOG "
                "parameterization than the preset expects");
  Network<float> net;
  std::mt19937_64 rng(seed);
  append_trunk(net, preset, rng);
  const Shape trunk_out =
      net.layers.empty() ? net.input_shape : net.layers.back()->output_shape();
  net.layers.push_back(std::make_unique<FullyConnectedLayer<float>>(
      trunk_out, prototypes.dimension(), rng));
  net.layers.push_back(std::make_unique<FixedHeadLayer<float>>(
      net.layers.back()->output_shape(), prototypes.matrix));
  return net;
}

Network<float> build_network_learned(const NetworkPreset& preset,
                                     int num_classes, std::uint64_t seed) {
  if (num_classes < 1) throw Error("invalid-config", "need >= 1 class");
  Network<float> net;
  std::mt19937_64 rng(seed);
  append_trunk(net, preset, rng);
  const Shape trunk_out =
      net.layers.empty() ? net.input_shape : net.layers.back()->output_shape();
  net.layers.push_back(
      std::make_unique<FullyConnectedLayer<float>>(trunk_out, num_classes, rng));
  return net;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io-error", "cannot write " + tmp);
    f << contents;
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const Model& model, const std::string& path) {
  json header{{"format", "protonet-checkpoint"},
              {"version", 1},
              {"preset", preset_to_json_obj(model.preset)},
              {"head", model.head == HeadKind::prototype ? "prototype"
                                                         : "learned"},
              {"class_ids", model.class_ids}};
  std::vector<std::int64_t> counts;
  for (const auto& l : model.net.layers) counts.push_back(l->theta.size());
  header["param_counts"] = counts;
  if (model.head == HeadKind::prototype) {
    header["prototype_hog"] = hog_to_json(model.prototypes.hog_config);
    header["prototype_sources"] = model.prototypes.source_refs;
    header["k"] = model.prototypes.dimension();
  }

  std::ostringstream out;
  out << "PROTONET v1\n" << header.dump() << "\n";
  for (const auto& l : model.net.layers)
    if (l->theta.size() > 0)
      out.write(reinterpret_cast<const char*>(l->theta.data()),
                std::streamsize(sizeof(float)) * l->theta.size());
  if (model.head == HeadKind::prototype)
    out.write(reinterpret_cast<const char*>(model.prototypes.matrix.data()),
              std::streamsize(sizeof(float)) * model.prototypes.matrix.size());
  write_file_atomic(path, out.str());
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("missing-file", path);
  std::string magic, header_line;
  std::getline(f, magic);
  if (magic != "PROTONET v1")
    throw Error("bad-checkpoint", "unrecognized header in " + path);
  std::getline(f, header_line);
  const json header = json::parse(header_line);

  Model model;
  model.preset = preset_from_json_obj(header.at("preset"));
  model.head = header.at("head") == "prototype" ? HeadKind::prototype
                                                : HeadKind::learned;
  model.class_ids = header.at("class_ids").get<std::vector<std::string>>();

  auto read_floats = [&](float* dst, std::int64_t count) {
    f.read(reinterpret_cast<char*>(dst),
           std::streamsize(sizeof(float)) * count);
    if (!f) throw Error("bad-checkpoint", "truncated tensor data in " + path);
  };

  if (model.head == HeadKind::prototype) {
    model.prototypes.hog_config = hog_from_json(header.at("prototype_hog"));
    model.prototypes.class_ids = model.class_ids;
    model.prototypes.source_refs =
        header.value("prototype_sources", std::vector<std::string>());
    const int k = header.at("k");
    model.prototypes.matrix.resize(k, Eigen::Index(model.class_ids.size()));
    // prototype matrix sits after the learnable tensors; rebuild first,
    // then seek back through the stream in declaration order
    std::vector<std::int64_t> counts =
        header.at("param_counts").get<std::vector<std::int64_t>>();
    std::vector<std::vector<float>> blobs;
    for (std::int64_t n : counts) {
      blobs.emplace_back(size_t(n));
      if (n > 0) read_floats(blobs.back().data(), n);
    }
    read_floats(model.prototypes.matrix.data(),
                std::int64_t(model.prototypes.matrix.size()));
    model.net = build_network(model.preset, model.prototypes, /*seed=*/0);
    if (counts.size() != model.net.layers.size())
      throw Error("bad-checkpoint", "layer count mismatch");
    for (size_t i = 0; i < counts.size(); ++i) {
      if (model.net.layers[i]->theta.size() != Eigen::Index(counts[i]))
        throw Error("bad-checkpoint", "tensor size mismatch at layer " +
                                          std::to_string(i));
      std::copy(blobs[i].begin(), blobs[i].end(),
                model.net.layers[i]->theta.data());
    }
  } else {
    model.net = build_network_learned(model.preset, int(model.class_ids.size()),
                                      /*seed=*/0);
    std::vector<std::int64_t> counts =
        header.at("param_counts").get<std::vector<std::int64_t>>();
    if (counts.size() != model.net.layers.size())
      throw Error("bad-checkpoint", "layer count mismatch");
    for (size_t i = 0; i < counts.size(); ++i) {
      if (model.net.layers[i]->theta.size() != Eigen::Index(counts[i]))
        throw Error("bad-checkpoint", "tensor size mismatch at layer " +
                                          std::to_string(i));
      if (counts[i] > 0) read_floats(model.net.layers[i]->theta.data(), counts[i]);
    }
  }
  return model;
}

}  // namespace protonet
