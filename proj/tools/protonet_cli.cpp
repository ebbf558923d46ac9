// Command-line front end: dataset synthesis, HOG embedding, training with a
// prototype or learned head, checkpoint evaluation, and zero-shot comparison.
//
// Every run writes its fully-resolved configuration next to its outputs, so a
// run is reconstructible from the output directory alone. Metric files are
// written atomically and are byte-identical across repeated invocations with
// the same flags and seeds. A JSON file passed via --config overrides flags.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "protonet/data.hpp"
#include "protonet/model.hpp"
#include "protonet/png_io.hpp"
#include "protonet/zeroshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace protonet;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("missing-file", "config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw Error("bad-config", std::string("config parse: ") + e.what());
  }
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void write_json(const std::string& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw Error("invalid-usage", "--out is required");
  fs::create_directories(dir);
}

json hog_to_json(const HogConfig& h) {
  return json{{"resize_side", h.resize_side},
              {"cell_size", h.cell_size},
              {"block_size", h.block_size},
              {"block_overlap", h.block_overlap},
              {"num_bins", h.num_bins},
              {"signed_orientations", h.signed_orientations},
              {"epsilon", h.epsilon}};
}

void hog_from_json(const json& j, HogConfig& h) {
  maybe(j, "resize_side", h.resize_side);
  maybe(j, "cell_size", h.cell_size);
  maybe(j, "block_size", h.block_size);
  maybe(j, "block_overlap", h.block_overlap);
  maybe(j, "num_bins", h.num_bins);
  maybe(j, "signed_orientations", h.signed_orientations);
  maybe(j, "epsilon", h.epsilon);
}

// ---------------------------------------------------------------- synth ----

struct SynthOpts {
  std::string out, config;
  SynthConfig cfg;
  std::uint64_t seed = 1;
};

void add_synth(CLI::App& app, SynthOpts& o) {
  CLI::App* c = app.add_subcommand("synth", "generate a synthetic dataset");
  c->add_option("--classes", o.cfg.num_classes, "number of classes");
  c->add_option("--per-class", o.cfg.samples_per_class, "samples per class");
  c->add_option("--image-side", o.cfg.image_side, "sample resolution");
  c->add_option("--proto-side", o.cfg.prototype_side, "prototype resolution");
  c->add_option("--template-seed", o.cfg.template_seed, "glyph template seed");
  c->add_option("--noise", o.cfg.corruption.gaussian_noise_sigma,
                "Gaussian noise sigma");
  c->add_option("--rotation", o.cfg.corruption.rotation_max_deg,
                "max rotation (degrees)");
  c->add_option("--seed", o.seed, "master corruption/partition seed");
  c->add_option("--out", o.out, "output directory")->required();
  c->add_option("--config", o.config, "JSON config file (overrides flags)");
}

int run_synth(SynthOpts& o) {
  if (!o.config.empty()) {
    const json j = load_config_file(o.config);
    maybe(j, "classes", o.cfg.num_classes);
    maybe(j, "per_class", o.cfg.samples_per_class);
    maybe(j, "image_side", o.cfg.image_side);
    maybe(j, "proto_side", o.cfg.prototype_side);
    maybe(j, "template_seed", o.cfg.template_seed);
    maybe(j, "noise", o.cfg.corruption.gaussian_noise_sigma);
    maybe(j, "rotation", o.cfg.corruption.rotation_max_deg);
    maybe(j, "seed", o.seed);
  }
  o.cfg.validate();
  ensure_dir(o.out);

  const SyntheticData data = build_synthetic(o.cfg, o.seed);
  save_dataset(data.dataset, o.out);
  save_prototypes(data.templates, o.out);

  write_json((fs::path(o.out) / "config.json").string(),
             json{{"command", "synth"},
                  {"classes", o.cfg.num_classes},
                  {"per_class", o.cfg.samples_per_class},
                  {"image_side", o.cfg.image_side},
                  {"proto_side", o.cfg.prototype_side},
                  {"template_seed", o.cfg.template_seed},
                  {"noise", o.cfg.corruption.gaussian_noise_sigma},
                  {"rotation", o.cfg.corruption.rotation_max_deg},
                  {"seed", o.seed}});
  std::cout << "wrote " << data.dataset.samples.size() << " samples, "
            << data.templates.size() << " prototypes to " << o.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ hog ----

struct HogOpts {
  std::string image, out, config;
  HogConfig cfg;
  bool dims_only = false;
};

void add_hog(CLI::App& app, HogOpts& o) {
  CLI::App* c = app.add_subcommand("hog", "embed an image");
  c->add_option("image", o.image, "input PNG");
  c->add_option("--resize-side", o.cfg.resize_side, "working resolution s");
  c->add_option("--cell", o.cfg.cell_size, "cell size c");
  c->add_option("--block", o.cfg.block_size, "block size b (cells)");
  c->add_option("--overlap", o.cfg.block_overlap, "block overlap o (cells)");
  c->add_option("--bins", o.cfg.num_bins, "orientation bins n");
  c->add_flag("--signed", o.cfg.signed_orientations, "signed orientations");
  c->add_option("--epsilon", o.cfg.epsilon, "block-normalization epsilon");
  c->add_flag("--dims-only", o.dims_only, "print the feature length and exit");
  c->add_option("--out", o.out, "optional output directory");
  c->add_option("--config", o.config, "JSON config file (overrides flags)");
}

int run_hog(HogOpts& o) {
  if (!o.config.empty()) {
    const json j = load_config_file(o.config);
    hog_from_json(j, o.cfg);
    maybe(j, "image", o.image);
    maybe(j, "dims_only", o.dims_only);
  }
  o.cfg.validate();
  if (o.dims_only) {
    std::cout << hog_dimension(o.cfg) << "\n";
    return 0;
  }
  if (o.image.empty()) throw Error("invalid-usage", "an image path is required");

  const Image img = read_png(o.image);
  const Eigen::VectorXd emb = hog_embed_prototype(img, o.cfg);

  std::string row;
  for (int i = 0; i < emb.size(); ++i) {
    if (i) row += ',';
    row += num(emb[i]);
  }
  std::cout << row << "\n";

  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_file_atomic((fs::path(o.out) / "embedding.csv").string(), row + "\n");
    json je = json::array();
    for (int i = 0; i < emb.size(); ++i) je.push_back(emb[i]);
    write_json((fs::path(o.out) / "embedding.json").string(),
               json{{"dimension", int(emb.size())}, {"values", je}});
    json cfg = hog_to_json(o.cfg);
    cfg["command"] = "hog";
    cfg["image"] = o.image;
    write_json((fs::path(o.out) / "config.json").string(), cfg);
  }
  return 0;
}

// ----------------------------------------------------------- train/eval ----

NetworkPreset resolve_preset(const std::string& name, const std::string& file,
                             double dropout) {
  NetworkPreset preset =
      file.empty() ? preset_by_name(name) : preset_from_json_file(file);
  if (dropout >= 0)
    for (auto& l : preset.layers)
      if (l.kind == "dropout") l.rate = dropout;
  return preset;
}

PrototypeSet prototypes_for(const std::string& dir, const HogConfig& hog,
                            const std::vector<std::string>& class_ids) {
  const auto images = load_prototype_images(dir);
  std::vector<std::string> refs;
  for (const auto& [id, img] : images) refs.push_back(dir + "/" + id + ".png");
  return build_prototype_set(images, hog, refs).set.select(class_ids);
}

struct TrainOpts {
  std::string data, manifest, prototypes, preset = "desk", preset_file;
  std::string head = "prototype", out, config;
  double dropout = -1;
  TrainSchedule schedule;
};

void add_train_flags(CLI::App* c, TrainOpts& o) {
  c->add_option("--data", o.data, "dataset directory")->required();
  c->add_option("--manifest", o.manifest, "manifest CSV (default <data>/manifest.csv)");
  c->add_option("--prototypes", o.prototypes,
                "prototype image directory (default <data>/prototypes)");
  c->add_option("--preset", o.preset, "architecture preset: desk | paper-ref");
  c->add_option("--preset-file", o.preset_file, "architecture JSON file");
  c->add_option("--dropout", o.dropout, "override preset dropout rate");
  c->add_option("--epochs", o.schedule.epochs, "training epochs");
  c->add_option("--batch", o.schedule.batch_size, "mini-batch size");
  c->add_option("--lr", o.schedule.learning_rate, "learning rate");
  c->add_option("--momentum", o.schedule.momentum, "SGD momentum");
  c->add_option("--seed", o.schedule.seed, "training/init seed");
  c->add_option("--out", o.out, "output directory")->required();
  c->add_option("--config", o.config, "JSON config file (overrides flags)");
}

void overlay_train(const json& j, TrainOpts& o) {
  maybe(j, "data", o.data);
  maybe(j, "manifest", o.manifest);
  maybe(j, "prototypes", o.prototypes);
  maybe(j, "preset", o.preset);
  maybe(j, "preset_file", o.preset_file);
  maybe(j, "head", o.head);
  maybe(j, "dropout", o.dropout);
  maybe(j, "epochs", o.schedule.epochs);
  maybe(j, "batch", o.schedule.batch_size);
  maybe(j, "lr", o.schedule.learning_rate);
  maybe(j, "momentum", o.schedule.momentum);
  maybe(j, "seed", o.schedule.seed);
}

json train_config_json(const TrainOpts& o, const NetworkPreset& preset) {
  return json{{"command", "train"},
              {"data", o.data},
              {"manifest", o.manifest},
              {"prototypes", o.prototypes},
              {"preset", json::parse(preset_to_json(preset))},
              {"head", o.head},
              {"epochs", o.schedule.epochs},
              {"batch", o.schedule.batch_size},
              {"lr", o.schedule.learning_rate},
              {"momentum", o.schedule.momentum},
              {"seed", o.schedule.seed}};
}

double accuracy_on(Network<float>& net, const Dataset& ds,
                   const std::vector<int>& indices,
                   const std::vector<std::string>& label_space,
                   std::map<std::string, double>* per_class = nullptr) {
  std::map<std::string, int> hits, totals;
  int correct = 0;
  for (int idx : indices) {
    const Sample& s = ds.samples[size_t(idx)];
    const std::string& cid = ds.class_ids[size_t(s.label)];
    const auto it = std::find(label_space.begin(), label_space.end(), cid);
    if (it == label_space.end())
      throw Error("coverage-mismatch", "class " + cid + " not in model");
    const int truth = int(it - label_space.begin());
    ++totals[cid];
    if (classify(net, s.image).class_index == truth) {
      ++correct;
      ++hits[cid];
    }
  }
  if (per_class)
    for (const auto& [cid, total] : totals)
      (*per_class)[cid] = double(hits[cid]) / double(total);
  return indices.empty() ? 0.0 : double(correct) / double(indices.size());
}

int run_train(TrainOpts& o) {
  if (!o.config.empty()) overlay_train(load_config_file(o.config), o);
  if (o.head != "prototype" && o.head != "learned")
    throw Error("invalid-usage", "--head must be prototype or learned");
  if (o.manifest.empty()) o.manifest = (fs::path(o.data) / "manifest.csv").string();
  if (o.prototypes.empty()) o.prototypes = (fs::path(o.data) / "prototypes").string();
  const NetworkPreset preset =
      resolve_preset(o.preset, o.preset_file, o.dropout);
  ensure_dir(o.out);

  const Dataset ds = load_directory(o.data, o.manifest, preset.input.h);

  Model model;
  model.preset = preset;
  model.class_ids = ds.class_ids;
  if (o.head == "prototype") {
    model.head = HeadKind::prototype;
    model.prototypes = prototypes_for(o.prototypes, preset.hog, ds.class_ids);
    model.net = build_network(preset, model.prototypes, o.schedule.seed);
  } else {
    model.head = HeadKind::learned;
    model.net = build_network_learned(preset, int(ds.class_ids.size()),
                                      o.schedule.seed);
  }

  const TrainResult<float> result =
      train(model.net, ds.samples, ds.train_idx, ds.val_idx, o.schedule);
  std::map<std::string, double> per_class;
  const double test_acc =
      accuracy_on(model.net, ds, ds.test_idx, ds.class_ids, &per_class);

  save_checkpoint(model, (fs::path(o.out) / "model.ckpt").string());

  std::string csv = "epoch,train_loss,val_accuracy\n";
  json epochs = json::array();
  for (const EpochMetrics& m : result.epochs) {
    csv += std::to_string(m.epoch) + "," + num(m.train_loss) + "," +
           num(m.val_accuracy) + "\n";
    epochs.push_back(json{{"epoch", m.epoch},
                          {"train_loss", m.train_loss},
                          {"val_accuracy", m.val_accuracy}});
  }
  write_file_atomic((fs::path(o.out) / "metrics.csv").string(), csv);
  write_json((fs::path(o.out) / "metrics.json").string(),
             json{{"head", o.head},
                  {"epochs", epochs},
                  {"test_accuracy", test_acc},
                  {"per_class_accuracy", per_class}});
  write_json((fs::path(o.out) / "config.json").string(),
             train_config_json(o, preset));
  std::cout << "test_accuracy " << num(test_acc) << "\n";
  return 0;
}

struct EvalOpts {
  std::string model, data, manifest, prototypes, partition = "test";
  std::string out, config;
};

void add_eval(CLI::App& app, EvalOpts& o) {
  CLI::App* c = app.add_subcommand("eval", "evaluate a checkpoint");
  c->add_option("--model", o.model, "checkpoint path")->required();
  c->add_option("--data", o.data, "dataset directory")->required();
  c->add_option("--manifest", o.manifest, "manifest CSV (default <data>/manifest.csv)");
  c->add_option("--prototypes", o.prototypes,
                "swap the head to these prototype images before evaluating");
  c->add_option("--partition", o.partition, "train | val | test");
  c->add_option("--out", o.out, "output directory")->required();
  c->add_option("--config", o.config, "JSON config file (overrides flags)");
}

int run_eval(EvalOpts& o) {
  if (!o.config.empty()) {
    const json j = load_config_file(o.config);
    maybe(j, "model", o.model);
    maybe(j, "data", o.data);
    maybe(j, "manifest", o.manifest);
    maybe(j, "prototypes", o.prototypes);
    maybe(j, "partition", o.partition);
  }
  if (o.manifest.empty()) o.manifest = (fs::path(o.data) / "manifest.csv").string();
  ensure_dir(o.out);

  Model model = load_checkpoint(o.model);
  const Dataset ds = load_directory(o.data, o.manifest, model.preset.input.h);
  std::vector<std::string> label_space = model.class_ids;
  if (!o.prototypes.empty()) {
    const PrototypeSet set =
        prototypes_for(o.prototypes, model.preset.hog, ds.class_ids);
    swap_head(model.net, set);
    label_space = set.class_ids;
  }

  const std::vector<int>& indices =
      o.partition == "train" ? ds.train_idx
      : o.partition == "val" ? ds.val_idx
      : o.partition == "test"
          ? ds.test_idx
          : throw Error("unknown-partition", o.partition);

  std::map<std::string, double> per_class;
  const double acc = accuracy_on(model.net, ds, indices, label_space,
                                 &per_class);

  std::string csv = "class_id,accuracy\n";
  for (const auto& [cid, a] : per_class) csv += cid + "," + num(a) + "\n";
  csv += "overall," + num(acc) + "\n";
  write_file_atomic((fs::path(o.out) / "metrics.csv").string(), csv);
  write_json((fs::path(o.out) / "metrics.json").string(),
             json{{"overall_accuracy", acc},
                  {"per_class_accuracy", per_class},
                  {"partition", o.partition},
                  {"samples", int(indices.size())}});
  write_json((fs::path(o.out) / "config.json").string(),
             json{{"command", "eval"},
                  {"model", o.model},
                  {"data", o.data},
                  {"manifest", o.manifest},
                  {"prototypes", o.prototypes},
                  {"partition", o.partition}});
  std::cout << "overall_accuracy " << num(acc) << "\n";
  return 0;
}

// ------------------------------------------------------------- zeroshot ----

struct ZeroshotOpts {
  TrainOpts base;  // data/preset/schedule flags
  int trials = 5, unseen = 3, conse_top_t = 0;
  bool curve = false;
};

void add_zeroshot(CLI::App& app, ZeroshotOpts& o) {
  CLI::App* c = app.add_subcommand(
      "zeroshot", "paired unseen-class comparison: prototype swap vs ConSE");
  add_train_flags(c, o.base);
  c->add_option("--trials", o.trials, "number of random class splits");
  c->add_option("--unseen", o.unseen, "unseen classes per split");
  c->add_option("--conse-top-t", o.conse_top_t,
                "ConSE top-T (0: all seen classes)");
  c->add_flag("--curve", o.curve,
              "trace the seen/unseen trade-off across epochs (first split)");
}

int run_zeroshot(ZeroshotOpts& o) {
  if (!o.base.config.empty()) {
    const json j = load_config_file(o.base.config);
    overlay_train(j, o.base);
    maybe(j, "trials", o.trials);
    maybe(j, "unseen", o.unseen);
    maybe(j, "conse_top_t", o.conse_top_t);
    maybe(j, "curve", o.curve);
  }
  if (o.base.manifest.empty())
    o.base.manifest = (fs::path(o.base.data) / "manifest.csv").string();
  if (o.base.prototypes.empty())
    o.base.prototypes = (fs::path(o.base.data) / "prototypes").string();
  const NetworkPreset preset =
      resolve_preset(o.base.preset, o.base.preset_file, o.base.dropout);
  ensure_dir(o.base.out);

  const Dataset ds = load_directory(o.base.data, o.base.manifest, preset.input.h);
  const PrototypeSet all =
      prototypes_for(o.base.prototypes, preset.hog, ds.class_ids);

  const std::vector<ClassSplit> splits =
      make_splits(ds.class_ids, o.unseen, o.trials, o.base.schedule.seed);
  const std::uint64_t init_seed = mix_seed(o.base.schedule.seed, 9001);
  const NetworkFactory factory = [&](const PrototypeSet& seen) {
    return build_network(preset, seen, init_seed);
  };
  const ConseConfig conse{o.conse_top_t};

  const ComparisonSummary summary = run_zero_shot_comparison(
      ds, all, splits, factory, o.base.schedule, conse);

  auto joined = [](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ";") + id;
    return s;
  };
  std::string csv = "trial,proposed_accuracy,conse_accuracy,unseen_classes\n";
  json trials = json::array();
  for (size_t t = 0; t < summary.trials.size(); ++t) {
    const TrialResult& r = summary.trials[t];
    csv += std::to_string(t) + "," + num(r.proposed_accuracy) + "," +
           num(r.conse_accuracy) + "," + joined(r.split.unseen) + "\n";
    trials.push_back(json{{"trial", int(t)},
                          {"seen", r.split.seen},
                          {"unseen", r.split.unseen},
                          {"proposed_accuracy", r.proposed_accuracy},
                          {"conse_accuracy", r.conse_accuracy}});
  }
  write_file_atomic((fs::path(o.base.out) / "metrics.csv").string(), csv);

  json out = json{{"trials", trials},
                  {"proposed_mean", summary.proposed_mean},
                  {"conse_mean", summary.conse_mean},
                  {"p_value", summary.p_value}};

  if (o.curve && !splits.empty()) {
    const ClassSplit& split = splits[0];
    const PrototypeSet protos_seen = all.select(split.seen);
    const PrototypeSet protos_unseen = all.select(split.unseen);

    auto is_unseen = [&](int label) {
      const std::string& cid = ds.class_ids[size_t(label)];
      return std::find(split.unseen.begin(), split.unseen.end(), cid) !=
             split.unseen.end();
    };
    std::vector<int> seen_index(ds.class_ids.size(), -1);
    for (size_t i = 0; i < split.seen.size(); ++i) {
      const auto it =
          std::find(ds.class_ids.begin(), ds.class_ids.end(), split.seen[i]);
      seen_index[size_t(it - ds.class_ids.begin())] = int(i);
    }
    std::vector<Sample> seen_samples;
    std::vector<int> seen_train, seen_val;
    auto take = [&](const std::vector<int>& src, std::vector<int>& dst) {
      for (int idx : src) {
        const Sample& s = ds.samples[size_t(idx)];
        if (seen_index[size_t(s.label)] < 0) continue;
        dst.push_back(int(seen_samples.size()));
        seen_samples.push_back(Sample{s.image, seen_index[size_t(s.label)]});
      }
    };
    take(ds.train_idx, seen_train);
    take(ds.val_idx, seen_val);

    Network<float> net = factory(protos_seen);
    TrainSchedule sched = o.base.schedule;
    sched.seed = mix_seed(o.base.schedule.seed, 0);  // match trial 0
    sched.keep_snapshots = true;
    const TrainResult<float> run =
        train(net, seen_samples, seen_train, seen_val, sched);

    std::vector<int> seen_test, unseen_test;
    for (int idx : ds.test_idx)
      if (!is_unseen(ds.samples[size_t(idx)].label)) seen_test.push_back(idx);
    for (size_t i = 0; i < ds.samples.size(); ++i)
      if (is_unseen(ds.samples[i].label)) unseen_test.push_back(int(i));

    const auto curve =
        tradeoff_curve(run.snapshots, protos_seen, protos_unseen, ds.samples,
                       seen_test, unseen_test, ds.class_ids);
    std::string ccsv = "checkpoint,seen_accuracy,unseen_accuracy\n";
    json jcurve = json::array();
    for (const TradeoffPoint& p : curve) {
      ccsv += p.checkpoint_id + "," + num(p.seen_accuracy) + "," +
              num(p.unseen_accuracy) + "\n";
      jcurve.push_back(json{{"checkpoint", p.checkpoint_id},
                            {"seen_accuracy", p.seen_accuracy},
                            {"unseen_accuracy", p.unseen_accuracy}});
    }
    write_file_atomic((fs::path(o.base.out) / "curve.csv").string(), ccsv);
    out["curve"] = jcurve;
  }

  write_json((fs::path(o.base.out) / "metrics.json").string(), out);
  json cfg = train_config_json(o.base, preset);
  cfg["command"] = "zeroshot";
  cfg["trials"] = o.trials;
  cfg["unseen"] = o.unseen;
  cfg["conse_top_t"] = o.conse_top_t;
  cfg["curve"] = o.curve;
  write_json((fs::path(o.base.out) / "config.json").string(), cfg);
  std::cout << "proposed_mean " << num(summary.proposed_mean) << " conse_mean "
            << num(summary.conse_mean) << " p_value " << num(summary.p_value)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prototype-head image classifier toolkit"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  HogOpts hog_opts;
  TrainOpts train_opts;
  EvalOpts eval_opts;
  ZeroshotOpts zs_opts;
  std::string preset_name;

  add_synth(app, synth_opts);
  add_hog(app, hog_opts);
  CLI::App* train_cmd = app.add_subcommand("train", "train a classifier");
  train_cmd->add_option("--head", train_opts.head,
                        "output head: prototype | learned");
  add_train_flags(train_cmd, train_opts);
  add_eval(app, eval_opts);
  add_zeroshot(app, zs_opts);
  CLI::App* preset_cmd =
      app.add_subcommand("preset", "print a shipped architecture preset");
  preset_cmd->add_option("name", preset_name, "desk | paper-ref")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "invalid-usage: " << e.what() << "\n";
    return e.get_exit_code();
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth_opts);
    if (app.got_subcommand("hog")) return run_hog(hog_opts);
    if (app.got_subcommand("train")) return run_train(train_opts);
    if (app.got_subcommand("eval")) return run_eval(eval_opts);
    if (app.got_subcommand("zeroshot")) return run_zeroshot(zs_opts);
    if (app.got_subcommand("preset")) {
      std::cout << preset_to_json(preset_by_name(preset_name)) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal-error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
