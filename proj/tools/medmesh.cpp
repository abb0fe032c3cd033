// Batch command-line front end: train, eval, segment, rescale, synth and
// bench-pool-memory. Errors end the process with a single line on stderr,
//   error kind=<ErrorKind> category=<config|data|runtime> message=<text>
// and exit code 1 (config), 2 (data) or 3 (runtime).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "medmesh/checkpoint.hpp"
#include "medmesh/config.hpp"
#include "medmesh/error.hpp"
#include "medmesh/features.hpp"
#include "medmesh/labels.hpp"
#include "medmesh/metrics.hpp"
#include "medmesh/pool.hpp"
#include "medmesh/rescale.hpp"
#include "medmesh/synth.hpp"
#include "medmesh/train.hpp"

namespace fs = std::filesystem;
using namespace medmesh;

namespace {

std::string category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Runtime: return "runtime";
  }
  return "runtime";
}

int report(ErrorKind kind, const std::string& message) {
  std::string flat = message;
  for (char& ch : flat)
    if (ch == '\n' || ch == '\r') ch = ' ';
  const ErrorCategory c = category_of(kind);
  std::cerr << "error kind=" << to_string(kind) << " category=" << category_name(c) << " message=" << flat
            << std::endl;
  return static_cast<int>(c);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- run configuration --------------------------------------------------------

struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("--config", opts.file, "key=value config file; explicit flags override it");
  for (const std::string& key : config_keys())
    cmd->add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.flags[key] = v; }, "override " + key);
}

RunConfig resolve_config(const ConfigOptions& opts) {
  RunConfig cfg;
  if (!opts.file.empty())
    for (const auto& [k, v] : read_config_file(opts.file)) apply_setting(cfg, k, v);
  for (const auto& [k, v] : opts.flags) apply_setting(cfg, k, v);
  cfg.validate();
  return cfg;
}

// ---- commands -------------------------------------------------------------------

int cmd_train(const ConfigOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (cfg.dataroot.empty()) throw Error(ErrorKind::ConfigError, "dataroot is required");
  const Dataset data = load_dataset(cfg.dataroot, cfg.net.num_classes);
  const fs::path out = fs::path(cfg.checkpoints_dir) / cfg.name;
  fs::create_directories(out);
  write_config_file(cfg, out / "config.txt");

  std::ofstream log_file(out / "train.log");
  if (!log_file) throw Error(ErrorKind::IoError, "cannot write " + (out / "train.log").string());
  struct Tee : std::streambuf {
    std::streambuf* a;
    std::streambuf* b;
    int overflow(int c) override {
      if (c == EOF) return !EOF;
      a->sputc(static_cast<char>(c));
      b->sputc(static_cast<char>(c));
      return c;
    }
    int sync() override { return a->pubsync() | b->pubsync(); }
  } tee;
  tee.a = log_file.rdbuf();
  tee.b = std::cout.rdbuf();
  std::ostream log(&tee);

  const TrainResult r = train(data.train, data.val, cfg.net, cfg.train, &log);
  save_checkpoint(r.best, out / "best.json");
  std::cout << "best_epoch=" << r.best_epoch << " best_val_miou=" << fmt(r.best_val_miou)
            << " checkpoint=" << (out / "best.json").string() << '\n';
  return 0;
}

void print_metrics(const ConfusionMatrix& cm, bool kv) {
  const IouReport r = iou(cm);
  const double acc = accuracy(cm);
  for (std::size_t c = 0; c < r.per_class.size(); ++c)
    std::cout << "class " << c << " IoU " << (r.per_class[c] ? fmt(*r.per_class[c]) : "undefined") << '\n';
  std::cout << "mean IoU " << fmt(r.mean) << '\n' << "accuracy " << fmt(acc) << '\n';
  if (kv) {
    for (std::size_t c = 0; c < r.per_class.size(); ++c)
      std::cout << "iou_c" << c << '=' << (r.per_class[c] ? fmt(*r.per_class[c]) : "na") << '\n';
    std::cout << "mean_iou=" << fmt(r.mean) << '\n' << "accuracy=" << fmt(acc) << '\n';
  }
}

struct EvalArgs {
  std::string checkpoint, dataroot, split = "test", pred, gt;
  int num_classes = synth::kNumClasses;
  bool kv = false;
};

int cmd_eval(const EvalArgs& a) {
  if (!a.pred.empty() || !a.gt.empty()) {
    if (a.pred.empty() || a.gt.empty()) throw Error(ErrorKind::ConfigError, "--pred and --gt go together");
    const std::vector<int> pred = load_eseg(a.pred), gt = load_eseg(a.gt);
    print_metrics(confusion(pred, gt, {}, a.num_classes), a.kv);
    return 0;
  }
  if (a.checkpoint.empty() || a.dataroot.empty())
    throw Error(ErrorKind::ConfigError, "eval needs --checkpoint and --dataroot, or --pred and --gt");
  const MeshUNet net = load_checkpoint(a.checkpoint);
  const auto samples = load_split(fs::path(a.dataroot) / a.split, net.config().num_classes);
  if (samples.empty()) throw Error(ErrorKind::MissingFile, "no meshes in split " + a.split);
  print_metrics(evaluate(net, samples), a.kv);
  return 0;
}

int cmd_segment(const std::string& checkpoint, const std::string& mesh_path, const std::string& out) {
  const MeshUNet net = load_checkpoint(checkpoint);
  const Mesh mesh = load_obj(mesh_path);
  save_eseg(predict(net, mesh), out);
  return 0;
}

int cmd_rescale(const std::string& low, const std::string& low_labels, const std::string& high,
                const std::string& out) {
  const Mesh low_mesh = load_obj(low);
  const Mesh high_mesh = load_obj(high);
  save_eseg(rescale_labels(low_mesh, load_eseg(low_labels), high_mesh), out);
  return 0;
}

int cmd_synth(const synth::DatasetSpec& spec, const std::string& out) {
  const Dataset d = synth::generate_dataset(spec);
  std::size_t index = 0;
  for (auto [split, samples] : {std::pair{"train", &d.train}, {"val", &d.val}, {"test", &d.test}})
    for (const LabeledSample& s : *samples) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "synth_%04zu", index++);
      save_sample(s, fs::path(out) / split, stem);
    }
  std::cout << "wrote " << index << " samples to " << out << '\n';
  return 0;
}

int cmd_bench(const std::vector<std::size_t>& counts, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorKind::ConfigError, "fraction must lie in (0, 1)");
  std::cout << "edge_count dense_elements sparse_nonzeros ratio\n";
  for (std::size_t e : counts) {
    // Subdivided icospheres have 30 * 4^level edges.
    int level = 0;
    std::size_t n = 30;
    while (n < e) n *= 4, ++level;
    if (n != e)
      throw Error(ErrorKind::ConfigError,
                  "edge count " + std::to_string(e) + " is not an icosphere size (30 * 4^k)");
    const Mesh mesh = synth::icosphere(level);
    const auto target = static_cast<std::size_t>(fraction * static_cast<double>(e));
    const PoolResult pooled = mesh_pool(mesh, extract_edge_features(mesh), target);
    const PoolMemoryReport r = pool_memory_report(e, pooled.history);
    std::cout << r.edge_count << ' ' << r.dense_elements << ' ' << r.sparse_nonzeros << ' '
              << (r.ratio ? fmt(*r.ratio) : "na") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-based mesh segmentation"};
  app.require_subcommand(1);

  ConfigOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train a MeshUNet; writes checkpoint, log and effective config");
  add_config_options(train_cmd, train_opts);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "per-class IoU, mean IoU and accuracy");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint);
  eval_cmd->add_option("--dataroot", eval_args.dataroot);
  eval_cmd->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--pred", eval_args.pred, "predicted .eseg, compared against --gt");
  eval_cmd->add_option("--gt", eval_args.gt);
  eval_cmd->add_option("--num-classes", eval_args.num_classes);
  eval_cmd->add_flag("--kv", eval_args.kv, "also print key=value lines");

  std::string seg_ckpt, seg_mesh, seg_out;
  CLI::App* seg_cmd = app.add_subcommand("segment", "label every edge of a mesh");
  seg_cmd->add_option("--checkpoint", seg_ckpt)->required();
  seg_cmd->add_option("--mesh", seg_mesh)->required();
  seg_cmd->add_option("--out", seg_out)->required();

  std::string low, low_labels, high, rescale_out;
  CLI::App* rescale_cmd = app.add_subcommand("rescale", "transfer edge labels to a finer mesh");
  rescale_cmd->add_option("--low-mesh", low)->required();
  rescale_cmd->add_option("--low-labels", low_labels)->required();
  rescale_cmd->add_option("--high-mesh", high)->required();
  rescale_cmd->add_option("--out", rescale_out)->required();

  synth::DatasetSpec synth_args;
  std::string synth_out;
  bool synth_closed = false;
  CLI::App* synth_cmd = app.add_subcommand("synth", "write a synthetic train/val/test dataset");
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--train", synth_args.train);
  synth_cmd->add_option("--val", synth_args.val);
  synth_cmd->add_option("--test", synth_args.test);
  synth_cmd->add_option("--min-edges", synth_args.min_edges);
  synth_cmd->add_option("--max-edges", synth_args.max_edges);
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_flag("--closed", synth_closed, "close the tube ends");

  std::vector<std::size_t> bench_counts;
  double bench_fraction = 0.75;
  CLI::App* bench_cmd = app.add_subcommand("bench-pool-memory", "dense vs sparse merge-matrix size");
  bench_cmd->add_option("edge_counts", bench_counts, "icosphere edge counts, e.g. 480 1920 7680")->required();
  bench_cmd->add_option("--fraction", bench_fraction, "pool target as a fraction of the edge count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(ErrorKind::ConfigError, e.what());
  }

  try {
    if (*train_cmd) return cmd_train(train_opts);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*seg_cmd) return cmd_segment(seg_ckpt, seg_mesh, seg_out);
    if (*rescale_cmd) return cmd_rescale(low, low_labels, high, rescale_out);
    if (*synth_cmd) {
      synth_args.open_ends = !synth_closed;
      return cmd_synth(synth_args, synth_out);
    }
    if (*bench_cmd) return cmd_bench(bench_counts, bench_fraction);
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(ErrorKind::IoError, e.what());
  } catch (const std::exception& e) {
    std::cerr << "error kind=Internal category=runtime message=" << e.what() << std::endl;
    return static_cast<int>(ErrorCategory::Runtime);
  }
  return 0;
}
