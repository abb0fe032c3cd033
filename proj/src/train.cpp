#include "medmesh/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>
#include <unordered_map>

#include "medmesh/error.hpp"
#include "medmesh/features.hpp"
#include "medmesh/labels.hpp"

namespace medmesh {

void TrainConfig::validate(int num_classes) const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (lr_policy != "lambda") fail("lr_policy must be lambda, got '" + lr_policy + "'");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(flip_edges >= 0.0 && flip_edges <= 1.0)) fail("flip_edges must lie in [0, 1]");
  if (!(slide_verts >= 0.0 && slide_verts <= 1.0)) fail("slide_verts must lie in [0, 1]");
  if (weighted_loss.size() != static_cast<std::size_t>(num_classes))
    fail("weighted_loss needs " + std::to_string(num_classes) + " entries, has " +
         std::to_string(weighted_loss.size()));
  for (double w : weighted_loss)
    if (!(w > 0.0) || !std::isfinite(w)) fail("class weights must be positive");
  if (epochs < 0 || decay_epochs < 0) fail("epochs and decay_epochs must be non-negative");
  if (epochs + decay_epochs == 0) fail("nothing to train: epochs + decay_epochs is 0");
  if (threads < 1) fail("threads must be at least 1");
}

// ---- loss ------------------------------------------------------------------

LossTerms cross_entropy_terms(const FeatureMap& logits, std::span<const int> labels,
                              std::span<const std::uint8_t> mask, std::span<const double> weights) {
  const Eigen::Index classes = logits.rows();
  if (labels.size() != static_cast<std::size_t>(logits.cols()) ||
      (!mask.empty() && mask.size() != labels.size()))
    throw Error(ErrorKind::ShapeMismatch, std::to_string(logits.cols()) + " logit columns, " +
                                              std::to_string(labels.size()) + " labels, " +
                                              std::to_string(mask.size()) + " mask entries");
  if (weights.size() != static_cast<std::size_t>(classes))
    throw Error(ErrorKind::ShapeMismatch, std::to_string(weights.size()) + " class weights for " +
                                              std::to_string(classes) + " classes");
  LossTerms t;
  t.grad = FeatureMap::Zero(classes, logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || y >= classes)
      throw Error(ErrorKind::LabelOutOfRange, "edge " + std::to_string(i) + " has label " + std::to_string(y));
    const auto z = logits.col(i);
    const double zmax = z.maxCoeff();
    const Eigen::VectorXd p = (z.array() - zmax).exp();
    const double total = p.sum();
    const double w = weights[y];
    t.weighted_nll += w * (std::log(total) + zmax - z(y));
    t.weight_sum += w;
    t.grad.col(i) = w * p / total;
    t.grad(y, i) -= w;
  }
  return t;
}

double weighted_cross_entropy(const FeatureMap& logits, std::span<const int> labels,
                              std::span<const std::uint8_t> mask, std::span<const double> weights) {
  const LossTerms t = cross_entropy_terms(logits, labels, mask, weights);
  if (t.weight_sum == 0.0) throw Error(ErrorKind::EmptyMask, "no edges contribute to the loss");
  return t.weighted_nll / t.weight_sum;
}

// ---- optimizer -------------------------------------------------------------

AdamState AdamState::zeros_like(const std::vector<std::span<double>>& params) {
  AdamState s;
  for (std::span<double> p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<double>>& grads, AdamState& state, double lr,
               double beta1) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw Error(ErrorKind::ShapeMismatch, "parameter, gradient and state lists differ in length");
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    std::span<double> p = params[t];
    std::span<const double> g = grads[t];
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    if (g.size() != p.size() || m.size() != p.size())
      throw Error(ErrorKind::ShapeMismatch, "tensor " + std::to_string(t) + " shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
    }
  }
}

double lr_lambda(int epoch, double base_lr, int epochs, int decay_epochs) {
  if (epoch < epochs) return base_lr;
  if (decay_epochs <= 0) return 0.0;
  const double progress = static_cast<double>(epoch - epochs) / decay_epochs;
  return base_lr * std::max(0.0, 1.0 - progress);
}

// ---- augmentation ----------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

Vec3 face_normal(const std::vector<Vec3>& p, const Face& f) {
  return (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]);
}

// Every face keeps a usable area and the orientation it had in `reference`.
bool faces_valid(const std::vector<Vec3>& p, const std::vector<Vec3>& reference,
                 const std::vector<Face>& faces) {
  for (const Face& f : faces) {
    const Vec3 n = face_normal(p, f);
    if (!(0.5 * n.norm() >= kDegenerateTolerance)) return false;
    if (n.dot(face_normal(reference, f)) <= 0.0) return false;
  }
  return true;
}

// Dihedral below this (radians between face normals) counts as flat enough to slide across.
constexpr double kSlideFlatness = 0.5;
constexpr double kSlideLow = 0.1;
constexpr double kSlideHigh = 0.3;

std::vector<Vec3> slide_vertices(const Mesh& mesh, std::mt19937_64& rng, double fraction) {
  std::vector<Vec3> p = mesh.vertices();
  if (fraction <= 0.0) return p;
  const FeatureMap features = extract_edge_features(mesh);
  std::vector<std::vector<int>> incident(mesh.vertex_count());
  std::vector<std::uint8_t> flat(mesh.vertex_count(), 1);
  for (std::size_t e = 0; e < mesh.real_edge_count(); ++e) {
    const auto [a, b] = mesh.edges()[e];
    incident[a].push_back(static_cast<int>(e));
    incident[b].push_back(static_cast<int>(e));
    if (!mesh.is_boundary(e) && features(0, static_cast<Eigen::Index>(e)) > kSlideFlatness)
      flat[a] = flat[b] = 0;
  }
  std::vector<int> order(mesh.vertex_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  const auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(order.size())));
  std::uniform_real_distribution<double> shift(kSlideLow, kSlideHigh);
  for (std::size_t k = 0; k < count; ++k) {
    const int v = order[k];
    if (!flat[v] || incident[v].empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, incident[v].size() - 1);
    const auto [a, b] = mesh.edges()[incident[v][pick(rng)]];
    const int w = a == v ? b : a;
    p[v] += shift(rng) * (mesh.vertices()[w] - mesh.vertices()[v]);
  }
  return p;
}

// Flips up to `fraction` of the interior edges; labels move with their edge.
LabeledSample flip_edges(const LabeledSample& s, std::mt19937_64& rng, double fraction) {
  const Mesh& mesh = s.mesh;
  if (fraction <= 0.0) return s;
  const auto& p = mesh.vertices();
  std::vector<Face> faces = mesh.faces();
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_faces;
  std::unordered_map<std::uint64_t, int> label;
  std::vector<std::uint64_t> candidates;
  for (std::size_t e = 0; e < mesh.real_edge_count(); ++e) {
    const auto [a, b] = mesh.edges()[e];
    const std::uint64_t key = edge_key(a, b);
    edge_faces[key] = mesh.edge_faces()[e];
    label[key] = s.labels[e];
    if (!mesh.is_boundary(e)) candidates.push_back(key);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto wanted = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(candidates.size())));

  auto replace_face = [&](std::uint64_t key, int from, int to) {
    auto& f = edge_faces.at(key);
    (f[0] == from ? f[0] : f[1]) = to;
  };

  std::size_t flipped = 0;
  for (std::uint64_t key : candidates) {
    if (flipped == wanted) break;
    auto it = edge_faces.find(key);
    if (it == edge_faces.end() || it->second[1] == kMissing) continue;
    const int f1 = it->second[0], f2 = it->second[1];
    const int u = static_cast<int>(key >> 32), v = static_cast<int>(key & 0xffffffffu);
    // rotate f1 to (p, q, a) with p->q its copy of the edge
    int k = 0;
    while (!((faces[f1][k] == u || faces[f1][k] == v) && (faces[f1][(k + 1) % 3] == u || faces[f1][(k + 1) % 3] == v))) ++k;
    const int pv = faces[f1][k], qv = faces[f1][(k + 1) % 3], a = faces[f1][(k + 2) % 3];
    int b = kMissing;
    for (int x : faces[f2])
      if (x != u && x != v) b = x;
    if (a == b || edge_faces.count(edge_key(a, b))) continue;

    const Face n1{a, pv, b}, n2{b, qv, a};
    const Vec3 old_normal = face_normal(p, faces[f1]).normalized() + face_normal(p, faces[f2]).normalized();
    const Vec3 m1 = face_normal(p, n1), m2 = face_normal(p, n2);
    if (0.5 * m1.norm() < kDegenerateTolerance || 0.5 * m2.norm() < kDegenerateTolerance ||
        m1.dot(old_normal) <= 0.0 || m2.dot(old_normal) <= 0.0)
      continue;

    faces[f1] = n1;
    faces[f2] = n2;
    replace_face(edge_key(qv, a), f1, f2);
    replace_face(edge_key(pv, b), f2, f1);
    edge_faces.erase(key);
    edge_faces[edge_key(a, b)] = {f1, f2};
    label[edge_key(a, b)] = label.at(key);
    label.erase(key);
    ++flipped;
  }

  Mesh out(mesh.vertices(), std::move(faces));
  std::vector<int> labels(out.edge_count());
  for (std::size_t e = 0; e < out.edge_count(); ++e)
    labels[e] = label.at(edge_key(out.edges()[e][0], out.edges()[e][1]));
  LabeledSample r{std::move(out), std::move(labels), {}};
  r.valid_mask.assign(r.mesh.edge_count(), 1);
  return r;
}

}  // namespace

LabeledSample augment(const LabeledSample& sample, std::mt19937_64& rng, const TrainConfig& cfg) {
  if (sample.mesh.padding_edge_count() > 0)
    throw Error(ErrorKind::ShapeMismatch, "augment expects an unpadded sample");
  for (int attempt = 0; attempt < kAugmentAttempts; ++attempt) {
    LabeledSample out = flip_edges(sample, rng, cfg.flip_edges);
    std::vector<Vec3> p = slide_vertices(out.mesh, rng, cfg.slide_verts);
    if (cfg.scale_verts) {
      std::uniform_real_distribution<double> scale(kScaleLow, kScaleHigh);
      const Vec3 s(scale(rng), scale(rng), scale(rng));
      for (Vec3& v : p) v = v.cwiseProduct(s);
    }
    if (!faces_valid(p, out.mesh.vertices(), out.mesh.faces())) continue;
    out.mesh = out.mesh.with_vertices(std::move(p));
    try {
      extract_edge_features(out.mesh);
    } catch (const Error&) {
      continue;
    }
    return out;
  }
  throw Error(ErrorKind::DegenerateAfterAugment,
              "no valid variant in " + std::to_string(kAugmentAttempts) + " attempts");
}

// ---- data ------------------------------------------------------------------

std::vector<LabeledSample> load_split(const std::filesystem::path& dir, int num_classes) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::MissingFile, dir.string());
  std::vector<std::filesystem::path> objs;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".obj") objs.push_back(entry.path());
  std::sort(objs.begin(), objs.end());
  std::vector<LabeledSample> out;
  for (const auto& obj : objs) {
    std::filesystem::path eseg = obj;
    eseg.replace_extension(".eseg");
    Mesh mesh = load_obj(obj);
    std::vector<int> labels = load_eseg(eseg);
    try {
      out.push_back(make_sample(std::move(mesh), std::move(labels), num_classes));
    } catch (const Error& e) {
      throw Error(e.kind(), obj.filename().string() + ": " + e.what());
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& root, int num_classes) {
  Dataset d;
  d.train = load_split(root / "train", num_classes);
  d.val = load_split(root / "val", num_classes);
  if (std::filesystem::is_directory(root / "test")) d.test = load_split(root / "test", num_classes);
  return d;
}

void save_sample(const LabeledSample& sample, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  save_obj(sample.mesh, dir / (stem + ".obj"));
  std::vector<int> labels(sample.labels.begin(), sample.labels.begin() + sample.mesh.real_edge_count());
  save_eseg(labels, dir / (stem + ".eseg"));
}

// ---- inference and evaluation ------------------------------------------------

namespace {

std::vector<int> argmax_labels(const FeatureMap& logits, std::size_t count) {
  std::vector<int> out(count);
  for (std::size_t e = 0; e < count; ++e) {
    Eigen::Index best = 0;
    logits.col(static_cast<Eigen::Index>(e)).maxCoeff(&best);
    out[e] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

std::vector<int> predict(const MeshUNet& net, const Mesh& mesh) {
  const Mesh padded = mesh.padded_to(net.config().ninput_edges);
  const FeatureMap logits = net.forward(padded, extract_edge_features(padded), ops::Mode::Eval);
  return argmax_labels(logits, mesh.real_edge_count());
}

ConfusionMatrix evaluate(const MeshUNet& net, const std::vector<LabeledSample>& samples) {
  const int k = net.config().num_classes;
  ConfusionMatrix total{k, std::vector<std::vector<std::uint64_t>>(k, std::vector<std::uint64_t>(k, 0))};
  for (const LabeledSample& s : samples) {
    const std::vector<int> pred = predict(net, s.mesh);
    const std::size_t n = s.mesh.real_edge_count();
    const ConfusionMatrix cm = confusion(pred, std::span<const int>(s.labels.data(), n),
                                         std::span<const std::uint8_t>(s.valid_mask.data(), n), k);
    for (int g = 0; g < k; ++g)
      for (int p = 0; p < k; ++p) total.counts[g][p] += cm.counts[g][p];
  }
  return total;
}

// ---- training loop -----------------------------------------------------------

std::string format_log_line(const EpochLog& log) {
  char buf[64];
  std::string line = "epoch=" + std::to_string(log.epoch);
  std::snprintf(buf, sizeof buf, " loss=%.10g", log.loss);
  line += buf;
  std::snprintf(buf, sizeof buf, " val_miou=%.10g", log.val_miou);
  line += buf;
  for (std::size_t c = 0; c < log.val_iou.size(); ++c) {
    if (log.val_iou[c])
      std::snprintf(buf, sizeof buf, " iou_c%zu=%.10g", c, *log.val_iou[c]);
    else
      std::snprintf(buf, sizeof buf, " iou_c%zu=na", c);
    line += buf;
  }
  return line;
}

namespace {

// A training input ready for the network: padded mesh plus its features.
struct Prepared {
  Mesh mesh;
  FeatureMap features;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;
};

Prepared prepare(const LabeledSample& s, std::size_t ninput_edges) {
  LabeledSample padded = s.padded_to(ninput_edges);
  FeatureMap x = extract_edge_features(padded.mesh);
  return {std::move(padded.mesh), std::move(x), std::move(padded.labels), std::move(padded.valid_mask)};
}

struct SampleResult {
  LossTerms loss;
  SampleTrace trace;
  UNetParams grads;
};

void run_sample(const MeshUNet& net, const Prepared& p, std::span<const double> weights, SampleResult& r) {
  const FeatureMap logits = net.forward(p.mesh, p.features, ops::Mode::Train, &r.trace);
  r.loss = cross_entropy_terms(logits, p.labels, p.mask, weights);
  // Gradients are normalized once the whole batch's weight sum is known.
  r.grads = net.backward(r.loss.grad, r.trace);
}

}  // namespace

std::vector<LabeledSample> augmented_variants(const LabeledSample& sample, const TrainConfig& cfg,
                                             std::size_t index) {
  if (cfg.num_aug == 0) return {sample};
  std::vector<LabeledSample> out;
  out.reserve(cfg.num_aug);
  for (std::size_t k = 0; k < cfg.num_aug; ++k) {
    std::mt19937_64 rng(derive_seed(cfg.seed, index, k));
    out.push_back(augment(sample, rng, cfg));
  }
  return out;
}

TrainResult train(const std::vector<LabeledSample>& train_set, const std::vector<LabeledSample>& val_set,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, std::ostream* log) {
  net_cfg.validate();
  cfg.validate(net_cfg.num_classes);
  if (train_set.empty() || val_set.empty())
    throw Error(ErrorKind::InvalidConfig, "train and validation splits must be non-empty");

  std::vector<std::vector<Prepared>> variants(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i)
    for (const LabeledSample& v : augmented_variants(train_set[i], cfg, i))
      variants[i].push_back(prepare(v, net_cfg.ninput_edges));

  MeshUNet net(net_cfg, derive_seed(cfg.seed, 0xC0FFEE, 0));
  AdamState adam = AdamState::zeros_like(net.params().tensors());
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5EED, 0));

  TrainResult result{net, -1, -1.0, {}};
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const int total_epochs = cfg.epochs + cfg.decay_epochs;
  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    const double lr = lr_lambda(epoch, cfg.lr, cfg.epochs, cfg.decay_epochs);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<const Prepared*> batch(count);
      for (std::size_t b = 0; b < count; ++b) {
        const auto& pool = variants[order[start + b]];
        batch[b] = &pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }

      std::vector<SampleResult> results(count);
      if (cfg.threads > 1 && count > 1) {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(count);
        for (std::size_t b = 0; b < count; ++b)
          workers.emplace_back([&, b] {
            try {
              run_sample(net, *batch[b], cfg.weighted_loss, results[b]);
            } catch (...) {
              errors[b] = std::current_exception();
            }
          });
        for (auto& w : workers) w.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      } else {
        for (std::size_t b = 0; b < count; ++b) run_sample(net, *batch[b], cfg.weighted_loss, results[b]);
      }

      // Reduce in sample order so the result does not depend on threading.
      double nll = 0.0, weight = 0.0;
      for (const SampleResult& r : results) {
        nll += r.loss.weighted_nll;
        weight += r.loss.weight_sum;
      }
      const double batch_loss = nll / weight;
      if (!std::isfinite(batch_loss))
        throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + " batch " +
                                                  std::to_string(batches) + ": loss " +
                                                  std::to_string(batch_loss));
      UNetParams grads = results[0].grads;
      auto total = grads.tensors();
      for (std::size_t b = 1; b < count; ++b) {
        auto add = results[b].grads.tensors();
        for (std::size_t t = 0; t < total.size(); ++t)
          for (std::size_t i = 0; i < total[t].size(); ++i) total[t][i] += add[t][i];
      }
      for (std::span<double> t : total)
        for (double& g : t) g /= weight;

      adam_step(net.params().tensors(), total, adam, lr, cfg.beta1);
      for (const SampleResult& r : results) net.update_running_stats(r.trace);

      loss_sum += batch_loss;
      ++batches;
    }

    const IouReport val = iou(evaluate(net, val_set));
    EpochLog entry{epoch, loss_sum / batches, lr, val.mean, val.per_class};
    if (log) *log << format_log_line(entry) << '\n' << std::flush;
    result.history.push_back(entry);
    if (val.mean > result.best_val_miou) {
      result.best_val_miou = val.mean;
      result.best_epoch = epoch;
      result.best = net;
    }
  }
  return result;
}

}  // namespace medmesh
