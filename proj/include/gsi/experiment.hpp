#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gsi/baseline_gd.hpp"
#include "gsi/data_io.hpp"
#include "gsi/errors.hpp"
#include "gsi/gan.hpp"
#include "gsi/graph.hpp"
#include "gsi/neural.hpp"
#include "gsi/observe.hpp"
#include "gsi/spectral.hpp"

namespace gsi {

enum class DataKind { synthetic, mnist };
enum class SignalKind { smooth, bandlimited };

struct GraphSpec {
  std::size_t n_nodes = 64;
  std::size_t k = 6;
  std::size_t point_dim = 2;
  KnnWeighting weighting = KnnWeighting::binary;
  std::uint64_t seed = 7;
};

struct SyntheticSpec {
  GraphSpec graph;
  SignalKind signal = SignalKind::smooth;
  double filter_decay = 3.0;
  std::size_t bandlimit = 8;  // kept frequencies when signal == bandlimited
  std::size_t r_train = 2000;
  std::size_t r_test = 200;
};

struct MnistSpec {
  std::string images;           // IDX image file path
  std::size_t subsample = 1000; // images used as pixel features for the graph
  std::size_t knn_k = 20;
  KnnWeighting weighting = KnnWeighting::binary;
  std::size_t r_train = 2000;
  std::size_t r_test = 200;
};

struct ExperimentConfig {
  DataKind data = DataKind::synthetic;
  SyntheticSpec synthetic;
  MnistSpec mnist;
  double mask_probability = 0.5;
  std::vector<std::string> methods = {"proposed", "gain", "gd"};
  GanConfig gan;
  GdConfig gd;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds = {1};

  void validate() const {
    if (!(mask_probability > 0.0))
      throw ConfigError("mask_probability: nothing observed (must be > 0)");
    if (mask_probability > 1.0) throw ConfigError("mask_probability: must be <= 1");
    if (methods.empty()) throw ConfigError("methods: need at least one method");
    for (const std::string& m : methods) {
      if (m != "proposed" && m != "gain" && m != "gd")
        throw ConfigError("methods: unknown method '" + m + "'");
      if (std::count(methods.begin(), methods.end(), m) != 1)
        throw ConfigError("methods: duplicate method '" + m + "'");
    }
    if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
    if (data == DataKind::synthetic) {
      const SyntheticSpec& s = synthetic;
      if (s.graph.n_nodes < 2) throw ConfigError("data.synthetic.graph.n_nodes: need >= 2 nodes");
      if (s.graph.k == 0 || s.graph.k >= s.graph.n_nodes)
        throw ConfigError("data.synthetic.graph.k: require 1 <= k < n_nodes");
      if (s.graph.point_dim == 0) throw ConfigError("data.synthetic.graph.point_dim: must be positive");
      if (!(s.filter_decay >= 0.0)) throw ConfigError("data.synthetic.filter_decay: must be >= 0");
      if (s.signal == SignalKind::bandlimited && (s.bandlimit == 0 || s.bandlimit > s.graph.n_nodes))
        throw ConfigError("data.synthetic.bandlimit: must lie in [1, n_nodes]");
      if (s.r_train == 0) throw ConfigError("data.synthetic.r_train: must be positive");
      if (s.r_test == 0) throw ConfigError("data.synthetic.r_test: must be positive");
    } else {
      if (mnist.images.empty()) throw ConfigError("data.mnist.images: path required");
      if (mnist.subsample == 0) throw ConfigError("data.mnist.subsample: must be positive");
      if (mnist.knn_k == 0) throw ConfigError("data.mnist.knn_k: must be positive");
      if (mnist.r_train == 0) throw ConfigError("data.mnist.r_train: must be positive");
      if (mnist.r_test == 0) throw ConfigError("data.mnist.r_test: must be positive");
    }
    gan.validate();
    gd.validate();
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  }
};

// ---------------------------------------------------------------------------
// JSON <-> config
// ---------------------------------------------------------------------------

namespace detail {

using njson = nlohmann::json;

inline void check_keys(const njson& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(path + "." + item.key() + ": unknown key");
  }
}

inline double json_number(const njson& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline std::size_t json_size(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  const long long v = j.get<long long>();
  if (v < 0) throw ConfigError(path + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t json_seed(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const long long v = j.get<long long>();
  if (v < 0) throw ConfigError(path + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline std::string json_string(const njson& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline bool json_bool(const njson& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
  return j.get<bool>();
}

inline KnnWeighting weighting_from_string(const std::string& s, const std::string& path) {
  if (s == "binary") return KnnWeighting::binary;
  if (s == "inverse_distance") return KnnWeighting::inverse_distance;
  throw ConfigError(path + ": expected \"binary\" or \"inverse_distance\"");
}

inline const char* to_string(KnnWeighting w) {
  return w == KnnWeighting::binary ? "binary" : "inverse_distance";
}

inline RegularizerKind regularizer_from_string(const std::string& s, const std::string& path) {
  if (s == "tv_l2") return RegularizerKind::tv_l2;
  if (s == "bl_energy") return RegularizerKind::bl_energy;
  throw ConfigError(path + ": expected \"tv_l2\" or \"bl_energy\"");
}

inline const char* to_string(RegularizerKind k) {
  return k == RegularizerKind::tv_l2 ? "tv_l2" : "bl_energy";
}

inline GraphSpec parse_graph_spec(const njson& j, const std::string& path) {
  check_keys(j, path, {"n_nodes", "k", "point_dim", "weighting", "seed"});
  GraphSpec g;
  if (j.contains("n_nodes")) g.n_nodes = json_size(j["n_nodes"], path + ".n_nodes");
  if (j.contains("k")) g.k = json_size(j["k"], path + ".k");
  if (j.contains("point_dim")) g.point_dim = json_size(j["point_dim"], path + ".point_dim");
  if (j.contains("weighting"))
    g.weighting = weighting_from_string(json_string(j["weighting"], path + ".weighting"),
                                        path + ".weighting");
  if (j.contains("seed")) g.seed = json_seed(j["seed"], path + ".seed");
  return g;
}

inline GanConfig parse_gan_config(const njson& j, const std::string& path) {
  check_keys(j, path,
             {"alpha", "beta", "batch_size", "epochs", "d_steps_per_g_step", "tau", "lr_g", "lr_d",
              "rng_seed", "regularizer", "bl_cutoff", "hidden", "combine_observed"});
  GanConfig g;
  if (j.contains("alpha")) g.alpha = json_number(j["alpha"], path + ".alpha");
  if (j.contains("beta")) g.beta = json_number(j["beta"], path + ".beta");
  if (j.contains("batch_size")) g.batch_size = json_size(j["batch_size"], path + ".batch_size");
  if (j.contains("epochs")) g.epochs = json_size(j["epochs"], path + ".epochs");
  if (j.contains("d_steps_per_g_step"))
    g.d_steps_per_g_step = json_size(j["d_steps_per_g_step"], path + ".d_steps_per_g_step");
  if (j.contains("tau")) g.tau = json_number(j["tau"], path + ".tau");
  if (j.contains("lr_g")) g.lr_g = json_number(j["lr_g"], path + ".lr_g");
  if (j.contains("lr_d")) g.lr_d = json_number(j["lr_d"], path + ".lr_d");
  if (j.contains("rng_seed")) g.rng_seed = json_seed(j["rng_seed"], path + ".rng_seed");
  if (j.contains("regularizer"))
    g.regularizer = regularizer_from_string(json_string(j["regularizer"], path + ".regularizer"),
                                            path + ".regularizer");
  if (j.contains("bl_cutoff")) g.bl_cutoff = json_size(j["bl_cutoff"], path + ".bl_cutoff");
  if (j.contains("hidden")) {
    if (!j["hidden"].is_array()) throw ConfigError(path + ".hidden: expected an array");
    g.hidden.clear();
    for (std::size_t i = 0; i < j["hidden"].size(); ++i)
      g.hidden.push_back(json_size(j["hidden"][i], path + ".hidden[" + std::to_string(i) + "]"));
  }
  if (j.contains("combine_observed"))
    g.combine_observed = json_bool(j["combine_observed"], path + ".combine_observed");
  return g;
}

inline GdConfig parse_gd_config(const njson& j, const std::string& path) {
  check_keys(j, path, {"mu", "max_iters", "beta"});
  GdConfig g;
  if (j.contains("mu")) g.mu = json_number(j["mu"], path + ".mu");
  if (j.contains("max_iters")) g.max_iters = json_size(j["max_iters"], path + ".max_iters");
  if (j.contains("beta")) g.beta = json_number(j["beta"], path + ".beta");
  return g;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  using detail::check_keys;
  check_keys(j, "config",
             {"data", "mask_probability", "methods", "gan", "gd", "output_dir", "seeds"});
  ExperimentConfig cfg;
  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data", {"kind", "synthetic", "mnist"});
    std::string kind = "synthetic";
    if (d.contains("kind")) kind = detail::json_string(d["kind"], "data.kind");
    if (kind == "synthetic")
      cfg.data = DataKind::synthetic;
    else if (kind == "mnist")
      cfg.data = DataKind::mnist;
    else
      throw ConfigError("data.kind: expected \"synthetic\" or \"mnist\"");
    if (d.contains("synthetic")) {
      const auto& s = d["synthetic"];
      check_keys(s, "data.synthetic",
                 {"graph", "signal", "filter_decay", "bandlimit", "r_train", "r_test"});
      if (s.contains("graph")) cfg.synthetic.graph = detail::parse_graph_spec(s["graph"], "data.synthetic.graph");
      if (s.contains("signal")) {
        const std::string sig = detail::json_string(s["signal"], "data.synthetic.signal");
        if (sig == "smooth")
          cfg.synthetic.signal = SignalKind::smooth;
        else if (sig == "bandlimited")
          cfg.synthetic.signal = SignalKind::bandlimited;
        else
          throw ConfigError("data.synthetic.signal: expected \"smooth\" or \"bandlimited\"");
      }
      if (s.contains("filter_decay"))
        cfg.synthetic.filter_decay = detail::json_number(s["filter_decay"], "data.synthetic.filter_decay");
      if (s.contains("bandlimit"))
        cfg.synthetic.bandlimit = detail::json_size(s["bandlimit"], "data.synthetic.bandlimit");
      if (s.contains("r_train"))
        cfg.synthetic.r_train = detail::json_size(s["r_train"], "data.synthetic.r_train");
      if (s.contains("r_test"))
        cfg.synthetic.r_test = detail::json_size(s["r_test"], "data.synthetic.r_test");
    }
    if (d.contains("mnist")) {
      const auto& m = d["mnist"];
      check_keys(m, "data.mnist", {"images", "subsample", "knn_k", "weighting", "r_train", "r_test"});
      if (m.contains("images")) cfg.mnist.images = detail::json_string(m["images"], "data.mnist.images");
      if (m.contains("subsample"))
        cfg.mnist.subsample = detail::json_size(m["subsample"], "data.mnist.subsample");
      if (m.contains("knn_k")) cfg.mnist.knn_k = detail::json_size(m["knn_k"], "data.mnist.knn_k");
      if (m.contains("weighting"))
        cfg.mnist.weighting = detail::weighting_from_string(
            detail::json_string(m["weighting"], "data.mnist.weighting"), "data.mnist.weighting");
      if (m.contains("r_train")) cfg.mnist.r_train = detail::json_size(m["r_train"], "data.mnist.r_train");
      if (m.contains("r_test")) cfg.mnist.r_test = detail::json_size(m["r_test"], "data.mnist.r_test");
    }
  }
  if (j.contains("mask_probability"))
    cfg.mask_probability = detail::json_number(j["mask_probability"], "mask_probability");
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw ConfigError("methods: expected an array");
    cfg.methods.clear();
    for (std::size_t i = 0; i < j["methods"].size(); ++i)
      cfg.methods.push_back(
          detail::json_string(j["methods"][i], "methods[" + std::to_string(i) + "]"));
  }
  if (j.contains("gan")) cfg.gan = detail::parse_gan_config(j["gan"], "gan");
  if (j.contains("gd")) cfg.gd = detail::parse_gd_config(j["gd"], "gd");
  if (j.contains("output_dir")) cfg.output_dir = detail::json_string(j["output_dir"], "output_dir");
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("seeds: expected an array");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < j["seeds"].size(); ++i)
      cfg.seeds.push_back(detail::json_seed(j["seeds"][i], "seeds[" + std::to_string(i) + "]"));
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

inline nlohmann::json gan_config_json(const GanConfig& g) {
  nlohmann::json j;
  j["alpha"] = g.alpha;
  j["beta"] = g.beta;
  j["batch_size"] = g.batch_size;
  j["epochs"] = g.epochs;
  j["d_steps_per_g_step"] = g.d_steps_per_g_step;
  j["tau"] = g.tau;
  j["lr_g"] = g.lr_g;
  j["lr_d"] = g.lr_d;
  j["rng_seed"] = g.rng_seed;
  j["regularizer"] = detail::to_string(g.regularizer);
  j["bl_cutoff"] = g.bl_cutoff;
  j["hidden"] = g.hidden;
  j["combine_observed"] = g.combine_observed;
  return j;
}

/// The per-method GAN configuration: the ablation is the same config with the
/// regularizer weight removed.
inline GanConfig gan_for_method(const ExperimentConfig& cfg, const std::string& method) {
  GanConfig g = cfg.gan;
  if (method == "gain") g.beta = 0.0;
  return g;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["data"]["kind"] = cfg.data == DataKind::synthetic ? "synthetic" : "mnist";
  nlohmann::json& s = j["data"]["synthetic"];
  s["graph"]["n_nodes"] = cfg.synthetic.graph.n_nodes;
  s["graph"]["k"] = cfg.synthetic.graph.k;
  s["graph"]["point_dim"] = cfg.synthetic.graph.point_dim;
  s["graph"]["weighting"] = detail::to_string(cfg.synthetic.graph.weighting);
  s["graph"]["seed"] = cfg.synthetic.graph.seed;
  s["signal"] = cfg.synthetic.signal == SignalKind::smooth ? "smooth" : "bandlimited";
  s["filter_decay"] = cfg.synthetic.filter_decay;
  s["bandlimit"] = cfg.synthetic.bandlimit;
  s["r_train"] = cfg.synthetic.r_train;
  s["r_test"] = cfg.synthetic.r_test;
  nlohmann::json& m = j["data"]["mnist"];
  m["images"] = cfg.mnist.images;
  m["subsample"] = cfg.mnist.subsample;
  m["knn_k"] = cfg.mnist.knn_k;
  m["weighting"] = detail::to_string(cfg.mnist.weighting);
  m["r_train"] = cfg.mnist.r_train;
  m["r_test"] = cfg.mnist.r_test;
  j["mask_probability"] = cfg.mask_probability;
  j["methods"] = cfg.methods;
  j["gan"] = gan_config_json(cfg.gan);
  j["gd"]["mu"] = cfg.gd.mu;
  j["gd"]["max_iters"] = cfg.gd.max_iters;
  j["gd"]["beta"] = cfg.gd.beta;
  j["output_dir"] = cfg.output_dir;
  j["seeds"] = cfg.seeds;
  return j;
}

/// Fully-resolved config: all defaults filled, plus the exact per-method
/// hyperparameters (so the proposed/ablation relationship is auditable).
inline nlohmann::json resolved_config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  for (const std::string& method : cfg.methods) {
    if (method == "gd") {
      j["resolved_methods"][method]["gd"] = j["gd"];
    } else {
      j["resolved_methods"][method]["gan"] = gan_config_json(gan_for_method(cfg, method));
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Dataset preparation
// ---------------------------------------------------------------------------

/// splitmix64-style mixing so that derived streams (signals, masks, noise,
/// training) are decorrelated functions of (run seed, purpose salt).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

/// Seed-independent parts of an experiment: the graph, its spectrum when
/// needed, and (for MNIST) the normalized image signals.
struct ExperimentBase {
  Graph graph;
  std::optional<SpectralDecomposition> spectrum;
  std::vector<Vector> mnist_train;  // normalized; empty in synthetic mode
  std::vector<Vector> mnist_test;
  Normalization norm;  // identity in synthetic mode
};

/// Per-seed realizations: ground truth in the normalized domain, masked sign
/// observations, and the fixed evaluation noise for GAN inference.
struct SeedData {
  std::vector<Vector> train_truth;
  std::vector<Vector> test_truth;
  std::vector<Observation> train_obs;
  std::vector<Observation> test_obs;
  Matrix eval_noise;  // r_test x n
};

namespace detail {

// salts for the per-seed derived streams
constexpr std::uint64_t kSaltTrainSignals = 1;
constexpr std::uint64_t kSaltTestSignals = 2;
constexpr std::uint64_t kSaltMasks = 3;
constexpr std::uint64_t kSaltEvalNoise = 4;
constexpr std::uint64_t kSaltTraining = 5;

}  // namespace detail

inline ExperimentBase prepare_base(const ExperimentConfig& cfg) {
  const bool wants_spectrum =
      cfg.data == DataKind::synthetic || cfg.gan.regularizer == RegularizerKind::bl_energy;
  if (cfg.data == DataKind::synthetic) {
    const GraphSpec& gs = cfg.synthetic.graph;
    std::mt19937_64 rng(gs.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Matrix points(gs.n_nodes, gs.point_dim);
    for (std::size_t i = 0; i < points.size(); ++i) points.data()[i] = uni(rng);
    ExperimentBase base{knn_graph(points, gs.k, gs.weighting), std::nullopt, {}, {}, {}};
    if (wants_spectrum) base.spectrum = spectral_decompose(laplacian(base.graph));
    return base;
  }

  // MNIST: signals are the images; pixels are graph nodes whose features are
  // that pixel's values across the first `subsample` images.
  const MnistSpec& ms = cfg.mnist;
  const IdxFile file = load_idx(ms.images);
  const std::size_t n = file.item_size();
  const std::size_t count = file.count();
  if (count < ms.r_train + ms.r_test)
    throw ConfigError("data.mnist: file has " + std::to_string(count) + " items, need r_train+r_test");
  if (n < 2) throw ConfigError("data.mnist: items must have at least 2 pixels");

  std::vector<Vector> raw_train(ms.r_train, Vector(n));
  for (std::size_t r = 0; r < ms.r_train; ++r)
    for (std::size_t i = 0; i < n; ++i)
      raw_train[r][i] = static_cast<double>(file.payload[r * n + i]);
  std::vector<Vector> raw_test(ms.r_test, Vector(n));
  for (std::size_t r = 0; r < ms.r_test; ++r)
    for (std::size_t i = 0; i < n; ++i)
      raw_test[r][i] = static_cast<double>(file.payload[(ms.r_train + r) * n + i]);

  const std::size_t feat = std::min(ms.subsample, ms.r_train);
  Matrix features(n, feat);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < feat; ++r) features(i, r) = raw_train[r][i];
  if (ms.knn_k >= n) throw ConfigError("data.mnist.knn_k: require knn_k < pixel count");

  auto [train_norm, norm] = normalize(raw_train);
  ExperimentBase base{knn_graph(features, ms.knn_k, ms.weighting), std::nullopt,
                      std::move(train_norm), {}, norm};
  base.mnist_test.reserve(ms.r_test);
  for (const Vector& x : raw_test) base.mnist_test.push_back(norm.apply(x));
  if (wants_spectrum) base.spectrum = spectral_decompose(laplacian(base.graph));
  return base;
}

inline SeedData prepare_seed_data(const ExperimentConfig& cfg, const ExperimentBase& base,
                                  std::uint64_t seed) {
  const std::size_t n = base.graph.n_nodes();
  SeedData sd;
  if (cfg.data == DataKind::synthetic) {
    const SyntheticSpec& s = cfg.synthetic;
    if (s.signal == SignalKind::smooth) {
      sd.train_truth = gen_smooth(*base.spectrum, s.r_train, s.filter_decay,
                                  mix_seed(seed, detail::kSaltTrainSignals));
      sd.test_truth = gen_smooth(*base.spectrum, s.r_test, s.filter_decay,
                                 mix_seed(seed, detail::kSaltTestSignals));
    } else {
      sd.train_truth = gen_bandlimited(*base.spectrum, s.r_train, s.bandlimit,
                                       mix_seed(seed, detail::kSaltTrainSignals));
      sd.test_truth = gen_bandlimited(*base.spectrum, s.r_test, s.bandlimit,
                                      mix_seed(seed, detail::kSaltTestSignals));
    }
  } else {
    sd.train_truth = base.mnist_train;  // images are fixed; masks vary by seed
    sd.test_truth = base.mnist_test;
  }

  std::mt19937_64 mask_rng(mix_seed(seed, detail::kSaltMasks));
  auto observe_all = [&](const std::vector<Vector>& truth) {
    std::vector<Observation> obs;
    obs.reserve(truth.size());
    for (const Vector& x : truth)
      obs.push_back(apply_mask(quantize(x), sample_mask(n, cfg.mask_probability, mask_rng())));
    return obs;
  };
  sd.train_obs = observe_all(sd.train_truth);
  sd.test_obs = observe_all(sd.test_truth);

  std::mt19937_64 noise_rng(mix_seed(seed, detail::kSaltEvalNoise));
  std::normal_distribution<double> gauss(0.0, 1.0);
  sd.eval_noise = Matrix(sd.test_truth.size(), n);
  for (std::size_t i = 0; i < sd.eval_noise.size(); ++i) sd.eval_noise.data()[i] = gauss(noise_rng);
  return sd;
}

// ---------------------------------------------------------------------------
// Jobs and artifacts
// ---------------------------------------------------------------------------

/// Mean per-realization metrics of the trained generator on the test split,
/// using the fixed evaluation noise.
inline Metrics evaluate_mean(const TrainerState& state, const std::vector<Observation>& test_obs,
                             const Matrix& eval_noise, const std::vector<Vector>& test_truth) {
  if (test_obs.empty()) throw EmptyDataset("evaluate_mean: empty test split");
  Metrics sum;
  for (std::size_t r = 0; r < test_obs.size(); ++r) {
    const Vector z(eval_noise.row(r), eval_noise.row(r) + eval_noise.cols());
    const Vector xhat = impute(state, test_obs[r], z);
    const Metrics m = metrics(xhat, test_truth[r], test_obs[r].mask);
    sum.rmse_observed += m.rmse_observed;
    sum.rmse_missing += m.rmse_missing;
    sum.rmse_all += m.rmse_all;
  }
  const double inv = 1.0 / static_cast<double>(test_obs.size());
  return {sum.rmse_observed * inv, sum.rmse_missing * inv, sum.rmse_all * inv};
}

namespace detail {

/// Deterministic CSV float formatting (shortest %g at 12 significant digits).
inline std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

struct EpochErrorRow {
  std::size_t epoch = 0;
  Metrics m;
};

struct JobResult {
  std::string method;
  std::uint64_t seed = 0;
  Metrics mean;
  bool ok = false;
  std::string error;
};

namespace detail {

inline std::string job_tag(const std::string& method, std::uint64_t seed) {
  return method + "_seed" + std::to_string(seed);
}

inline void write_test_error_csv(const std::vector<EpochErrorRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_test_error_csv: cannot open " + path);
  out << "epoch,rmse_missing,rmse_observed,rmse_all\n";
  for (const EpochErrorRow& r : rows)
    out << r.epoch << ',' << g12(r.m.rmse_missing) << ',' << g12(r.m.rmse_observed) << ','
        << g12(r.m.rmse_all) << "\n";
}

inline JobResult run_gan_job(const ExperimentConfig& cfg, const ExperimentBase& base,
                             const SeedData& sd, const std::string& method, std::uint64_t seed) {
  GanConfig gc = gan_for_method(cfg, method);
  gc.rng_seed = mix_seed(seed, kSaltTraining);
  const GraphRegularizer reg = GraphRegularizer::from_config(
      gc, base.graph, base.spectrum ? &*base.spectrum : nullptr);

  std::vector<EpochErrorRow> rows;
  rows.reserve(gc.epochs);
  const auto on_epoch = [&](std::size_t epoch, const TrainerState& st) {
    rows.push_back({epoch, evaluate_mean(st, sd.test_obs, sd.eval_noise, sd.test_truth)});
  };
  const TrainerState state = train(sd.train_obs, reg, gc, on_epoch);

  const std::filesystem::path dir(cfg.output_dir);
  const std::string tag = job_tag(method, seed);
  write_loss_history_csv(state, (dir / ("loss_" + tag + ".csv")).string());
  write_test_error_csv(rows, (dir / ("test_error_" + tag + ".csv")).string());
  save_net(state.generator, (dir / ("generator_" + tag + ".gsnn")).string());
  save_net(state.discriminator, (dir / ("discriminator_" + tag + ".gsnn")).string());

  JobResult result{method, seed, rows.back().m, true, ""};
  return result;
}

inline JobResult run_gd_job(const ExperimentConfig& cfg, const ExperimentBase& base,
                            const SeedData& sd, std::uint64_t seed) {
  const std::size_t r_test = sd.test_obs.size();
  const std::size_t n_rows = cfg.gd.max_iters + 1;
  std::vector<double> loss_sum(n_rows, 0.0);
  std::vector<double> rmse_sum(n_rows, 0.0);
  Metrics final_sum;
  for (std::size_t r = 0; r < r_test; ++r) {
    const auto observer = [&](std::size_t iter, const Vector& x) {
      rmse_sum[iter] += metrics(x, sd.test_truth[r], sd.test_obs[r].mask).rmse_missing;
    };
    const GdResult res = gd_impute(sd.test_obs[r], base.graph, cfg.gd, observer);
    for (std::size_t i = 0; i < n_rows; ++i) loss_sum[i] += res.loss_trace[i];
    const Metrics m = metrics(res.x, sd.test_truth[r], sd.test_obs[r].mask);
    final_sum.rmse_observed += m.rmse_observed;
    final_sum.rmse_missing += m.rmse_missing;
    final_sum.rmse_all += m.rmse_all;
  }
  const double inv = 1.0 / static_cast<double>(r_test);

  const std::filesystem::path dir(cfg.output_dir);
  std::ofstream out(dir / ("gd_trace_seed" + std::to_string(seed) + ".csv"));
  if (!out) throw IoError("run_gd_job: cannot open trace CSV");
  out << "iter,loss,rmse_missing\n";
  for (std::size_t i = 0; i < n_rows; ++i)
    out << i << ',' << g12(loss_sum[i] * inv) << ',' << g12(rmse_sum[i] * inv) << "\n";

  JobResult result{"gd", seed,
                   {final_sum.rmse_observed * inv, final_sum.rmse_missing * inv,
                    final_sum.rmse_all * inv},
                   true, ""};
  return result;
}

inline std::size_t worker_count(std::size_t jobs) {
  std::size_t t = std::thread::hardware_concurrency();
  if (t == 0) t = 1;
  if (const char* env = std::getenv("GSI_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) t = static_cast<std::size_t>(v);
  }
  return std::min(std::max<std::size_t>(t, 1), std::max<std::size_t>(jobs, 1));
}

}  // namespace detail

inline void write_summary_csv(const std::vector<JobResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_summary_csv: cannot open " + path);
  out << "method,seed,rmse_missing,rmse_observed,rmse_all\n";
  for (const JobResult& r : results) {
    if (!r.ok) continue;
    out << r.method << ',' << r.seed << ',' << detail::g12(r.mean.rmse_missing) << ','
        << detail::g12(r.mean.rmse_observed) << ',' << detail::g12(r.mean.rmse_all) << "\n";
  }
}

/// Runs every (method, seed) job, writes all artifact files into
/// cfg.output_dir, and returns the process exit code: 0 iff every job
/// finished cleanly. Jobs are independent and run on up to GSI_THREADS
/// workers; outputs are byte-deterministic for a given config.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "resolved_config.json");
    if (!out) throw IoError("run_experiment: cannot write resolved_config.json");
    out << resolved_config_json(cfg).dump(2) << "\n";
  }

  log << "preparing graph and data..." << std::endl;
  const ExperimentBase base = prepare_base(cfg);
  std::vector<SeedData> seed_data;
  seed_data.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) seed_data.push_back(prepare_seed_data(cfg, base, seed));

  struct Job {
    std::string method;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (const std::string& method : cfg.methods)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({method, s});

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      const std::uint64_t seed = cfg.seeds[job.seed_index];
      JobResult result;
      try {
        result = job.method == "gd"
                     ? detail::run_gd_job(cfg, base, seed_data[job.seed_index], seed)
                     : detail::run_gan_job(cfg, base, seed_data[job.seed_index], job.method, seed);
      } catch (const std::exception& e) {
        result = {job.method, seed, {}, false, e.what()};
      }
      {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (result.ok)
          log << "job " << job.method << " seed " << seed
              << ": rmse_missing=" << detail::g12(result.mean.rmse_missing) << std::endl;
        else
          log << "job " << job.method << " seed " << seed << " FAILED: " << result.error
              << std::endl;
      }
      results[j] = std::move(result);
    }
  };

  const std::size_t n_workers = detail::worker_count(jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  write_summary_csv(results, (std::filesystem::path(cfg.output_dir) / "summary.csv").string());
  bool all_ok = true;
  for (const JobResult& r : results) all_ok = all_ok && r.ok;
  log << (all_ok ? "done" : "done with failures") << std::endl;
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Dataset files and inspection
// ---------------------------------------------------------------------------

/// Writes the seed[0] dataset as files: graph edge list, ground truth
/// (GSGT1), and observations (GSOB1) for both splits.
inline void write_dataset_files(const ExperimentConfig& cfg, const std::string& out_dir,
                                std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const ExperimentBase base = prepare_base(cfg);
  const SeedData sd = prepare_seed_data(cfg, base, cfg.seeds.front());
  const std::filesystem::path dir(out_dir);
  save_edge_list(base.graph, (dir / "graph.txt").string());
  save_ground_truth(sd.train_truth, (dir / "train_truth.gsgt").string());
  save_ground_truth(sd.test_truth, (dir / "test_truth.gsgt").string());
  save_observations(sd.train_obs, (dir / "train_obs.gsob").string());
  save_observations(sd.test_obs, (dir / "test_obs.gsob").string());
  log << "wrote graph.txt, train/test truth (GSGT1) and observations (GSOB1) to " << out_dir
      << std::endl;
}

/// Prints human-readable statistics for a dataset/graph/network file,
/// dispatching on the leading magic bytes.
inline void inspect_file(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("inspect: cannot open " + path);
  char magic[5] = {};
  in.read(magic, 5);
  const std::string tag(magic, magic + in.gcount());
  in.clear();
  in.seekg(0);

  if (tag == "GSOB1") {
    const std::vector<Observation> obs = load_observations(in);
    if (obs.empty()) {
      out << "observations (GSOB1): empty\n";
      return;
    }
    std::size_t observed = 0, positive = 0;
    for (const Observation& o : obs)
      for (std::size_t i = 0; i < o.size(); ++i) {
        observed += o.mask[i];
        positive += o.signs[i] > 0;
      }
    const double total = static_cast<double>(obs.size() * obs.front().size());
    out << "observations (GSOB1): R=" << obs.size() << " N=" << obs.front().size()
        << " observed_fraction=" << detail::g12(observed / total)
        << " positive_fraction_of_observed="
        << detail::g12(observed ? static_cast<double>(positive) / observed : 0.0) << "\n";
    return;
  }
  if (tag == "GSGT1") {
    const std::vector<Vector> truth = load_ground_truth(in);
    if (truth.empty() || truth.front().empty()) {
      out << "ground truth (GSGT1): empty\n";
      return;
    }
    double lo = truth[0][0], hi = truth[0][0], sum = 0.0;
    std::size_t count = 0;
    for (const Vector& x : truth)
      for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++count;
      }
    out << "ground truth (GSGT1): R=" << truth.size() << " N=" << truth.front().size()
        << " min=" << detail::g12(lo) << " max=" << detail::g12(hi)
        << " mean=" << detail::g12(sum / static_cast<double>(count)) << "\n";
    return;
  }
  if (tag == "GSNN1") {
    const DenseNet net = load_net(in);
    out << "network (GSNN1): layers=" << net.layers.size() << " dims=" << net.input_size();
    for (const Layer& l : net.layers) out << "->" << l.out_size();
    out << "\n";
    return;
  }
  if (tag.size() >= 4 && tag[0] == '\0' && tag[1] == '\0') {
    const IdxFile file = load_idx(path);
    out << "IDX: dims=";
    for (std::size_t i = 0; i < file.dims.size(); ++i) out << (i ? "x" : "") << file.dims[i];
    out << " bytes=" << file.payload.size();
    if (!file.payload.empty()) {
      const auto [lo, hi] = std::minmax_element(file.payload.begin(), file.payload.end());
      out << " min=" << static_cast<int>(*lo) << " max=" << static_cast<int>(*hi);
    }
    out << "\n";
    return;
  }

  // fall back to the edge-list text format
  const Graph g = load_edge_list(path);
  std::vector<double> degree(g.n_nodes(), 0.0);
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) {
    degree[i] += w;
    degree[j] += w;
  });
  const auto [dmin, dmax] = std::minmax_element(degree.begin(), degree.end());
  double dsum = 0.0;
  for (double d : degree) dsum += d;
  out << "graph: n_nodes=" << g.n_nodes() << " n_edges=" << g.n_edges()
      << " degree_min=" << detail::g12(*dmin) << " degree_mean="
      << detail::g12(dsum / static_cast<double>(g.n_nodes())) << " degree_max="
      << detail::g12(*dmax) << "\n";
}

}  // namespace gsi
