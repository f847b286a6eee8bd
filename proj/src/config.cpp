#include "zoflow/config.hpp"

#include <fstream>
#include <sstream>

namespace zoflow {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& require(const json& node, const char* key, const std::string& where) {
  if (!node.is_object() || !node.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return node.at(key);
}

Vec to_vec(const json& node, Eigen::Index dim, const std::string& where) {
  if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != dim) {
    fail(where, "expected an array of " + std::to_string(dim) + " numbers");
  }
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!node[i].is_number()) fail(where, "non-numeric entry");
    v[i] = node[i].get<double>();
  }
  return v;
}

Mat to_mat(const json& node, Eigen::Index dim, const std::string& where) {
  if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != dim) {
    fail(where, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  Mat m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) m.row(r) = to_vec(node[r], dim, where).transpose();
  return m;
}

template <class T>
std::vector<T> to_list(const json& node, const std::string& where) {
  if (!node.is_array()) fail(where, "expected an array");
  try {
    return node.get<std::vector<T>>();
  } catch (const json::exception& e) {
    fail(where, e.what());
  }
}

BlackBoxFlow::Schedule parse_schedule(const json& node, BackendKind kind) {
  const std::string where = "schedule";
  try {
    if (kind == BackendKind::kDdimNoisePred) {
      if (node.contains("alpha_bar")) return DdimSchedule(to_list<double>(node.at("alpha_bar"), where));
      return make_cosine_ddim_schedule(require(node, "steps", where).get<std::size_t>(),
                                       node.value("alpha_min", 1e-4));
    }
    if (node.contains("n_max")) {
      return make_truncated_schedule(require(node, "total_steps", where).get<std::size_t>(),
                                     node.at("n_max").get<std::size_t>());
    }
    return make_uniform_schedule(require(node, "steps", where).get<std::size_t>(), node.value("t_start", 1.0));
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  } catch (const json::exception& e) {
    fail(where, e.what());
  }
}

ExperimentConfig parse_experiment(const json& node) {
  ExperimentConfig ex;
  const std::string where = "experiment";
  try {
    if (node.contains("task")) ex.task = parse_task(node.at("task").get<std::string>());
    if (node.contains("methods")) {
      ex.methods.clear();
      for (const auto& m : to_list<std::string>(node.at("methods"), where + ".methods")) {
        ex.methods.push_back(parse_method(m));
      }
    }
    if (node.contains("eta")) {
      const auto& e = node.at("eta");
      ex.etas = e.is_array() ? to_list<double>(e, where + ".eta") : std::vector<double>{e.get<double>()};
    }
    if (node.contains("eta_multipliers")) {
      ex.eta_multipliers = to_list<double>(node.at("eta_multipliers"), where + ".eta_multipliers");
    }
    if (node.contains("iterations")) {
      ex.iterations = to_list<std::size_t>(node.at("iterations"), where + ".iterations");
    }
    if (node.contains("inits")) {
      ex.inits.clear();
      for (const auto& s : to_list<std::string>(node.at("inits"), where + ".inits")) ex.inits.push_back(parse_init(s));
    } else if (node.contains("init")) {
      ex.inits = {parse_init(node.at("init").get<std::string>())};
    }
    if (node.contains("seeds")) {
      ex.seeds = to_list<std::uint64_t>(node.at("seeds"), where + ".seeds");
    } else if (node.contains("num_seeds")) {
      const auto n = node.at("num_seeds").get<std::uint64_t>();
      const auto base = node.value("base_seed", std::uint64_t{0});
      ex.seeds.clear();
      for (std::uint64_t i = 0; i < n; ++i) ex.seeds.push_back(base + i);
    }
    ex.refine_iters = node.value("refine_iters", ex.refine_iters);
    ex.tolerance = node.value("tolerance", ex.tolerance);
    ex.rmse_threshold = node.value("rmse_threshold", ex.rmse_threshold);
    ex.sweep_iterations = node.value("sweep_iterations", ex.sweep_iterations);
    ex.keep_traces = node.value("keep_traces", ex.keep_traces);
    if (node.contains("codec")) {
      const auto& c = node.at("codec");
      CodecSpec spec;
      spec.pixel_dim = require(c, "pixel_dim", where + ".codec").get<Eigen::Index>();
      spec.seed = c.value("seed", std::uint64_t{0});
      spec.residual_scale = c.value("residual_scale", spec.residual_scale);
      ex.codec = spec;
    }
    ex.validate();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    if (what.rfind(where + ":", 0) == 0) throw ConfigError(what);
    fail(where, what);
  } catch (const json::exception& e) {
    fail(where, e.what());
  }
  return ex;
}

}  // namespace

GaussianMixture parse_mixture(const json& node, Eigen::Index dim) {
  const std::string where = "mixture";
  const auto weights = to_list<double>(require(node, "weights", where), where + ".weights");
  const auto& means_node = require(node, "means", where);
  if (!means_node.is_array() || means_node.size() != weights.size()) fail(where, "one mean per weight required");
  std::vector<Vec> means;
  for (const auto& m : means_node) means.push_back(to_vec(m, dim, where + ".means"));

  std::vector<Mat> covs;
  const auto& cov_node = require(node, "covariances", where);
  if (!cov_node.is_array() || cov_node.size() != weights.size()) fail(where, "one covariance per weight required");
  for (const auto& c : cov_node) {
    // A bare number is an isotropic variance.
    if (c.is_number()) {
      covs.push_back(c.get<double>() * Mat::Identity(dim, dim));
    } else {
      covs.push_back(to_mat(c, dim, where + ".covariances"));
    }
  }
  try {
    return GaussianMixture(weights, std::move(means), std::move(covs));
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
}

AffineField parse_affine(const json& node, Eigen::Index dim) {
  const std::string where = "affine";
  AffineField f;
  if (node.contains("A")) {
    f.A = to_mat(node.at("A"), dim, where + ".A");
  } else if (node.contains("A_diag")) {
    f.A = to_vec(node.at("A_diag"), dim, where + ".A_diag").asDiagonal();
  } else if (node.contains("a")) {
    f.A = node.at("a").get<double>() * Mat::Identity(dim, dim);
  } else {
    f.A = Mat::Zero(dim, dim);
  }
  f.b = node.contains("b") ? to_vec(node.at("b"), dim, where + ".b") : Vec::Zero(dim);
  return f;
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) fail("config", "top level must be an object");
  Scenario sc;
  sc.schema_version = require(doc, "schema_version", "config").get<int>();
  if (sc.schema_version != kConfigSchemaVersion) {
    fail("config", "unsupported schema_version " + std::to_string(sc.schema_version));
  }
  const auto dim = require(doc, "dim", "config").get<Eigen::Index>();
  if (dim < 1 || dim > 64) fail("config", "dim must lie in [1, 64]");

  BackendKind kind;
  try {
    kind = parse_backend_kind(require(doc, "backend", "config").get<std::string>());
  } catch (const InvalidArgument& e) {
    fail("config.backend", e.what());
  }
  sc.backend = make_backend(kind, dim);
  sc.schedule = parse_schedule(require(doc, "schedule", "config"), kind);

  const auto& conds = require(doc, "conditions", "config");
  if (!conds.is_object() || conds.empty()) fail("conditions", "expected a nonempty object");
  for (const auto& [name, node] : conds.items()) {
    const std::string where = "conditions." + name;
    try {
      if (node.contains("mixture")) {
        sc.conditions.emplace(name, make_mixture_condition(name, parse_mixture(node.at("mixture"), dim)));
      } else if (node.contains("affine")) {
        auto f = parse_affine(node.at("affine"), dim);
        sc.conditions.emplace(name, make_affine_condition(name, std::move(f.A), std::move(f.b)));
      } else {
        fail(where, "expected a 'mixture' or 'affine' block");
      }
    } catch (const ConfigError& e) {
      fail(where, e.what());
    } catch (const InvalidArgument& e) {
      fail(where, e.what());
    }
  }

  sc.source = doc.value("source", sc.conditions.begin()->first);
  sc.target = doc.value("target", sc.source);
  for (const auto* name : {&sc.source, &sc.target}) {
    if (!sc.conditions.count(*name)) fail("config", "unknown condition '" + *name + "'");
  }
  try {
    sc.source_flow();
  } catch (const InvalidArgument& e) {
    fail("config", std::string("source condition does not fit the backend: ") + e.what());
  }

  if (doc.contains("bound")) {
    const auto& b = doc.at("bound");
    try {
      sc.bound.num_realizations = b.value("realizations", sc.bound.num_realizations);
      if (b.contains("alpha_grid")) sc.bound.alpha_grid = to_list<double>(b.at("alpha_grid"), "bound.alpha_grid");
      sc.bound.seed = b.value("seed", sc.bound.seed);
      sc.bound.safety_factor = b.value("safety_factor", sc.bound.safety_factor);
      if (b.contains("conditions")) sc.bound_conditions = to_list<std::string>(b.at("conditions"), "bound.conditions");
    } catch (const json::exception& e) {
      fail("bound", e.what());
    }
    for (const auto& name : sc.bound_conditions) {
      if (!sc.conditions.count(name)) fail("bound.conditions", "unknown condition '" + name + "'");
    }
  }

  if (doc.contains("experiment")) sc.experiment = parse_experiment(doc.at("experiment"));
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace zoflow
