// Copyright 2026 The fscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fscore/run_config.hpp"

#include <fstream>
#include <set>

#include "fscore/error.hpp"
#include "fscore/io.hpp"

namespace fscore {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  if (!obj.is_object()) throw InvalidArgument("config: '" + prefix + "' must be an object");
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) throw InvalidArgument("config: unknown key '" + prefix + item.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const std::string& key, T& out, const std::string& prefix = "") {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config: key '" + prefix + key + "' has the wrong type");
  }
}

// Integral keys must be JSON integers, not 3.5 silently truncated.
template <typename T>
void read_int(const json& obj, const std::string& key, T& out, const std::string& prefix = "") {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer()) throw InvalidArgument("config: key '" + prefix + key + "' must be an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (it->is_number_unsigned()) {
      out = it->template get<T>();
      return;
    }
    if (it->template get<std::int64_t>() < 0) {
      throw InvalidArgument("config: key '" + prefix + key + "' must be non-negative");
    }
  }
  out = it->template get<T>();
}

CriticClass critic_class_from(const std::string& s) {
  if (s == "feature_basis") return CriticClass::kFeatureBasis;
  if (s == "mlp") return CriticClass::kMlp;
  throw InvalidArgument("config: key 'critic.class' must be feature_basis or mlp (got '" + s + "')");
}

std::string critic_class_name(CriticClass c) { return c == CriticClass::kMlp ? "mlp" : "feature_basis"; }

OptimizerKind optimizer_kind_from(const std::string& s) {
  if (s == "newton") return OptimizerKind::kNewton;
  if (s == "gradient_descent") return OptimizerKind::kGradientDescent;
  throw InvalidArgument("config: key 'optimizer.kind' must be newton or gradient_descent (got '" + s + "')");
}

std::string optimizer_kind_name(OptimizerKind k) {
  return k == OptimizerKind::kGradientDescent ? "gradient_descent" : "newton";
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  static const std::set<std::string> kTop = {
      "subcommand", "divergence", "seed",    "n",         "repeats",    "world",   "mean",      "cov",
      "a",          "b",          "critic",  "optimizer", "output_dir", "threads", "mi",        "samples",
      "samples_q",  "mechanism",  "reports", "truth",     "n_grid",     "rounds",  "init",      "init_mean",
      "init_chol"};
  static const std::set<std::string> kCritic = {"class", "max_centers", "bandwidth", "hidden", "weight_cap"};
  static const std::set<std::string> kOptimizer = {"kind",     "step_size", "max_iterations", "tolerance",
                                                   "armijo_c", "shrink",    "ridge",          "init_scale"};
  reject_unknown(doc, kTop, "");
  RunConfig c;
  read(doc, "subcommand", c.subcommand);
  read(doc, "divergence", c.divergence);
  read_int(doc, "seed", c.seed);
  read_int(doc, "n", c.n);
  read_int(doc, "repeats", c.repeats);
  read(doc, "world", c.world);
  if (doc.contains("mean") && !doc["mean"].is_null()) {
    std::vector<double> m;
    read(doc, "mean", m);
    if (m.size() != 2) throw InvalidArgument("config: key 'mean' must hold 2 numbers");
    c.mean = Eigen::Vector2d(m[0], m[1]);
  }
  if (doc.contains("cov") && !doc["cov"].is_null()) {
    std::vector<std::vector<double>> m;
    read(doc, "cov", m);
    if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) {
      throw InvalidArgument("config: key 'cov' must be a 2x2 array");
    }
    Eigen::Matrix2d s;
    s << m[0][0], m[0][1], m[1][0], m[1][1];
    c.cov = s;
  }
  read(doc, "a", c.a);
  read(doc, "b", c.b);
  if (doc.contains("critic")) {
    const json& cj = doc["critic"];
    reject_unknown(cj, kCritic, "critic.");
    std::string cls = critic_class_name(c.critic.kind);
    read(cj, "class", cls, "critic.");
    c.critic.kind = critic_class_from(cls);
    read_int(cj, "max_centers", c.critic.max_centers, "critic.");
    read(cj, "bandwidth", c.critic.bandwidth, "critic.");
    read(cj, "hidden", c.critic.hidden, "critic.");
    read(cj, "weight_cap", c.critic.weight_cap, "critic.");
  }
  if (doc.contains("optimizer")) {
    const json& oj = doc["optimizer"];
    reject_unknown(oj, kOptimizer, "optimizer.");
    std::string kind = optimizer_kind_name(c.optimizer.kind);
    read(oj, "kind", kind, "optimizer.");
    c.optimizer.kind = optimizer_kind_from(kind);
    read(oj, "step_size", c.optimizer.step_size, "optimizer.");
    read_int(oj, "max_iterations", c.optimizer.max_iterations, "optimizer.");
    read(oj, "tolerance", c.optimizer.tolerance, "optimizer.");
    read(oj, "armijo_c", c.optimizer.armijo_c, "optimizer.");
    read(oj, "shrink", c.optimizer.shrink, "optimizer.");
    read(oj, "ridge", c.optimizer.ridge, "optimizer.");
    read(oj, "init_scale", c.optimizer.init_scale, "optimizer.");
  }
  read(doc, "output_dir", c.output_dir);
  read_int(doc, "threads", c.threads);
  read(doc, "mi", c.mi);
  read(doc, "samples", c.samples);
  read(doc, "samples_q", c.samples_q);
  read(doc, "mechanism", c.mechanism);
  read(doc, "reports", c.reports);
  read(doc, "truth", c.truth);
  read(doc, "n_grid", c.n_grid);
  read_int(doc, "rounds", c.rounds);
  read(doc, "init", c.init);
  read(doc, "init_mean", c.init_mean);
  read(doc, "init_chol", c.init_chol);
  c.optimizer.seed = c.seed;
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json doc;
  doc["subcommand"] = c.subcommand;
  doc["divergence"] = c.divergence;
  doc["seed"] = c.seed;
  doc["n"] = c.n;
  doc["repeats"] = c.repeats;
  doc["world"] = c.world;
  doc["mean"] = c.mean ? json{(*c.mean)(0), (*c.mean)(1)} : json(nullptr);
  doc["cov"] = c.cov ? json{json{(*c.cov)(0, 0), (*c.cov)(0, 1)}, json{(*c.cov)(1, 0), (*c.cov)(1, 1)}}
                     : json(nullptr);
  doc["a"] = c.a;
  doc["b"] = c.b;
  doc["critic"] = json{{"class", critic_class_name(c.critic.kind)},
                       {"max_centers", c.critic.max_centers},
                       {"bandwidth", c.critic.bandwidth},
                       {"hidden", c.critic.hidden},
                       {"weight_cap", c.critic.weight_cap}};
  doc["optimizer"] = json{{"kind", optimizer_kind_name(c.optimizer.kind)},
                          {"step_size", c.optimizer.step_size},
                          {"max_iterations", c.optimizer.max_iterations},
                          {"tolerance", c.optimizer.tolerance},
                          {"armijo_c", c.optimizer.armijo_c},
                          {"shrink", c.optimizer.shrink},
                          {"ridge", c.optimizer.ridge},
                          {"init_scale", c.optimizer.init_scale}};
  doc["output_dir"] = c.output_dir;
  doc["threads"] = c.threads;
  doc["mi"] = c.mi;
  doc["samples"] = c.samples;
  doc["samples_q"] = c.samples_q;
  doc["mechanism"] = c.mechanism;
  doc["reports"] = c.reports;
  doc["truth"] = c.truth;
  doc["n_grid"] = c.n_grid;
  doc["rounds"] = c.rounds;
  doc["init"] = c.init;
  doc["init_mean"] = c.init_mean;
  doc["init_chol"] = c.init_chol;
  return doc;
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config: cannot parse " + path + ": " + e.what());
  }
  return run_config_from_json(doc);
}

void validate_run_config(const RunConfig& c) {
  get_divergence(c.divergence);
  if (c.n < kMinFitSamples) throw InvalidArgument("n below minimum 8");
  if (!(c.b > 0.0)) throw InvalidArgument("config: key 'b' must be > 0");
  if (c.threads < 1) throw InvalidArgument("config: key 'threads' must be >= 1");
  if (c.mean.has_value() != c.cov.has_value()) {
    throw InvalidArgument("config: keys 'mean' and 'cov' must be given together");
  }
  if (!c.mean) world_preset(c.world);
  if (c.mechanism != "alg1" && c.mechanism != "alg2") {
    throw InvalidArgument("config: key 'mechanism' must be alg1 or alg2");
  }
  if (c.rounds < 1) throw InvalidArgument("config: key 'rounds' must be >= 1");
  if (c.init != "standard" && c.init != "moments" && c.init != "diagonal" && c.init != "explicit") {
    throw InvalidArgument("config: key 'init' must be standard, moments, diagonal or explicit");
  }
  if (c.critic.max_centers < 1) throw InvalidArgument("config: key 'critic.max_centers' must be >= 1");
  for (int h : c.critic.hidden) {
    if (h < 1) throw InvalidArgument("config: key 'critic.hidden' needs positive widths");
  }
}

GaussianWorld world_from_config(const RunConfig& c) {
  GaussianWorld w;
  if (c.mean) {
    w.name = "custom";
    w.mean = *c.mean;
    w.cov = *c.cov;
  } else {
    w = world_preset(c.world);
  }
  w.seed = c.seed;
  return w;
}

FitConfig fit_from_config(const RunConfig& c) {
  FitConfig f;
  f.critic = c.critic;
  f.optimizer = c.optimizer;
  f.optimizer.seed = c.seed;
  return f;
}

MechanismConfig mechanism_from_config(const RunConfig& c) {
  MechanismConfig m;
  m.a = c.a;
  m.b = c.b;
  m.divergence = c.divergence;
  m.fit = fit_from_config(c);
  m.seed = c.seed;
  return m;
}

}  // namespace fscore
