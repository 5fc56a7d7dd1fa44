#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubnet/types.hpp"

namespace hubnet {
namespace simgen {

// Synthetic data with hub structure: a small core of features drives many
// of the others, and the response may or may not be explained by the core.
// Everything is a pure function of the spec, including its seed.

enum class ScenarioKind {
  A,     // favorable: response on the hubs, 20% of the rest driven by them
  B,     // adversarial: response on s driven features, not the hubs
  C,     // extreme adversarial: every non-hub feature is driven
  D,     // neutral: X ~ N(0, Sigma) with a random well-conditioned Sigma
  Fig1,  // small favorable instance: every non-hub driven, response on hubs
  Fig2,  // same X as Fig1 but the response sits on three driven features
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::A;
  Index n = 100;
  Index p = 500;
  Index s = 10;
  double t_frac = 0.2;  // fraction of non-core features driven by the core
  Seed seed;
  Index n_test = 0;  // 0 means n
};

// Small-instance defaults used by the Fig1/Fig2 kinds.
ScenarioSpec figure_spec(ScenarioKind kind, Seed seed);

enum class HubSetting {
  S1,  // precision matrix with dense rows/columns on the core
  S2,  // block-diagonal version of S1 with two cores of size s/2
  S3,  // regression-style: X_j = X_S Gamma_j + eps with truncated Gaussian Gamma
};

struct HubGraphSpec {
  HubSetting setting = HubSetting::S1;
  Index n = 100;
  Index p = 200;
  Index s = 4;
  Seed seed;
};

struct SimData {
  Matrix x_train;
  Matrix x_test;   // 0x0 for response-free data
  Vector y_train;  // size 0 for response-free data
  Vector y_test;
  std::vector<Index> true_support;  // sorted; empty when there is no response
  std::vector<Index> hub_set;       // sorted generative core; may be empty (D)
  nlohmann::json meta;
};

// Supervised scenarios. Features are released in generative coordinates:
// driven columns keep their larger scale (sd ~ sqrt(1 + ||Gamma_j||^2)),
// which is what separates hub rows once a fit is mapped back from an
// internally standardized design. Runners standardize their own inputs.
// Raises InvalidSpec on inconsistent parameters.
SimData gen_scenario(const ScenarioSpec& spec);

// Response-free hub-graph draws, re-standardized to unit variance before
// release (the recovery settings are defined on standardized predictors).
SimData gen_hub_graph(const HubGraphSpec& spec);

// Writes x_train.csv / y_train.csv / x_test.csv / y_test.csv (present parts
// only) plus meta.json {spec, true_support, hub_set} into dir.
void save_simdata(const SimData& data, const std::string& dir);

std::string to_string(ScenarioKind kind);
std::string to_string(HubSetting setting);

// Parses "a".."d", "fig1", "fig2" / "s1".."s3" (case-insensitive).
// Raises InvalidSpec on unknown names.
ScenarioKind parse_scenario(const std::string& name);
HubSetting parse_setting(const std::string& name);

}  // namespace simgen
}  // namespace hubnet
