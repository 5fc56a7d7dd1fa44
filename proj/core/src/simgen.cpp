#include "hubnet/simgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubnet/io.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/rng.hpp"

namespace hubnet {
namespace simgen {

namespace {

// Substream layout shared by every generator. Changing n_test or swapping
// train for test never perturbs the other draws.
enum Stream : std::uint64_t {
  kStructure = 0,  // T and S1 membership, Gamma, Sigma, E
  kTrainX = 1,
  kTestX = 2,
  kTrainNoise = 3,  // response noise
  kTestNoise = 4,
};

void validate(const ScenarioSpec& spec) {
  if (spec.n < 2 || (spec.n_test != 0 && spec.n_test < 2)) {
    raise(ErrorKind::InvalidSpec, "need at least 2 rows per released matrix");
  }
  if (spec.s < 1 || spec.s >= spec.p) {
    raise(ErrorKind::InvalidSpec, "need 1 <= s < p");
  }
  if (!(spec.t_frac > 0.0 && spec.t_frac <= 1.0)) {
    raise(ErrorKind::InvalidSpec, "t_frac must lie in (0, 1]");
  }
  const bool signal_after_core =
      spec.kind == ScenarioKind::C || spec.kind == ScenarioKind::Fig2;
  if (signal_after_core && 2 * spec.s > spec.p) {
    raise(ErrorKind::InvalidSpec,
          "support {s..2s-1} does not fit: need 2s <= p");
  }
}

Index t_count(const ScenarioSpec& spec) {
  return static_cast<Index>(
      std::llround(spec.t_frac * static_cast<double>(spec.p - spec.s)));
}

// Hub-driven design: columns 0..s-1 are the iid core, every other column
// gets its own noise vector, and columns in `driven` add X_S Gamma_j on
// top. Noise is drawn for every non-core column regardless of membership so
// the stream stays aligned across scenarios.
Matrix draw_hub_design(Index n, Index p, Index s,
                       const std::vector<bool>& driven, const Matrix& gamma,
                       Rng& rng) {
  Matrix x(n, p);
  for (Index j = 0; j < s; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  Index d = 0;
  for (Index j = s; j < p; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
    if (driven[static_cast<std::size_t>(j)]) {
      x.col(j).noalias() += x.leftCols(s) * gamma.col(d);
      ++d;
    }
  }
  return x;
}

Vector draw_response(const Matrix& x, const std::vector<Index>& support,
                     Rng& rng) {
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) y[i] = rng.normal();
  for (Index j : support) y += x.col(j);
  return y;
}

nlohmann::json spec_json(const ScenarioSpec& spec) {
  return nlohmann::json{
      {"scenario", to_string(spec.kind)}, {"n", spec.n},
      {"p", spec.p},                      {"s", spec.s},
      {"t_frac", spec.t_frac},            {"seed", spec.seed.value},
      {"n_test", spec.n_test == 0 ? spec.n : spec.n_test},
  };
}

SimData finish(Matrix x_train, Matrix x_test, Vector y_train, Vector y_test,
               std::vector<Index> support, std::vector<Index> hubs,
               nlohmann::json meta) {
  SimData data;
  data.x_train = std::move(x_train);
  data.x_test = std::move(x_test);
  data.y_train = std::move(y_train);
  data.y_test = std::move(y_test);
  data.true_support = std::move(support);
  data.hub_set = std::move(hubs);
  meta["true_support"] = data.true_support;
  meta["hub_set"] = data.hub_set;
  data.meta = std::move(meta);
  return data;
}

SimData gen_hub_scenario(const ScenarioSpec& spec) {
  const Index p = spec.p;
  const Index s = spec.s;
  const Index n_test = spec.n_test == 0 ? spec.n : spec.n_test;

  Rng structure(spec.seed.child(kStructure));

  // Membership of T among the non-core features, then the support.
  std::vector<bool> driven(static_cast<std::size_t>(p), false);
  std::vector<Index> t_members;
  std::vector<Index> support;
  switch (spec.kind) {
    case ScenarioKind::A: {
      const Index m = t_count(spec);
      for (Index k : structure.sample_indices(p - s, m)) {
        t_members.push_back(s + k);
      }
      for (Index j = 0; j < s; ++j) support.push_back(j);
      break;
    }
    case ScenarioKind::B: {
      const Index m = t_count(spec);
      if (m < s) {
        raise(ErrorKind::InvalidSpec,
              "T is too small to contain an s-sized support");
      }
      for (Index k : structure.sample_indices(p - s, m)) {
        t_members.push_back(s + k);
      }
      for (Index k : structure.sample_indices(m, s)) {
        support.push_back(t_members[static_cast<std::size_t>(k)]);
      }
      break;
    }
    case ScenarioKind::C:
      for (Index j = s; j < p; ++j) t_members.push_back(j);
      for (Index j = s; j < 2 * s; ++j) support.push_back(j);
      break;
    case ScenarioKind::Fig1:
      for (Index j = s; j < p; ++j) t_members.push_back(j);
      for (Index j = 0; j < s; ++j) support.push_back(j);
      break;
    case ScenarioKind::Fig2:
      for (Index j = s; j < p; ++j) t_members.push_back(j);
      for (Index j = s; j < 2 * s; ++j) support.push_back(j);
      break;
    case ScenarioKind::D:
      raise(ErrorKind::InvalidSpec, "not a hub scenario");
  }
  for (Index j : t_members) driven[static_cast<std::size_t>(j)] = true;

  const double gamma_sd =
      (spec.kind == ScenarioKind::B || spec.kind == ScenarioKind::C) ? 0.5
                                                                     : 2.0;
  Matrix gamma(s, static_cast<Index>(t_members.size()));
  for (Index j = 0; j < gamma.cols(); ++j) {
    for (Index i = 0; i < s; ++i) gamma(i, j) = structure.normal(0, gamma_sd);
  }

  Rng train_rng(spec.seed.child(kTrainX));
  Rng test_rng(spec.seed.child(kTestX));
  Matrix x_train = draw_hub_design(spec.n, p, s, driven, gamma, train_rng);
  Matrix x_test = draw_hub_design(n_test, p, s, driven, gamma, test_rng);

  Rng train_noise(spec.seed.child(kTrainNoise));
  Rng test_noise(spec.seed.child(kTestNoise));
  Vector y_train = draw_response(x_train, support, train_noise);
  Vector y_test = draw_response(x_test, support, test_noise);

  std::vector<Index> hubs;
  for (Index j = 0; j < s; ++j) hubs.push_back(j);

  nlohmann::json meta = spec_json(spec);
  meta["t_members"] = t_members;
  return finish(std::move(x_train), std::move(x_test), std::move(y_train),
                std::move(y_test), std::move(support), std::move(hubs),
                std::move(meta));
}

SimData gen_neutral_scenario(const ScenarioSpec& spec) {
  const Index n_test = spec.n_test == 0 ? spec.n : spec.n_test;
  const Matrix sigma =
      gen_positive_def(spec.p, 10.0, spec.seed.child(kStructure));
  Matrix x_train = sample_gaussian(spec.n, sigma, spec.seed.child(kTrainX));
  Matrix x_test = sample_gaussian(n_test, sigma, spec.seed.child(kTestX));

  std::vector<Index> support;
  for (Index j = 0; j < spec.s; ++j) support.push_back(j);

  Rng train_noise(spec.seed.child(kTrainNoise));
  Rng test_noise(spec.seed.child(kTestNoise));
  Vector y_train = draw_response(x_train, support, train_noise);
  Vector y_test = draw_response(x_test, support, test_noise);

  return finish(std::move(x_train), std::move(x_test), std::move(y_train),
                std::move(y_test), std::move(support), {}, spec_json(spec));
}

// Precision-matrix construction for settings 1 and 2: entries of E drawn
// where the mask is set (magnitude then sign per entry, row-major), then
// symmetrized and shifted so the smallest eigenvalue is exactly 0.2.
Matrix precision_from_mask(const std::vector<std::vector<bool>>& mask,
                           Index p, Rng& rng) {
  Matrix e = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (!mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        continue;
      }
      const double magnitude = rng.uniform(0.015, 0.15);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      e(i, j) = sign * magnitude;
    }
  }
  Matrix e_bar = 0.5 * (e + e.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(e_bar,
                                            Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  Matrix prec = e_bar;
  prec.diagonal().array() += 0.2 - lambda_min;
  return prec;
}

// Dense-row mask: diagonal plus full row i and column i for each core i.
void core_mask(std::vector<std::vector<bool>>& mask, Index lo, Index hi,
               Index core_lo, Index core_hi) {
  for (Index i = lo; i < hi; ++i) {
    mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = true;
  }
  for (Index c = core_lo; c < core_hi; ++c) {
    for (Index j = lo; j < hi; ++j) {
      mask[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = true;
      mask[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = true;
    }
  }
}

}  // namespace

ScenarioSpec figure_spec(ScenarioKind kind, Seed seed) {
  if (kind != ScenarioKind::Fig1 && kind != ScenarioKind::Fig2) {
    raise(ErrorKind::InvalidSpec, "figure_spec expects Fig1 or Fig2");
  }
  ScenarioSpec spec;
  spec.kind = kind;
  spec.n = 60;
  spec.p = 40;
  spec.s = 3;
  spec.t_frac = 1.0;
  spec.seed = seed;
  return spec;
}

SimData gen_scenario(const ScenarioSpec& spec) {
  validate(spec);
  if (spec.kind == ScenarioKind::D) return gen_neutral_scenario(spec);
  return gen_hub_scenario(spec);
}

SimData gen_hub_graph(const HubGraphSpec& spec) {
  const Index p = spec.p;
  const Index s = spec.s;
  if (spec.n < 2 || s < 1 || s >= p) {
    raise(ErrorKind::InvalidSpec, "need n >= 2 and 1 <= s < p");
  }
  if (spec.setting == HubSetting::S2 && s % 2 != 0) {
    raise(ErrorKind::InvalidSpec, "setting s2 needs an even core size");
  }

  Rng structure(spec.seed.child(kStructure));
  std::vector<Index> hubs;
  Matrix x;
  double precision_lambda_min = 0.0;  // S1/S2 only
  double gamma_abs_max = 0.0;         // S3 only

  if (spec.setting == HubSetting::S3) {
    // Gamma truncated at +-2 by rejection; column-major like the scenarios.
    Matrix gamma(s, p - s);
    for (Index j = 0; j < p - s; ++j) {
      for (Index i = 0; i < s; ++i) {
        double g = structure.normal(0.0, 2.0);
        while (std::abs(g) > 2.0) g = structure.normal(0.0, 2.0);
        gamma(i, j) = g;
      }
    }
    gamma_abs_max = gamma.cwiseAbs().maxCoeff();
    std::vector<bool> driven(static_cast<std::size_t>(p), true);
    Rng xrng(spec.seed.child(kTrainX));
    x = draw_hub_design(spec.n, p, s, driven, gamma, xrng);
    for (Index j = 0; j < s; ++j) hubs.push_back(j);
  } else {
    std::vector<std::vector<bool>> mask(
        static_cast<std::size_t>(p),
        std::vector<bool>(static_cast<std::size_t>(p), false));
    if (spec.setting == HubSetting::S1) {
      core_mask(mask, 0, p, 0, s);
      for (Index j = 0; j < s; ++j) hubs.push_back(j);
    } else {
      const Index p1 = p / 2;
      const Index half = s / 2;
      core_mask(mask, 0, p1, 0, half);
      core_mask(mask, p1, p, p1, p1 + half);
      for (Index j = 0; j < half; ++j) hubs.push_back(j);
      for (Index j = p1; j < p1 + half; ++j) hubs.push_back(j);
    }
    const Matrix prec = precision_from_mask(mask, p, structure);
    precision_lambda_min =
        Eigen::SelfAdjointEigenSolver<Matrix>(prec, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    Eigen::LLT<Matrix> llt(prec);
    if (llt.info() != Eigen::Success) {
      raise(ErrorKind::NotPositiveDefinite,
            "constructed precision matrix failed Cholesky");
    }
    Matrix sigma = llt.solve(Matrix::Identity(p, p));
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();
    x = sample_gaussian(spec.n, sigma, spec.seed.child(kTrainX));
  }

  SimData data;
  data.x_train = standardize(x).first;
  data.hub_set = hubs;
  data.meta = nlohmann::json{
      {"setting", to_string(spec.setting)}, {"n", spec.n},
      {"p", spec.p},                        {"s", spec.s},
      {"seed", spec.seed.value},            {"hub_set", hubs},
      {"true_support", nlohmann::json::array()},
  };
  if (spec.setting == HubSetting::S3) {
    data.meta["gamma_abs_max"] = gamma_abs_max;
  } else {
    data.meta["precision_lambda_min"] = precision_lambda_min;
  }
  return data;
}

void save_simdata(const SimData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_csv((base / "x_train.csv").string(), data.x_train);
  if (data.y_train.size() > 0) {
    write_csv((base / "y_train.csv").string(), data.y_train);
  }
  if (data.x_test.size() > 0) {
    write_csv((base / "x_test.csv").string(), data.x_test);
  }
  if (data.y_test.size() > 0) {
    write_csv((base / "y_test.csv").string(), data.y_test);
  }
  std::ofstream meta((base / "meta.json").string());
  if (!meta) raise(ErrorKind::Io, dir + ": cannot write meta.json");
  meta << data.meta.dump(2) << "\n";
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::A: return "a";
    case ScenarioKind::B: return "b";
    case ScenarioKind::C: return "c";
    case ScenarioKind::D: return "d";
    case ScenarioKind::Fig1: return "fig1";
    case ScenarioKind::Fig2: return "fig2";
  }
  return "?";
}

std::string to_string(HubSetting setting) {
  switch (setting) {
    case HubSetting::S1: return "s1";
    case HubSetting::S2: return "s2";
    case HubSetting::S3: return "s3";
  }
  return "?";
}

namespace {
std::string lower(std::string v) {
  for (char& c : v) c = static_cast<char>(std::tolower(c));
  return v;
}
}  // namespace

ScenarioKind parse_scenario(const std::string& name) {
  const std::string v = lower(name);
  if (v == "a") return ScenarioKind::A;
  if (v == "b") return ScenarioKind::B;
  if (v == "c") return ScenarioKind::C;
  if (v == "d") return ScenarioKind::D;
  if (v == "fig1") return ScenarioKind::Fig1;
  if (v == "fig2") return ScenarioKind::Fig2;
  raise(ErrorKind::InvalidSpec, "unknown scenario '" + name + "'");
}

HubSetting parse_setting(const std::string& name) {
  const std::string v = lower(name);
  if (v == "s1") return HubSetting::S1;
  if (v == "s2") return HubSetting::S2;
  if (v == "s3") return HubSetting::S3;
  raise(ErrorKind::InvalidSpec, "unknown setting '" + name + "'");
}

}  // namespace simgen
}  // namespace hubnet
