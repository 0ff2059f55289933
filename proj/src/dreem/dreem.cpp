#include "ne3/dreem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ne3/errors.hpp"
#include "ne3/kernels.hpp"
#include "ne3/linalg.hpp"
#include "ne3/planners.hpp"

namespace ne3::dreem {

void DreemConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (!(phi > 0.0)) throw ConfigError("phi must be positive");
  if (n < 1) throw ConfigError("n must be at least 1");
  if (!(sample_scale > 0.0)) throw ConfigError("sample_scale must be positive");
  if (d_override && *d_override < 1) throw ConfigError("d must be at least 1");
}

VersionSpace VersionSpace::full(std::size_t size) {
  VersionSpace vs;
  vs.surviving.resize(size);
  for (std::size_t i = 0; i < size; ++i) vs.surviving[i] = i;
  return vs;
}

std::vector<const TabularMDP*> VersionSpace::members(const ModelClass& models) const {
  std::vector<const TabularMDP*> out;
  out.reserve(surviving.size());
  for (std::size_t i : surviving) out.push_back(&models[i]);
  return out;
}

std::size_t update_model_set(VersionSpace& vs, const ModelClass& models, std::span<const Policy> policies,
                             std::size_t policy_index, double v_explore, const TabularMDP& truth,
                             const DreemConfig& config, std::span<const TestFunction> test_functions, Rng& rng) {
  const Policy& pi = policies[policy_index];
  const int H = truth.horizon();
  RoundRecord rec;
  rec.explore_policy = policy_index;
  rec.v_explore = v_explore;
  rec.candidates = vs.surviving;
  rec.misfits.assign(vs.surviving.size(), std::vector<double>(static_cast<std::size_t>(H), 0.0));
  std::size_t episodes = 0;

  if (config.oracle_misfit) {
    const auto rollins = state_distributions(truth, pi);
    for (std::size_t k = 0; k < vs.surviving.size(); ++k)
      for (int h = 1; h <= H; ++h)
        rec.misfits[k][static_cast<std::size_t>(h - 1)] =
            misfit_from_rollin(truth, models[vs.surviving[k]], rollins[static_cast<std::size_t>(h - 1)].probs);
  } else {
    std::vector<TransitionCounts> counts(static_cast<std::size_t>(H),
                                         TransitionCounts(truth.num_states(), truth.num_actions()));
    if (config.scheme == DataScheme::PerStep) {
      for (int h = 1; h <= H; ++h)
        for (const auto& t : collect_misfit_dataset(truth, pi, h, config.n, rng)) counts[static_cast<std::size_t>(h - 1)].add(t);
      episodes = config.n * static_cast<std::size_t>(H);
    } else {
      for (std::size_t i = 0; i < config.n; ++i) {
        const int h = 1 + rng.uniform_index(static_cast<std::size_t>(H));
        counts[static_cast<std::size_t>(h - 1)].add(collect_misfit_dataset(truth, pi, h, 1, rng).front());
      }
      episodes = config.n;
    }
    for (std::size_t k = 0; k < vs.surviving.size(); ++k) {
      for (int h = 1; h <= H; ++h) {
        const auto& c = counts[static_cast<std::size_t>(h - 1)];
        // A step with no data cannot testify against anyone.
        rec.misfits[k][static_cast<std::size_t>(h - 1)] =
            c.total() ? misfit_empirical(c, models[vs.surviving[k]], test_functions) : 0.0;
      }
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < vs.surviving.size(); ++k) {
    const auto& w = rec.misfits[k];
    if (std::any_of(w.begin(), w.end(), [&](double x) { return x > config.phi; }))
      rec.eliminated.push_back(vs.surviving[k]);
    else
      keep.push_back(vs.surviving[k]);
  }
  vs.surviving = std::move(keep);
  vs.history.push_back(std::move(rec));
  return episodes;
}

DreemResult dreem_run(const ModelClass& models, std::span<const Policy> policies, const TabularMDP& truth,
                      const DreemConfig& config, Rng& rng) {
  config.validate();
  models.validate();
  if (policies.empty()) throw ConfigError("policy class is empty");
  if (!models[0].same_shape(truth)) throw ConfigError("model class and environment differ in shape");
  const double threshold = config.epsilon / truth.num_actions();

  std::vector<TestFunction> tests;
  if (!config.oracle_misfit) tests = unique_test_functions(build_pairwise_test_functions(models.models));

  DreemResult out;
  VersionSpace vs = VersionSpace::full(models.size());
  std::vector<std::size_t> sizes;
  for (;;) {
    if (vs.surviving.empty())
      throw EliminationFailureError("every candidate model was eliminated after " + std::to_string(out.rounds) + " rounds",
                                    sizes);
    const auto members = vs.members(models);
    const auto values = kernels::v_explore_all(policies, members);
    const auto best = planners::exhaustive_search(values);
    if (!(best.value > threshold)) break;
    if (config.round_cap && out.rounds >= config.round_cap) {
      out.anomaly = true;
      break;
    }
    out.episodes_used += update_model_set(vs, models, policies, best.index, best.value, truth, config, tests, rng);
    ++out.rounds;
    sizes.push_back(vs.surviving.size());
  }

  out.chosen_model = vs.surviving.front();
  const TabularMDP& chosen = models[out.chosen_model];
  const auto R = truth.rewards();
  const auto pick = planners::exhaustive_search(
      policies, [&](const Policy& p) { return policy_value_exact(chosen, p, R); });
  out.exploit_index = pick.index;
  out.exploit_policy = policies[pick.index];
  out.trajectories_used = out.rounds * config.n;
  out.final_versionspace_size = vs.surviving.size();

  double best_true = -std::numeric_limits<double>::infinity();
  for (const auto& p : policies) best_true = std::max(best_true, policy_value_exact(truth, p));
  out.value_gap = best_true - policy_value_exact(truth, out.exploit_policy);
  out.version_space = std::move(vs);
  return out;
}

TheoreticalParameters theoretical_parameters(int num_actions, int horizon, double epsilon, double delta, double d,
                                             double beta, std::size_t model_count, std::size_t policy_count) {
  if (num_actions < 1 || horizon < 1 || !(epsilon > 0) || !(delta > 0) || !(d > 0) || !(beta > 0) || model_count < 1 ||
      policy_count < 1)
    throw ConfigError("theoretical parameters need positive arguments");
  const double A = num_actions, H = horizon;
  TheoreticalParameters p;
  p.phi = epsilon / (24.0 * H * H * A * A * std::sqrt(d));
  if (!(beta > 2.0 * p.phi)) throw ConfigError("beta must exceed 2 phi for a positive round count");
  p.T = H * d * std::log(beta / (2.0 * p.phi)) / std::log(5.0 / 3.0);
  const double L = std::log(4.0 * p.T * H * static_cast<double>(model_count) * static_cast<double>(policy_count) / delta);
  p.n = std::ceil(36864.0 * std::pow(H, 4) * std::pow(A, 4) * d * L / (epsilon * epsilon));
  return p;
}

DoublingResult doubling_run(const ModelClass& models, std::span<const Policy> policies, const TabularMDP& truth,
                            double epsilon, double delta, double beta, const DreemConfig& base, Rng& rng,
                            int max_outer) {
  DoublingResult out;
  for (int i = 1; i <= max_outer; ++i) {
    const double d = std::ldexp(1.0, i);
    const double delta_i = delta / (static_cast<double>(i) * (i + 1));
    const auto p = theoretical_parameters(truth.num_actions(), truth.horizon(), epsilon, delta_i, d, beta,
                                          models.size(), policies.size());
    out.schedule.push_back(p);
    DreemConfig cfg = base;
    cfg.epsilon = epsilon;
    cfg.delta = delta_i;
    cfg.phi = p.phi;
    cfg.d_override = static_cast<int>(d);
    cfg.n = static_cast<std::size_t>(std::min(std::max(1.0, std::ceil(p.n * base.sample_scale)), 1e15));
    cfg.round_cap = static_cast<std::size_t>(std::max(1.0, std::ceil(p.T)));
    out.outer_iterations = i;
    try {
      auto r = dreem_run(models, policies, truth, cfg, rng);
      if (!r.anomaly) {
        out.result = std::move(r);
        return out;
      }
    } catch (const EliminationFailureError&) {
      // Treated like a failed guess of d.
    }
  }
  throw ConvergenceError("doubling did not finish within " + std::to_string(max_outer) + " guesses of d",
                         static_cast<double>(max_outer));
}

double estimate_beta(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth) {
  double beta = 0.0;
  for (int h = 1; h <= truth.horizon(); ++h) {
    const auto A = misfit_matrix(policies, models, truth, h).values;
    const int r = numerical_rank(A);
    if (r == 0) continue;
    beta = std::max(beta, factor_matrix(A, r).beta);
  }
  return beta;
}

int effective_rank(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth) {
  int d = 0;
  for (int h = 1; h <= truth.horizon(); ++h) d = std::max(d, numerical_rank(misfit_matrix(policies, models, truth, h).values));
  return d;
}

ModelClass perturbed_class(const TabularMDP& truth, std::size_t count, Rng& rng, int max_rows, double min_weight) {
  const int S = truth.num_states();
  const int rows = S * truth.num_actions();
  ModelClass out;
  out.models.reserve(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> P(truth.transitions().begin(), truth.transitions().end());
    const int k = 1 + rng.uniform_index(static_cast<std::size_t>(max_rows));
    for (int j = 0; j < k; ++j) {
      const int r = rng.uniform_index(static_cast<std::size_t>(rows));
      const double w = rng.uniform(min_weight, 1.0);
      std::vector<double> q(static_cast<std::size_t>(S));
      double total = 0.0;
      for (auto& x : q) total += (x = -std::log1p(-rng.uniform()));
      for (int n = 0; n < S; ++n) {
        auto& p = P[static_cast<std::size_t>(r * S + n)];
        p = (1.0 - w) * p + w * q[static_cast<std::size_t>(n)] / total;
      }
    }
    out.models.push_back(truth.with_transitions(std::move(P)));
  }
  const auto pos = static_cast<std::size_t>(rng.uniform_int(count + 1));
  out.models.insert(out.models.begin() + static_cast<std::ptrdiff_t>(pos), truth);
  out.truth_index = pos;
  return out;
}

}  // namespace ne3::dreem
