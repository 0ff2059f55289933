#include "ne3/misfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ne3/errors.hpp"
#include "ne3/kernels.hpp"

namespace ne3 {

namespace {

void check_step(const TabularMDP& m, int h) {
  if (h < 1 || h > m.horizon()) throw IndexError("step h must lie in [1, H]");
}

void check_shapes(const TabularMDP& a, const TabularMDP& b) {
  if (!a.same_shape(b)) throw ConfigError("models differ in |S|, |A| or H");
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void ModelClass::validate() const {
  if (models.empty()) throw ConfigError("model class is empty");
  for (const auto& m : models) check_shapes(models.front(), m);
  if (truth_index && *truth_index >= models.size()) throw IndexError("truth_index out of range");
}

double misfit_from_rollin(const TabularMDP& truth, const TabularMDP& model, std::span<const double> rollin) {
  const int S = truth.num_states();
  const int A = truth.num_actions();
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    const double w = rollin[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    double inner = 0.0;
    for (int a = 0; a < A; ++a) inner += l1_distance(model.row(s, a), truth.row(s, a));
    total += w * inner;
  }
  return total / A;
}

double misfit_exact(const TabularMDP& truth, const TabularMDP& model, const Policy& policy, int h) {
  check_shapes(truth, model);
  check_step(truth, h);
  const auto rollin = state_distribution(truth, policy, h - 1);
  return misfit_from_rollin(truth, model, rollin.probs);
}

std::vector<double> sign_table(const TabularMDP& model, const TabularMDP& reference) {
  check_shapes(model, reference);
  const auto p = model.transitions();
  const auto q = reference.transitions();
  std::vector<double> f(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) f[i] = sgn(p[i] - q[i]);
  return f;
}

std::vector<TestFunction> build_test_functions(std::span<const Policy> policies,
                                               std::span<const TabularMDP> models, const TabularMDP& truth) {
  std::vector<TestFunction> out;
  out.reserve(2 * policies.size() * models.size() * static_cast<std::size_t>(truth.horizon()));
  for (std::size_t j = 0; j < models.size(); ++j) {
    // The maximizer does not depend on pi or h; provenance is kept anyway.
    const auto f = sign_table(models[j], truth);
    std::vector<double> neg(f.size());
    std::transform(f.begin(), f.end(), neg.begin(), [](double x) { return -x; });
    for (std::size_t i = 0; i < policies.size(); ++i) {
      for (int h = 1; h <= truth.horizon(); ++h) {
        out.push_back(TestFunction{f, i, j, h, 1});
        out.push_back(TestFunction{neg, i, j, h, -1});
      }
    }
  }
  return out;
}

std::vector<TestFunction> build_pairwise_test_functions(std::span<const TabularMDP> models) {
  std::vector<TestFunction> out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      auto f = sign_table(models[i], models[j]);
      std::vector<double> neg(f.size());
      std::transform(f.begin(), f.end(), neg.begin(), [](double x) { return -x; });
      // sign(P_j - P_i) = -sign(P_i - P_j), so one pair covers both orders.
      out.push_back(TestFunction{std::move(f), 0, i, 0, 1});
      out.push_back(TestFunction{std::move(neg), 0, i, 0, -1});
    }
  }
  return out;
}

std::vector<TestFunction> unique_test_functions(std::vector<TestFunction> functions) {
  std::vector<TestFunction> out;
  for (auto& f : functions) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& g) { return g.values == f.values; });
    if (!dup) out.push_back(std::move(f));
  }
  return out;
}

double ipm_objective(const TabularMDP& truth, const TabularMDP& model, const Policy& policy, int h,
                     std::span<const double> f) {
  check_shapes(truth, model);
  check_step(truth, h);
  const auto rollin = state_distribution(truth, policy, h - 1);
  const int S = truth.num_states();
  const int A = truth.num_actions();
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    const double w = rollin[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    for (int a = 0; a < A; ++a) {
      const auto base = static_cast<std::size_t>(s * A + a) * static_cast<std::size_t>(S);
      double diff = 0.0;
      for (int n = 0; n < S; ++n) diff += (model.p(s, a, n) - truth.p(s, a, n)) * f[base + static_cast<std::size_t>(n)];
      total += w * diff;
    }
  }
  return total / A;
}

TransitionCounts::TransitionCounts(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      counts_(static_cast<std::size_t>(num_states * num_actions * num_states), 0.0),
      row_totals_(static_cast<std::size_t>(num_states * num_actions), 0.0) {}

void TransitionCounts::add(const TransitionSample& t) {
  if (t.state < 0 || t.state >= num_states_ || t.next_state < 0 || t.next_state >= num_states_ || t.action < 0 ||
      t.action >= num_actions_) {
    throw IndexError("transition sample out of range");
  }
  counts_[index(t.state, t.action) + static_cast<std::size_t>(t.next_state)] += 1.0;
  row_totals_[static_cast<std::size_t>(t.state * num_actions_ + t.action)] += 1.0;
  ++total_;
}

std::vector<TransitionSample> collect_misfit_dataset(const TabularMDP& truth, const Policy& policy, int h,
                                                     std::size_t n, Rng& rng) {
  check_step(truth, h);
  std::vector<TransitionSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int s = sample_initial_state(truth, rng);
    for (int k = 1; k < h; ++k) s = step(truth, s, policy.action(k, s), rng).next_state;
    const int a = rng.uniform_index(static_cast<std::size_t>(truth.num_actions()));
    out.push_back(TransitionSample{s, a, step(truth, s, a, rng).next_state});
  }
  return out;
}

double misfit_empirical(const TransitionCounts& counts, const TabularMDP& model,
                        std::span<const TestFunction> test_functions) {
  if (counts.total() == 0) throw InsufficientDataError("empirical misfit needs at least one transition");
  if (counts.num_states() != model.num_states() || counts.num_actions() != model.num_actions()) {
    throw ConfigError("dataset and model shapes differ");
  }
  const int S = model.num_states();
  const int A = model.num_actions();
  const double n = static_cast<double>(counts.total());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& tf : test_functions) {
    const auto& f = tf.values;
    double value = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double c = counts.count(s, a);
        if (c == 0.0) continue;
        const auto base = static_cast<std::size_t>(s * A + a) * static_cast<std::size_t>(S);
        double model_side = 0.0;
        double data_side = 0.0;
        for (int x = 0; x < S; ++x) {
          model_side += model.p(s, a, x) * f[base + static_cast<std::size_t>(x)];
          data_side += counts.count(s, a, x) * f[base + static_cast<std::size_t>(x)];
        }
        value += c * model_side - data_side;
      }
    }
    best = std::max(best, value / n);
  }
  return test_functions.empty() ? 0.0 : best;
}

double misfit_empirical(std::span<const TransitionSample> dataset, const TabularMDP& model,
                        std::span<const TestFunction> test_functions) {
  TransitionCounts counts(model.num_states(), model.num_actions());
  for (const auto& t : dataset) counts.add(t);
  return misfit_empirical(counts, model, test_functions);
}

double misfit_deviation_bound(std::size_t n, std::size_t model_count, std::size_t policy_count, int horizon,
                              double delta) {
  if (n == 0) throw InsufficientDataError("deviation bound needs n >= 1");
  const double L = std::log(2.0 * static_cast<double>(model_count) * static_cast<double>(policy_count) * horizon / delta);
  const double nn = static_cast<double>(n);
  return 4.0 * L / (3.0 * nn) + 4.0 * std::sqrt(2.0 * L / nn);
}

double disagreement_from(const TabularMDP& a, std::span<const double> rollin_a, const TabularMDP& b,
                         std::span<const double> rollin_b) {
  const int S = a.num_states();
  const int A = a.num_actions();
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    const double wa = rollin_a[static_cast<std::size_t>(s)];
    const double wb = rollin_b[static_cast<std::size_t>(s)];
    if (wa == 0.0 && wb == 0.0) continue;
    for (int act = 0; act < A; ++act) {
      const auto ra = a.row(s, act);
      const auto rb = b.row(s, act);
      for (int n = 0; n < S; ++n) {
        total += std::abs(ra[static_cast<std::size_t>(n)] * wa - rb[static_cast<std::size_t>(n)] * wb);
      }
    }
  }
  return total / A;
}

double disagreement(const TabularMDP& a, const TabularMDP& b, const Policy& policy, int h) {
  check_shapes(a, b);
  check_step(a, h);
  const auto da = state_distribution(a, policy, h - 1);
  const auto db = state_distribution(b, policy, h - 1);
  return disagreement_from(a, da.probs, b, db.probs);
}

double v_explore(const Policy& policy, std::span<const TabularMDP* const> models) {
  return kernels::serial::v_explore_all(std::span<const Policy>(&policy, 1), models).front();
}

double v_explore(const Policy& policy, std::span<const TabularMDP> models) {
  std::vector<const TabularMDP*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  return v_explore(policy, std::span<const TabularMDP* const>(ptrs));
}

MisfitMatrix misfit_matrix(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth,
                           int h) {
  models.validate();
  check_shapes(truth, models.models.front());
  check_step(truth, h);
  std::vector<const TabularMDP*> ptrs;
  for (const auto& m : models.models) ptrs.push_back(&m);
  return MisfitMatrix{h, kernels::misfit_matrix(truth, policies, ptrs, h)};
}

}  // namespace ne3
