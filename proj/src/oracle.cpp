#include "seqtest/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "seqtest/numerics.hpp"

namespace seqtest {

namespace {

constexpr int kMaxHorizon = 20;
constexpr double kMaxPaths = 1e8;
constexpr double kRowSumTolerance = 1e-12;

double checked_path_count(int alphabet, int horizon) {
  double paths = 1.0;
  for (int t = 0; t < horizon; ++t) {
    paths *= alphabet;
    if (paths > kMaxPaths) return paths;
  }
  return paths;
}

}  // namespace

void FiniteAlphabetSpec::validate() const {
  const int n = hypotheses();
  const int k = alphabet();
  if (n < 2) throw std::invalid_argument("finite alphabet: need >= 2 hypotheses");
  if (k < 2) throw std::invalid_argument("finite alphabet: need >= 2 symbols");
  if (horizon < 1 || horizon > kMaxHorizon) {
    throw std::invalid_argument("finite alphabet: horizon must be in [1, " +
                                std::to_string(kMaxHorizon) + "]");
  }
  if (checked_path_count(k, horizon) > kMaxPaths) {
    throw std::invalid_argument("finite alphabet: K^H exceeds 1e8 paths");
  }
  for (const auto& row : probs) {
    if (static_cast<int>(row.size()) != k) {
      throw std::invalid_argument("finite alphabet: ragged probability rows");
    }
    double sum = 0.0;
    for (double p : row) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument(
            "finite alphabet: probabilities must be positive and finite");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("finite alphabet: row does not sum to 1");
    }
  }
  thresholds.validate();
  if (thresholds.a.rows() != n) {
    throw std::invalid_argument("finite alphabet: threshold size mismatch");
  }
  if (moment_orders.empty()) {
    throw std::invalid_argument("finite alphabet: need at least one moment order");
  }
  for (int r : moment_orders) {
    if (r < 1) throw std::invalid_argument("finite alphabet: moment order must be >= 1");
  }
}

namespace {

struct Walker {
  const FiniteAlphabetSpec& spec;
  int n_hyp;
  int n_sym;
  std::vector<std::vector<double>> logp;     // [i][k]
  std::vector<std::vector<double>> scores;   // [depth][i]
  std::vector<std::vector<double>> pathp;    // [depth][i]
  std::vector<std::vector<KahanSum>> alpha_acc;   // [i][d]
  std::vector<std::vector<KahanSum>> moment_acc;  // [i][ridx]
  std::vector<KahanSum> survive_acc;              // [i]
  std::vector<KahanSum> total_acc;                // [i]

  explicit Walker(const FiniteAlphabetSpec& s)
      : spec(s), n_hyp(s.hypotheses()), n_sym(s.alphabet()) {
    logp.assign(n_hyp, std::vector<double>(n_sym));
    for (int i = 0; i < n_hyp; ++i) {
      for (int k = 0; k < n_sym; ++k) logp[i][k] = std::log(spec.probs[i][k]);
    }
    scores.assign(spec.horizon + 1, std::vector<double>(n_hyp, 0.0));
    pathp.assign(spec.horizon + 1, std::vector<double>(n_hyp, 1.0));
    alpha_acc.assign(n_hyp, std::vector<KahanSum>(n_hyp));
    moment_acc.assign(n_hyp, std::vector<KahanSum>(spec.moment_orders.size()));
    survive_acc.assign(n_hyp, KahanSum{});
    total_acc.assign(n_hyp, KahanSum{});
  }

  // Accepts the smallest index whose worst pairwise margin clears its
  // threshold, mirroring the online engine's rule.
  int decide(const std::vector<double>& s) const {
    const auto& a = spec.thresholds.a;
    for (int i = 0; i < n_hyp; ++i) {
      bool ok = true;
      for (int j = 0; j < n_hyp && ok; ++j) {
        if (j == i) continue;
        if (s[i] - s[j] - a(j, i) < 0.0) ok = false;
      }
      if (ok) return i;
    }
    return -1;
  }

  void settle(int depth, int decision) {
    const auto& pp = pathp[depth];
    const double t = static_cast<double>(depth);
    for (int i = 0; i < n_hyp; ++i) {
      total_acc[i].add(pp[i]);
      if (decision >= 0) {
        alpha_acc[i][decision].add(pp[i]);
      } else {
        survive_acc[i].add(pp[i]);
      }
      for (std::size_t ridx = 0; ridx < spec.moment_orders.size(); ++ridx) {
        moment_acc[i][ridx].add(pp[i] *
                                std::pow(t, spec.moment_orders[ridx]));
      }
    }
  }

  void walk(int depth) {
    for (int k = 0; k < n_sym; ++k) {
      auto& s = scores[depth + 1];
      auto& pp = pathp[depth + 1];
      for (int i = 0; i < n_hyp; ++i) {
        s[i] = scores[depth][i] + logp[i][k];
        pp[i] = pathp[depth][i] * spec.probs[i][k];
      }
      const int d = decide(s);
      if (d >= 0 || depth + 1 == spec.horizon) {
        settle(depth + 1, d);
      } else {
        walk(depth + 1);
      }
    }
  }
};

}  // namespace

ExactEnumeration enumerate_exact(const FiniteAlphabetSpec& spec) {
  spec.validate();
  Walker w(spec);
  w.walk(0);

  const int n = spec.hypotheses();
  ExactEnumeration out;
  out.alpha = Eigen::MatrixXd::Zero(n, n);
  out.truncated_moments =
      Eigen::MatrixXd::Zero(n, static_cast<int>(spec.moment_orders.size()));
  out.p_past_horizon.resize(n);
  out.total_probability.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.alpha(i, j) = w.alpha_acc[i][j].value();
    for (std::size_t ridx = 0; ridx < spec.moment_orders.size(); ++ridx) {
      out.truncated_moments(i, static_cast<int>(ridx)) =
          w.moment_acc[i][ridx].value();
    }
    out.p_past_horizon[i] = w.survive_acc[i].value();
    out.total_probability[i] = w.total_acc[i].value();
  }
  return out;
}

}  // namespace seqtest
