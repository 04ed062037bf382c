#include "attkit/matching.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "attkit/errors.hpp"

namespace attkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd fallback_scales(const Dataset& data) {
  Eigen::VectorXd scales(data.p());
  for (int j = 0; j < data.p(); ++j) {
    const double sd = data.pooled_sd(j);
    scales(j) = sd > 0.0 ? sd : 1.0;
  }
  return scales;
}

// Positions into `idx`, ordered by unit id. Keeps matching deterministic
// under permutations of the input rows.
std::vector<int> order_by_id(const Dataset& data, const std::vector<int>& idx) {
  std::vector<int> pos(idx.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::sort(pos.begin(), pos.end(), [&](int a, int b) {
    return data.unit(idx[static_cast<std::size_t>(a)]).id <
           data.unit(idx[static_cast<std::size_t>(b)]).id;
  });
  return pos;
}

// Exact cardinality-aware suffix bounds: for every suffix start `idx` and
// every count m, the smallest and largest achievable sum of m entries drawn
// from rows idx..end, per covariate. Shared across all cardinalities that
// search the same row ordering.
class SuffixBounds {
 public:
  explicit SuffixBounds(const Eigen::MatrixXd& values) {
    const int rows = static_cast<int>(values.rows());
    const int p = static_cast<int>(values.cols());
    min_sums_.assign(static_cast<std::size_t>(p),
                     Eigen::MatrixXd::Zero(rows + 1, rows + 1));
    max_sums_.assign(static_cast<std::size_t>(p),
                     Eigen::MatrixXd::Zero(rows + 1, rows + 1));
    std::vector<double> tail;           // sorted ascending
    std::vector<double> prefix(static_cast<std::size_t>(rows) + 1, 0.0);
    for (int j = 0; j < p; ++j) {
      tail.clear();
      Eigen::MatrixXd& lo = min_sums_[static_cast<std::size_t>(j)];
      Eigen::MatrixXd& hi = max_sums_[static_cast<std::size_t>(j)];
      for (int idx = rows - 1; idx >= 0; --idx) {
        const double v = values(idx, j);
        tail.insert(std::lower_bound(tail.begin(), tail.end(), v), v);
        const int have = static_cast<int>(tail.size());
        for (int m = 1; m <= have; ++m) {
          prefix[static_cast<std::size_t>(m)] =
              prefix[static_cast<std::size_t>(m - 1)] +
              tail[static_cast<std::size_t>(m - 1)];
        }
        for (int m = 0; m <= have; ++m) {
          lo(idx, m) = prefix[static_cast<std::size_t>(m)];
          hi(idx, m) = prefix[static_cast<std::size_t>(have)] -
                       prefix[static_cast<std::size_t>(have - m)];
        }
      }
    }
  }

  double min_sum(int j, int idx, int m) const {
    return min_sums_[static_cast<std::size_t>(j)](idx, m);
  }
  double max_sum(int j, int idx, int m) const {
    return max_sums_[static_cast<std::size_t>(j)](idx, m);
  }

 private:
  std::vector<Eigen::MatrixXd> min_sums_;
  std::vector<Eigen::MatrixXd> max_sums_;
};

// Exact subset-sum window search: find `want` rows of `values` whose column
// sums land inside [win_lo, win_hi]. Pruned by the exact per-cardinality
// suffix bounds above.
class SubsetSearch {
 public:
  SubsetSearch(const Eigen::MatrixXd& values, Eigen::VectorXd win_lo,
               Eigen::VectorXd win_hi,
               std::chrono::steady_clock::time_point deadline,
               const SuffixBounds& bounds)
      : values_(values),
        win_lo_(std::move(win_lo)),
        win_hi_(std::move(win_hi)),
        deadline_(deadline),
        bounds_(bounds) {}

  // Returns true and fills `chosen` (row indices) when a subset exists.
  bool run(int want, std::vector<int>* chosen) {
    chosen_.clear();
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(values_.cols());
    if (!dfs(0, want, sums)) return false;
    *chosen = chosen_;
    return true;
  }

 private:
  bool dfs(int idx, int remaining, Eigen::VectorXd& sums) {
    if ((++nodes_ & 4095) == 0 &&
        std::chrono::steady_clock::now() > deadline_) {
      throw ConvergenceError("profile match search exceeded its time budget");
    }
    if (remaining == 0) {
      for (int j = 0; j < sums.size(); ++j) {
        if (sums(j) < win_lo_(j) - 1e-9 || sums(j) > win_hi_(j) + 1e-9) {
          return false;
        }
      }
      return true;
    }
    const int rows = static_cast<int>(values_.rows());
    if (rows - idx < remaining) return false;
    for (int j = 0; j < sums.size(); ++j) {
      if (sums(j) + bounds_.min_sum(j, idx, remaining) > win_hi_(j) + 1e-9) {
        return false;
      }
      if (sums(j) + bounds_.max_sum(j, idx, remaining) < win_lo_(j) - 1e-9) {
        return false;
      }
    }
    // Take idx first: the pool is ordered so that promising rows come first.
    chosen_.push_back(idx);
    sums += values_.row(idx).transpose();
    if (dfs(idx + 1, remaining - 1, sums)) return true;
    sums -= values_.row(idx).transpose();
    chosen_.pop_back();
    return dfs(idx + 1, remaining, sums);
  }

  const Eigen::MatrixXd& values_;
  Eigen::VectorXd win_lo_;
  Eigen::VectorXd win_hi_;
  std::chrono::steady_clock::time_point deadline_;
  const SuffixBounds& bounds_;
  long long nodes_ = 0;
  std::vector<int> chosen_;
};

}  // namespace

const char* to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::kMahalanobis:
      return "mahalanobis";
    case DistanceMetric::kNormalizedEuclidean:
      return "normalized_euclidean";
  }
  return "?";
}

DistanceMetric distance_metric_from_string(const std::string& s) {
  if (s == "mahalanobis") return DistanceMetric::kMahalanobis;
  if (s == "normalized_euclidean") return DistanceMetric::kNormalizedEuclidean;
  throw ValidationError("unknown distance metric '" + s + "'");
}

DistanceMatrix distance_matrix(const Dataset& data, DistanceMetric metric,
                               bool allow_fallback) {
  const auto& treated = data.treated_indices();
  const auto& control = data.control_indices();
  DistanceMatrix out;
  out.metric = metric;
  out.entries.resize(static_cast<int>(treated.size()),
                     static_cast<int>(control.size()));

  Eigen::MatrixXd inverse;
  bool use_mahalanobis = metric == DistanceMetric::kMahalanobis;
  if (use_mahalanobis) {
    const Eigen::MatrixXd sigma = data.pooled_covariance();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
    if (lu.isInvertible()) {
      inverse = lu.inverse();
    } else if (allow_fallback) {
      use_mahalanobis = false;
      out.metric = DistanceMetric::kNormalizedEuclidean;
      out.fell_back = true;
    } else {
      throw ValidationError(
          "pooled covariate covariance is singular; mahalanobis distance is "
          "undefined (drop collinear covariates or allow the fallback)");
    }
  }
  const Eigen::VectorXd scales =
      use_mahalanobis ? Eigen::VectorXd() : fallback_scales(data);

  for (std::size_t r = 0; r < treated.size(); ++r) {
    for (std::size_t c = 0; c < control.size(); ++c) {
      const Eigen::VectorXd diff =
          (data.covariates().row(treated[r]) - data.covariates().row(control[c]))
              .transpose();
      double d2;
      if (use_mahalanobis) {
        d2 = diff.dot(inverse * diff);
      } else {
        d2 = (diff.array() / scales.array()).square().sum();
      }
      out.entries(static_cast<int>(r), static_cast<int>(c)) =
          std::sqrt(std::max(d2, 0.0));
    }
  }
  return out;
}

MatchResult optimal_pair_match(const Dataset& data, const DistanceMatrix& dist) {
  const int n_t = data.n_treated();
  const int n_c = data.n_control();
  if (n_t > n_c) {
    throw ValidationError("pair matching needs at least as many controls as treated units");
  }
  if (dist.entries.rows() != n_t || dist.entries.cols() != n_c) {
    throw ValidationError("distance matrix does not match the dataset's group sizes");
  }

  const std::vector<int> row_order = order_by_id(data, data.treated_indices());
  const std::vector<int> col_order = order_by_id(data, data.control_indices());
  const auto cost = [&](int i, int j) {  // 1-indexed
    return dist.entries(row_order[static_cast<std::size_t>(i - 1)],
                        col_order[static_cast<std::size_t>(j - 1)]);
  };

  // Successive shortest augmenting paths with node potentials.
  std::vector<double> u(static_cast<std::size_t>(n_t) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n_c) + 1, 0.0);
  std::vector<int> assigned(static_cast<std::size_t>(n_c) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n_c) + 1, 0);
  for (int i = 1; i <= n_t; ++i) {
    assigned[0] = i;
    int j0 = 0;
    std::vector<double> min_reduced(static_cast<std::size_t>(n_c) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n_c) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = assigned[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n_c; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double reduced = cost(i0, j) - u[static_cast<std::size_t>(i0)] -
                               v[static_cast<std::size_t>(j)];
        if (reduced < min_reduced[static_cast<std::size_t>(j)]) {
          min_reduced[static_cast<std::size_t>(j)] = reduced;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_reduced[static_cast<std::size_t>(j)] < delta) {
          delta = min_reduced[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n_c; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(assigned[static_cast<std::size_t>(j)])] +=
              delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          min_reduced[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (assigned[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      assigned[static_cast<std::size_t>(j0)] = assigned[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<MatchedPair> pairs;
  std::vector<int> selected;
  double total = 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.n());
  for (int i : data.treated_indices()) w(i) = 1.0;
  const double matched_weight = static_cast<double>(n_c) / n_t;
  for (int j = 1; j <= n_c; ++j) {
    const int i = assigned[static_cast<std::size_t>(j)];
    if (i == 0) continue;
    const int treated_pos = row_order[static_cast<std::size_t>(i - 1)];
    const int control_pos = col_order[static_cast<std::size_t>(j - 1)];
    const int ti = data.treated_indices()[static_cast<std::size_t>(treated_pos)];
    const int ci = data.control_indices()[static_cast<std::size_t>(control_pos)];
    const double d = dist.entries(treated_pos, control_pos);
    pairs.push_back({ti, ci, d});
    selected.push_back(ci);
    total += d;
    w(ci) = matched_weight;
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return a.treated < b.treated;
            });
  std::sort(selected.begin(), selected.end());
  return MatchResult{std::move(pairs), std::move(selected), total,
                     WeightVector::create(data, w, WeightMethod::kPairMatch)};
}

MatchResult optimal_pair_match(const Dataset& data, DistanceMetric metric) {
  return optimal_pair_match(data, distance_matrix(data, metric));
}

MatchResult profile_match(const Dataset& data,
                          const Eigen::VectorXd& target_profile,
                          const Eigen::VectorXd& tolerance,
                          const ProfileMatchConfig& config) {
  const int p = data.p();
  if (static_cast<int>(target_profile.size()) != p) {
    throw ValidationError(
        "profile match target must have one entry per covariate");
  }
  Eigen::VectorXd tol_units(p);
  if (tolerance.size() == 1) {
    tol_units = Eigen::VectorXd::Constant(p, tolerance(0));
  } else if (static_cast<int>(tolerance.size()) == p) {
    tol_units = tolerance;
  } else {
    throw ValidationError(
        "profile match tolerance must have one entry per covariate");
  }
  for (int j = 0; j < p; ++j) {
    if (std::isnan(tol_units(j)) || tol_units(j) < 0.0) {
      throw ValidationError("profile match tolerance must be nonnegative");
    }
  }
  const int n_c = data.n_control();
  if (n_c > config.max_controls) {
    throw ValidationError(
        "profile match solves exactly for at most " +
        std::to_string(config.max_controls) +
        " controls; subsample the controls or use a coarser method");
  }
  const Eigen::VectorXd& target = target_profile;
  Eigen::VectorXd tol(p);
  for (int j = 0; j < p; ++j) {
    tol(j) = config.absolute ? tol_units(j) : tol_units(j) * data.pooled_sd(j);
  }

  const auto& ctrl = data.control_indices();
  Eigen::MatrixXd values(n_c, p);
  for (int i = 0; i < n_c; ++i) {
    values.row(i) = data.covariates().row(ctrl[static_cast<std::size_t>(i)]);
  }
  Eigen::VectorXd totals = values.colwise().sum().transpose();

  // Sorted-greedy cardinality screen: keeping c controls, the per-covariate
  // sum ranges over [c smallest, c largest]; a cardinality whose window
  // misses that range entirely cannot host a solution.
  Eigen::MatrixXd prefix_sorted(n_c + 1, p);
  prefix_sorted.row(0).setZero();
  for (int j = 0; j < p; ++j) {
    std::vector<double> col(static_cast<std::size_t>(n_c));
    for (int i = 0; i < n_c; ++i) col[static_cast<std::size_t>(i)] = values(i, j);
    std::sort(col.begin(), col.end());
    for (int i = 0; i < n_c; ++i) {
      prefix_sorted(i + 1, j) = prefix_sorted(i, j) + col[static_cast<std::size_t>(i)];
    }
  }
  const auto cardinality_feasible = [&](int c) {
    for (int j = 0; j < p; ++j) {
      const double min_sum = prefix_sorted(c, j);
      const double max_sum = prefix_sorted(n_c, j) - prefix_sorted(n_c - c, j);
      if (min_sum > c * (target(j) + tol(j)) + 1e-9) return false;
      if (max_sum < c * (target(j) - tol(j)) - 1e-9) return false;
    }
    return true;
  };

  // Standardized distance to the target orders the pool: closest rows first
  // for keep-searches, most extreme first for drop-searches.
  const Eigen::VectorXd scales = fallback_scales(data);
  std::vector<double> extremity(static_cast<std::size_t>(n_c), 0.0);
  for (int i = 0; i < n_c; ++i) {
    extremity[static_cast<std::size_t>(i)] =
        ((values.row(i).transpose() - target).array() / scales.array())
            .abs()
            .maxCoeff();
  }

  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(config.time_budget_seconds));

  // One pool ordering (and bounds table) per search mode, built on first use:
  // most extreme rows first when dropping, closest first when keeping.
  std::array<std::vector<int>, 2> pools;
  std::array<Eigen::MatrixXd, 2> pool_values;
  std::array<std::optional<SuffixBounds>, 2> bounds;
  const auto ensure_mode = [&](bool drop_mode) {
    const std::size_t mode = drop_mode ? 1 : 0;
    if (bounds[mode]) return mode;
    std::vector<int>& pool = pools[mode];
    pool.resize(static_cast<std::size_t>(n_c));
    std::iota(pool.begin(), pool.end(), 0);
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
      const double ea = extremity[static_cast<std::size_t>(a)];
      const double eb = extremity[static_cast<std::size_t>(b)];
      if (ea != eb) return drop_mode ? ea > eb : ea < eb;
      return a < b;
    });
    pool_values[mode].resize(n_c, p);
    for (int i = 0; i < n_c; ++i) {
      pool_values[mode].row(i) = values.row(pool[static_cast<std::size_t>(i)]);
    }
    bounds[mode].emplace(pool_values[mode]);
    return mode;
  };

  for (int k = n_c; k >= 1; --k) {
    if (!cardinality_feasible(k)) continue;
    const int d = n_c - k;
    const bool drop_mode = d <= k;
    const std::size_t mode = ensure_mode(drop_mode);
    Eigen::VectorXd win_lo(p);
    Eigen::VectorXd win_hi(p);
    for (int j = 0; j < p; ++j) {
      const double keep_lo = k * (target(j) - tol(j));
      const double keep_hi = k * (target(j) + tol(j));
      if (drop_mode) {
        win_lo(j) = totals(j) - keep_hi;
        win_hi(j) = totals(j) - keep_lo;
      } else {
        win_lo(j) = keep_lo;
        win_hi(j) = keep_hi;
      }
    }
    SubsetSearch search(pool_values[mode], win_lo, win_hi, deadline,
                        *bounds[mode]);
    std::vector<int> chosen;
    if (!search.run(drop_mode ? d : k, &chosen)) continue;

    std::vector<char> keep(static_cast<std::size_t>(n_c),
                           drop_mode ? 1 : 0);
    for (int row : chosen) {
      keep[static_cast<std::size_t>(
          pools[mode][static_cast<std::size_t>(row)])] = drop_mode ? 0 : 1;
    }
    std::vector<int> selected;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(data.n());
    for (int i : data.treated_indices()) w(i) = 1.0;
    const double kept_weight = static_cast<double>(n_c) / k;
    for (int i = 0; i < n_c; ++i) {
      if (keep[static_cast<std::size_t>(i)]) {
        const int ci = ctrl[static_cast<std::size_t>(i)];
        selected.push_back(ci);
        w(ci) = kept_weight;
      }
    }
    std::sort(selected.begin(), selected.end());
    return MatchResult{
        {}, std::move(selected), 0.0,
        WeightVector::create(data, w, WeightMethod::kProfileMatch)};
  }

  throw InfeasibleError(
      "no control subset matches the target profile within the tolerance; "
      "widen the window or add controls");
}

}  // namespace attkit
