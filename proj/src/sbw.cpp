#include "attkit/sbw.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "attkit/errors.hpp"

namespace attkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact root of sum_i max(0, alpha_i + nu) = target in nu (waterfilling).
double solve_level(const Eigen::VectorXd& alpha, double target) {
  const int m = static_cast<int>(alpha.size());
  std::vector<double> sorted(alpha.data(), alpha.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double prefix = 0.0;
  for (int k = 1; k <= m; ++k) {
    prefix += sorted[static_cast<std::size_t>(k - 1)];
    const double nu = (target - prefix) / k;
    const bool top_active = sorted[static_cast<std::size_t>(k - 1)] + nu > 0.0;
    const bool rest_inactive =
        k == m || sorted[static_cast<std::size_t>(k)] + nu <= 0.0;
    if (top_active && rest_inactive) return nu;
  }
  return (target - prefix) / m;
}

struct PwlItem {
  double c;  // coefficient
  double a;  // offset: the unit's weight is max(0, a + phi * c)
  double t;  // breakpoint -a / c
};

// Smallest phi with h(phi) >= target for the nondecreasing piecewise-linear
// h(phi) = sum_i c_i * max(0, a_i + phi c_i). Returns -inf when h clears the
// target everywhere and +inf when it never does.
double pwl_root(std::vector<PwlItem>& items, double target) {
  if (items.empty()) return 0.0 >= target ? -kInf : kInf;
  std::sort(items.begin(), items.end(),
            [](const PwlItem& x, const PwlItem& y) { return x.t < y.t; });
  double a_sum = 0.0;  // h(phi) = a_sum + b_sum * phi on the current segment
  double b_sum = 0.0;
  for (const auto& it : items) {
    if (it.c < 0.0) {  // negative-coefficient units are active at phi = -inf
      a_sum += it.c * it.a;
      b_sum += it.c * it.c;
    }
  }
  const double first = items.front().t;
  if (a_sum + b_sum * first >= target) {
    if (b_sum > 0.0) return (target - a_sum) / b_sum;
    return -kInf;
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& it = items[k];
    if (it.c > 0.0) {
      a_sum += it.c * it.a;
      b_sum += it.c * it.c;
    } else {
      a_sum -= it.c * it.a;
      b_sum -= it.c * it.c;
    }
    b_sum = std::max(b_sum, 0.0);  // guard accumulated cancellation
    const bool last = k + 1 == items.size();
    const double h_right =
        last ? (b_sum > 0.0 ? kInf : a_sum) : a_sum + b_sum * items[k + 1].t;
    if (h_right >= target) {
      if (b_sum > 0.0) return std::max(it.t, (target - a_sum) / b_sum);
      return it.t;
    }
  }
  return kInf;
}

Eigen::VectorXd primal_weights(const Eigen::VectorXd& s, double nu) {
  return (1.0 + nu + s.array()).max(0.0).matrix();
}

// Projection onto {v >= 0, sum v = total}.
Eigen::VectorXd project_scaled_simplex(const Eigen::VectorXd& v,
                                       double total) {
  const int m = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double prefix = 0.0;
  double theta = 0.0;
  for (int k = 1; k <= m; ++k) {
    prefix += u[static_cast<std::size_t>(k - 1)];
    const double candidate = (prefix - total) / k;
    if (u[static_cast<std::size_t>(k - 1)] - candidate > 0.0) {
      theta = candidate;
    }
  }
  return (v.array() - theta).max(0.0).matrix();
}

// Minimum of the squared standardized window violation over nonnegative
// weights with the fixed sum, by FISTA with simplex projections. Returns the
// minimum and leaves the per-covariate standardized violations in viol_out.
double min_violation_gap(const Eigen::MatrixXd& means_op,
                         const Eigen::VectorXd& target,
                         const Eigen::VectorXd& scale,
                         const Eigen::VectorXd& halfwidth, double total,
                         Eigen::VectorXd* viol_out) {
  const int p = static_cast<int>(means_op.rows());
  const int m = static_cast<int>(means_op.cols());
  Eigen::MatrixXd scaled = means_op;
  for (int j = 0; j < p; ++j) scaled.row(j) /= scale(j);
  // Lipschitz constant of the gradient via power iteration.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
  double lambda = 1.0;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd next = scaled.transpose() * (scaled * v);
    lambda = next.norm();
    if (lambda <= 0.0) break;
    v = next / lambda;
  }
  const double step = 1.0 / std::max(2.0 * lambda, 1e-12);

  const auto violations = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd out(p);
    const Eigen::VectorXd means = means_op * w;
    for (int j = 0; j < p; ++j) {
      out(j) = std::max(0.0, std::abs(means(j) - target(j)) - halfwidth(j)) /
               scale(j);
    }
    return out;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Constant(m, total / m);
  Eigen::VectorXd y = x;
  double t = 1.0;
  double best = violations(x).squaredNorm();
  Eigen::VectorXd best_viol = violations(x);
  for (int it = 0; it < 800 && best > 1e-18; ++it) {
    const Eigen::VectorXd means = means_op * y;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < p; ++j) {
      const double resid = means(j) - target(j);
      const double over = std::abs(resid) - halfwidth(j);
      if (over > 0.0) {
        const double sign = resid > 0.0 ? 1.0 : -1.0;
        grad += (2.0 * over * sign / (scale(j) * scale(j))) *
                means_op.row(j).transpose();
      }
    }
    const Eigen::VectorXd x_next = project_scaled_simplex(y - step * grad, total);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = x_next;
    t = t_next;
    const Eigen::VectorXd viol = violations(x);
    const double value = viol.squaredNorm();
    if (value < best) {
      best = value;
      best_viol = viol;
    }
  }
  if (viol_out != nullptr) *viol_out = best_viol;
  return best;
}

}  // namespace

SbwResult sbw_solve(const Dataset& data, const Eigen::VectorXd& target_profile,
                    const SbwConfig& config) {
  if (config.max_iterations < 1) {
    throw ValidationError("sbw max_iterations must be positive");
  }
  const int p = data.p();
  const int m = data.n_control();
  const double n_c = static_cast<double>(m);
  const auto& ctrl = data.control_indices();

  if (static_cast<int>(target_profile.size()) != p) {
    throw ValidationError("sbw target profile must have one entry per covariate");
  }
  Eigen::VectorXd delta;
  if (config.delta.size() == 0) {
    delta = Eigen::VectorXd::Constant(p, 0.02);
  } else if (config.delta.size() == 1) {
    delta = Eigen::VectorXd::Constant(p, config.delta(0));
  } else if (static_cast<int>(config.delta.size()) == p) {
    delta = config.delta;
  } else {
    throw ValidationError("sbw delta must have one entry per covariate");
  }
  for (int j = 0; j < p; ++j) {
    if (std::isnan(delta(j)) || delta(j) < 0.0) {
      throw ValidationError("sbw delta must be nonnegative");
    }
  }

  const Eigen::VectorXd& target = target_profile;
  Eigen::VectorXd sd(p);
  Eigen::VectorXd scale(p);
  for (int j = 0; j < p; ++j) {
    sd(j) = data.pooled_sd(j);
    scale(j) = sd(j) > 0.0 ? sd(j) : std::max(1.0, std::abs(target(j)));
  }

  // means_op * w = weighted control means under the mean-one convention.
  Eigen::MatrixXd means_op(p, m);
  for (int i = 0; i < m; ++i) {
    means_op.col(i) = data.covariates().row(ctrl[static_cast<std::size_t>(i)])
                          .transpose() /
                      n_c;
  }

  const auto finish = [&](const Eigen::VectorXd& w_control, double objective,
                          double kkt, int iterations) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(data.n());
    for (int i : data.treated_indices()) w(i) = 1.0;
    for (int i = 0; i < m; ++i) w(ctrl[static_cast<std::size_t>(i)]) = w_control(i);
    SbwResult result{WeightVector::create(data, w, WeightMethod::kSbw),
                     objective, kkt, iterations, Eigen::VectorXd(p)};
    const Eigen::VectorXd means = means_op * w_control;
    for (int j = 0; j < p; ++j) {
      const double gap = means(j) - target(j);
      result.standardized_imbalance(j) =
          sd(j) > 0.0 ? gap / sd(j)
                      : (gap == 0.0 ? 0.0 : std::copysign(kInf, gap));
    }
    return result;
  };

  if ((delta.array() == kInf).all()) {
    // No balance window at all: the variance minimizer is uniform.
    return finish(Eigen::VectorXd::Ones(m), 0.0, 0.0, 0);
  }

  Eigen::VectorXd halfwidth(p);
  Eigen::VectorXd lower(p);
  Eigen::VectorXd upper(p);
  for (int j = 0; j < p; ++j) {
    halfwidth(j) = std::isinf(delta(j)) ? kInf : delta(j) * sd(j);
    lower(j) = target(j) - halfwidth(j);
    upper(j) = target(j) + halfwidth(j);
  }

  const auto standardized_violation = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd means = means_op * w;
    double worst = 0.0;
    for (int j = 0; j < p; ++j) {
      const double over =
          std::max({0.0, lower(j) - means(j), means(j) - upper(j)});
      worst = std::max(worst, over / scale(j));
    }
    return worst;
  };

  // Feasibility post-mortem: bisected per-covariate minimal deltas plus a
  // bisected minimal uniform delta.
  const auto diagnose_and_throw = [&]() -> void {
    Eigen::VectorXd floors(p);
    for (int j = 0; j < p; ++j) {
      double lo = kInf;
      double hi = -kInf;
      for (int i : ctrl) {
        lo = std::min(lo, data.covariates()(i, j));
        hi = std::max(hi, data.covariates()(i, j));
      }
      // Achievable weighted means sweep [lo, hi], so covariate j alone is
      // satisfiable at delta iff dist(target, [lo, hi]) <= delta * sd.
      const double dist = std::max({0.0, lo - target(j), target(j) - hi});
      if (dist == 0.0) {
        floors(j) = 0.0;
      } else if (sd(j) <= 0.0) {
        floors(j) = kInf;
      } else {
        const auto covers = [&](double d) { return d * sd(j) >= dist; };
        double d_lo = 0.0;
        double d_hi = 1.0;
        while (!covers(d_hi) && d_hi < 1e12) d_hi *= 2.0;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (d_lo + d_hi);
          (covers(mid) ? d_hi : d_lo) = mid;
        }
        floors(j) = d_hi;
      }
    }
    const auto feasible_at = [&](double d) {
      const Eigen::VectorXd hw = d * sd;
      return min_violation_gap(means_op, target, scale, hw, n_c, nullptr) <=
             1e-12;
    };
    double uniform_delta = kInf;
    if (floors.maxCoeff() < kInf) {
      double lo = floors.maxCoeff();
      if (feasible_at(lo)) {
        uniform_delta = lo;
      } else {
        double hi = std::max(2.0 * lo, lo + 1.0);
        while (!feasible_at(hi) && hi < 1e6) {
          lo = hi;
          hi *= 4.0;
        }
        if (feasible_at(hi)) {
          for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible_at(mid) ? hi : lo) = mid;
          }
          uniform_delta = hi;
        }
      }
    }
    Eigen::VectorXd viol(p);
    min_violation_gap(means_op, target, scale, halfwidth, n_c, &viol);
    int worst = 0;
    double worst_value = -1.0;
    for (int j = 0; j < p; ++j) {
      const double score = std::isinf(floors(j)) ? kInf : viol(j);
      if (score > worst_value) {
        worst_value = score;
        worst = j;
      }
    }
    std::vector<double> min_delta(floors.data(), floors.data() + p);
    std::string message =
        "sbw balance window is infeasible at delta=" +
        std::to_string(delta(worst)) + " for covariate '" +
        data.covariate_names()[static_cast<std::size_t>(worst)] +
        "' (minimum feasible delta per covariate attached); ";
    if (std::isinf(uniform_delta)) {
      message += "no finite uniform delta is feasible";
    } else {
      message +=
          "smallest feasible uniform delta is about " +
          std::to_string(uniform_delta);
    }
    throw InfeasibleError(message, worst, std::move(min_delta));
  };

  // Dual cyclic coordinate ascent.
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
  double nu = solve_level(Eigen::VectorXd::Ones(m), n_c);  // = 0
  Eigen::VectorXd w_prev = primal_weights(s, nu);
  std::vector<double> trace;
  int sweeps = 0;
  bool converged = false;
  std::vector<PwlItem> items;
  items.reserve(static_cast<std::size_t>(m));
  for (; sweeps < config.max_iterations; ++sweeps) {
    for (int j = 0; j < p; ++j) {
      items.clear();
      for (int i = 0; i < m; ++i) {
        const double c = means_op(j, i);
        if (c == 0.0) continue;
        const double a = 1.0 + nu + s(i) - phi(j) * c;
        items.push_back({c, a, -a / c});
      }
      const double phi_lower = pwl_root(items, lower(j));
      const double phi_upper = pwl_root(items, upper(j));
      double next = 0.0;
      if (phi_lower > 0.0) {
        next = phi_lower;
      } else if (phi_upper < 0.0) {
        next = phi_upper;
      }
      next = std::clamp(next, -1e8, 1e8);
      if (next != phi(j)) {
        s += (next - phi(j)) * means_op.row(j).transpose();
        phi(j) = next;
      }
      nu = solve_level((1.0 + s.array()).matrix(), n_c);
    }
    const Eigen::VectorXd w = primal_weights(s, nu);
    const double delta_w = (w - w_prev).lpNorm<Eigen::Infinity>();
    trace.push_back(standardized_violation(w));
    w_prev = w;
    if (delta_w <= 1e-13) {
      converged = true;
      ++sweeps;
      break;
    }
  }

  Eigen::VectorXd w = w_prev;
  if (!converged || standardized_violation(w) > 1e-7) {
    // Distinguish a genuinely empty feasible set from a solver stall.
    Eigen::VectorXd viol(p);
    const double gap =
        min_violation_gap(means_op, target, scale, halfwidth, n_c, &viol);
    if (gap > 1e-12) diagnose_and_throw();
    if (trace.size() > 50) {
      trace.erase(trace.begin(),
                  trace.end() - static_cast<std::ptrdiff_t>(50));
    }
    throw ConvergenceError("sbw dual ascent did not converge", trace);
  }

  // Active-set polish: pin the active rows exactly and re-solve the reduced
  // equality-constrained problem in closed form.
  {
    std::vector<int> free_units;
    for (int i = 0; i < m; ++i) {
      if (w(i) > 1e-9) free_units.push_back(i);
    }
    std::vector<int> active;  // +j: lower bound, encoded below
    std::vector<double> bounds;
    for (int j = 0; j < p; ++j) {
      if (phi(j) > 1e-12) {
        active.push_back(j);
        bounds.push_back(lower(j));
      } else if (phi(j) < -1e-12) {
        active.push_back(j);
        bounds.push_back(upper(j));
      }
    }
    const int f = static_cast<int>(free_units.size());
    const int rows = 1 + static_cast<int>(active.size());
    if (f > 0) {
      Eigen::MatrixXd constraints(rows, f);
      Eigen::VectorXd rhs(rows);
      constraints.row(0).setOnes();
      rhs(0) = n_c;
      for (std::size_t r = 0; r < active.size(); ++r) {
        for (int q = 0; q < f; ++q) {
          constraints(static_cast<int>(r) + 1, q) =
              means_op(active[r], free_units[static_cast<std::size_t>(q)]);
        }
        rhs(static_cast<int>(r) + 1) = bounds[r];
      }
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(f);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
          constraints * constraints.transpose());
      const Eigen::VectorXd mu = cod.solve(rhs - constraints * ones);
      Eigen::VectorXd w_free = ones + constraints.transpose() * mu;

      bool acceptable = w_free.minCoeff() > -1e-9;
      if (acceptable) {
        Eigen::VectorXd w_polished = Eigen::VectorXd::Zero(m);
        for (int q = 0; q < f; ++q) {
          w_polished(free_units[static_cast<std::size_t>(q)]) =
              std::max(w_free(q), 0.0);
        }
        // Polished duals: mu(0) plays nu, the rest the active phis.
        Eigen::VectorXd phi_polished = Eigen::VectorXd::Zero(p);
        for (std::size_t r = 0; r < active.size(); ++r) {
          phi_polished(active[r]) = mu(static_cast<int>(r) + 1);
        }
        const Eigen::VectorXd s_polished =
            means_op.transpose() * phi_polished;
        for (int i = 0; i < m && acceptable; ++i) {
          if (w_polished(i) <= 0.0 &&
              1.0 + mu(0) + s_polished(i) > 1e-9) {
            acceptable = false;  // a clamped unit wants back in
          }
        }
        if (acceptable && standardized_violation(w_polished) <= 1e-9) {
          w = w_polished;
          nu = mu(0);
          phi = phi_polished;
          s = s_polished;
        }
      }
    }
  }

  // KKT residual over the final primal-dual pair.
  double kkt = std::abs(w.sum() - n_c) / n_c;
  kkt = std::max(kkt, standardized_violation(w));
  for (int i = 0; i < m; ++i) {
    const double stationarity = w(i) - 1.0 - nu - s(i);
    if (w(i) > 0.0) {
      kkt = std::max(kkt, std::abs(stationarity));
    } else {
      kkt = std::max(kkt, std::max(0.0, 1.0 + nu + s(i)));
    }
  }
  const Eigen::VectorXd means = means_op * w;
  for (int j = 0; j < p; ++j) {
    if (phi(j) > 0.0) {
      kkt = std::max(kkt, std::min(std::abs(phi(j)), 1.0) *
                              std::abs(means(j) - lower(j)) / scale(j));
    } else if (phi(j) < 0.0) {
      kkt = std::max(kkt, std::min(std::abs(phi(j)), 1.0) *
                              std::abs(means(j) - upper(j)) / scale(j));
    }
  }
  if (kkt > config.tolerance) {
    throw ConvergenceError(
        "sbw polish left a KKT residual of " + std::to_string(kkt), trace);
  }

  const double objective = (w.array() - 1.0).square().sum() / n_c;
  return finish(w, objective, kkt, sweeps);
}

}  // namespace attkit
