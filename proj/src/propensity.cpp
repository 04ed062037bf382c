#include "attkit/propensity.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "attkit/design.hpp"
#include "attkit/errors.hpp"

namespace attkit {

namespace {

// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) {
  if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
  return std::log1p(std::exp(eta));
}

double bernoulli_log_likelihood(const Eigen::VectorXd& eta,
                                const Eigen::VectorXd& z) {
  double ll = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    ll += z(i) * eta(i) - log1p_exp(eta(i));
  }
  return ll;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PropensityFit fit_propensity_logistic(const Dataset& data, int max_iterations,
                                      double tolerance) {
  const int n = data.n();
  const int k = data.p() + 1;
  if (n <= k) {
    throw ValidationError("logistic fit needs more units than coefficients");
  }
  // build_design_matrix rejects a rank-deficient [1, X] for us.
  const Eigen::MatrixXd design =
      build_design_matrix(data, DesignSpec::covariates_only(data.p()));
  const Eigen::VectorXd z = data.treatment();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = bernoulli_log_likelihood(eta, z);

  PropensityFit fit;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const Eigen::VectorXd scores =
        (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd gradient = design.transpose() * (z - scores);
    fit.iterations = iter - 1;
    if (gradient.lpNorm<Eigen::Infinity>() <= tolerance) {
      fit.converged = true;
      break;
    }

    // Separation shows up as a coefficient vector marching off to infinity
    // while every unit lands strictly on its own side.
    const Eigen::ArrayXd margins =
        (2.0 * z.array() - 1.0) * eta.array();
    if (beta.norm() > 10.0 && margins.minCoeff() >= -1e-8) {
      Eigen::VectorXd direction = beta / beta.norm();
      throw SeparationError(
          "treatment groups are linearly separable; propensity scores are degenerate",
          to_std(direction));
    }

    const Eigen::ArrayXd variance =
        (scores.array() * (1.0 - scores.array())).max(1e-12);
    Eigen::MatrixXd hessian =
        design.transpose() * variance.matrix().asDiagonal() * design;
    hessian.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);

    // Damp by halving until the log-likelihood actually improves.
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd candidate = beta + scale * step;
      const Eigen::VectorXd candidate_eta = design * candidate;
      const double candidate_ll = bernoulli_log_likelihood(candidate_eta, z);
      if (candidate_ll > ll) {
        beta = candidate;
        eta = candidate_eta;
        ll = candidate_ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      // The line search failed, so the likelihood is flat to machine
      // precision along the Newton direction. That is stationarity whenever
      // the quadratic model's best possible gain is below the floating
      // resolution of the log-likelihood itself; otherwise it is a genuine
      // stall worth reporting.
      const double predicted_gain = 0.5 * gradient.dot(step);
      const double resolution = 64.0 * std::numeric_limits<double>::epsilon() *
                                (1.0 + std::abs(ll));
      if (gradient.lpNorm<Eigen::Infinity>() <= 1e-6 ||
          predicted_gain <= resolution) {
        fit.converged = true;
        break;
      }
      throw ConvergenceError("logistic fit stalled before reaching tolerance",
                             to_std(gradient));
    }
  }

  if (!fit.converged) {
    const Eigen::VectorXd scores =
        (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd gradient = design.transpose() * (z - scores);
    if (gradient.lpNorm<Eigen::Infinity>() <= tolerance) {
      fit.converged = true;
    } else {
      const Eigen::ArrayXd margins = (2.0 * z.array() - 1.0) * eta.array();
      if (beta.norm() > 10.0 && margins.minCoeff() >= -1e-8) {
        Eigen::VectorXd direction = beta / beta.norm();
        throw SeparationError(
            "treatment groups are linearly separable; propensity scores are degenerate",
            to_std(direction));
      }
      throw ConvergenceError("logistic fit did not converge",
                             to_std(gradient));
    }
  }

  fit.coefficients = beta;
  fit.scores = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
  fit.log_likelihood = ll;
  return fit;
}

WeightVector ipw_att_weights(const PropensityFit& fit, const Dataset& data) {
  if (fit.scores.size() != data.n()) {
    throw ValidationError("propensity fit does not match dataset size");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.n());
  for (int i : data.treated_indices()) w(i) = 1.0;
  double odds_sum = 0.0;
  for (int i : data.control_indices()) {
    const double e = fit.scores(i);
    if (e >= 1.0 - 1e-12) {
      throw ValidationError("control unit '" + data.unit(i).id +
                            "' has propensity score at one; odds are unbounded");
    }
    const double odds = e / (1.0 - e);
    w(i) = odds;
    odds_sum += odds;
  }
  if (odds_sum <= 0.0) {
    throw ValidationError("all control propensity odds are zero");
  }
  const double scale = static_cast<double>(data.n_control()) / odds_sum;
  for (int i : data.control_indices()) w(i) *= scale;
  return WeightVector::create(data, w, WeightMethod::kIpw);
}

}  // namespace attkit
