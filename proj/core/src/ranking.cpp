#include "effect_engine/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "effect_engine/error.hpp"
#include "effect_engine/normal.hpp"
#include "effect_engine/parallel.hpp"

namespace effect_engine {
namespace {

constexpr double kJitter = 1e-10;
constexpr std::size_t kShifts = 12;
constexpr std::size_t kInitialPoints = 1024;

// Probability that a N(mean, variance) scalar is strictly positive.
double positive_probability(double mean, double variance) {
  if (variance <= 0.0) return mean > 0.0 ? 1.0 : 0.0;
  return normal_cdf(mean / std::sqrt(variance));
}

std::vector<double> lattice_generator(std::size_t dim) {
  std::vector<double> z;
  for (unsigned candidate = 2; z.size() < dim; ++candidate) {
    bool prime = true;
    for (unsigned d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) {
        prime = false;
        break;
      }
    }
    if (!prime) continue;
    const double root = std::sqrt(static_cast<double>(candidate));
    z.push_back(root - std::floor(root));
  }
  return z;
}

double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& sigma) {
  const auto m = sigma.rows();
  const double jitter = kJitter * sigma.trace() / static_cast<double>(m);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    if (l.diagonal().array().square().minCoeff() > jitter) return l;
  }
  Eigen::MatrixXd jittered = sigma;
  jittered.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> retry(jittered);
  if (retry.info() != Eigen::Success)
    throw NumericError("contrast covariance is not positive semidefinite");
  return retry.matrixL();
}

// Genz's separation-of-variables integrand for P(Y <= upper), Y = L * N(0, I).
class OrthantIntegrand {
 public:
  OrthantIntegrand(Eigen::MatrixXd chol, Eigen::VectorXd upper)
      : l_(std::move(chol)),
        upper_(std::move(upper)),
        first_(normal_cdf(upper_(0) / l_(0, 0))) {}

  std::size_t dimension() const { return static_cast<std::size_t>(upper_.size()) - 1; }

  double operator()(const double* w, double* y) const {
    double e = first_;
    double f = e;
    const auto m = upper_.size();
    for (Eigen::Index i = 1; i < m && f > 0.0; ++i) {
      const double u = std::clamp(w[i - 1] * e, 1e-300, 1.0 - 0x1.0p-53);
      y[i - 1] = normal_quantile(u);
      double s = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) s += l_(i, j) * y[j];
      e = normal_cdf((upper_(i) - s) / l_(i, i));
      f *= e;
    }
    return f;
  }

 private:
  Eigen::MatrixXd l_;
  Eigen::VectorXd upper_;
  double first_;
};

}  // namespace

OrthantResult mvn_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                          const OrthantOptions& options) {
  const auto m = mu.size();
  if (m == 0) throw ValidationError("orthant probability needs at least one dimension");
  if (sigma.rows() != m || sigma.cols() != m)
    throw ValidationError("covariance shape does not match the mean");
  if (!mu.allFinite() || !sigma.allFinite())
    throw ValidationError("orthant inputs must be finite");
  const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("covariance is not symmetric");
  if ((sigma.diagonal().array() < 0.0).any())
    throw NumericError("covariance has a negative variance");

  if (m == 1) return {positive_probability(mu(0), sigma(0, 0)), 0.0, 0};
  if (sigma.trace() == 0.0) return {(mu.array() > 0.0).all() ? 1.0 : 0.0, 0.0, 0};

  // P(Z > 0) = P(Y <= mu) with Y ~ N(0, sigma). Integrate the tightest
  // standardized limits first.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto standardized = [&](Eigen::Index i) {
    const double sd = std::sqrt(sigma(i, i));
    if (sd > 0.0) return mu(i) / sd;
    return mu(i) > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return standardized(a) < standardized(b);
  });
  Eigen::MatrixXd permuted(m, m);
  Eigen::VectorXd upper(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    upper(i) = mu(order[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j)
      permuted(i, j) = sigma(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  const OrthantIntegrand integrand(cholesky_with_jitter(permuted), upper);
  const std::size_t dim = integrand.dimension();
  const auto z = lattice_generator(dim);

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<double>> shifts(kShifts, std::vector<double>(dim));
  for (auto& shift : shifts) {
    for (auto& s : shift) s = unit_double(rng());
  }

  const unsigned workers = options.workers == 0 ? default_workers() : options.workers;
  OrthantResult result;
  std::size_t points = kInitialPoints;
  while (true) {
    std::vector<double> estimates(kShifts, 0.0);
    parallel_for(kShifts, workers, [&](std::size_t k) {
      std::vector<double> w(dim), y(dim);
      double sum = 0.0;
      for (std::size_t n = 1; n <= points; ++n) {
        for (std::size_t j = 0; j < dim; ++j) {
          double x = static_cast<double>(n) * z[j] + shifts[k][j];
          x -= std::floor(x);
          w[j] = std::abs(2.0 * x - 1.0);  // baker's transform
        }
        sum += integrand(w.data(), y.data());
      }
      estimates[k] = sum / static_cast<double>(points);
    });

    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= static_cast<double>(kShifts);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    const double se = std::sqrt(ss / static_cast<double>(kShifts * (kShifts - 1)));

    result.prob = std::clamp(mean, 0.0, 1.0);
    result.error = 3.0 * se;
    result.points = points * kShifts;
    if (result.error <= options.tol || 2 * points * kShifts > options.max_points) break;
    points *= 2;
  }
  return result;
}

PositiveProbability prob_positive(const FittedModel& model, const Dataset& data,
                                  std::string_view arm_to, std::string_view arm_from,
                                  const Predicate& predicate) {
  if (!model.posterior)
    throw ValidationError("probability of a positive effect needs a posterior model");
  auto profile = profile_from_subset(data, model.schema, predicate);
  auto value = apply(delta_vector(model.schema, profile, arm_to, arm_from), model);
  return {positive_probability(value.value, value.variance), 0.0};
}

StackedDelta stack_deltas(const ColumnSchema& schema, const CovariateProfile& profile,
                          std::string_view candidate, const std::vector<std::string>& others) {
  StackedDelta out;
  out.matrix.resize(static_cast<Eigen::Index>(others.size()),
                    static_cast<Eigen::Index>(schema.size()));
  for (std::size_t r = 0; r < others.size(); ++r) {
    out.matrix.row(static_cast<Eigen::Index>(r)) =
        delta_vector(schema, profile, candidate, others[r]).entries.transpose();
    out.comparisons.emplace_back(std::string(candidate), others[r]);
  }
  return out;
}

std::string_view to_string(RankingMethod method) {
  return method == RankingMethod::closed_form_1d ? "closed_form_1d" : "qmc";
}

RankingResult prob_best(const FittedModel& model, const Dataset& data,
                        const std::vector<std::string>& arms, const Predicate& predicate,
                        const OrthantOptions& options) {
  if (!model.posterior) throw ValidationError("ranking needs a posterior model");
  if (arms.size() < 2) throw ValidationError("ranking needs at least 2 arms");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    (void)model.schema.arm_column(arms[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (arms[i] == arms[j]) throw ValidationError("arm '" + arms[i] + "' listed twice");
    }
  }
  auto profile = profile_from_subset(data, model.schema, predicate);

  RankingResult result;
  result.method = arms.size() == 2 ? RankingMethod::closed_form_1d : RankingMethod::qmc;
  for (const auto& candidate : arms) {
    std::vector<std::string> others;
    for (const auto& a : arms) {
      if (a != candidate) others.push_back(a);
    }
    auto stacked = stack_deltas(model.schema, profile, candidate, others);
    const auto m = stacked.matrix.rows();
    Eigen::VectorXd mu(m);
    Eigen::MatrixXd sigma(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd di = stacked.matrix.row(i).transpose();
      const auto value = apply(di, model);
      mu(i) = value.value;
      sigma(i, i) = value.variance;
      for (Eigen::Index j = 0; j < i; ++j) {
        Eigen::VectorXd dj = stacked.matrix.row(j).transpose();
        sigma(i, j) = sigma(j, i) = cross_covariance(di, dj, model);
      }
    }
    auto orthant = mvn_orthant(mu, sigma, options);
    result.arms.push_back({candidate, orthant.prob, orthant.error});
  }
  return result;
}

}  // namespace effect_engine
