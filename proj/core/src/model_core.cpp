#include "effect_engine/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include "effect_engine/error.hpp"

namespace effect_engine {
namespace {

constexpr double kRankTolerance = 1e-10;

std::string format_level(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> numeric_levels(std::span<const double> values) {
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::string> out;
  out.reserve(distinct.size());
  for (double v : distinct) out.push_back(format_level(v));
  return out;
}

std::vector<std::string> label_levels(const std::vector<std::string>& values) {
  std::vector<std::string> out = values;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Indicator columns for levels[1..] from per-row level labels.
template <typename LabelOf>
void fill_one_hot(const CovariateEncoding& enc, std::size_t n, LabelOf label_of,
                  Eigen::Ref<Eigen::MatrixXd> out) {
  out.setZero();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t l = 1; l < enc.levels.size(); ++l) index.emplace(enc.levels[l], l - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = index.find(label_of(i));
    if (it != index.end()) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(it->second)) = 1.0;
  }
}

}  // namespace

std::string_view to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::classical: return "classical";
    case CovarianceKind::hc1: return "hc1";
    case CovarianceKind::cluster: return "cluster";
  }
  return "unknown";
}

CovarianceKind parse_covariance_kind(std::string_view text) {
  if (text == "classical") return CovarianceKind::classical;
  if (text == "hc1") return CovarianceKind::hc1;
  if (text == "cluster") return CovarianceKind::cluster;
  throw ValidationError("unknown covariance kind '" + std::string(text) +
                        "' (expected classical, hc1 or cluster)");
}

std::string ColumnDescriptor::label() const {
  std::string cov = level ? covariate + "=" + *level : covariate;
  switch (kind) {
    case ColumnKind::intercept: return "(intercept)";
    case ColumnKind::covariate: return cov;
    case ColumnKind::arm: return "arm[" + arm + "]";
    case ColumnKind::interaction: return cov + ":arm[" + arm + "]";
  }
  return {};
}

ColumnSchema::ColumnSchema(std::vector<CovariateEncoding> encodings, std::vector<std::string> arms,
                           std::string reference_arm, bool interactions)
    : encodings_(std::move(encodings)),
      reference_arm_(std::move(reference_arm)),
      interactions_(interactions) {
  std::sort(arms.begin(), arms.end());
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  auto ref = std::find(arms.begin(), arms.end(), reference_arm_);
  if (ref == arms.end()) throw ValidationError("unknown reference arm '" + reference_arm_ + "'");
  if (arms.size() < 2) throw ValidationError("schema needs at least 2 arms");
  arms.erase(ref);
  arms_.push_back(reference_arm_);
  arms_.insert(arms_.end(), arms.begin(), arms.end());

  std::vector<ColumnDescriptor> covariate_cols;
  for (const auto& enc : encodings_) {
    if (enc.categorical) {
      if (enc.levels.size() < 2)
        throw ValidationError("categorical covariate '" + enc.name + "' has a single level");
      for (std::size_t l = 1; l < enc.levels.size(); ++l)
        covariate_cols.push_back({ColumnKind::covariate, enc.name, enc.levels[l], {}});
    } else {
      covariate_cols.push_back({ColumnKind::covariate, enc.name, std::nullopt, {}});
    }
  }
  covariate_width_ = covariate_cols.size();

  columns_.push_back({ColumnKind::intercept, {}, std::nullopt, {}});
  columns_.insert(columns_.end(), covariate_cols.begin(), covariate_cols.end());
  for (std::size_t a = 1; a < arms_.size(); ++a)
    columns_.push_back({ColumnKind::arm, {}, std::nullopt, arms_[a]});
  if (interactions_) {
    for (const auto& cov : covariate_cols) {
      for (std::size_t a = 1; a < arms_.size(); ++a)
        columns_.push_back({ColumnKind::interaction, cov.covariate, cov.level, arms_[a]});
    }
  }
}

std::vector<std::string> ColumnSchema::labels() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.label());
  return out;
}

std::size_t ColumnSchema::interaction_index(std::size_t covariate_column,
                                            std::size_t arm_column) const {
  return interaction_offset() + covariate_column * arm_width() + arm_column;
}

bool ColumnSchema::has_arm(std::string_view arm) const {
  return std::find(arms_.begin(), arms_.end(), arm) != arms_.end();
}

std::optional<std::size_t> ColumnSchema::arm_column(std::string_view arm) const {
  auto it = std::find(arms_.begin(), arms_.end(), arm);
  if (it == arms_.end()) throw ValidationError("unknown arm '" + std::string(arm) + "'");
  if (it == arms_.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - arms_.begin()) - 1;
}

const CovariateEncoding* ColumnSchema::find_encoding(std::string_view name) const {
  for (const auto& enc : encodings_) {
    if (enc.name == name) return &enc;
  }
  return nullptr;
}

Eigen::MatrixXd ColumnSchema::expand_covariates(const Dataset& data) const {
  const std::size_t n = data.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(covariate_width_));
  Eigen::Index col = 0;
  for (const auto& enc : encodings_) {
    const auto width = static_cast<Eigen::Index>(enc.width());
    auto block = out.middleCols(col, width);
    if (enc.from_period) {
      if (!data.has_periods())
        throw ValidationError("model encodes a period but the dataset has none");
      auto periods = data.periods();
      fill_one_hot(enc, n, [&](std::size_t i) { return std::to_string(periods[i]); }, block);
    } else {
      const auto* column = data.find_covariate(enc.name);
      if (column == nullptr)
        throw ValidationError("dataset lacks covariate '" + enc.name + "' used by the model");
      if (!enc.categorical) {
        if (!column->is_numeric())
          throw ValidationError("covariate '" + enc.name + "' is not numeric");
        const auto& v = column->numeric();
        for (std::size_t i = 0; i < n; ++i) block(static_cast<Eigen::Index>(i), 0) = v[i];
      } else if (column->is_numeric()) {
        const auto& v = column->numeric();
        fill_one_hot(enc, n, [&](std::size_t i) { return format_level(v[i]); }, block);
      } else {
        const auto& v = column->labels();
        fill_one_hot(enc, n, [&](std::size_t i) -> const std::string& { return v[i]; }, block);
      }
    }
    col += width;
  }
  return out;
}

DesignMatrix build_design(const Dataset& data, const ModelSpec& spec) {
  if (!data.has_arm(spec.reference_arm))
    throw ValidationError("unknown reference arm '" + spec.reference_arm + "'");
  for (const auto& [name, enc] : spec.encodings) {
    (void)enc;
    if (data.find_covariate(name) == nullptr)
      throw ValidationError("encoding given for unknown covariate '" + name + "'");
  }

  std::vector<std::string> warnings;
  std::vector<CovariateEncoding> encodings;
  for (const auto& column : data.covariates()) {
    auto requested = Encoding::automatic;
    if (auto it = spec.encodings.find(column.name); it != spec.encodings.end())
      requested = it->second;
    CovariateEncoding enc;
    enc.name = column.name;
    enc.categorical = requested == Encoding::categorical ||
                      (requested == Encoding::automatic && !column.is_numeric());
    if (requested == Encoding::numeric && !column.is_numeric())
      throw ValidationError("covariate '" + column.name +
                            "' has non-numeric values and cannot be encoded as numeric");
    if (enc.categorical) {
      enc.levels = column.is_numeric() ? numeric_levels(column.numeric())
                                       : label_levels(column.labels());
      if (enc.levels.size() < 2)
        throw ValidationError("categorical covariate '" + column.name + "' has a single level");
    } else {
      const auto& v = column.numeric();
      if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }))
        warnings.push_back("covariate '" + column.name +
                           "' is constant across all rows; the design is at risk of rank "
                           "deficiency");
    }
    encodings.push_back(std::move(enc));
  }

  if (spec.include_period && data.has_periods() && data.find_covariate(data.period_name()) == nullptr) {
    auto periods = data.distinct_periods();
    if (periods.size() >= 2) {
      CovariateEncoding enc;
      enc.name = data.period_name();
      enc.categorical = true;
      enc.from_period = true;
      for (auto p : periods) enc.levels.push_back(std::to_string(p));
      encodings.push_back(std::move(enc));
    }
  }

  ColumnSchema schema(std::move(encodings), data.arm_labels(), spec.reference_arm,
                      spec.interactions);

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(schema.size());
  const auto cw = static_cast<Eigen::Index>(schema.covariate_width());
  const auto aw = static_cast<Eigen::Index>(schema.arm_width());

  Eigen::MatrixXd covariates = schema.expand_covariates(data);
  Eigen::MatrixXd arms = Eigen::MatrixXd::Zero(n, aw);
  auto arm_values = data.arms();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (auto a = schema.arm_column(arm_values[static_cast<std::size_t>(i)]))
      arms(i, static_cast<Eigen::Index>(*a)) = 1.0;
  }

  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.middleCols(static_cast<Eigen::Index>(schema.covariate_offset()), cw) = covariates;
  x.middleCols(static_cast<Eigen::Index>(schema.arm_offset()), aw) = arms;
  if (schema.has_interactions()) {
    for (Eigen::Index c = 0; c < cw; ++c) {
      for (Eigen::Index a = 0; a < aw; ++a) {
        auto j = static_cast<Eigen::Index>(
            schema.interaction_index(static_cast<std::size_t>(c), static_cast<std::size_t>(a)));
        x.col(j) = covariates.col(c).cwiseProduct(arms.col(a));
      }
    }
  }

  auto outcome = data.outcome();
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcome.data(), n);

  std::optional<std::vector<std::string>> clusters;
  if (data.has_unit_ids()) {
    auto ids = data.unit_ids();
    clusters.emplace(ids.begin(), ids.end());
  }
  return DesignMatrix{std::move(x), std::move(y), std::move(schema), std::move(clusters),
                      std::move(warnings)};
}

Eigen::VectorXd FittedModel::std_errors() const {
  return cov_beta.diagonal().cwiseMax(0.0).cwiseSqrt();
}

namespace {

void check_rank(const Eigen::MatrixXd& r, const ColumnSchema& schema) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Eigen::Index p = s.size();
  const double cutoff = kRankTolerance * s(0);
  if (s(0) > 0.0 && s(p - 1) > cutoff) return;

  Eigen::Index rank = 0;
  while (rank < p && s(rank) > cutoff && s(0) > 0.0) ++rank;
  std::set<std::size_t> involved;
  for (Eigen::Index k = rank; k < p; ++k) {
    Eigen::VectorXd v = svd.matrixV().col(k);
    const double vmax = v.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(v(j)) > 1e-6 * vmax) involved.insert(static_cast<std::size_t>(j));
    }
  }
  std::string names;
  for (auto j : involved) {
    if (!names.empty()) names += ", ";
    names += schema.columns()[j].label();
  }
  throw NumericError("design matrix is rank deficient (rank " + std::to_string(rank) + " of " +
                     std::to_string(p) + "); dependent columns: " + names);
}

}  // namespace

FittedModel fit_ols(const DesignMatrix& design, CovarianceKind kind) {
  if (kind == CovarianceKind::cluster) {
    if (!design.cluster_ids)
      throw ValidationError("cluster covariance requires unit ids");
    return fit_ols(design, kind, *design.cluster_ids);
  }
  return fit_ols(design, kind, {});
}

FittedModel fit_ols(const DesignMatrix& design, CovarianceKind kind,
                    std::span<const std::string> cluster_ids) {
  const Eigen::MatrixXd& x = design.x;
  const Eigen::VectorXd& y = design.y;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p != static_cast<Eigen::Index>(design.schema.size()) || y.size() != n)
    throw ValidationError("design dimensions disagree with schema or outcome");
  if (n <= p)
    throw ValidationError("least squares needs more rows than columns (n = " + std::to_string(n) +
                          ", p = " + std::to_string(p) + ")");
  if (kind == CovarianceKind::cluster && cluster_ids.empty())
    throw ValidationError("cluster covariance requires unit ids");
  if (kind == CovarianceKind::cluster && static_cast<Eigen::Index>(cluster_ids.size()) != n)
    throw ValidationError("cluster id count differs from row count");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  check_rank(r, design.schema);

  Eigen::VectorXd beta = qr.solve(y);
  Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd bread = r_inv * r_inv.transpose();  // (X'X)^-1
  Eigen::VectorXd resid = y - x * beta;
  const double dn = static_cast<double>(n);
  const double dp = static_cast<double>(p);

  Eigen::MatrixXd cov;
  switch (kind) {
    case CovarianceKind::classical: {
      cov = (resid.squaredNorm() / (dn - dp)) * bread;
      break;
    }
    case CovarianceKind::hc1: {
      Eigen::MatrixXd scores = x.array().colwise() * resid.array();
      Eigen::MatrixXd meat = scores.transpose() * scores;
      cov = bread * meat * bread * (dn / (dn - dp));
      break;
    }
    case CovarianceKind::cluster: {
      std::unordered_map<std::string_view, Eigen::Index> group_of;
      std::vector<Eigen::Index> row_group(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, inserted] = group_of.try_emplace(cluster_ids[static_cast<std::size_t>(i)],
                                                   static_cast<Eigen::Index>(group_of.size()));
        row_group[static_cast<std::size_t>(i)] = it->second;
      }
      const auto groups = static_cast<Eigen::Index>(group_of.size());
      if (groups < 2) throw ValidationError("cluster covariance needs at least 2 clusters");
      Eigen::MatrixXd group_scores = Eigen::MatrixXd::Zero(groups, p);
      for (Eigen::Index i = 0; i < n; ++i)
        group_scores.row(row_group[static_cast<std::size_t>(i)]) += resid(i) * x.row(i);
      Eigen::MatrixXd meat = group_scores.transpose() * group_scores;
      const double g = static_cast<double>(groups);
      cov = bread * meat * bread * ((g / (g - 1.0)) * ((dn - 1.0) / (dn - dp)));
      break;
    }
  }
  cov = 0.5 * (cov + cov.transpose()).eval();

  FittedModel model{design.schema, std::move(beta), std::move(cov)};
  model.n = static_cast<std::size_t>(n);
  model.dof = static_cast<std::int64_t>(n - p);
  model.covariance_kind = kind;
  model.posterior = false;
  return model;
}

FittedModel fit_bayes(const DesignMatrix& design, const BayesPrior& prior) {
  const Eigen::MatrixXd& x = design.x;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0) throw ValidationError("posterior fit needs at least one row");
  if (prior.prior_mean.size() != p || prior.prior_covariance.rows() != p ||
      prior.prior_covariance.cols() != p)
    throw ValidationError("prior dimensions do not match the " + std::to_string(p) +
                          "-column design");
  if (!(prior.noise_variance > 0.0) || !std::isfinite(prior.noise_variance))
    throw ValidationError("noise variance must be positive and finite");
  const auto& s0 = prior.prior_covariance;
  if ((s0 - s0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * s0.cwiseAbs().maxCoeff())
    throw ValidationError("prior covariance is not symmetric");

  Eigen::LLT<Eigen::MatrixXd> prior_llt(s0);
  if (prior_llt.info() != Eigen::Success)
    throw NumericError("prior covariance is not positive definite (Cholesky failed)");
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd prior_precision = prior_llt.solve(identity);

  const double inv_noise = 1.0 / prior.noise_variance;
  Eigen::MatrixXd precision = prior_precision + inv_noise * (x.transpose() * x);
  precision = 0.5 * (precision + precision.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> post_llt(precision);
  if (post_llt.info() != Eigen::Success)
    throw NumericError("posterior precision is not positive definite");

  Eigen::MatrixXd cov = post_llt.solve(identity);
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::VectorXd rhs = prior_precision * prior.prior_mean + inv_noise * (x.transpose() * design.y);
  Eigen::VectorXd beta = post_llt.solve(rhs);

  FittedModel model{design.schema, std::move(beta), std::move(cov)};
  model.n = static_cast<std::size_t>(n);
  model.dof = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(p);
  model.covariance_kind = CovarianceKind::classical;
  model.posterior = true;
  return model;
}

BayesPrior isotropic_prior(std::size_t p, double mean, double variance, double noise_variance) {
  if (!(variance > 0.0)) throw ValidationError("prior variance must be positive");
  const auto dim = static_cast<Eigen::Index>(p);
  return BayesPrior{Eigen::VectorXd::Constant(dim, mean),
                    variance * Eigen::MatrixXd::Identity(dim, dim), noise_variance};
}

FittedModel as_flat_prior_posterior(FittedModel model) {
  model.posterior = true;
  return model;
}

}  // namespace effect_engine
