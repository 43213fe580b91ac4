#include "effect_engine/io/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "effect_engine/error.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine::io {
namespace {

using nlohmann::json;

void allow_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ValidationError("unknown key '" + key + "' in " + std::string(where));
  }
}

const json& require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ValidationError("missing required field '" + std::string(key) + "' in " +
                          std::string(where));
  return *it;
}

std::string get_string(const json& v, std::string_view what) {
  if (!v.is_string()) throw ValidationError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

double get_number(const json& v, std::string_view what) {
  if (!v.is_number()) throw ValidationError(std::string(what) + " must be a number");
  return v.get<double>();
}

std::vector<std::string> get_strings(const json& v, std::string_view what) {
  if (!v.is_array()) throw ValidationError(std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(get_string(e, what));
  return out;
}

QueryType parse_query_type(const std::string& s) {
  static const std::pair<const char*, QueryType> kTypes[] = {
      {"ate", QueryType::ate},           {"cate", QueryType::cate},
      {"hte", QueryType::hte},           {"dte", QueryType::dte},
      {"relative", QueryType::relative}, {"rank", QueryType::rank},
      {"prob_positive", QueryType::prob_positive},
  };
  for (const auto& [name, type] : kTypes) {
    if (s == name) return type;
  }
  throw ValidationError("unknown query type '" + s + "'");
}

Encoding parse_encoding(const std::string& s) {
  if (s == "numeric") return Encoding::numeric;
  if (s == "categorical") return Encoding::categorical;
  if (s == "auto") return Encoding::automatic;
  throw ValidationError("unknown encoding '" + s + "' (expected numeric, categorical or auto)");
}

ColumnMap parse_columns(const json& j) {
  if (!j.is_object()) throw ValidationError("'columns' must be an object");
  allow_keys(j, "columns", {"outcome", "arm", "covariates", "unit_id", "period"});
  ColumnMap map;
  map.outcome = get_string(require(j, "outcome", "columns"), "columns.outcome");
  map.arm = get_string(require(j, "arm", "columns"), "columns.arm");
  if (j.contains("covariates")) map.covariates = get_strings(j["covariates"], "columns.covariates");
  if (j.contains("unit_id")) map.unit_id = get_string(j["unit_id"], "columns.unit_id");
  if (j.contains("period")) map.period = get_string(j["period"], "columns.period");
  return map;
}

BayesConfig parse_bayes(const json& j) {
  if (!j.is_object()) throw ValidationError("'model.bayes' must be an object");
  allow_keys(j, "model.bayes", {"prior_mean", "prior_variance", "prior_covariance", "noise_variance"});
  BayesConfig b;
  b.noise_variance = get_number(require(j, "noise_variance", "model.bayes"), "noise_variance");
  if (!(b.noise_variance > 0.0)) throw ValidationError("noise_variance must be positive");

  b.prior_mean = {0.0};
  if (j.contains("prior_mean")) {
    const auto& m = j["prior_mean"];
    if (m.is_number()) {
      b.prior_mean = {m.get<double>()};
    } else if (m.is_array() && !m.empty()) {
      b.prior_mean.clear();
      for (const auto& e : m) b.prior_mean.push_back(get_number(e, "prior_mean entry"));
    } else {
      throw ValidationError("prior_mean must be a number or a non-empty array");
    }
  }
  const bool has_var = j.contains("prior_variance");
  const bool has_cov = j.contains("prior_covariance");
  if (has_var == has_cov)
    throw ValidationError("model.bayes needs exactly one of prior_variance or prior_covariance");
  if (has_var) {
    const double v = get_number(j["prior_variance"], "prior_variance");
    if (!(v > 0.0)) throw ValidationError("prior_variance must be positive");
    b.prior_covariance = {{v}};
  } else {
    const auto& c = j["prior_covariance"];
    if (!c.is_array() || c.empty()) throw ValidationError("prior_covariance must be a matrix");
    for (const auto& row : c) {
      if (!row.is_array() || row.size() != c.size())
        throw ValidationError("prior_covariance must be a square matrix");
      std::vector<double> r;
      for (const auto& e : row) r.push_back(get_number(e, "prior_covariance entry"));
      b.prior_covariance.push_back(std::move(r));
    }
  }
  return b;
}

ModelConfig parse_model(const json& j) {
  if (!j.is_object()) throw ValidationError("'model' must be an object");
  allow_keys(j, "model", {"reference_arm", "covariance", "encodings", "interactions", "bayes"});
  ModelConfig m;
  m.reference_arm = get_string(require(j, "reference_arm", "model"), "model.reference_arm");
  if (j.contains("covariance"))
    m.covariance_kind = parse_covariance_kind(get_string(j["covariance"], "model.covariance"));
  if (j.contains("encodings")) {
    if (!j["encodings"].is_object()) throw ValidationError("model.encodings must be an object");
    for (const auto& [name, enc] : j["encodings"].items())
      m.encodings.emplace(name, parse_encoding(get_string(enc, "encoding")));
  }
  if (j.contains("interactions")) {
    if (!j["interactions"].is_boolean()) throw ValidationError("model.interactions must be a boolean");
    m.interactions = j["interactions"].get<bool>();
  }
  if (j.contains("bayes")) m.bayes = parse_bayes(j["bayes"]);
  return m;
}

QuerySpec parse_query(const json& j, std::size_t index) {
  const std::string where = "queries[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  allow_keys(j, where, {"type", "id", "arms", "predicate", "periods", "ci_level", "covariance", "ratio_guard"});
  QuerySpec q;
  q.type = parse_query_type(get_string(require(j, "type", where), where + ".type"));
  if (j.contains("id")) q.id = get_string(j["id"], where + ".id");
  if (j.contains("arms")) q.arms = get_strings(j["arms"], where + ".arms");
  if (j.contains("predicate")) {
    q.predicate = get_string(j["predicate"], where + ".predicate");
    (void)Predicate::parse(q.predicate);
  }
  if (j.contains("periods")) {
    if (!j["periods"].is_array()) throw ValidationError(where + ".periods must be an array");
    for (const auto& p : j["periods"]) {
      if (!p.is_number_integer()) throw ValidationError(where + ".periods entries must be integers");
      q.periods.push_back(p.get<std::int64_t>());
    }
  }
  if (j.contains("ci_level")) q.ci_level = get_number(j["ci_level"], where + ".ci_level");
  if (!(q.ci_level > 0.0 && q.ci_level < 1.0))
    throw ValidationError(where + ".ci_level must lie in (0, 1)");
  if (j.contains("covariance"))
    q.covariance = parse_covariance_kind(get_string(j["covariance"], where + ".covariance"));
  if (j.contains("ratio_guard")) {
    q.ratio_guard = get_number(j["ratio_guard"], where + ".ratio_guard");
    if (!(q.ratio_guard >= 0.0)) throw ValidationError(where + ".ratio_guard must be >= 0");
  }

  const bool pairwise = q.type != QueryType::rank;
  if (pairwise) {
    if (q.arms.size() != 2 || q.arms[0] == q.arms[1])
      throw ValidationError(where + ".arms must name two different arms [to, from]");
  } else if (!q.arms.empty()) {
    if (q.arms.size() < 2) throw ValidationError(where + ".arms must name at least 2 arms");
    std::set<std::string> unique(q.arms.begin(), q.arms.end());
    if (unique.size() != q.arms.size()) throw ValidationError(where + ".arms has duplicates");
  }
  if ((q.type == QueryType::cate || q.type == QueryType::hte) && q.predicate.empty())
    throw ValidationError(where + " (" + std::string(to_string(q.type)) + ") needs a predicate");
  if (q.type == QueryType::dte && q.periods.empty())
    throw ValidationError(where + " (dte) needs a non-empty periods list");
  return q;
}

}  // namespace

std::string_view to_string(QueryType type) {
  switch (type) {
    case QueryType::ate: return "ate";
    case QueryType::cate: return "cate";
    case QueryType::hte: return "hte";
    case QueryType::dte: return "dte";
    case QueryType::relative: return "relative";
    case QueryType::rank: return "rank";
    case QueryType::prob_positive: return "prob_positive";
  }
  return "unknown";
}

BayesPrior BayesConfig::resolve(std::size_t p) const {
  const auto dim = static_cast<Eigen::Index>(p);
  BayesPrior prior;
  prior.noise_variance = noise_variance;
  if (prior_mean.size() == 1) {
    prior.prior_mean = Eigen::VectorXd::Constant(dim, prior_mean.front());
  } else if (prior_mean.size() == p) {
    prior.prior_mean = Eigen::Map<const Eigen::VectorXd>(prior_mean.data(), dim);
  } else {
    throw ValidationError("prior_mean has " + std::to_string(prior_mean.size()) +
                          " entries, the design has " + std::to_string(p) + " columns");
  }
  if (prior_covariance.size() == 1 && prior_covariance.front().size() == 1) {
    prior.prior_covariance = prior_covariance[0][0] * Eigen::MatrixXd::Identity(dim, dim);
  } else if (prior_covariance.size() == p) {
    prior.prior_covariance.resize(dim, dim);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        prior.prior_covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            prior_covariance[i][j];
  } else {
    throw ValidationError("prior_covariance is " + std::to_string(prior_covariance.size()) +
                          "x" + std::to_string(prior_covariance.size()) + ", the design has " +
                          std::to_string(p) + " columns");
  }
  return prior;
}

QueryConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  allow_keys(j, "config", {"columns", "model", "queries", "output", "seed", "mvn_tol", "partial"});

  QueryConfig config;
  config.columns = parse_columns(require(j, "columns", "config"));
  config.model = parse_model(require(j, "model", "config"));
  const auto& queries = require(j, "queries", "config");
  if (!queries.is_array() || queries.empty())
    throw ValidationError("'queries' must be a non-empty array");
  for (std::size_t i = 0; i < queries.size(); ++i) config.queries.push_back(parse_query(queries[i], i));

  if (j.contains("output")) {
    const auto& o = j["output"];
    if (!o.is_object()) throw ValidationError("'output' must be an object");
    allow_keys(o, "output", {"path", "format"});
    if (o.contains("path")) config.output.path = get_string(o["path"], "output.path");
    if (o.contains("format")) config.output.format = get_string(o["format"], "output.format");
    if (config.output.format != "json" && config.output.format != "text")
      throw ValidationError("output.format must be 'json' or 'text'");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
    config.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("mvn_tol")) {
    config.mvn_tol = get_number(j["mvn_tol"], "mvn_tol");
    if (!(config.mvn_tol > 0.0)) throw ValidationError("mvn_tol must be positive");
  }
  if (j.contains("partial")) {
    if (!j["partial"].is_boolean()) throw ValidationError("partial must be a boolean");
    config.partial = j["partial"].get<bool>();
  }

  for (std::size_t i = 0; i < config.queries.size(); ++i) {
    if (config.queries[i].type == QueryType::dte &&
        (!config.columns.unit_id || !config.columns.period))
      throw ValidationError("queries[" + std::to_string(i) +
                            "] (dte) requires columns.unit_id and columns.period");
  }
  return config;
}

QueryConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void check_config_against(const QueryConfig& config, const Dataset& data) {
  if (!data.has_arm(config.model.reference_arm))
    throw ValidationError("reference arm '" + config.model.reference_arm +
                          "' does not appear in the data");
  for (std::size_t i = 0; i < config.queries.size(); ++i) {
    for (const auto& arm : config.queries[i].arms) {
      if (!data.has_arm(arm))
        throw ValidationError("queries[" + std::to_string(i) + "] references arm '" + arm +
                              "' absent from the data");
    }
  }
}

}  // namespace effect_engine::io
