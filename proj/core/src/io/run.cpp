#include "effect_engine/io/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include <json.hpp>
#include <openssl/evp.h>

#include "effect_engine/absolute_effects.hpp"
#include "effect_engine/error.hpp"
#include "effect_engine/parallel.hpp"
#include "effect_engine/ranking.hpp"
#include "effect_engine/relative_effects.hpp"

#ifndef EFFECT_ENGINE_VERSION
#define EFFECT_ENGINE_VERSION "0.0.0"
#endif

namespace effect_engine::io {
namespace {

using Json = nlohmann::ordered_json;

// Serializer with 17 significant digits for every real, so reports
// round-trip exactly.
void write_json(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(key).dump() + ": ";
        write_json(value, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ",\n";
        out += inner;
        write_json(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Finite numbers pass through; anything else becomes null plus a warning.
struct NumberSink {
  std::vector<std::string>& warnings;
  std::string where;

  Json operator()(double v, std::string_view field) const {
    if (std::isfinite(v)) return v;
    warnings.push_back(where + "." + std::string(field) + " is not finite; reported as null");
    return nullptr;
  }
};

Json estimate_json(const EffectEstimate& e, const NumberSink& num) {
  Json j;
  j["estimate"] = num(e.estimate, "estimate");
  j["std_error"] = num(e.std_error, "std_error");
  j["ci_low"] = num(e.ci_low, "ci_low");
  j["ci_high"] = num(e.ci_high, "ci_high");
  j["ci_level"] = e.ci_level;
  return j;
}

struct FitFailure {
  ErrorKind kind;
  std::string message;
};

using FitSlot = std::variant<FittedModel, FitFailure>;

CovarianceKind effective_kind(const QuerySpec& q, const ModelConfig& model) {
  if (q.covariance) return *q.covariance;
  if (q.type == QueryType::dte) return CovarianceKind::cluster;
  return model.covariance_kind;
}

bool needs_posterior(const QuerySpec& q) {
  return q.type == QueryType::rank || q.type == QueryType::prob_positive;
}

std::string fit_key(const QuerySpec& q, const ModelConfig& model) {
  if (needs_posterior(q)) {
    if (model.bayes) return "bayes";
    return "flat_" + std::string(to_string(effective_kind(q, model)));
  }
  return "ols_" + std::string(to_string(effective_kind(q, model)));
}

Json model_summary(const std::string& key, const FittedModel& m, std::vector<std::string>& warnings) {
  NumberSink num{warnings, "models." + key};
  Json j;
  j["id"] = key;
  j["posterior"] = m.posterior;
  j["covariance_kind"] = key == "bayes" ? "posterior" : std::string(to_string(m.covariance_kind));
  j["n"] = m.n;
  j["dof"] = m.dof;
  j["columns"] = m.schema.labels();
  Json beta = Json::array(), se = Json::array();
  const Eigen::VectorXd errors = m.std_errors();
  for (Eigen::Index i = 0; i < m.beta.size(); ++i) {
    beta.push_back(num(m.beta(i), "beta"));
    se.push_back(num(errors(i), "std_errors"));
  }
  j["beta"] = std::move(beta);
  j["std_errors"] = std::move(se);
  return j;
}

Json answer(const QuerySpec& q, const FittedModel& model, const Dataset& data, std::uint64_t seed,
            double mvn_tol, const NumberSink& num) {
  const Predicate predicate = Predicate::parse(q.predicate);
  Json j;
  switch (q.type) {
    case QueryType::ate:
      j.update(estimate_json(ate(model, data, q.arms[0], q.arms[1], q.ci_level), num));
      break;
    case QueryType::cate:
      j.update(estimate_json(cate(model, data, q.arms[0], q.arms[1], predicate, q.ci_level), num));
      break;
    case QueryType::hte:
      j.update(estimate_json(hte(model, data, q.arms[0], q.arms[1], predicate, q.ci_level), num));
      break;
    case QueryType::dte: {
      Json periods = Json::array();
      for (const auto& e : dte(model, data, q.arms[0], q.arms[1], q.periods, q.ci_level)) {
        Json p;
        p["period"] = *e.query.period;
        p.update(estimate_json(e, num));
        periods.push_back(std::move(p));
      }
      j["periods"] = std::move(periods);
      break;
    }
    case QueryType::relative: {
      RatioOptions options;
      options.guard_multiplier = q.ratio_guard;
      auto r = relative_effect(model, data, q.arms[0], q.arms[1], predicate, options);
      j["are"] = num(r.are, "are");
      j["variance"] = num(r.variance, "variance");
      j["std_error"] = num(std::sqrt(r.variance), "std_error");
      j["first_order"] = num(r.first_order, "first_order");
      Json c;
      c["er"] = num(r.components.er, "er");
      c["es"] = num(r.components.es, "es");
      c["var_r"] = num(r.components.var_r, "var_r");
      c["var_s"] = num(r.components.var_s, "var_s");
      c["cov_rs"] = num(r.components.cov_rs, "cov_rs");
      j["components"] = std::move(c);
      for (const auto& w : r.warnings) num.warnings.push_back(num.where + ": " + w);
      break;
    }
    case QueryType::prob_positive: {
      auto p = prob_positive(model, data, q.arms[0], q.arms[1], predicate);
      j["prob"] = num(p.prob, "prob");
      j["integration_error"] = num(p.error, "integration_error");
      break;
    }
    case QueryType::rank: {
      OrthantOptions options;
      options.seed = seed;
      options.tol = mvn_tol;
      auto arms = q.arms.empty() ? model.schema.arms() : q.arms;
      auto r = prob_best(model, data, arms, predicate, options);
      j["method"] = std::string(to_string(r.method));
      Json list = Json::array();
      for (const auto& a : r.arms) {
        Json e;
        e["arm"] = a.arm;
        e["prob_best"] = num(a.prob_best, "prob_best");
        e["integration_error"] = num(a.integration_error, "integration_error");
        list.push_back(std::move(e));
      }
      j["ranking"] = std::move(list);
      break;
    }
  }
  return j;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string build_report(const Dataset& data, const QueryConfig& config,
                         const std::string& data_bytes, const std::string& config_bytes,
                         const RunOptions& options) {
  const std::string started = utc_now();
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const bool partial = options.partial || config.partial;
  std::vector<std::string> warnings;

  check_config_against(config, data);
  for (std::size_t i = 0; i < config.queries.size(); ++i) {
    const auto& q = config.queries[i];
    if (needs_posterior(q) && !config.model.bayes && !options.flat_prior_ok)
      throw ValidationError("queries[" + std::to_string(i) + "] (" + std::string(to_string(q.type)) +
                            ") needs a posterior model: add a model.bayes block or pass "
                            "--flat-prior-ok to read the OLS fit as a flat-prior posterior");
  }

  ModelSpec spec;
  spec.reference_arm = config.model.reference_arm;
  spec.encodings = config.model.encodings;
  spec.interactions = config.model.interactions;
  spec.covariance_kind = config.model.covariance_kind;
  const DesignMatrix design = build_design(data, spec);
  warnings.insert(warnings.end(), design.warnings.begin(), design.warnings.end());

  std::optional<BayesPrior> prior;
  if (config.model.bayes) prior = config.model.bayes->resolve(design.schema.size());

  // One fit per distinct requirement, in order of first use.
  std::vector<std::string> fit_order;
  std::map<std::string, FitSlot> fits;
  for (const auto& q : config.queries) {
    const std::string key = fit_key(q, config.model);
    if (fits.count(key)) continue;
    fit_order.push_back(key);
    try {
      if (key == "bayes") {
        fits.emplace(key, fit_bayes(design, *prior));
      } else {
        auto model = fit_ols(design, effective_kind(q, config.model));
        if (key.rfind("flat_", 0) == 0) {
          model = as_flat_prior_posterior(std::move(model));
          warnings.push_back("model " + key +
                             ": OLS sampling distribution read as a flat-prior posterior "
                             "(--flat-prior-ok)");
        }
        fits.emplace(key, std::move(model));
      }
    } catch (const Error& e) {
      if (!partial) throw NumericError("model " + key + ": " + e.what());
      fits.emplace(key, FitFailure{e.kind(), e.what()});
      warnings.push_back("model " + key + " failed: " + e.what());
    }
  }

  Json models = Json::array();
  for (const auto& key : fit_order) {
    if (const auto* m = std::get_if<FittedModel>(&fits.at(key))) {
      models.push_back(model_summary(key, *m, warnings));
    } else {
      const auto& f = std::get<FitFailure>(fits.at(key));
      Json j;
      j["id"] = key;
      j["status"] = "error";
      j["error"] = f.message;
      models.push_back(std::move(j));
    }
  }

  const std::size_t count = config.queries.size();
  std::vector<Json> results(count);
  std::vector<std::vector<std::string>> query_warnings(count);
  parallel_for(count, options.workers, [&](std::size_t i) {
    const auto& q = config.queries[i];
    const std::string key = fit_key(q, config.model);
    Json j;
    j["index"] = i;
    if (q.id) j["id"] = *q.id;
    j["type"] = std::string(to_string(q.type));
    j["model"] = key;
    j["arms"] = q.arms.empty() ? Json::array() : Json(q.arms);
    j["predicate"] = q.predicate.empty() ? "true" : Predicate::parse(q.predicate).to_string();
    NumberSink num{query_warnings[i], "results[" + std::to_string(i) + "]"};
    try {
      const auto& slot = fits.at(key);
      if (const auto* f = std::get_if<FitFailure>(&slot)) {
        if (f->kind == ErrorKind::validation) throw ValidationError(f->message);
        throw NumericError(f->message);
      }
      Json body = answer(q, std::get<FittedModel>(slot), data, seed, config.mvn_tol, num);
      j["status"] = "ok";
      j.update(body);
    } catch (const Error& e) {
      // Once the inputs have validated, any failure while answering aborts
      // the run as a numeric failure.
      if (!partial) throw NumericError("queries[" + std::to_string(i) + "]: " + e.what());
      j["status"] = "error";
      j["error_kind"] = e.kind() == ErrorKind::validation ? "validation" : "numeric";
      j["error"] = e.what();
      query_warnings[i].push_back("results[" + std::to_string(i) + "] failed: " + e.what());
    }
    results[i] = std::move(j);
  });
  for (auto& w : query_warnings) warnings.insert(warnings.end(), w.begin(), w.end());

  Json report;
  report["report_version"] = kReportVersion;
  Json meta;
  meta["engine_version"] = EFFECT_ENGINE_VERSION;
  meta["input_digest"] = "sha256:" + sha256_hex(data_bytes);
  meta["config_digest"] = "sha256:" + sha256_hex(config_bytes);
  meta["seed"] = seed;
  meta["mvn_tol"] = config.mvn_tol;
  meta["flat_prior_ok"] = options.flat_prior_ok;
  meta["partial"] = partial;
  meta["rows"] = data.size();
  meta["started_at"] = started;
  meta["finished_at"] = utc_now();
  report["metadata"] = std::move(meta);
  report["models"] = std::move(models);
  report["results"] = Json(results);
  report["warnings"] = warnings;

  std::string out;
  write_json(report, out, 0);
  out += "\n";
  return out;
}

namespace {

std::string short_number(const Json& v) {
  if (!v.is_number()) return v.dump();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
  return buf;
}

}  // namespace

std::string render_text(const std::string& report_json) {
  const Json r = Json::parse(report_json);
  std::ostringstream out;
  out << "effect-engine report (version " << r["report_version"].get<std::string>() << ")\n";
  for (const auto& m : r["models"]) {
    out << "\nmodel " << m["id"].get<std::string>();
    if (m.value("status", "ok") == "error") {
      out << ": FAILED " << m["error"].get<std::string>() << "\n";
      continue;
    }
    out << "  n=" << m["n"] << " dof=" << m["dof"] << " covariance=" << m["covariance_kind"].get<std::string>()
        << "\n";
    for (std::size_t i = 0; i < m["columns"].size(); ++i) {
      out << "  " << m["columns"][i].get<std::string>() << "  " << short_number(m["beta"][i]) << "  (se "
          << short_number(m["std_errors"][i]) << ")\n";
    }
  }
  out << "\n";
  for (const auto& q : r["results"]) {
    out << "[" << q["index"] << "] " << q["type"].get<std::string>();
    if (!q["arms"].empty()) out << " " << q["arms"].dump();
    if (q["predicate"] != "true") out << " where " << q["predicate"].get<std::string>();
    out << ": ";
    if (q["status"] == "error") {
      out << "ERROR " << q["error"].get<std::string>() << "\n";
      continue;
    }
    const auto type = q["type"].get<std::string>();
    auto interval = [&](const Json& e) {
      out << short_number(e["estimate"]) << " (se " << short_number(e["std_error"]) << ", " << short_number(e["ci_level"]) << " CI ["
          << short_number(e["ci_low"]) << ", " << short_number(e["ci_high"]) << "])";
    };
    if (type == "dte") {
      out << "\n";
      for (const auto& p : q["periods"]) {
        out << "    period " << p["period"] << ": ";
        interval(p);
        out << "\n";
      }
      continue;
    }
    if (type == "relative") {
      out << "are " << short_number(q["are"]) << " (se " << short_number(q["std_error"]) << ", first order " << short_number(q["first_order"])
          << ")";
    } else if (type == "prob_positive") {
      out << "P(effect > 0) = " << short_number(q["prob"]);
    } else if (type == "rank") {
      out << "method " << q["method"].get<std::string>();
      for (const auto& a : q["ranking"])
        out << "\n    " << a["arm"].get<std::string>() << ": P(best) = " << short_number(a["prob_best"])
            << " +/- " << short_number(a["integration_error"]);
    } else {
      interval(q);
    }
    out << "\n";
  }
  if (!r["warnings"].empty()) {
    out << "\nwarnings:\n";
    for (const auto& w : r["warnings"]) out << "  - " << w.get<std::string>() << "\n";
  }
  return out.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write report to '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw ValidationError("failed writing report to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ValidationError("cannot move report into '" + path.string() + "': " + ec.message());
  }
}

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

RunOutcome run(const RunOptions& options) {
  RunOutcome outcome;
  try {
    const std::string config_bytes = read_file(options.config_path, "config file");
    const std::string data_bytes = read_file(options.data_path, "data file");
    const QueryConfig config = parse_config(config_bytes);
    const Dataset data = dataset_from_csv(data_bytes, config.columns);
    const std::string report = build_report(data, config, data_bytes, config_bytes, options);
    outcome.report_path = options.out_path.value_or(std::filesystem::path(config.output.path));
    write_atomically(outcome.report_path, config.output.format == "text" ? render_text(report) : report);
    outcome.exit_code = 0;
    outcome.message = "report written to " + outcome.report_path.string();
  } catch (const ValidationError& e) {
    outcome.exit_code = 1;
    outcome.message = std::string("validation error: ") + e.what();
  } catch (const NumericError& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("numeric failure: ") + e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("failure: ") + e.what();
  }
  return outcome;
}

}  // namespace effect_engine::io
