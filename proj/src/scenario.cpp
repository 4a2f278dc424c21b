#include "lageffect/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lageffect/keyvalue.hpp"

namespace lageffect {

namespace {

std::vector<std::string> indexed(const std::string& stem, int d) {
  std::vector<std::string> out;
  for (int j = 1; j <= d; ++j) out.push_back(stem + std::to_string(j));
  return out;
}

Eigen::VectorXd coef_from_named(const std::string& value,
                                const std::vector<std::string>& names,
                                const std::string& where) {
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<int>(names.size()));
  for (const auto& [name, v] : parse_named_values(value)) {
    bool found = false;
    for (int j = 0; j < static_cast<int>(names.size()); ++j) {
      if (names[j] == name) {
        coef[j] = v;
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(errc::invalid_config, where + ": unknown regressor '" + name + "'");
    }
  }
  return coef;
}

std::string named_from_coef(const Eigen::VectorXd& coef,
                            const std::vector<std::string>& names) {
  std::ostringstream out;
  bool first = true;
  for (int j = 0; j < coef.size(); ++j) {
    if (coef[j] == 0.0) continue;
    if (!first) out << ' ';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", coef[j]);
    out << names[j] << ':' << buf;
    first = false;
  }
  return out.str();
}

NoiseKind noise_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::None;
  if (s == "normal") return NoiseKind::Normal;
  if (s == "rademacher") return NoiseKind::Rademacher;
  if (s == "uniform") return NoiseKind::Uniform;
  throw Error(errc::invalid_config, "unknown noise kind '" + s + "'");
}

std::string noise_to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::Normal: return "normal";
    case NoiseKind::Rademacher: return "rademacher";
    case NoiseKind::Uniform: return "uniform";
  }
  return "none";
}

ContextFamily family_from_string(const std::string& s) {
  if (s == "bernoulli") return ContextFamily::Bernoulli;
  if (s == "normal") return ContextFamily::Normal;
  if (s == "uniform") return ContextFamily::Uniform;
  if (s == "constant") return ContextFamily::Constant;
  throw Error(errc::invalid_config, "unknown context family '" + s + "'");
}

std::string family_to_string(ContextFamily f) {
  switch (f) {
    case ContextFamily::Bernoulli: return "bernoulli";
    case ContextFamily::Normal: return "normal";
    case ContextFamily::Uniform: return "uniform";
    case ContextFamily::Constant: return "constant";
  }
  return "normal";
}

}  // namespace

std::vector<std::string> ScenarioSpec::context_regressor_names() const {
  std::vector<std::string> names = {"const", "aprev", "yprev"};
  for (const auto& n : indexed("xprev", context_dim)) names.push_back(n);
  return names;
}

std::vector<std::string> ScenarioSpec::decision_regressor_names() const {
  std::vector<std::string> names = {"const"};
  for (const auto& n : indexed("x", context_dim)) names.push_back(n);
  for (const auto& n : indexed("xsq", context_dim)) names.push_back(n);
  names.push_back("aprev");
  names.push_back("yprev");
  for (const auto& n : indexed("xprev", context_dim)) names.push_back(n);
  return names;
}

std::vector<std::string> ScenarioSpec::outcome_regressor_names() const {
  std::vector<std::string> names = {"const", "a"};
  for (const auto& n : indexed("x", context_dim)) names.push_back(n);
  for (const auto& n : indexed("xsq", context_dim)) names.push_back(n);
  names.push_back("aprev");
  names.push_back("yprev");
  for (const auto& n : indexed("xprev", context_dim)) names.push_back(n);
  for (const auto& n : indexed("aprev_x", context_dim)) names.push_back(n);
  return names;
}

std::vector<std::string> ScenarioSpec::continuation_regressor_names() const {
  std::vector<std::string> names = {"const", "a", "y"};
  for (const auto& n : indexed("x", context_dim)) names.push_back(n);
  return names;
}

void ScenarioSpec::validate() const {
  if (context_dim < 1) throw Error(errc::invalid_config, "context_dim must be >= 1");
  if (k_max < 1) throw Error(errc::invalid_config, "k_max must be >= 1");
  if (!(positivity_floor > 0.0 && positivity_floor < 0.5)) {
    throw Error(errc::invalid_config, "positivity_floor must be in (0, 0.5)");
  }
  if (static_cast<int>(context.size()) != context_dim) {
    throw Error(errc::invalid_config, "need one [context j] section per component");
  }
  if (static_cast<int>(column_names.size()) != context_dim) {
    throw Error(errc::invalid_config, "column_names size mismatch");
  }
  auto check = [&](const Eigen::VectorXd& coef, int expect, const std::string& what) {
    if (coef.size() != expect) {
      throw Error(errc::invalid_config, what + " coefficient size mismatch");
    }
  };
  for (const auto& c : context) check(c.coef, context_regressor_size(), "context");
  check(decision.coef, decision_regressor_size(), "decision");
  check(outcome.coef, outcome_regressor_size(), "outcome");
  check(continuation.coef, continuation_regressor_size(), "continuation");
  if (outcome.sd_coef.size() != 0) {
    check(outcome.sd_coef, outcome_regressor_size(), "outcome sd");
  }
}

ScenarioSpec ScenarioSpec::from_string(const std::string& text) {
  const KvDocument doc = KvDocument::parse(text);
  const KvSection& top = doc.require("scenario");
  ScenarioSpec spec;
  spec.label = top.get_or("label", "scenario");
  spec.context_dim = top.get_int("context_dim");
  spec.k_max = top.get_int_or("k_max", 50);
  spec.positivity_floor = top.get_double_or("positivity_floor", 0.01);
  if (top.has("columns")) {
    spec.column_names = split_list(top.get("columns"));
  } else {
    spec.column_names = indexed("x", spec.context_dim);
  }

  spec.context.resize(spec.context_dim);
  for (const KvSection* section : doc.all("context")) {
    const int j = std::stoi(section->arg);
    if (j < 1 || j > spec.context_dim) {
      throw Error(errc::invalid_config, "context index " + section->arg + " out of range");
    }
    ContextKernel kernel;
    kernel.family = family_from_string(section->get_or("family", "normal"));
    kernel.coef = coef_from_named(section->get_or("coef", ""), spec.context_regressor_names(),
                                  "context " + section->arg);
    kernel.scale = section->get_double_or("scale", 1.0);
    spec.context[j - 1] = kernel;
  }
  for (int j = 0; j < spec.context_dim; ++j) {
    if (spec.context[j].coef.size() == 0) {
      throw Error(errc::invalid_config, "missing [context " + std::to_string(j + 1) + "]");
    }
  }

  const KvSection& dec = doc.require("decision");
  spec.decision.coef =
      coef_from_named(dec.get_or("coef", ""), spec.decision_regressor_names(), "decision");

  const KvSection& outc = doc.require("outcome");
  spec.outcome.coef =
      coef_from_named(outc.get_or("coef", ""), spec.outcome_regressor_names(), "outcome");
  spec.outcome.noise = noise_from_string(outc.get_or("noise", "none"));
  spec.outcome.noise_scale = outc.get_double_or("scale", 0.0);
  if (outc.has("sd_coef")) {
    spec.outcome.sd_coef =
        coef_from_named(outc.get("sd_coef"), spec.outcome_regressor_names(), "outcome sd");
  }

  const KvSection& cont = doc.require("continuation");
  spec.continuation.coef = coef_from_named(cont.get_or("coef", ""),
                                           spec.continuation_regressor_names(), "continuation");
  spec.validate();
  return spec;
}

ScenarioSpec ScenarioSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::string ScenarioSpec::to_string() const {
  std::ostringstream out;
  out << "[scenario]\n";
  out << "label = " << label << '\n';
  out << "context_dim = " << context_dim << '\n';
  out << "k_max = " << k_max << '\n';
  out << "positivity_floor = " << positivity_floor << '\n';
  out << "columns =";
  for (const auto& c : column_names) out << ' ' << c;
  out << "\n\n";
  for (int j = 0; j < context_dim; ++j) {
    out << "[context " << (j + 1) << "]\n";
    out << "family = " << family_to_string(context[j].family) << '\n';
    out << "coef = " << named_from_coef(context[j].coef, context_regressor_names()) << '\n';
    out << "scale = " << context[j].scale << "\n\n";
  }
  out << "[decision]\n";
  out << "coef = " << named_from_coef(decision.coef, decision_regressor_names()) << "\n\n";
  out << "[outcome]\n";
  out << "coef = " << named_from_coef(outcome.coef, outcome_regressor_names()) << '\n';
  out << "noise = " << noise_to_string(outcome.noise) << '\n';
  out << "scale = " << outcome.noise_scale << '\n';
  if (outcome.sd_coef.size() != 0) {
    out << "sd_coef = " << named_from_coef(outcome.sd_coef, outcome_regressor_names()) << '\n';
  }
  out << '\n';
  out << "[continuation]\n";
  out << "coef = " << named_from_coef(continuation.coef, continuation_regressor_names())
      << '\n';
  return out.str();
}

}  // namespace lageffect
