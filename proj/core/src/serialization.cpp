#include "gpcbf/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gpcbf {

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& field, const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) +
                         (field.empty() ? std::string() : ": field '" + field + "'") +
                         ": " + message),
      line_(line),
      field_(field) {}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

Vector vector_from(const Json& j, const std::string& source, const std::string& field) {
  if (!j.is_array()) throw ParseError(source, 0, field, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(source, 0, field, "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json array_of(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

const Json& member(const Json& j, const char* key, const std::string& source) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(source, 0, key, "missing");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& source) {
  const Json& v = member(j, key, source);
  if (!v.is_number()) throw ParseError(source, 0, key, "expected a number");
  return v.get<double>();
}

int integer(const Json& j, const char* key, const std::string& source) {
  const Json& v = member(j, key, source);
  if (!v.is_number_integer()) throw ParseError(source, 0, key, "expected an integer");
  return v.get<int>();
}

Box box_from(const Json& j, const std::string& source, const std::string& field) {
  try {
    return Box(vector_from(member(j, "lower", source), source, field + ".lower"),
               vector_from(member(j, "upper", source), source, field + ".upper"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, field, e.what());
  }
}

}  // namespace

ProblemFile builtin_problem(const std::string& name) {
  if (name != "jet-engine") throw std::invalid_argument("unknown builtin problem '" + name + "'");
  return {name, jet_engine_problem()};
}

ControlAffineSystem builtin_system(const std::string& name) {
  if (name != "jet-engine") throw std::invalid_argument("unknown builtin system '" + name + "'");
  return jet_engine_system();
}

Json to_json(const Box& b) {
  return Json{{"lower", array_of(b.lower)}, {"upper", array_of(b.upper)}};
}

Json to_json(const ProblemFile& p) {
  Json j;
  j["system"] = p.system;
  j["n"] = p.spec.n;
  j["m"] = p.spec.m;
  j["state_box"] = to_json(p.spec.state_box);
  j["initial_boxes"] = Json::array();
  for (const auto& b : p.spec.initial_boxes) j["initial_boxes"].push_back(to_json(b));
  j["unsafe_boxes"] = Json::array();
  for (const auto& b : p.spec.unsafe_boxes) j["unsafe_boxes"].push_back(to_json(b));
  j["inputs"] = Json::array();
  for (const auto& u : p.spec.inputs) j["inputs"].push_back(array_of(u));
  return j;
}

ProblemFile problem_from_json(const Json& j, const std::string& source) {
  ProblemFile p;
  const Json& sys = member(j, "system", source);
  if (!sys.is_string()) throw ParseError(source, 0, "system", "expected a string");
  p.system = sys.get<std::string>();
  p.spec.n = integer(j, "n", source);
  p.spec.m = integer(j, "m", source);
  p.spec.state_box = box_from(member(j, "state_box", source), source, "state_box");
  for (const char* key : {"initial_boxes", "unsafe_boxes"}) {
    const Json& arr = member(j, key, source);
    if (!arr.is_array()) throw ParseError(source, 0, key, "expected an array of boxes");
    auto& out = std::string(key) == "initial_boxes" ? p.spec.initial_boxes : p.spec.unsafe_boxes;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(box_from(arr[i], source, std::string(key) + "[" + std::to_string(i) + "]"));
    }
  }
  const Json& inputs = member(j, "inputs", source);
  if (!inputs.is_array()) throw ParseError(source, 0, "inputs", "expected an array");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    p.spec.inputs.push_back(
        vector_from(inputs[i], source, "inputs[" + std::to_string(i) + "]"));
  }
  try {
    p.spec.validate();
    builtin_system(p.system);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, "", e.what());
  }
  return p;
}

std::string training_set_to_csv(const TrainingSet& data) {
  std::string out;
  const int n = data.dim();
  for (int d = 0; d < n; ++d) out += (d ? ",x" : "x") + std::to_string(d + 1);
  for (int d = 0; d < n; ++d) out += ",y" + std::to_string(d + 1);
  out += "\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int d = 0; d < n; ++d) {
      if (d) out += ",";
      out += format_double(data.states(i, d));
    }
    for (int d = 0; d < n; ++d) out += "," + format_double(data.targets(i, d));
    out += "\n";
  }
  return out;
}

TrainingSet training_set_from_csv(const std::string& text, int n,
                                  const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (!header_seen) {
      header_seen = true;
      if (!fields.empty() && !fields[0].empty() &&
          (std::isalpha(static_cast<unsigned char>(fields[0][0])) != 0)) {
        if (static_cast<int>(fields.size()) != 2 * n) {
          throw ParseError(source, lineno, "", "header has " + std::to_string(fields.size()) +
                                                   " columns, expected " + std::to_string(2 * n));
        }
        continue;
      }
    }
    if (static_cast<int>(fields.size()) != 2 * n) {
      throw ParseError(source, lineno, "", "expected " + std::to_string(2 * n) +
                                               " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (int k = 0; k < 2 * n; ++k) {
      const std::string name = (k < n ? "x" : "y") + std::to_string(k % n + 1);
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[k], &used);
        if (used != fields[k].size() || !std::isfinite(v)) throw std::invalid_argument("");
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(source, lineno, name, "not a finite number: '" + fields[k] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  TrainingSet data;
  data.states.resize(static_cast<Eigen::Index>(rows.size()), n);
  data.targets.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int d = 0; d < n; ++d) {
      data.states(i, d) = rows[i][d];
      data.targets(i, d) = rows[i][n + d];
    }
  }
  return data;
}

Json to_json(const KernelSpec& k) {
  return Json{{"kind", to_string(k.kind)},
              {"signal_variance", k.signal_variance},
              {"length_scales", array_of(k.length_scales)}};
}

KernelSpec kernel_from_json(const Json& j, const std::string& source) {
  KernelSpec k;
  const Json& kind = member(j, "kind", source);
  if (!kind.is_string()) throw ParseError(source, 0, "kind", "expected a string");
  try {
    k.kind = kernel_kind_from_string(kind.get<std::string>());
    k.signal_variance = number(j, "signal_variance", source);
    k.length_scales = vector_from(member(j, "length_scales", source), source, "length_scales");
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, "kernels", e.what());
  }
  return k;
}

Json model_to_json(const GPPosterior& gp,
                   const std::optional<std::string>& training_data_ref) {
  Json j;
  j["format"] = "gpcbf-gp-model";
  j["version"] = 1;
  j["kernels"] = Json::array();
  for (int d = 0; d < gp.dim(); ++d) j["kernels"].push_back(to_json(gp.kernel(d)));
  j["noise_std"] = gp.noise_std();
  if (training_data_ref) j["training_data_ref"] = *training_data_ref;
  const TrainingSet& data = gp.data();
  Json td;
  td["seed"] = data.seed;
  td["states"] = Json::array();
  td["targets"] = Json::array();
  for (int i = 0; i < data.size(); ++i) {
    td["states"].push_back(array_of(data.states.row(i).transpose()));
    td["targets"].push_back(array_of(data.targets.row(i).transpose()));
  }
  j["training_data"] = td;
  j["alpha"] = Json::array();
  j["jitter"] = Json::array();
  for (int d = 0; d < gp.dim(); ++d) {
    j["alpha"].push_back(array_of(gp.alpha(d)));
    j["jitter"].push_back(gp.jitter(d));
  }
  return j;
}

GPPosterior model_from_json(const Json& j, const std::string& source) {
  const Json& kernels = member(j, "kernels", source);
  if (!kernels.is_array() || kernels.empty()) {
    throw ParseError(source, 0, "kernels", "expected a non-empty array");
  }
  std::vector<KernelSpec> specs;
  for (const auto& k : kernels) specs.push_back(kernel_from_json(k, source));
  const int n = static_cast<int>(specs.size());

  TrainingSet data;
  data.noise_std = number(j, "noise_std", source);
  const Json& td = member(j, "training_data", source);
  const Json& states = member(td, "states", source);
  const Json& targets = member(td, "targets", source);
  if (!states.is_array() || !targets.is_array() || states.size() != targets.size()) {
    throw ParseError(source, 0, "training_data", "states and targets must be equal-length arrays");
  }
  if (td.contains("seed")) data.seed = td.at("seed").get<std::uint64_t>();
  data.states.resize(static_cast<Eigen::Index>(states.size()), n);
  data.targets.resize(static_cast<Eigen::Index>(states.size()), n);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string at = "training_data[" + std::to_string(i) + "]";
    const Vector x = vector_from(states[i], source, at + ".state");
    const Vector y = vector_from(targets[i], source, at + ".target");
    if (x.size() != n || y.size() != n) throw ParseError(source, 0, at, "wrong dimension");
    data.states.row(i) = x.transpose();
    data.targets.row(i) = y.transpose();
  }
  GPPosterior gp = GPPosterior::fit(data, specs);
  if (j.contains("alpha")) {
    const Json& alpha = j.at("alpha");
    if (!alpha.is_array() || static_cast<int>(alpha.size()) != n) {
      throw ParseError(source, 0, "alpha", "expected one weight vector per output");
    }
    for (int d = 0; d < n; ++d) {
      try {
        gp.set_alpha(d, vector_from(alpha[d], source, "alpha"));
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, 0, "alpha", e.what());
      }
    }
  }
  return gp;
}

Json to_json(const StdBound& b) {
  return Json{{"max_std", array_of(b.max_std)},
              {"grid_max_std", array_of(b.grid_max_std)},
              {"std_margin", array_of(b.std_margin)},
              {"grid_per_dim", b.grid_per_dim},
              {"mode", to_string(b.mode)}};
}

Json to_json(const ConfidenceBox& box) {
  Json j{{"half_widths", array_of(box.half_widths)},
         {"provenance", to_string(box.provenance)}};
  if (box.probability_lower_bound) j["probability_lower_bound"] = *box.probability_lower_bound;
  return j;
}

ConfidenceBox confidence_box_from_json(const Json& j, const std::string& source) {
  ConfidenceBox box;
  box.half_widths = vector_from(member(j, "half_widths", source), source, "half_widths");
  if ((box.half_widths.array() < 0.0).any()) {
    throw ParseError(source, 0, "half_widths", "must be non-negative");
  }
  const Json& prov = member(j, "provenance", source);
  if (prov == "analytic") {
    box.provenance = ConfidenceBox::Provenance::kAnalytic;
  } else if (prov == "monte-carlo-validated") {
    box.provenance = ConfidenceBox::Provenance::kMonteCarloValidated;
  } else {
    throw ParseError(source, 0, "provenance", "unknown value");
  }
  if (j.contains("probability_lower_bound")) {
    box.probability_lower_bound = number(j, "probability_lower_bound", source);
  }
  return box;
}

Json to_json(const ContainmentEstimate& e) {
  return Json{{"trials", e.trials},
              {"successes", e.successes},
              {"fraction", e.fraction()},
              {"lower_bound", e.lower_bound},
              {"upper_bound", e.upper_bound},
              {"confidence", e.confidence},
              {"seed", e.seed},
              {"grid_per_dim", e.grid_per_dim},
              {"trial_semantics", e.trial_semantics}};
}

Json to_json(const Certificate& c) {
  return Json{{"resolution", c.resolution},
              {"max_depth", c.max_depth},
              {"deepest_level", c.deepest_level},
              {"cells", c.cells},
              {"lipschitz_margins",
               {{"init", c.lipschitz_margins.init},
                {"unsafe", c.lipschitz_margins.unsafe},
                {"flow", c.lipschitz_margins.flow}}},
              {"init_upper", c.init_upper},
              {"unsafe_lower", c.unsafe_lower},
              {"flow_upper", c.flow_upper},
              {"verifier_mode", c.verifier_mode}};
}

Json barrier_to_json(const BarrierCandidate& b, double margin,
                     const std::optional<Certificate>& certificate) {
  Json j;
  j["format"] = "gpcbf-barrier";
  j["version"] = 1;
  j["n"] = b.basis.dim();
  j["degree"] = b.basis.degree();
  j["basis_ordering"] = "graded-lexicographic";
  j["monomials"] = Json::array();
  j["exponents"] = Json::array();
  for (int i = 0; i < b.basis.size(); ++i) {
    j["monomials"].push_back(b.basis.monomial_name(i));
    j["exponents"].push_back(b.basis.exponents()[i]);
  }
  j["coefficients"] = array_of(b.coefficients);
  j["margin"] = margin;
  j["A_max"] = b.basis.coefficient_bound();
  j["certified"] = certificate.has_value();
  j["certificate"] = certificate ? to_json(*certificate) : Json(nullptr);
  return j;
}

BarrierFile barrier_from_json(const Json& j, const std::string& source) {
  BarrierFile f;
  const int n = integer(j, "n", source);
  const int degree = integer(j, "degree", source);
  const double a_max = number(j, "A_max", source);
  const Json& order = member(j, "basis_ordering", source);
  if (order != "graded-lexicographic") {
    throw ParseError(source, 0, "basis_ordering", "only graded-lexicographic is supported");
  }
  try {
    f.candidate.basis = BarrierTemplate(n, degree, a_max);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, "degree", e.what());
  }
  f.candidate.coefficients = vector_from(member(j, "coefficients", source), source, "coefficients");
  if (f.candidate.coefficients.size() != f.candidate.basis.size()) {
    throw ParseError(source, 0, "coefficients",
                     "expected " + std::to_string(f.candidate.basis.size()) + " values");
  }
  f.margin = number(j, "margin", source);
  f.certified = j.contains("certified") && j.at("certified").is_boolean() &&
                j.at("certified").get<bool>();
  return f;
}

Json to_json(const Counterexample& c) {
  return Json{{"state", array_of(c.state)},
              {"violated_condition", to_string(c.violated_condition)},
              {"violation_margin", c.violation_margin}};
}

std::string trajectory_to_csv(const Trajectory& traj, int m) {
  std::string out = "t";
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  for (int d = 0; d < n; ++d) out += ",x" + std::to_string(d + 1);
  for (int k = 0; k < m; ++k) out += ",u" + std::to_string(k + 1);
  out += ",B,safe\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_double(traj.times[i]);
    for (int d = 0; d < n; ++d) out += "," + format_double(traj.states[i][d]);
    const Vector* u = nullptr;
    if (i < traj.inputs.size()) {
      u = &traj.inputs[i];
    } else if (!traj.inputs.empty()) {
      u = &traj.inputs.back();
    }
    for (int k = 0; k < m; ++k) out += "," + (u ? format_double((*u)[k]) : std::string());
    out += "," + format_double(traj.barrier_values[i]);
    out += traj.safe[i] ? ",1\n" : ",0\n";
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into a line number.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ParseError(path.string(), line, "", "invalid JSON");
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace gpcbf
