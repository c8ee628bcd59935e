#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gpcbf/confidence.hpp"
#include "gpcbf/control.hpp"
#include "gpcbf/gp.hpp"
#include "gpcbf/synthesis.hpp"

namespace gpcbf {

using Json = nlohmann::ordered_json;

/// Malformed input file; carries the location when known (1-based).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& field,
             const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A problem file: regions, inputs and the name of a builtin system that
/// provides g (and, in benchmark mode, the true drift).
struct ProblemFile {
  std::string system = "jet-engine";
  ProblemSpec spec;
};

ProblemFile builtin_problem(const std::string& name);
/// Throws std::invalid_argument for unknown names.
ControlAffineSystem builtin_system(const std::string& name);

Json to_json(const Box& b);
Json to_json(const ProblemFile& p);
ProblemFile problem_from_json(const Json& j, const std::string& source = "problem");

/// CSV with header x1..xn,y1..yn and %.17g values. Metadata (noise, seed)
/// goes into a JSON sidecar written next to it.
std::string training_set_to_csv(const TrainingSet& data);
TrainingSet training_set_from_csv(const std::string& text, int n,
                                  const std::string& source = "data");

Json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const Json& j, const std::string& source = "model");

/// Kernels, noise, the training data inline plus alpha. Reloading refits
/// and restores alpha bit for bit.
Json model_to_json(const GPPosterior& gp,
                   const std::optional<std::string>& training_data_ref = std::nullopt);
GPPosterior model_from_json(const Json& j, const std::string& source = "model");

Json to_json(const StdBound& b);
Json to_json(const ConfidenceBox& box);
ConfidenceBox confidence_box_from_json(const Json& j, const std::string& source = "bound");
Json to_json(const ContainmentEstimate& e);

Json to_json(const Certificate& c);
Json barrier_to_json(const BarrierCandidate& b, double margin,
                     const std::optional<Certificate>& certificate);
struct BarrierFile {
  BarrierCandidate candidate;
  double margin = 1.0;
  bool certified = false;
};
BarrierFile barrier_from_json(const Json& j, const std::string& source = "barrier");

Json to_json(const Counterexample& c);

/// t, x1..xn, u1..um, B, safe. The input columns of the last row repeat the
/// last applied input (empty for a single-state trajectory).
std::string trajectory_to_csv(const Trajectory& traj, int m);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: temp file then rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// printf %.17g, which round-trips every double.
std::string format_double(double v);

}  // namespace gpcbf
