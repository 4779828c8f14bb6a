#include "chunkalign/config.hpp"

#include "chunkalign/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace chunkalign {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path.string());
}

KeyValueFile KeyValueFile::from_string(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (kv.values_.count(key)) {
      throw Error(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.values_[key] = value;
  }
  return kv;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long KeyValueFile::get_int(const std::string& key, long fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw Error(origin_ + ": key '" + key + "' is not an integer: " + it->second);
  }
}

double KeyValueFile::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw Error(origin_ + ": key '" + key + "' is not a number: " + it->second);
  }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error(origin_ + ": key '" + key + "' is not a boolean: " + it->second);
}

void KeyValueFile::finish() const {
  std::string unknown;
  for (const auto& [key, _] : values_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw Error(origin_ + ": unknown keys: " + unknown);
  }
}

PipelineConfig parse_pipeline_config(const std::filesystem::path& path) {
  KeyValueFile kv = KeyValueFile::parse(path);
  PipelineConfig c;

  c.chunk_dir = kv.get_string("chunk_dir", "");
  c.descriptor_file = kv.get_string("descriptor_file", "");
  c.output_dir = kv.get_string("output_dir", c.output_dir.string());
  const std::string override_path = kv.get_string("loop_pairs_file", "");
  if (!override_path.empty()) c.loop_pairs_override = override_path;

  c.chunk.chunk_size = static_cast<int>(kv.get_int("chunk_size", c.chunk.chunk_size));
  c.chunk.overlap = static_cast<int>(kv.get_int("overlap", c.chunk.overlap));

  c.irls.max_iterations =
      static_cast<int>(kv.get_int("irls_max_iterations", c.irls.max_iterations));
  const std::string huber = kv.get_string("huber_delta_mode", "mad_scaled");
  if (huber == "fixed") {
    c.irls.huber_delta_mode = HuberDeltaMode::kFixed;
  } else if (huber == "mad_scaled") {
    c.irls.huber_delta_mode = HuberDeltaMode::kMadScaled;
  } else {
    throw Error("huber_delta_mode must be 'fixed' or 'mad_scaled'");
  }
  c.irls.huber_delta = kv.get_double("huber_delta", c.irls.huber_delta);
  c.irls.huber_mad_factor = kv.get_double("huber_mad_factor", c.irls.huber_mad_factor);
  c.irls.convergence_tol = kv.get_double("irls_convergence_tol", c.irls.convergence_tol);
  c.irls.min_points = static_cast<int>(kv.get_int("irls_min_points", c.irls.min_points));

  c.extract.stride = static_cast<int>(kv.get_int("stride", c.extract.stride));
  c.extract.gate.median_factor =
      kv.get_double("gate_median_factor", c.extract.gate.median_factor);
  const std::string combine = kv.get_string("confidence_combine", "geometric_mean");
  if (combine == "geometric_mean") {
    c.extract.gate.combine = ConfidenceCombine::kGeometricMean;
  } else if (combine == "min") {
    c.extract.gate.combine = ConfidenceCombine::kMin;
  } else {
    throw Error("confidence_combine must be 'geometric_mean' or 'min'");
  }

  c.loop.similarity_threshold =
      kv.get_double("loop_similarity_threshold", c.loop.similarity_threshold);
  c.loop.min_separation =
      static_cast<int>(kv.get_int("loop_min_separation", c.loop.min_separation));
  c.loop.nms_window = static_cast<int>(kv.get_int("loop_nms_window", c.loop.nms_window));
  c.loop.max_candidates =
      static_cast<int>(kv.get_int("loop_max_candidates", c.loop.max_candidates));
  c.loop_half_width = static_cast<int>(kv.get_int("loop_half_width", c.loop_half_width));
  c.loop_residual_gate = kv.get_bool("loop_residual_gate", c.loop_residual_gate);
  c.loop_residual_gate_factor =
      kv.get_double("loop_residual_gate_factor", c.loop_residual_gate_factor);

  c.lm.max_iterations = static_cast<int>(kv.get_int("lm_max_iterations", c.lm.max_iterations));
  c.lm.initial_damping = kv.get_double("lm_initial_damping", c.lm.initial_damping);
  c.lm.damping_up = kv.get_double("lm_damping_up", c.lm.damping_up);
  c.lm.damping_down = kv.get_double("lm_damping_down", c.lm.damping_down);
  c.lm.cost_tol = kv.get_double("lm_cost_tol", c.lm.cost_tol);
  c.lm.step_tol = kv.get_double("lm_step_tol", c.lm.step_tol);
  const std::string jac = kv.get_string("lm_jacobian", "numeric");
  if (jac == "numeric") {
    c.lm.jacobian_mode = JacobianMode::kNumeric;
  } else if (jac == "analytic") {
    c.lm.jacobian_mode = JacobianMode::kAnalytic;
  } else {
    throw Error("lm_jacobian must be 'numeric' or 'analytic'");
  }

  c.export_opts.confidence_keep_factor =
      kv.get_double("keep_factor", c.export_opts.confidence_keep_factor);

  c.toggles.loop_closure = kv.get_bool("loop_closure", c.toggles.loop_closure);
  c.toggles.irls = kv.get_bool("irls", c.toggles.irls);
  c.toggles.confidence_weighting =
      kv.get_bool("confidence_weighting", c.toggles.confidence_weighting);

  c.cache_capacity =
      static_cast<std::size_t>(kv.get_int("cache_chunks", static_cast<long>(c.cache_capacity)));

  kv.finish();

  if (c.descriptor_file.empty() && !c.chunk_dir.empty()) {
    c.descriptor_file = c.chunk_dir / "descriptors.vgld";
  }
  return c;
}

void apply_environment(PipelineConfig& config) {
  if (const char* env = std::getenv("CHUNKALIGN_CACHE_CHUNKS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) throw std::out_of_range(env);
      config.cache_capacity = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw Error(std::string("CHUNKALIGN_CACHE_CHUNKS is not a positive integer: ") + env);
    }
  }
}

}  // namespace chunkalign
