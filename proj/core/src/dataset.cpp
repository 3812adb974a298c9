#include "doctor/dataset.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctor/errors.hpp"

namespace doctor {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

std::string to_string(ActionKind kind) {
  return kind == ActionKind::kContinuous ? "continuous" : "discrete";
}

ActionKind action_kind_from_string(const std::string& s) {
  if (s == "continuous") return ActionKind::kContinuous;
  if (s == "discrete") return ActionKind::kDiscrete;
  throw UsageError("unknown action kind: '" + s + "'");
}

double max_initial_return(const Dataset& ds) {
  double m = 0.0;
  bool first = true;
  for (const auto& traj : ds.trajectories) {
    if (traj.returns.empty()) continue;
    if (first || traj.returns[0] > m) m = traj.returns[0];
    first = false;
  }
  return first ? 0.0 : m;
}

void validate_dataset(const Dataset& ds) {
  if (ds.gamma < 0.0 || ds.gamma > 1.0) throw UsageError("dataset: gamma outside [0,1]");
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& t = ds.trajectories[i];
    const std::string where = "dataset: trajectory " + std::to_string(i);
    const std::size_t T = t.horizon();
    if (T == 0) throw UsageError(where + ": empty");
    if (t.states.size() != T || t.actions.size() != T || t.returns.size() != T) {
      throw UsageError(where + ": field lengths disagree");
    }
    const int act_width = ds.dims.action_kind == ActionKind::kDiscrete ? 1 : ds.dims.action_dim;
    for (std::size_t s = 0; s < T; ++s) {
      if (static_cast<int>(t.states[s].size()) != ds.dims.state_dim) {
        throw UsageError(where + ": state dim mismatch at step " + std::to_string(s));
      }
      if (static_cast<int>(t.actions[s].size()) != act_width) {
        throw UsageError(where + ": action dim mismatch at step " + std::to_string(s));
      }
      if (ds.dims.action_kind == ActionKind::kDiscrete) {
        double a = t.actions[s][0];
        if (a != std::floor(a) || a < 0 || a >= ds.dims.action_dim) {
          throw UsageError(where + ": invalid discrete action at step " + std::to_string(s));
        }
      }
    }
    // Return recursion, relative tolerance 1e-9.
    for (std::size_t s = 0; s + 1 < T; ++s) {
      double expect = t.rewards[s] + ds.gamma * t.returns[s + 1];
      double scale = std::max(1.0, std::abs(expect));
      if (std::abs(t.returns[s] - expect) > 1e-9 * scale) {
        throw UsageError(where + ": return recursion violated at step " + std::to_string(s));
      }
    }
    if (t.returns[T - 1] != t.rewards[T - 1]) {
      throw UsageError(where + ": terminal return must equal terminal reward");
    }
  }
  if (ds.r_max != max_initial_return(ds)) {
    throw UsageError("dataset: stored r_max does not match trajectories");
  }
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  json header = {
      {"format_version", kFormatVersion},
      {"kind", "dataset"},
      {"env_id", ds.env_id},
      {"gamma", ds.gamma},
      {"state_dim", ds.dims.state_dim},
      {"action_dim", ds.dims.action_dim},
      {"action_kind", to_string(ds.dims.action_kind)},
      {"r_max", ds.r_max},
      {"n_trajectories", ds.trajectories.size()},
  };
  out << header.dump() << "\n";
  for (const auto& t : ds.trajectories) {
    json rec = {{"states", t.states}, {"actions", t.actions}, {"rewards", t.rewards}};
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header record");

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(path + ": header record: " + e.what());
  }
  Dataset ds;
  try {
    int version = header.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw IoError(path + ": unsupported format_version " + std::to_string(version) +
                    " (expected " + std::to_string(kFormatVersion) + ")");
    }
    if (header.at("kind").get<std::string>() != "dataset") {
      throw IoError(path + ": not a dataset file");
    }
    ds.env_id = header.at("env_id").get<std::string>();
    ds.gamma = header.at("gamma").get<double>();
    ds.dims.state_dim = header.at("state_dim").get<int>();
    ds.dims.action_dim = header.at("action_dim").get<int>();
    ds.dims.action_kind = action_kind_from_string(header.at("action_kind").get<std::string>());
    ds.r_max = header.at("r_max").get<double>();
    std::size_t n = header.at("n_trajectories").get<std::size_t>();
    ds.trajectories.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) {
        throw IoError(path + ": truncated file, trajectory record " + std::to_string(i) +
                      " missing");
      }
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        throw IoError(path + ": trajectory record " + std::to_string(i) + ": " + e.what());
      }
      Trajectory t;
      try {
        t.states = rec.at("states").get<std::vector<std::vector<double>>>();
        t.actions = rec.at("actions").get<std::vector<std::vector<double>>>();
        t.rewards = rec.at("rewards").get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw IoError(path + ": trajectory record " + std::to_string(i) + ": " + e.what());
      }
      if (t.rewards.empty()) {
        throw IoError(path + ": trajectory record " + std::to_string(i) + ": empty rewards");
      }
      t.returns = compute_returns(t.rewards, ds.gamma);
      ds.trajectories.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": header record: " + e.what());
  }
  try {
    validate_dataset(ds);
  } catch (const UsageError& e) {
    throw IoError(path + ": " + e.what());
  }
  return ds;
}

}  // namespace doctor
