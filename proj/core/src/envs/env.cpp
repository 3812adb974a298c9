#include "doctor/envs/env.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "doctor/envs/chain.hpp"
#include "doctor/envs/dial.hpp"
#include "doctor/envs/maze.hpp"
#include "doctor/envs/treatment.hpp"
#include "doctor/errors.hpp"

namespace doctor::envs {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kSpecVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw IoError("ragged matrix in env spec");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json spec_record(const Env& env) {
  if (const auto* dial = dynamic_cast<const DialEnv*>(&env)) {
    return {{"horizon", dial->spec().horizon}};
  }
  if (const auto* maze = dynamic_cast<const MazeEnv*>(&env)) {
    const auto& s = maze->spec();
    return {{"dt", s.dt},           {"damping", s.damping},
            {"horizon", s.horizon}, {"box_min", s.box_min},
            {"box_max", s.box_max}, {"wall_x", s.wall_x},
            {"wall_y_min", s.wall_y_min}, {"start", s.start},
            {"start_noise", s.start_noise}, {"goal", s.goal}};
  }
  if (const auto* treat = dynamic_cast<const TreatmentEnv*>(&env)) {
    const auto& s = treat->spec();
    return {{"n_states", s.n_states},
            {"n_actions", s.n_actions},
            {"obs_dim", s.obs_dim},
            {"kappa", s.kappa},
            {"remission_reward", s.remission_reward},
            {"treatment_cost", s.treatment_cost},
            {"symptom_cost", s.symptom_cost},
            {"max_steps", s.max_steps},
            {"seed", s.seed},
            {"base_transitions", matrix_to_json(s.base_transitions)},
            {"modulation", matrix_to_json(s.modulation)},
            {"remission_prob", matrix_to_json(s.remission_prob)},
            {"adverse_prob", matrix_to_json(s.adverse_prob)},
            {"obs_mean", matrix_to_json(s.obs_mean)},
            {"obs_std", matrix_to_json(s.obs_std)},
            {"symptom_shift", matrix_to_json(s.symptom_shift)},
            {"initial_dist", vector_to_json(s.initial_dist)},
            {"soc_q0", vector_to_json(s.soc_q0)}};
  }
  if (const auto* chain = dynamic_cast<const ChainEnv*>(&env)) {
    const auto& s = chain->spec();
    json trans = json::array();
    for (const auto& t : s.transitions) trans.push_back(matrix_to_json(t));
    return {{"n_states", s.n_states},
            {"n_actions", s.n_actions},
            {"horizon", s.horizon},
            {"reward", matrix_to_json(s.reward)},
            {"transitions", trans}};
  }
  throw UsageError("save_env_spec: unknown env type");
}

std::unique_ptr<Env> env_from_record(const std::string& env_id, const json& rec) {
  if (env_id == "dial") {
    DialEnvSpec spec;
    spec.horizon = rec.at("horizon").get<int>();
    return std::make_unique<DialEnv>(spec);
  }
  if (env_id == "maze") {
    MazeEnvSpec spec;
    spec.dt = rec.at("dt").get<double>();
    spec.damping = rec.at("damping").get<double>();
    spec.horizon = rec.at("horizon").get<int>();
    spec.box_min = rec.at("box_min").get<std::array<double, 2>>();
    spec.box_max = rec.at("box_max").get<std::array<double, 2>>();
    spec.wall_x = rec.at("wall_x").get<double>();
    spec.wall_y_min = rec.at("wall_y_min").get<double>();
    spec.start = rec.at("start").get<std::array<double, 2>>();
    spec.start_noise = rec.at("start_noise").get<double>();
    spec.goal = rec.at("goal").get<std::array<double, 2>>();
    return std::make_unique<MazeEnv>(spec);
  }
  if (env_id.rfind("treatment:", 0) == 0) {
    TreatmentEnvSpec spec;
    spec.n_states = rec.at("n_states").get<int>();
    spec.n_actions = rec.at("n_actions").get<int>();
    spec.obs_dim = rec.at("obs_dim").get<int>();
    spec.kappa = rec.at("kappa").get<double>();
    spec.remission_reward = rec.at("remission_reward").get<double>();
    spec.treatment_cost = rec.at("treatment_cost").get<double>();
    spec.symptom_cost = rec.at("symptom_cost").get<double>();
    spec.max_steps = rec.at("max_steps").get<int>();
    spec.seed = rec.at("seed").get<std::uint64_t>();
    spec.base_transitions = matrix_from_json(rec.at("base_transitions"));
    spec.modulation = matrix_from_json(rec.at("modulation"));
    spec.remission_prob = matrix_from_json(rec.at("remission_prob"));
    spec.adverse_prob = matrix_from_json(rec.at("adverse_prob"));
    spec.obs_mean = matrix_from_json(rec.at("obs_mean"));
    spec.obs_std = matrix_from_json(rec.at("obs_std"));
    spec.symptom_shift = matrix_from_json(rec.at("symptom_shift"));
    spec.initial_dist = vector_from_json(rec.at("initial_dist"));
    spec.soc_q0 = vector_from_json(rec.at("soc_q0"));
    return std::make_unique<TreatmentEnv>(spec);
  }
  if (env_id == "chain") {
    ChainMdpSpec spec;
    spec.n_states = rec.at("n_states").get<int>();
    spec.n_actions = rec.at("n_actions").get<int>();
    spec.horizon = rec.at("horizon").get<int>();
    spec.reward = matrix_from_json(rec.at("reward"));
    for (const auto& t : rec.at("transitions")) spec.transitions.push_back(matrix_from_json(t));
    return std::make_unique<ChainEnv>(spec);
  }
  throw UsageError("unknown env_id: '" + env_id + "'");
}

}  // namespace

std::unique_ptr<Env> make_env(const std::string& env_id, const Config& cfg) {
  if (env_id == "dial") {
    DialEnvSpec spec;
    spec.horizon = static_cast<int>(cfg.get_int("env.dial.horizon", spec.horizon));
    return std::make_unique<DialEnv>(spec);
  }
  if (env_id == "maze") {
    MazeEnvSpec spec;
    spec.horizon = static_cast<int>(cfg.get_int("env.maze.horizon", spec.horizon));
    return std::make_unique<MazeEnv>(spec);
  }
  if (env_id.rfind("treatment:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(env_id.substr(10));
    } catch (const std::exception&) {
      throw UsageError("bad treatment env id (want treatment:<seed>): '" + env_id + "'");
    }
    return std::make_unique<TreatmentEnv>(make_treatment_spec(seed, cfg));
  }
  if (env_id == "chain") {
    auto spec = ChainMdpSpec::line_walk(
        static_cast<int>(cfg.get_int("env.chain.n_states", 5)),
        static_cast<int>(cfg.get_int("env.chain.horizon", 6)),
        cfg.get_double("env.chain.p_slip", 0.1));
    return std::make_unique<ChainEnv>(spec);
  }
  throw UsageError("unknown env_id: '" + env_id + "'");
}

void save_env_spec(const Env& env, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  json header = {{"format_version", kFormatVersion},
                 {"kind", "envspec"},
                 {"spec_version", kSpecVersion},
                 {"env_id", env.env_id()}};
  out << header.dump() << "\n";
  out << spec_record(env).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::unique_ptr<Env> load_env_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": missing header record");
  try {
    json header = json::parse(line);
    int version = header.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw IoError(path + ": unsupported format_version " + std::to_string(version));
    }
    if (header.at("kind").get<std::string>() != "envspec") {
      throw IoError(path + ": not an env spec file");
    }
    int spec_version = header.at("spec_version").get<int>();
    if (spec_version != kSpecVersion) {
      throw IoError(path + ": unsupported spec_version " + std::to_string(spec_version));
    }
    std::string env_id = header.at("env_id").get<std::string>();
    if (!std::getline(in, line)) throw IoError(path + ": missing spec record");
    return env_from_record(env_id, json::parse(line));
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace doctor::envs
