#include "doctor/model/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "doctor/errors.hpp"

namespace doctor::model {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;

json config_to_json(const ModelConfig& cfg) {
  return {{"context_len", cfg.context_len},
          {"embed_dim", cfg.embed_dim},
          {"enc_layers", cfg.enc_layers},
          {"dec_layers", cfg.dec_layers},
          {"heads", cfg.heads},
          {"q_head_layers", cfg.q_head_layers},
          {"q_head_width", cfg.q_head_width},
          {"dropout", cfg.dropout},
          {"action_kind", to_string(cfg.action_kind)},
          {"state_dim", cfg.state_dim},
          {"action_dim", cfg.action_dim}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.context_len = j.at("context_len").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.enc_layers = j.at("enc_layers").get<int>();
  cfg.dec_layers = j.at("dec_layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.q_head_layers = j.at("q_head_layers").get<int>();
  cfg.q_head_width = j.at("q_head_width").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.action_kind = action_kind_from_string(j.at("action_kind").get<std::string>());
  cfg.state_dim = j.at("state_dim").get<int>();
  cfg.action_dim = j.at("action_dim").get<int>();
  cfg.validate();
  return cfg;
}

}  // namespace

void save_checkpoint(const Network& net, std::int64_t step, std::uint64_t seed,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  json header = {{"format_version", kFormatVersion},
                 {"kind", "checkpoint"},
                 {"config", config_to_json(net.config())},
                 {"step", step},
                 {"seed", seed}};
  out << header.dump() << "\n";
  net.params().visit([&](const std::string& name, const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    json rec = {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
    out << rec.dump() << "\n";
  });
  if (!out) throw IoError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
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
    if (header.at("kind").get<std::string>() != "checkpoint") {
      throw IoError(path + ": not a checkpoint file");
    }
    LoadedCheckpoint ck{Network(config_from_json(header.at("config"))),
                        header.at("step").get<std::int64_t>(),
                        header.at("seed").get<std::uint64_t>()};
    std::size_t record = 0;
    ck.net.params().visit([&](const std::string& name, Eigen::MatrixXd& m) {
      if (!std::getline(in, line)) {
        throw IoError(path + ": truncated file, tensor record " + std::to_string(record) +
                      " ('" + name + "') missing");
      }
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        throw IoError(path + ": tensor record " + std::to_string(record) + ": " + e.what());
      }
      if (rec.at("name").get<std::string>() != name) {
        throw IoError(path + ": tensor record " + std::to_string(record) + ": expected '" +
                      name + "', found '" + rec.at("name").get<std::string>() + "'");
      }
      auto rows = rec.at("rows").get<Eigen::Index>();
      auto cols = rec.at("cols").get<Eigen::Index>();
      if (rows != m.rows() || cols != m.cols()) {
        throw IoError(path + ": tensor '" + name + "' shape mismatch against config");
      }
      auto data = rec.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw IoError(path + ": tensor '" + name + "' element count mismatch");
      }
      Eigen::Index i = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
      }
      ++record;
    });
    return ck;
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace doctor::model
