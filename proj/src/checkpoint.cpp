#include "medmesh/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "medmesh/error.hpp"

namespace medmesh {

namespace {

using json = nlohmann::json;

json config_to_json(const NetworkConfig& c) {
  return json{{"arch", c.arch},
              {"ncf", c.ncf},
              {"pool_res", c.pool_res},
              {"ninput_edges", c.ninput_edges},
              {"res_blocks", c.res_blocks},
              {"init_type", c.init_type},
              {"init_gain", c.init_gain},
              {"num_classes", c.num_classes},
              {"norm_inference", c.norm_inference}};
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig c;
  c.arch = j.at("arch").get<std::string>();
  c.ncf = j.at("ncf").get<std::vector<int>>();
  c.pool_res = j.at("pool_res").get<std::vector<std::size_t>>();
  c.ninput_edges = j.at("ninput_edges").get<std::size_t>();
  c.res_blocks = j.at("res_blocks").get<int>();
  c.init_type = j.at("init_type").get<std::string>();
  c.init_gain = j.at("init_gain").get<double>();
  c.num_classes = j.at("num_classes").get<int>();
  c.norm_inference = j.at("norm_inference").get<std::string>();
  return c;
}

json arrays_to_json(const std::vector<std::span<double>>& arrays) {
  json out = json::array();
  for (std::span<double> a : arrays) out.push_back(std::vector<double>(a.begin(), a.end()));
  return out;
}

void arrays_from_json(const json& j, const std::vector<std::span<double>>& arrays, const char* what) {
  if (!j.is_array() || j.size() != arrays.size())
    throw Error(ErrorKind::IoError, std::string("checkpoint ") + what + " count mismatch");
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const auto values = j[i].get<std::vector<double>>();
    if (values.size() != arrays[i].size())
      throw Error(ErrorKind::IoError,
                  std::string("checkpoint ") + what + " " + std::to_string(i) + " has wrong size");
    std::copy(values.begin(), values.end(), arrays[i].begin());
  }
}

}  // namespace

void save_checkpoint(const MeshUNet& net, const std::filesystem::path& path) {
  UNetParams params = net.params();
  json doc{{"format", "medmesh-checkpoint"},
           {"version", kCheckpointVersion},
           {"config", config_to_json(net.config())},
           {"tensors", arrays_to_json(params.tensors())},
           {"buffers", arrays_to_json(params.buffers())}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << doc.dump();
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

MeshUNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("format") != "medmesh-checkpoint")
      throw Error(ErrorKind::IoError, path.string() + " is not a checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw Error(ErrorKind::IoError, "unsupported checkpoint version " + doc.at("version").dump());
    MeshUNet net(config_from_json(doc.at("config")), 0);
    arrays_from_json(doc.at("tensors"), net.params().tensors(), "tensor");
    arrays_from_json(doc.at("buffers"), net.params().buffers(), "buffer");
    return net;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
}

MeshUNet load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected) {
  MeshUNet net = load_checkpoint(path);
  if (!(net.config() == expected))
    throw Error(ErrorKind::ConfigError, path.string() + " was trained with a different network config");
  return net;
}

}  // namespace medmesh
