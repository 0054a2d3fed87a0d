#include "tvhsd/detector.hpp"

#include "tvhsd/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace tvhsd::detector {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
  if (t.rank() == 1) return t.values();
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    rows.push_back(std::vector<double>(t.data().begin() + r * t.cols(),
                                       t.data().begin() + (r + 1) * t.cols()));
  }
  return rows;
}

Tensor tensor_from_json(const json& j, const ndgrad::Shape& shape, const std::string& name) {
  std::vector<double> flat;
  if (shape.size() == 1) {
    flat = j.get<std::vector<double>>();
  } else {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.size() != shape[0]) {
      throw FormatError(name + " has " + std::to_string(rows.size()) + " rows, expected " +
                        std::to_string(shape[0]));
    }
    for (const auto& row : rows) {
      if (row.size() != shape[1]) {
        throw FormatError(name + " has a row of length " + std::to_string(row.size()) +
                          ", expected " + std::to_string(shape[1]));
      }
      flat.insert(flat.end(), row.begin(), row.end());
    }
  }
  try {
    return Tensor(shape, std::move(flat));
  } catch (const ShapeError& e) {
    throw FormatError(name + ": " + e.what());
  }
}

json config_to_json(const DetectorConfig& c) {
  return json{{"text_dim", c.text_dim},         {"image_dim", c.image_dim},
              {"align_dim", c.align_dim},       {"state_size", c.state_size},
              {"se_reduction", c.se_reduction}, {"num_classes", c.num_classes},
              {"seed", c.seed}};
}

DetectorConfig config_from_json(const json& j) {
  DetectorConfig c;
  c.text_dim = j.at("text_dim").get<std::size_t>();
  c.image_dim = j.at("image_dim").get<std::size_t>();
  c.align_dim = j.at("align_dim").get<std::size_t>();
  c.state_size = j.at("state_size").get<std::size_t>();
  c.se_reduction = j.at("se_reduction").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  model.params.validate(model.config);
  json params = json::object();
  const auto ts = model.params.tensors();
  for (std::size_t i = 0; i < DetectorParams::kCount; ++i) {
    params[DetectorParams::names()[i]] = tensor_to_json(*ts[i]);
  }
  const json doc{{"format", "tvhsd-model"},
                 {"version", 1},
                 {"config", config_to_json(model.config)},
                 {"params", params},
                 {"tags", model.tags}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw FormatError("short write to " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  ModelFile model;
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != "tvhsd-model") throw FormatError(path.string() + " is not a model file");
    if (doc.at("version") != 1) {
      throw VersionError("unsupported model version " + doc.at("version").dump());
    }
    model.config = config_from_json(doc.at("config"));
    DetectorParams shapes = DetectorParams::zeros(model.config);
    const json& params = doc.at("params");
    auto ts = model.params.tensors();
    const auto reference = shapes.tensors();
    for (std::size_t i = 0; i < DetectorParams::kCount; ++i) {
      const std::string name = DetectorParams::names()[i];
      *ts[i] = tensor_from_json(params.at(name), reference[i]->shape(), name);
    }
    if (doc.contains("tags")) model.tags = doc.at("tags").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  model.params.validate(model.config);
  return model;
}

}  // namespace tvhsd::detector
