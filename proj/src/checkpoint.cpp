#include "gcrn/checkpoint.hpp"

#include "json.hpp"

#include "gcrn/dataset_io.hpp"

namespace gcrn {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr int kCheckpointVersion = 1;

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.data;
  return j;
}

Matrix matrix_from_json(const json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) {
    throw ShapeError("checkpoint: matrix declared " + std::to_string(m.rows) +
                     "x" + std::to_string(m.cols) + " but stores " +
                     std::to_string(m.data.size()) + " values");
  }
  return m;
}

template <typename ModelT>
ordered_json stack_to_json(const ModelT& model) {
  ordered_json j;
  j["input_dim"] = model.config.input_dim;
  j["hidden"] = model.config.hidden;
  j["num_classes"] = model.config.num_classes;
  ordered_json layers = ordered_json::array();
  for (const GcnLayerParams& layer : model.layers) {
    ordered_json l;
    l["weight"] = matrix_to_json(layer.weight);
    l["bias"] = layer.bias;
    l["projection"] =
        layer.projection ? matrix_to_json(*layer.projection) : ordered_json();
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["head_weight"] = matrix_to_json(model.head_weight);
  j["head_bias"] = model.head_bias;
  return j;
}

// Parses the shared layer-stack payload and verifies every stored shape
// against the declared configuration.
template <typename ModelT, typename ConfigT>
ModelT stack_from_json(const json& j) {
  ModelT model;
  ConfigT config;
  config.input_dim = j.at("input_dim").get<int>();
  config.hidden = j.at("hidden").get<std::vector<int>>();
  config.num_classes = j.at("num_classes").get<int>();
  model.config = config;

  const json& layers = j.at("layers");
  if (layers.size() != config.hidden.size()) {
    throw ShapeError("checkpoint: " + std::to_string(layers.size()) +
                     " layers stored for " +
                     std::to_string(config.hidden.size()) + " hidden widths");
  }
  std::size_t in_dim = static_cast<std::size_t>(config.input_dim);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t out_dim = static_cast<std::size_t>(config.hidden[l]);
    GcnLayerParams layer;
    layer.weight = matrix_from_json(layers[l].at("weight"));
    layer.bias = layers[l].at("bias").get<std::vector<double>>();
    if (layer.weight.rows != in_dim || layer.weight.cols != out_dim ||
        layer.bias.size() != out_dim) {
      throw ShapeError("checkpoint: layer " + std::to_string(l) +
                       " shapes do not match config");
    }
    const json& proj = layers[l].at("projection");
    if (!proj.is_null()) {
      layer.projection = matrix_from_json(proj);
      if (layer.projection->rows != in_dim || layer.projection->cols != out_dim) {
        throw ShapeError("checkpoint: layer " + std::to_string(l) +
                         " projection shape does not match config");
      }
    } else if (in_dim != out_dim) {
      throw ShapeError("checkpoint: layer " + std::to_string(l) +
                       " needs a projection for " + std::to_string(in_dim) +
                       " -> " + std::to_string(out_dim));
    }
    model.layers.push_back(std::move(layer));
    in_dim = out_dim;
  }
  model.head_weight = matrix_from_json(j.at("head_weight"));
  model.head_bias = j.at("head_bias").get<std::vector<double>>();
  if (model.head_weight.rows != in_dim ||
      model.head_weight.cols != static_cast<std::size_t>(config.num_classes) ||
      model.head_bias.size() != static_cast<std::size_t>(config.num_classes)) {
    throw ShapeError("checkpoint: head shapes do not match config");
  }
  return model;
}

json parse_checkpoint(const std::string& text, const std::string& expected_kind) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointTruncatedError("checkpoint unreadable at byte " +
                                   std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    throw CheckpointTruncatedError(std::string("checkpoint unreadable: ") +
                                   e.what());
  }
  if (!root.is_object() || !root.contains("version")) {
    throw CheckpointTruncatedError("checkpoint has no version field");
  }
  const int version = root.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
  }
  const std::string kind = root.value("kind", "");
  if (kind != expected_kind) {
    throw ValidationError("checkpoint kind '" + kind + "', expected '" +
                          expected_kind + "'");
  }
  return root;
}

template <typename Fn>
auto convert_payload(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw CheckpointTruncatedError(std::string("checkpoint payload: ") +
                                   e.what());
  }
}

}  // namespace

std::string gcn_to_checkpoint(const GcnModel& model) {
  ordered_json root;
  root["version"] = kCheckpointVersion;
  root["kind"] = "gcn";
  root["model"] = stack_to_json(model);
  return root.dump();
}

GcnModel gcn_from_checkpoint(const std::string& text) {
  const json root = parse_checkpoint(text, "gcn");
  return convert_payload([&] {
    return stack_from_json<GcnModel, GcnConfig>(root.at("model"));
  });
}

std::string mlp_to_checkpoint(const MlpModel& model) {
  ordered_json root;
  root["version"] = kCheckpointVersion;
  root["kind"] = "mlp";
  root["model"] = stack_to_json(model);
  return root.dump();
}

MlpModel mlp_from_checkpoint(const std::string& text) {
  const json root = parse_checkpoint(text, "mlp");
  return convert_payload([&] {
    return stack_from_json<MlpModel, MlpConfig>(root.at("model"));
  });
}

std::string gcrn_to_checkpoint(const Gcrn& gcrn) {
  ordered_json root;
  root["version"] = kCheckpointVersion;
  root["kind"] = "gcrn";
  root["num_classes"] = gcrn.num_classes;
  root["appearance_dim"] = gcrn.appearance_dim;
  root["repg_pretrained"] = gcrn.repg_pretrained;
  root["repg"] = stack_to_json(gcrn.repg);
  root["cong"] = stack_to_json(gcrn.cong);
  return root.dump();
}

Gcrn gcrn_from_checkpoint(const std::string& text) {
  const json root = parse_checkpoint(text, "gcrn");
  return convert_payload([&] {
    Gcrn g;
    g.num_classes = root.at("num_classes").get<int>();
    g.appearance_dim = root.at("appearance_dim").get<int>();
    g.repg_pretrained = root.at("repg_pretrained").get<bool>();
    g.repg = stack_from_json<GcnModel, GcnConfig>(root.at("repg"));
    g.cong = stack_from_json<GcnModel, GcnConfig>(root.at("cong"));
    if (g.repg.config.num_classes != g.num_classes ||
        g.cong.config.num_classes != g.num_classes) {
      throw ShapeError("checkpoint: model heads disagree with num_classes");
    }
    if (g.repg.config.input_dim != g.appearance_dim + 11) {
      throw ShapeError("checkpoint: RepG input dim " +
                       std::to_string(g.repg.config.input_dim) +
                       " does not match appearance_dim " +
                       std::to_string(g.appearance_dim));
    }
    if (g.cong.config.input_dim != g.num_classes + 11) {
      throw ShapeError("checkpoint: ConG input dim " +
                       std::to_string(g.cong.config.input_dim) +
                       " does not match num_classes " +
                       std::to_string(g.num_classes));
    }
    return g;
  });
}

void save_gcrn(const Gcrn& gcrn, const std::string& path) {
  write_file(path, gcrn_to_checkpoint(gcrn));
}

Gcrn load_gcrn(const std::string& path) {
  return gcrn_from_checkpoint(read_file(path));
}

void save_classifier(const ContextFreeClassifier& classifier,
                     const std::string& path) {
  write_file(path, mlp_to_checkpoint(classifier.model));
}

ContextFreeClassifier load_classifier(const std::string& path) {
  ContextFreeClassifier c;
  c.model = mlp_from_checkpoint(read_file(path));
  return c;
}

}  // namespace gcrn
