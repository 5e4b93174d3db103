#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "loadcast/base64.hpp"
#include "loadcast/features/scaler.hpp"
#include "loadcast/neural/model.hpp"

namespace loadcast {

/**
 * Portable model snapshot.
 *
 * JSON document:
 *   format_version     1
 *   feature_schema_id  "v1-18ch"
 *   model_config       layer sizes
 *   layers             [{name, shape, dtype: "f64le", data: base64}], trainable
 *                      tensors and batch-norm running statistics
 *   scaler             {mean: [19], std: [19]}
 */
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  std::string feature_schema_id = schema::kId;
  Model model;
  Scaler scaler;
};

namespace detail {

inline std::string encode_f64le(std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k)
      bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return base64::encode(bytes);
}

inline std::vector<double> decode_f64le(const std::string &text, std::size_t expected,
                                        const std::string &name) {
  const auto bytes = base64::decode(text);
  if (!bytes)
    throw CheckpointError(CheckpointError::Kind::CorruptPayload,
                          "checkpoint: layer '" + name + "' payload is not valid base64");
  if (bytes->size() != expected * 8)
    throw CheckpointError(CheckpointError::Kind::CorruptPayload,
                          "checkpoint: layer '" + name + "' payload has " +
                              std::to_string(bytes->size()) + " bytes, expected " +
                              std::to_string(expected * 8));
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
      bits |= static_cast<std::uint64_t>((*bytes)[i * 8 + k]) << (8 * k);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

} // namespace detail

inline nlohmann::json model_config_to_json(const ModelConfig &c) {
  return {{"input_steps", c.input_steps}, {"output_steps", c.output_steps},
          {"features", c.features},       {"hidden1", c.hidden1},
          {"hidden2", c.hidden2},         {"dense_units", c.dense_units}};
}

inline ModelConfig model_config_from_json(const nlohmann::json &j) {
  ModelConfig c;
  c.input_steps = j.at("input_steps").get<std::size_t>();
  c.output_steps = j.at("output_steps").get<std::size_t>();
  c.features = j.at("features").get<std::size_t>();
  c.hidden1 = j.at("hidden1").get<std::size_t>();
  c.hidden2 = j.at("hidden2").get<std::size_t>();
  c.dense_units = j.at("dense_units").get<std::size_t>();
  return c;
}

inline nlohmann::json checkpoint_to_json(const Checkpoint &ckpt) {
  nlohmann::json layers = nlohmann::json::array();
  visit_tensors(
      ckpt.model,
      [&](const std::string &name, const Tensor &t) {
        layers.push_back({{"name", name},
                          {"shape", t.shape()},
                          {"dtype", "f64le"},
                          {"data", detail::encode_f64le(t.data())}});
      },
      true);
  return {{"format_version", ckpt.format_version},
          {"feature_schema_id", ckpt.feature_schema_id},
          {"model_config", model_config_to_json(ckpt.model.config)},
          {"layers", layers},
          {"scaler", {{"mean", ckpt.scaler.mean}, {"std", ckpt.scaler.stddev}}}};
}

/// Parses and validates a checkpoint document. An empty expected_schema
/// skips the schema check.
inline Checkpoint checkpoint_from_json(const nlohmann::json &j,
                                       const std::string &expected_schema = schema::kId) {
  using Kind = CheckpointError::Kind;
  try {
    Checkpoint ckpt;
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != Checkpoint::kFormatVersion)
      throw CheckpointError(Kind::Version, "checkpoint: unsupported format_version " +
                                               std::to_string(ckpt.format_version));
    ckpt.feature_schema_id = j.at("feature_schema_id").get<std::string>();
    if (!expected_schema.empty() && ckpt.feature_schema_id != expected_schema)
      throw CheckpointError(Kind::Schema, "checkpoint: feature schema '" +
                                              ckpt.feature_schema_id + "' but '" +
                                              expected_schema + "' is expected");
    ckpt.model = Model::zeros(model_config_from_json(j.at("model_config")));

    std::map<std::string, const nlohmann::json *> by_name;
    for (const auto &entry : j.at("layers"))
      by_name[entry.at("name").get<std::string>()] = &entry;
    visit_tensors(
        ckpt.model,
        [&](const std::string &name, Tensor &t) {
          const auto it = by_name.find(name);
          if (it == by_name.end())
            throw CheckpointError(Kind::CorruptPayload, "checkpoint: missing layer '" + name + "'");
          const nlohmann::json &e = *it->second;
          if (e.at("dtype").get<std::string>() != "f64le")
            throw CheckpointError(Kind::CorruptPayload,
                                  "checkpoint: layer '" + name + "' has unsupported dtype");
          const auto shape = e.at("shape").get<Shape>();
          if (shape != t.shape())
            throw CheckpointError(Kind::CorruptPayload, "checkpoint: layer '" + name +
                                                            "' has shape " + shape_str(shape) +
                                                            ", expected " + shape_str(t.shape()));
          t = Tensor(shape, detail::decode_f64le(e.at("data").get<std::string>(), t.size(), name));
        },
        true);
    if (by_name.size() != trainable_parameters(ckpt.model).size() + 4)
      throw CheckpointError(Kind::CorruptPayload, "checkpoint: unexpected layer entries");

    const auto &sc = j.at("scaler");
    ckpt.scaler.mean = sc.at("mean").get<std::vector<double>>();
    ckpt.scaler.stddev = sc.at("std").get<std::vector<double>>();
    if (ckpt.scaler.mean.size() != schema::kChannels + 1 ||
        ckpt.scaler.stddev.size() != schema::kChannels + 1)
      throw CheckpointError(Kind::CorruptPayload, "checkpoint: scaler must have 19 entries");
    validate_model(ckpt.model);
    return ckpt;
  } catch (const CheckpointError &) {
    throw;
  } catch (const std::exception &e) {
    throw CheckpointError(Kind::CorruptPayload, std::string("checkpoint: ") + e.what());
  }
}

inline void checkpoint_save(const Checkpoint &ckpt, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out)
    throw CheckpointError(CheckpointError::Kind::Io, "failed writing checkpoint " + path.string());
}

inline Checkpoint checkpoint_load(const std::filesystem::path &path,
                                  const std::string &expected_schema = schema::kId) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CheckpointError(CheckpointError::Kind::Io, "cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw CheckpointError(CheckpointError::Kind::CorruptPayload,
                          "checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j, expected_schema);
}

} // namespace loadcast
