// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/protocol.hpp"

namespace scalesearch::protocol {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw SchemaError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const ScaleSchedule& schedule) {
  return {{"num_scales", schedule.num_scales()},
          {"tokens_per_scale", std::vector<std::uint32_t>(schedule.tokens_per_scale().begin(),
                                                          schedule.tokens_per_scale().end())},
          {"vocab_size", schedule.vocab_size()}};
}

ScaleSchedule schedule_from_json(const json& j) {
  auto sizes = get<std::vector<std::uint32_t>>(j, "tokens_per_scale");
  const auto k = get<std::size_t>(j, "num_scales");
  if (k != sizes.size()) throw SchemaError("num_scales disagrees with tokens_per_scale");
  try {
    return ScaleSchedule(std::move(sizes), get<std::uint32_t>(j, "vocab_size"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

json to_json(const SeedLineage& lineage) {
  return {{"root_seed", lineage.root()},
          {"branches", std::vector<std::uint32_t>(lineage.branches().begin(),
                                                  lineage.branches().end())}};
}

SeedLineage lineage_from_json(const json& j) {
  const auto branches = get<std::vector<std::uint32_t>>(j, "branches");
  return SeedLineage(get<Seed>(j, "root_seed"), branches);
}

json to_json(const Artifact& artifact) {
  json j = {{"tokens", artifact.tokens},
            {"alignment", artifact.alignment},
            {"quality", artifact.quality}};
  if (!artifact.image_b64.empty()) j["image_b64"] = artifact.image_b64;
  return j;
}

Artifact artifact_from_json(const json& j) {
  Artifact a;
  a.tokens = get<std::vector<Token>>(j, "tokens");
  a.alignment = get<double>(j, "alignment");
  a.quality = get<double>(j, "quality");
  if (j.contains("image_b64")) a.image_b64 = get<std::string>(j, "image_b64");
  return a;
}

json to_json(const StepRequest& r) {
  return {{"schedule", to_json(r.schedule)},
          {"prefix_lineage", to_json(r.prefix_lineage)},
          {"seed", r.seed},
          {"temperature", r.temperature},
          {"prompt", r.prompt}};
}

StepRequest step_request_from_json(const json& j) {
  return StepRequest{schedule_from_json(field(j, "schedule")),
                     lineage_from_json(field(j, "prefix_lineage")), get<Seed>(j, "seed"),
                     get<double>(j, "temperature"), get<std::string>(j, "prompt")};
}

json to_json(const StepResponse& r) { return {{"tokens", r.tokens}}; }

StepResponse step_response_from_json(const json& j) {
  return StepResponse{get<std::vector<Token>>(j, "tokens")};
}

json to_json(const DecodeRequest& r) {
  return {{"schedule", to_json(r.schedule)},
          {"lineage", to_json(r.lineage)},
          {"prompt", r.prompt},
          {"tokens", r.tokens}};
}

DecodeRequest decode_request_from_json(const json& j) {
  return DecodeRequest{schedule_from_json(field(j, "schedule")),
                       lineage_from_json(field(j, "lineage")), get<std::string>(j, "prompt"),
                       get<std::vector<Token>>(j, "tokens")};
}

json to_json(const DecodeResponse& r) {
  if (!r.image_b64.empty()) return {{"image_b64", r.image_b64}};
  return {{"alignment", r.alignment}, {"quality", r.quality}};
}

DecodeResponse decode_response_from_json(const json& j) {
  DecodeResponse r;
  if (j.is_object() && j.contains("image_b64")) {
    r.image_b64 = get<std::string>(j, "image_b64");
    return r;
  }
  r.alignment = get<double>(j, "alignment");
  r.quality = get<double>(j, "quality");
  return r;
}

json to_json(const ScoreRequest& r) {
  return {{"artifact", to_json(r.artifact)}, {"lineage", to_json(r.lineage)},
          {"prompt", r.prompt},              {"verifier_id", r.verifier_id},
          {"seed", r.seed}};
}

ScoreRequest score_request_from_json(const json& j) {
  ScoreRequest r;
  if (j.contains("artifact")) r.artifact = artifact_from_json(field(j, "artifact"));
  if (j.contains("lineage")) r.lineage = lineage_from_json(field(j, "lineage"));
  if (!j.contains("artifact") && !j.contains("lineage")) {
    throw SchemaError("score request needs 'artifact' or 'lineage'");
  }
  r.prompt = get<std::string>(j, "prompt");
  r.verifier_id = get<std::string>(j, "verifier_id");
  r.seed = get<Seed>(j, "seed");
  return r;
}

json to_json(const ScoreResponse& r) { return {{"score", r.score}}; }

ScoreResponse score_response_from_json(const json& j) {
  return ScoreResponse{get<double>(j, "score")};
}

json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace scalesearch::protocol
