// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON-over-HTTP wire format shared by the remote generator and verifier
// clients and any server implementing them. docs/protocol.md is the frozen
// field reference; this header is its C++ binding.

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalesearch/core.hpp"
#include "scalesearch/generator.hpp"

namespace scalesearch::protocol {

using json = nlohmann::json;

inline constexpr int kVersion = 1;
inline constexpr const char* kVersionHeader = "X-Protocol-Version";
inline constexpr const char* kStepPath = "/v1/step";
inline constexpr const char* kDecodePath = "/v1/decode";
inline constexpr const char* kScorePath = "/v1/score";

// Errors. Every remote failure is one of these, so callers can tell a dead
// endpoint from a misbehaving one.
struct RemoteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// No usable response (connection refused, reset, ...).
struct TransportError : RemoteError {
  using RemoteError::RemoteError;
};
/// The endpoint did not answer within the configured timeout.
struct TimeoutError : TransportError {
  using TransportError::TransportError;
};
/// The response is not valid protocol JSON.
struct MalformedResponseError : RemoteError {
  using RemoteError::RemoteError;
};
/// The peer speaks another protocol version (409, or a mismatched header).
struct VersionMismatchError : RemoteError {
  using RemoteError::RemoteError;
};
/// The server rejected the request with a machine-readable error code.
struct ServerError : RemoteError {
  ServerError(int status, std::string code, const std::string& message)
      : RemoteError(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

/// Thrown by the from_json helpers when a body lacks a field or has the
/// wrong type.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json to_json(const ScaleSchedule& schedule);
ScaleSchedule schedule_from_json(const json& j);

json to_json(const SeedLineage& lineage);
SeedLineage lineage_from_json(const json& j);

json to_json(const Artifact& artifact);
Artifact artifact_from_json(const json& j);

struct StepRequest {
  ScaleSchedule schedule;
  SeedLineage prefix_lineage;
  Seed seed = 0;
  double temperature = 1.0;
  std::string prompt;
};
json to_json(const StepRequest& request);
StepRequest step_request_from_json(const json& j);

struct StepResponse {
  std::vector<Token> tokens;
};
json to_json(const StepResponse& response);
StepResponse step_response_from_json(const json& j);

/// `tokens` lets a stateless server decode without replaying the lineage.
struct DecodeRequest {
  ScaleSchedule schedule;
  SeedLineage lineage;
  std::string prompt;
  std::vector<Token> tokens;
};
json to_json(const DecodeRequest& request);
DecodeRequest decode_request_from_json(const json& j);

/// Synthetic backends answer {alignment, quality}; real backends may answer
/// {image_b64} instead, in which case both latent fields are absent.
struct DecodeResponse {
  double alignment = 0.0;
  double quality = 0.0;
  std::string image_b64;
};
json to_json(const DecodeResponse& response);
DecodeResponse decode_response_from_json(const json& j);

struct ScoreRequest {
  Artifact artifact;
  SeedLineage lineage;
  std::string prompt;
  std::string verifier_id;
  Seed seed = 0;
};
json to_json(const ScoreRequest& request);
ScoreRequest score_request_from_json(const json& j);

struct ScoreResponse {
  double score = 0.0;
};
json to_json(const ScoreResponse& response);
ScoreResponse score_response_from_json(const json& j);

/// {"error": {"code": ..., "message": ...}}
json error_body(const std::string& code, const std::string& message);

}  // namespace scalesearch::protocol
