// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/remote.hpp"

#include <thread>

#include <httplib.h>

namespace scalesearch {

using protocol::json;

ProtocolClient::ProtocolClient(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw std::invalid_argument("remote endpoint is empty");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  client_ = std::make_unique<httplib::Client>(options_.endpoint);
  if (!client_->is_valid()) {
    throw std::invalid_argument("invalid remote endpoint '" + options_.endpoint + "'");
  }
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client_->set_connection_timeout(secs.count(), usecs.count());
  client_->set_read_timeout(secs.count(), usecs.count());
  client_->set_write_timeout(secs.count(), usecs.count());
}

ProtocolClient::~ProtocolClient() = default;

namespace {

void check_version(const httplib::Response& res) {
  if (!res.has_header(protocol::kVersionHeader)) {
    throw protocol::VersionMismatchError("response lacks " + std::string(protocol::kVersionHeader));
  }
  const auto got = res.get_header_value(protocol::kVersionHeader);
  if (got != std::to_string(protocol::kVersion)) {
    throw protocol::VersionMismatchError("server speaks protocol version " + got + ", expected " +
                                         std::to_string(protocol::kVersion));
  }
}

protocol::ServerError server_error(const httplib::Response& res) {
  std::string code = "http_" + std::to_string(res.status);
  std::string message = "server answered " + std::to_string(res.status);
  try {
    const auto body = json::parse(res.body);
    const auto& err = body.at("error");
    code = err.at("code").get<std::string>();
    message += ": " + err.at("message").get<std::string>();
  } catch (const json::exception&) {
  }
  return protocol::ServerError(res.status, std::move(code), message);
}

}  // namespace

json ProtocolClient::post(const std::string& path, const json& body) {
  std::lock_guard lock(mutex_);
  const httplib::Headers headers{{protocol::kVersionHeader, std::to_string(protocol::kVersion)}};
  const std::string payload = body.dump();
  std::string last_failure;

  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options_.backoff * (attempt - 1));
    const auto t0 = std::chrono::steady_clock::now();
    auto result = client_->Post(path, headers, payload, "application/json");
    if (!result) {
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read &&
                              std::chrono::steady_clock::now() - t0 >= options_.timeout);
      last_failure = options_.endpoint + path + ": " + httplib::to_string(err);
      if (attempt == options_.max_attempts) {
        if (timed_out) throw protocol::TimeoutError("timed out: " + last_failure);
        throw protocol::TransportError(last_failure);
      }
      continue;
    }
    const auto& res = *result;
    if (res.status == 409) {
      throw protocol::VersionMismatchError(server_error(res).what());
    }
    check_version(res);
    if (res.status >= 500) {
      if (attempt == options_.max_attempts) throw server_error(res);
      continue;
    }
    if (res.status != 200) throw server_error(res);
    try {
      return json::parse(res.body);
    } catch (const json::parse_error& e) {
      throw protocol::MalformedResponseError(options_.endpoint + path + ": " + e.what());
    }
  }
  throw protocol::TransportError(last_failure);
}

RemoteGenerator::RemoteGenerator(SchedulePtr schedule, std::string prompt,
                                 std::shared_ptr<ProtocolClient> client)
    : schedule_(std::move(schedule)), prompt_(std::move(prompt)), client_(std::move(client)) {
  if (!schedule_ || !client_) throw std::invalid_argument("remote generator needs schedule and client");
}

TokenMap RemoteGenerator::forward(const SequenceState& prefix, Seed seed, double temperature) {
  const protocol::StepRequest req{*schedule_, prefix.lineage(), seed, temperature, prompt_};
  const auto body = client_->post(protocol::kStepPath, protocol::to_json(req));
  protocol::StepResponse res;
  try {
    res = protocol::step_response_from_json(body);
  } catch (const protocol::SchemaError& e) {
    throw protocol::MalformedResponseError(std::string("step response: ") + e.what());
  }
  const std::size_t scale = prefix.depth() + 1;
  if (res.tokens.size() != schedule_->tokens_at(scale)) {
    throw protocol::MalformedResponseError("step response has " + std::to_string(res.tokens.size()) +
                                           " tokens for scale " + std::to_string(scale));
  }
  for (const auto t : res.tokens) {
    if (t >= schedule_->vocab_size()) {
      throw protocol::MalformedResponseError("step response token outside the vocabulary");
    }
  }
  return TokenMap{scale, std::move(res.tokens)};
}

Artifact RemoteGenerator::decode(const SequenceState& sequence) {
  if (!sequence.complete()) throw std::invalid_argument("cannot decode an incomplete sequence");
  protocol::DecodeRequest req{*schedule_, sequence.lineage(), prompt_, sequence.flat_tokens()};
  const auto body = client_->post(protocol::kDecodePath, protocol::to_json(req));
  protocol::DecodeResponse res;
  try {
    res = protocol::decode_response_from_json(body);
  } catch (const protocol::SchemaError& e) {
    throw protocol::MalformedResponseError(std::string("decode response: ") + e.what());
  }
  Artifact art;
  art.tokens = std::move(req.tokens);
  art.alignment = res.alignment;
  art.quality = res.quality;
  art.image_b64 = std::move(res.image_b64);
  return art;
}

RemoteVerifier::RemoteVerifier(VerifierSpec spec, std::shared_ptr<ProtocolClient> client)
    : spec_(std::move(spec)), client_(std::move(client)) {
  if (!client_) throw std::invalid_argument("remote verifier needs a client");
  spec_.validate();
}

double RemoteVerifier::score(const Artifact& artifact, std::string_view prompt, Seed seed) {
  protocol::ScoreRequest req;
  req.artifact = artifact;
  req.prompt = std::string(prompt);
  req.verifier_id = spec_.id;
  req.seed = seed;
  auto body = protocol::to_json(req);
  body.erase("lineage");  // the artifact carries everything a scorer needs
  const auto res = client_->post(protocol::kScorePath, body);
  try {
    return protocol::score_response_from_json(res).score;
  } catch (const protocol::SchemaError& e) {
    throw protocol::MalformedResponseError(std::string("score response: ") + e.what());
  }
}

}  // namespace scalesearch
