// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "scalesearch/generator.hpp"
#include "scalesearch/protocol.hpp"
#include "scalesearch/verifier.hpp"

namespace httplib {
class Client;
}

namespace scalesearch {

struct RemoteOptions {
  /// "http://host:port"
  std::string endpoint;
  std::chrono::milliseconds timeout{10000};
  /// Attempts per request for transport failures and 5xx answers.
  int max_attempts = 3;
  std::chrono::milliseconds backoff{25};
};

/// One HTTP connection to a protocol server. Sends the version header on
/// every request and checks it on every response. Calls are serialized, so a
/// client may be shared across threads.
class ProtocolClient {
 public:
  explicit ProtocolClient(RemoteOptions options);
  ~ProtocolClient();
  ProtocolClient(const ProtocolClient&) = delete;
  ProtocolClient& operator=(const ProtocolClient&) = delete;

  /// POSTs `body` to `path` and returns the parsed JSON answer. Throws the
  /// protocol error matching the failure.
  protocol::json post(const std::string& path, const protocol::json& body);

  const RemoteOptions& options() const noexcept { return options_; }

 private:
  RemoteOptions options_;
  std::mutex mutex_;
  std::unique_ptr<httplib::Client> client_;
};

/// Generator behind /v1/step and /v1/decode. Each forward() is one request
/// and counts as one NFE whatever the server does internally.
class RemoteGenerator final : public Generator {
 public:
  RemoteGenerator(SchedulePtr schedule, std::string prompt,
                  std::shared_ptr<ProtocolClient> client);

  const SchedulePtr& schedule() const override { return schedule_; }
  TokenMap forward(const SequenceState& prefix, Seed seed, double temperature) override;
  Artifact decode(const SequenceState& sequence) override;

 private:
  SchedulePtr schedule_;
  std::string prompt_;
  std::shared_ptr<ProtocolClient> client_;
};

/// Verifier behind /v1/score.
class RemoteVerifier final : public Verifier {
 public:
  RemoteVerifier(VerifierSpec spec, std::shared_ptr<ProtocolClient> client);

  const VerifierSpec& spec() const override { return spec_; }
  double score(const Artifact& artifact, std::string_view prompt, Seed seed) override;

 private:
  VerifierSpec spec_;
  std::shared_ptr<ProtocolClient> client_;
};

}  // namespace scalesearch
