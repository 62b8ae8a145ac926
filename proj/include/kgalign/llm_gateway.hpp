#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgalign/kg_store.hpp"
#include "kgalign/prompt_forge.hpp"

namespace kgalign {

/// Structured view of the prompt the request carries. Never sent on the wire;
/// scripted oracles and the audit log read it.
struct RequestTag {
  PromptKind kind = PromptKind::KnowledgeDriven;
  EntityId source = 0;
  std::vector<EntityId> option_targets;  // option i -> target entity
  std::size_t round = 0;                 // permutation index within a vote
};

struct CompletionRequest {
  std::string model_name;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 16;
  std::optional<std::int64_t> seed;
  RequestTag tag;
};

/// Chat-completions request body: model, a single user message, temperature,
/// max_tokens and optional seed.
std::string chat_request_body(const CompletionRequest& request);
/// First choice's message content. Throws ApiError on malformed bodies.
std::string chat_response_content(std::string_view body);

struct Chosen {
  std::size_t index = 0;
  friend bool operator==(const Chosen&, const Chosen&) = default;
};
struct Abstain {
  std::string reason;
  friend bool operator==(const Abstain&, const Abstain&) = default;
};

struct ChoiceResult {
  std::variant<Chosen, Abstain> outcome;
  std::string raw_response;

  bool chosen() const noexcept { return std::holds_alternative<Chosen>(outcome); }
  std::size_t index() const { return std::get<Chosen>(outcome).index; }
  std::string describe() const;
};

/// Maps a free-text reply onto one option.
///
/// Precedence: (1) option labels, tried as the whole reply ("B", "(B)",
/// "**B.**"), then an explicit marker ("Answer: B", "option B"), then the set
/// of standalone in-range labels; exactly one distinct label chooses it,
/// several abstain as ambiguous. A lone "A" or "I" followed by an ordinary
/// lowercase word ("I think", "A good match", "I'm") is prose, not a label.
/// (2) With no label at all, the reply must contain exactly one option's name
/// (ASCII case-insensitive). (3) Otherwise abstain as unparseable.
ChoiceResult parse_choice(std::string_view raw, std::span<const PromptOption> options);

// ---------------------------------------------------------------------------
// Backends

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Assistant message text. Throws TransportError / ApiError.
  virtual std::string complete(const CompletionRequest& request) = 0;
  /// True for backends that reach a network endpoint.
  virtual bool is_remote() const { return false; }
};

struct TruthfulOracle {
  std::map<EntityId, EntityId> gold;
};
struct FirstOptionOracle {};
struct FixedAnswerOracle {
  std::string text;
};
/// Picks option i with probability proportional to weight(i), where weight(i)
/// is position_weights[i] (last entry repeats for later positions) plus
/// truth_weight when option i is the gold target. The draw is seeded by
/// (seed, prompt text), so the same prompt always gets the same answer.
struct PositionBiasedOracle {
  std::vector<double> position_weights{1.0};
  double truth_weight = 0.0;
  std::uint64_t seed = 0;
  std::map<EntityId, EntityId> gold;
};

struct OracleScript {
  std::variant<TruthfulOracle, FirstOptionOracle, FixedAnswerOracle, PositionBiasedOracle> policy;
};

inline constexpr std::string_view kOracleAbstainText = "None of the candidates match.";

/// Pure: same script and request give the same reply.
std::string oracle_reply(const OracleScript& script, const CompletionRequest& request);

class OracleBackend final : public CompletionBackend {
 public:
  explicit OracleBackend(OracleScript script) : script_(std::move(script)) {}
  std::string complete(const CompletionRequest& request) override {
    return oracle_reply(script_, request);
  }

 private:
  OracleScript script_;
};

struct HttpConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30000};
};

/// Chat-completions over HTTP(S). Connection failures, 429 and 5xx are retried
/// with exponential backoff; exhausting retries raises TransportError. Other
/// non-2xx statuses raise ApiError immediately.
class HttpChatBackend final : public CompletionBackend {
 public:
  explicit HttpChatBackend(HttpConfig config);
  std::string complete(const CompletionRequest& request) override;
  bool is_remote() const override { return true; }

 private:
  HttpConfig config_;
  std::string origin_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Gateway

/// Token bucket; rate <= 0 disables limiting.
class RateLimiter {
 public:
  RateLimiter(double tokens_per_second, double burst);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
};

/// Append-only JSONL log, one object per call.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);
  void append(const std::string& json_line);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct GatewayConfig {
  std::string model_name = "default";
  double temperature = 0.0;
  int max_tokens = 16;
  std::size_t max_in_flight = 8;
  double requests_per_second = 0.0;
  double burst = 8.0;
  std::optional<std::filesystem::path> audit_path;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> backend, GatewayConfig config);

  const GatewayConfig& config() const noexcept { return config_; }
  bool is_remote() const { return backend_->is_remote(); }

  /// Admission-controlled call into the backend.
  std::string complete(const CompletionRequest& request);

  /// Asks one multiple-choice question and parses the reply. Transport and
  /// API failures propagate after being audited.
  ChoiceResult ask(const Prompt& prompt, std::size_t round, std::optional<std::int64_t> seed = {});

 private:
  void audit(const CompletionRequest& request, std::string_view raw, std::string_view outcome,
             double latency_ms);

  std::shared_ptr<CompletionBackend> backend_;
  GatewayConfig config_;
  std::counting_semaphore<4096> in_flight_;
  RateLimiter limiter_;
  std::unique_ptr<AuditLog> audit_;
};

}  // namespace kgalign
