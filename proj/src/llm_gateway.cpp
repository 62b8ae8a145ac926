#include "kgalign/llm_gateway.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Wire format

std::string chat_request_body(const CompletionRequest& request) {
  json body = {
      {"model", request.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

std::string chat_response_content(std::string_view body) {
  const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    throw Error(ErrorKind::ApiError, "response is not JSON: " + std::string(body.substr(0, 200)));
  }
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorKind::ApiError, "response has no choices");
  }
  const json& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw Error(ErrorKind::ApiError, "first choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Answer parsing

std::string ChoiceResult::describe() const {
  if (chosen()) return "chosen:" + option_label(index());
  return "abstain:" + std::get<Abstain>(outcome).reason;
}

namespace {

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || u >= 0x80;
}

bool is_capital(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

std::optional<std::size_t> label_index(std::string_view label, std::size_t option_count) {
  const auto i = option_index_of(label);
  if (!i || *i >= option_count) return std::nullopt;
  return i;
}

// Length of the capital run starting at i when it forms a whole word, else 0.
std::size_t label_run(std::string_view raw, std::size_t i) {
  if (i >= raw.size() || !is_capital(raw[i])) return 0;
  if (i > 0 && is_word_byte(raw[i - 1])) return 0;
  std::size_t j = i;
  while (j < raw.size() && is_capital(raw[j])) ++j;
  if (j < raw.size() && is_word_byte(raw[j])) return 0;
  return j - i;
}

// Words that commonly follow an option letter in prose ("A is correct",
// "B and C"). Any other lowercase word after a lone A or I reads as the
// article or the pronoun ("A good match", "I think").
bool is_connective(std::string_view word) {
  static const std::set<std::string_view> kWords = {
      "is",      "and",    "or",     "was",   "seems", "appears", "matches", "looks",
      "refers",  "corresponds", "fits", "vs",  "because", "since", "as",     "with",
      "for",     "but",    "which",  "that",  "best",  "has",     "would",   "should",
      "could",   "might",  "may",    "must",  "will",  "being",   "here",    "also"};
  return kWords.count(word) > 0;
}

// "I think", "I'm", "A good match": not option letters.
bool reads_as_prose(std::string_view raw, std::size_t i) {
  const char c = raw[i];
  if (c != 'A' && c != 'I') return false;
  std::size_t j = i + 1;
  if (c == 'I' && j + 1 < raw.size() && raw[j] == '\'' && is_lower(raw[j + 1])) return true;
  if (j >= raw.size() || raw[j] != ' ') return false;
  ++j;
  std::size_t k = j;
  while (k < raw.size() && is_lower(raw[k])) ++k;
  if (k == j || (k < raw.size() && is_word_byte(raw[k]))) return false;
  return !is_connective(raw.substr(j, k - j));
}

// "B", "(B)", "**B.**", "B)", "AB"
std::optional<std::size_t> whole_reply_letter(std::string_view raw, std::size_t count) {
  constexpr std::string_view kWrap = " \t\r\n*()[].:'\"`";
  const auto first = raw.find_first_not_of(kWrap);
  if (first == std::string_view::npos) return std::nullopt;
  const auto last = raw.find_last_not_of(kWrap);
  return label_index(raw.substr(first, last - first + 1), count);
}

// "answer: B", "The answer is (C)", "option D"
std::optional<std::size_t> marked_letter(std::string_view raw, std::size_t count) {
  const std::string lower = text::ascii_lower(raw);
  for (const std::string_view marker : {"answer", "option", "choice"}) {
    std::size_t pos = 0;
    while ((pos = lower.find(marker, pos)) != std::string::npos) {
      std::size_t i = pos + marker.size();
      pos = i;
      const auto skip = [&](std::string_view chars) {
        while (i < raw.size() && chars.find(raw[i]) != std::string_view::npos) ++i;
      };
      skip(" \t");
      if (lower.compare(i, 2, "is") == 0 && (i + 2 >= raw.size() || !is_word_byte(raw[i + 2]))) {
        i += 2;
      }
      skip(" \t:*([");
      const std::size_t n = label_run(raw, i);
      if (n == 0 || (raw[i] == 'I' && n == 1 && reads_as_prose(raw, i))) continue;
      if (auto idx = label_index(raw.substr(i, n), count)) return idx;
    }
  }
  return std::nullopt;
}

std::set<std::size_t> standalone_letters(std::string_view raw, std::size_t count) {
  std::set<std::size_t> found;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t n = label_run(raw, i);
    if (n == 0) continue;
    if (!(n == 1 && reads_as_prose(raw, i))) {
      if (auto idx = label_index(raw.substr(i, n), count)) found.insert(*idx);
    }
    i += n - 1;
  }
  return found;
}

ChoiceResult make_chosen(std::size_t index, std::string_view raw) {
  return ChoiceResult{Chosen{index}, std::string(raw)};
}

ChoiceResult make_abstain(std::string reason, std::string_view raw) {
  return ChoiceResult{Abstain{std::move(reason)}, std::string(raw)};
}

}  // namespace

ChoiceResult parse_choice(std::string_view raw, std::span<const PromptOption> options) {
  if (options.empty()) return make_abstain("no options", raw);
  const std::size_t count = options.size();

  if (auto idx = whole_reply_letter(raw, count)) return make_chosen(*idx, raw);
  if (auto idx = marked_letter(raw, count)) return make_chosen(*idx, raw);
  const auto letters = standalone_letters(raw, count);
  if (letters.size() == 1) return make_chosen(*letters.begin(), raw);
  if (letters.size() > 1) return make_abstain("ambiguous", raw);

  const std::string lower = text::ascii_lower(raw);
  std::optional<std::size_t> match;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = text::ascii_lower(options[i].name);
    if (name.empty() || lower.find(name) == std::string::npos) continue;
    if (match) return make_abstain("ambiguous", raw);
    match = i;
  }
  if (match) return make_chosen(*match, raw);
  return make_abstain("unparseable", raw);
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

std::optional<std::size_t> gold_position(const std::map<EntityId, EntityId>& gold,
                                         const RequestTag& tag) {
  const auto it = gold.find(tag.source);
  if (it == gold.end()) return std::nullopt;
  const auto pos = std::find(tag.option_targets.begin(), tag.option_targets.end(), it->second);
  if (pos == tag.option_targets.end()) return std::nullopt;
  return static_cast<std::size_t>(pos - tag.option_targets.begin());
}

std::string letter(std::size_t index) { return option_label(index); }

struct ReplyVisitor {
  const CompletionRequest& request;

  std::string operator()(const TruthfulOracle& o) const {
    const auto pos = gold_position(o.gold, request.tag);
    return pos ? letter(*pos) : std::string(kOracleAbstainText);
  }
  std::string operator()(const FirstOptionOracle&) const { return "A"; }
  std::string operator()(const FixedAnswerOracle& o) const { return o.text; }
  std::string operator()(const PositionBiasedOracle& o) const {
    const std::size_t m = request.tag.option_targets.size();
    if (m == 0 || o.position_weights.empty()) return std::string(kOracleAbstainText);
    const auto gold = gold_position(o.gold, request.tag);
    std::vector<double> weights(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      weights[i] = o.position_weights[std::min(i, o.position_weights.size() - 1)];
      if (gold && *gold == i) weights[i] += o.truth_weight;
      total += weights[i];
    }
    if (!(total > 0.0)) return std::string(kOracleAbstainText);
    std::mt19937_64 rng(mix_seed(o.seed, text::fnv1a64(request.prompt)));
    double draw = uniform01(rng) * total;
    for (std::size_t i = 0; i < m; ++i) {
      if (draw < weights[i]) return letter(i);
      draw -= weights[i];
    }
    // Rounding left the draw past the end; take the last weighted option.
    for (std::size_t i = m; i-- > 0;) {
      if (weights[i] > 0.0) return letter(i);
    }
    return std::string(kOracleAbstainText);
  }
};

}  // namespace

std::string oracle_reply(const OracleScript& script, const CompletionRequest& request) {
  return std::visit(ReplyVisitor{request}, script.policy);
}

// ---------------------------------------------------------------------------
// RateLimiter / AuditLog

RateLimiter::RateLimiter(double tokens_per_second, double burst)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = Clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / rate_;
    // Holding the lock while sleeping serializes admission in arrival order.
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
  }
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw Error(ErrorKind::IoError, "cannot open audit log " + path.string());
}

void AuditLog::append(const std::string& json_line) {
  std::lock_guard lock(mutex_);
  out_ << json_line << '\n';
  out_.flush();
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, GatewayConfig config)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 4096))),
      limiter_(config_.requests_per_second, config_.burst) {
  if (!backend_) throw Error(ErrorKind::ConfigError, "gateway needs a backend");
  if (config_.audit_path) audit_ = std::make_unique<AuditLog>(*config_.audit_path);
}

std::string Gateway::complete(const CompletionRequest& request) {
  if (request.prompt.empty()) throw Error(ErrorKind::ValueError, "empty prompt");
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  limiter_.acquire();
  return backend_->complete(request);
}

ChoiceResult Gateway::ask(const Prompt& prompt, std::size_t round,
                          std::optional<std::int64_t> seed) {
  CompletionRequest request;
  request.model_name = config_.model_name;
  request.prompt = prompt.rendered;
  request.temperature = config_.temperature;
  request.max_tokens = config_.max_tokens;
  request.seed = seed;
  request.tag.kind = prompt.kind;
  request.tag.source = prompt.source;
  request.tag.round = round;
  for (const auto& opt : prompt.options) request.tag.option_targets.push_back(opt.target);

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };
  std::string raw;
  try {
    raw = complete(request);
  } catch (const Error& e) {
    audit(request, "", std::string("error:") + to_string(e.kind()), elapsed_ms());
    throw;
  }
  ChoiceResult result = parse_choice(raw, prompt.options);
  audit(request, raw, result.describe(), elapsed_ms());
  return result;
}

void Gateway::audit(const CompletionRequest& request, std::string_view raw,
                    std::string_view outcome, double latency_ms) {
  if (!audit_) return;
  const json line = {
      {"request_hash", text::hex64(text::fnv1a64(chat_request_body(request)))},
      {"prompt_kind", std::string(to_string(request.tag.kind))},
      {"source_id", request.tag.source},
      {"permutation_index", request.tag.round},
      {"raw_response", std::string(raw)},
      {"parsed_outcome", std::string(outcome)},
      {"latency_ms", latency_ms},
  };
  audit_->append(line.dump());
}

}  // namespace kgalign
