#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <regex>
#include <semaphore>
#include <thread>

#include "recinv/backend.hpp"
#include "recinv/error.hpp"
#include "recinv/util/digest.hpp"

namespace recinv::backend {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing '/'
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:\s]+)(:([0-9]{1,5}))?(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error("remote backend: malformed endpoint '" + url + "'");
  Endpoint ep;
  ep.origin = m[1].str() + "://" + m[2].str() + (m[3].matched ? m[3].str() : "");
  ep.prefix = m[5].matched ? m[5].str() : "";
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

class RemoteBackend final : public ModelBackend {
 public:
  RemoteBackend(Endpoint endpoint, RemoteOptions options)
      : endpoint_(std::move(endpoint)),
        options_(std::move(options)),
        in_flight_(std::max(1, options_.max_in_flight)),
        name_("remote:" + endpoint_.origin + endpoint_.prefix) {}

  void handshake() {
    Json body;
    try {
      body = call("GET", "/v1/vocab", nullptr);
    } catch (const Error& e) {
      throw Error(std::string("remote backend: handshake failed: ") + e.what());
    }
    if (!body.contains("vocab") || !body.at("vocab").is_array() || body.at("vocab").empty()) {
      throw Error("remote backend: handshake returned no vocabulary");
    }
    vocab_ = body.at("vocab").get<std::vector<std::string>>();
    digest_ = util::vocab_digest(vocab_);
  }

  const std::string& name() const override { return name_; }
  const std::vector<std::string>& vocab() const override { return vocab_; }
  Capabilities capabilities() const override { return {true, true}; }

 protected:
  logits::LogitMatrix do_query_logits(std::string_view prompt) const override {
    Json body = call("POST", "/v1/logits", Json{{"prompt", std::string(prompt)}});
    if (body.contains("vocab_digest") && body.at("vocab_digest").get<std::string>() != digest_) {
      throw Error("remote backend: vocab_digest differs from the handshake vocabulary");
    }
    Json fixture{{"vocab", vocab_}, {"values", body.at("values")}};
    return logits::LogitMatrix::from_json(fixture);
  }

  CandidateSet do_invert_embedding(const logits::ProjectedEmbedding& e,
                                   int beam_width) const override {
    Json body =
        call("POST", "/v1/invert", Json{{"embedding", e.to_json()}, {"beam_width", beam_width}});
    CandidateSet set = CandidateSet::from_json(body);
    for (std::size_t i = 1; i < set.candidates.size(); ++i) {
      if (set.candidates[i].score > set.candidates[i - 1].score) {
        throw Error("remote backend: candidates not ordered best first");
      }
    }
    return set;
  }

 private:
  class Slot {
   public:
    explicit Slot(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
    ~Slot() { sem_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    std::counting_semaphore<1024>& sem_;
  };

  Json call(const std::string& method, const std::string& path, const Json& payload) const {
    Slot slot(in_flight_);
    const std::string request_id = std::to_string(++next_request_id_);
    const std::string full_path = endpoint_.prefix + path;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff * attempt);
      httplib::Client cli(endpoint_.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      httplib::Headers headers{{"X-Request-Id", request_id}};
      if (options_.auth_token) cli.set_bearer_token_auth(*options_.auth_token);

      httplib::Result res = method == "GET"
                                ? cli.Get(full_path, headers)
                                : cli.Post(full_path, headers, payload.dump(), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error("remote backend: " + method + " " + full_path + " -> HTTP " +
                    std::to_string(res->status) + ": " + res->body);
      }
      if (res->has_header("X-Request-Id") && res->get_header_value("X-Request-Id") != request_id) {
        throw Error("remote backend: response for another request id");
      }
      try {
        return Json::parse(res->body);
      } catch (const Json::parse_error& e) {
        throw Error("remote backend: malformed JSON from " + full_path + ": " + e.what());
      }
    }
    throw RetryableError("remote backend: " + method + " " + full_path + " failed after " +
                         std::to_string(options_.retries + 1) + " attempts (" + last_error + ")");
  }

  Endpoint endpoint_;
  RemoteOptions options_;
  mutable std::counting_semaphore<1024> in_flight_;
  mutable std::atomic<std::uint64_t> next_request_id_{0};
  std::string name_;
  std::vector<std::string> vocab_;
  std::string digest_;
};

}  // namespace

std::unique_ptr<ModelBackend> remote_backend(const std::string& endpoint, RemoteOptions options) {
  if (!options.auth_token) {
    if (const char* tok = std::getenv(kAuthTokenEnv); tok && *tok) options.auth_token = tok;
  }
  auto backend = std::make_unique<RemoteBackend>(parse_endpoint(endpoint), std::move(options));
  backend->handshake();
  return backend;
}

}  // namespace recinv::backend
