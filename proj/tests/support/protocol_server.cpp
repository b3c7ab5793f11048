#include "protocol_server.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "recinv/util/digest.hpp"

namespace recinv::testing {

using Json = nlohmann::json;

ProtocolServer::ProtocolServer(const backend::ModelBackend* logits,
                               const backend::ModelBackend* inverter, ServerOptions options)
    : server_(std::make_unique<httplib::Server>()) {
  failures_left_ = options.fail_first;
  auto gate = [this, options](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const std::string id = req.get_header_value("X-Request-Id");
    {
      std::lock_guard lock(mu_);
      last_request_id_ = id;
    }
    res.set_header("X-Request-Id", id);
    if (failures_left_.fetch_sub(1) > 0) {
      res.status = 500;
      return false;
    }
    if (options.required_token &&
        req.get_header_value("Authorization") != "Bearer " + *options.required_token) {
      res.status = 401;
      res.set_content(R"({"error":"unauthorized"})", "application/json");
      return false;
    }
    return true;
  };
  auto fail = [](httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(Json{{"error", msg}}.dump(), "application/json");
  };

  server_->Get("/v1/vocab", [=](const httplib::Request& req, httplib::Response& res) {
    if (!gate(req, res)) return;
    res.set_content(Json{{"vocab", logits->vocab()}}.dump(), "application/json");
  });
  server_->Post("/v1/logits", [=](const httplib::Request& req, httplib::Response& res) {
    if (!gate(req, res)) return;
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.contains("prompt")) return fail(res, 400, "malformed request");
    auto m = logits->query_logits(j.at("prompt").get<std::string>());
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto row = m.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    const std::string digest = options.digest_override ? *options.digest_override
                                                       : util::vocab_digest(logits->vocab());
    res.set_content(Json{{"values", rows}, {"vocab_digest", digest}}.dump(), "application/json");
  });
  server_->Post("/v1/invert", [=](const httplib::Request& req, httplib::Response& res) {
    if (!gate(req, res)) return;
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.contains("embedding") || !j.contains("beam_width")) {
      return fail(res, 400, "malformed request");
    }
    if (!inverter) return fail(res, 404, "inversion not served");
    try {
      auto e = logits::ProjectedEmbedding::from_json(j.at("embedding"));
      auto set = inverter->invert_embedding(e, j.at("beam_width").get<int>());
      if (options.reverse_candidates) std::reverse(set.candidates.begin(), set.candidates.end());
      res.set_content(set.to_json().dump(), "application/json");
    } catch (const std::exception& ex) {
      fail(res, 400, ex.what());
    }
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

ProtocolServer::~ProtocolServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string ProtocolServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

}  // namespace recinv::testing
