// SPDX-License-Identifier: Apache-2.0
#include "birthmark/rpc.hpp"

#include <httplib.h>

#include <cmath>

#include "birthmark/json.hpp"

namespace birthmark {

using nlohmann::json;

namespace {

struct RpcFault {
  int code;
  std::string message;
  json data;
};

Hash256 hash_param(const json& params) {
  if (!params.is_array() || params.size() != 1 || !params[0].is_string())
    throw RpcFault{kRpcInvalidParams, "expected [\"<image_hash hex>\"]", nullptr};
  try {
    return Hash256::from_hex(params[0].get<std::string>());
  } catch (const Error& e) {
    throw RpcFault{kRpcInvalidParams, e.what(), nullptr};
  }
}

json error_response(const json& id, int code, const std::string& message, const json& data = nullptr) {
  json err{{"code", code}, {"message", message}};
  if (!data.is_null()) err["data"] = data;
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", err}};
}

}  // namespace

json JsonRpcService::dispatch(const std::string& method, const json& params) const {
  std::shared_lock lock(mutex_);
  if (method == "birthmark_lookup") {
    auto found = node_.lookup(hash_param(params));
    json out{{"status", to_string(found.status)}};
    if (found.record) out["record"] = to_json(*found.record);
    if (found.chain_index) out["chain_index"] = *found.chain_index;
    return out;
  }
  if (method == "birthmark_chain") {
    auto h = hash_param(params);
    try {
      json out = json::array();
      for (const auto& r : node_.custody_chain(h)) out.push_back(to_json(r));
      return out;
    } catch (const Error& e) {
      throw RpcFault{kRpcChainError, e.what(), {{"errc", errc_name(e.code())}}};
    }
  }
  if (method == "birthmark_stats") {
    const auto& s = node_.store();
    return {{"node", node_.id()},
            {"records", s.size()},
            {"retained", s.retained()},
            {"log_bytes", s.log_bytes()},
            {"head", s.head().hex()}};
  }
  throw RpcFault{kRpcMethodNotFound, "unknown method: " + method, nullptr};
}

json JsonRpcService::handle(const json& request) const {
  json id = request.is_object() && request.contains("id") ? request["id"] : json(nullptr);
  if (!request.is_object() || request.value("jsonrpc", "") != "2.0" || !request.contains("method") ||
      !request["method"].is_string())
    return error_response(id, kRpcInvalidRequest, "invalid request");
  try {
    json params = request.value("params", json::array());
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", dispatch(request["method"].get<std::string>(), params)}};
  } catch (const RpcFault& f) {
    return error_response(id, f.code, f.message, f.data);
  }
}

std::string JsonRpcService::handle_text(const std::string& body) const {
  json request = json::parse(body, nullptr, false);
  if (request.is_discarded()) return error_response(nullptr, kRpcParseError, "parse error").dump();
  return handle(request).dump();
}

RpcServer::RpcServer(JsonRpcService& service) : service_(service), http_(std::make_unique<httplib::Server>()) {
  http_->Post("/", [this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(service_.handle_text(req.body), "application/json");
  });
}

RpcServer::~RpcServer() { stop(); }

int RpcServer::start(const std::string& host, int port) {
  int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void RpcServer::serve(const std::string& host, int port) {
  if (!http_->listen(host, port)) throw Error(Errc::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void RpcServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

RpcClient::RpcClient(std::string url, double timeout_seconds) : url_(std::move(url)), timeout_(timeout_seconds) {}

json RpcClient::call(const std::string& method, const json& params) {
  httplib::Client http(url_);
  auto sec = static_cast<time_t>(timeout_);
  auto usec = static_cast<time_t>((timeout_ - std::floor(timeout_)) * 1e6);
  http.set_connection_timeout(sec, usec);
  http.set_read_timeout(sec, usec);
  json request{{"jsonrpc", "2.0"}, {"id", next_id_++}, {"method", method}, {"params", params}};
  auto res = http.Post("/", request.dump(), "application/json");
  if (!res) throw Error(Errc::Unreachable, url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(Errc::Unreachable, url_ + ": HTTP " + std::to_string(res->status));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) throw Error(Errc::DecodeError, "malformed RPC reply");
  if (reply.contains("error")) {
    const auto& err = reply["error"];
    std::string message = err.value("message", "rpc error");
    std::string errc = err.contains("data") ? err["data"].value("errc", "") : "";
    if (errc == "NotFound") throw Error(Errc::NotFound, message);
    if (errc == "BrokenChain") throw Error(Errc::BrokenChain, message);
    if (errc == "CorruptChain") throw Error(Errc::CorruptChain, message);
    throw Error(Errc::InvalidInput, message);
  }
  if (!reply.contains("result")) throw Error(Errc::DecodeError, "RPC reply without result");
  return reply["result"];
}

LookupResult RpcClient::lookup(const Hash256& image_hash) {
  json r = call("birthmark_lookup", json::array({image_hash.hex()}));
  LookupResult out;
  std::string status = r.value("status", "");
  if (status == "Found") out.status = LookupStatus::Found;
  else if (status == "PrunedSeeColdNode") out.status = LookupStatus::PrunedSeeColdNode;
  else if (status == "NotFound") out.status = LookupStatus::NotFound;
  else throw Error(Errc::DecodeError, "unknown lookup status: " + status);
  if (r.contains("record")) {
    out.record = chain_record_from_json(r["record"]);
    if (out.record->record.image_hash != image_hash) throw Error(Errc::CorruptChain, "node answered for another hash");
  }
  if (r.contains("chain_index")) out.chain_index = r["chain_index"].get<std::uint32_t>();
  return out;
}

std::vector<ChainRecord> RpcClient::custody_chain(const Hash256& image_hash) {
  json r = call("birthmark_chain", json::array({image_hash.hex()}));
  std::vector<ChainRecord> out;
  for (const auto& j : r) out.push_back(chain_record_from_json(j));
  return out;
}

}  // namespace birthmark
