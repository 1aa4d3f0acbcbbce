// SPDX-License-Identifier: Apache-2.0
//
// JSON-RPC 2.0 read API over a validator node, served on HTTP POST "/".
//
//   birthmark_lookup  ["<image_hash hex>"]  -> {"status", "record"?, "chain_index"?}
//   birthmark_chain   ["<image_hash hex>"]  -> [record, ...] root first
//   birthmark_stats   []                    -> {"records", "retained", "log_bytes", "head"}
#pragma once

#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "birthmark/verify.hpp"

namespace httplib {
class Server;
}

namespace birthmark {

inline constexpr int kRpcParseError = -32700;
inline constexpr int kRpcInvalidRequest = -32600;
inline constexpr int kRpcMethodNotFound = -32601;
inline constexpr int kRpcInvalidParams = -32602;
inline constexpr int kRpcChainError = -32000;

class JsonRpcService {
 public:
  explicit JsonRpcService(ValidatorNode& node) : node_(node) {}

  nlohmann::json handle(const nlohmann::json& request) const;
  std::string handle_text(const std::string& body) const;

  // Runs fn with exclusive access to the node, e.g. to append while serving.
  template <typename F>
  auto write(F&& fn) {
    std::unique_lock lock(mutex_);
    return fn(node_);
  }

 private:
  nlohmann::json dispatch(const std::string& method, const nlohmann::json& params) const;
  ValidatorNode& node_;
  mutable std::shared_mutex mutex_;
};

class RpcServer {
 public:
  explicit RpcServer(JsonRpcService& service);
  ~RpcServer();
  RpcServer(const RpcServer&) = delete;
  RpcServer& operator=(const RpcServer&) = delete;

  // port 0 picks a free port. Returns the bound port; throws Error(Io).
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks in the calling thread.
  void serve(const std::string& host, int port);
  void stop();

 private:
  JsonRpcService& service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

class RpcClient : public RecordSource {
 public:
  // url: "http://host:port"
  explicit RpcClient(std::string url, double timeout_seconds = 5.0);

  // Throws Error(Unreachable) on transport failure and Error(NotFound),
  // Error(BrokenChain) or Error(CorruptChain) for RPC errors.
  nlohmann::json call(const std::string& method, const nlohmann::json& params);

  LookupResult lookup(const Hash256& image_hash) override;
  std::vector<ChainRecord> custody_chain(const Hash256& image_hash) override;

 private:
  std::string url_;
  double timeout_;
  std::uint64_t next_id_ = 1;
};

}  // namespace birthmark
