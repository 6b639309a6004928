#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mileaks/core.hpp"
#include "mileaks/learners.hpp"

namespace mileaks {

// The only channel an adversary gets to a target: posteriors in, nothing
// else out. The counter realizes the pay-per-query cost model; failed
// queries do not count.
class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual PosteriorVector query(std::span<const double> features) = 0;
  virtual std::uint64_t query_count() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual int num_classes() const = 0;
};

class ModelBlackBox final : public BlackBox {
 public:
  explicit ModelBlackBox(std::shared_ptr<const Predictor> model);

  PosteriorVector query(std::span<const double> features) override;
  std::uint64_t query_count() const override { return count_.load(); }
  std::size_t input_dim() const override { return model_->input_dim(); }
  int num_classes() const override { return model_->num_classes(); }

 private:
  std::shared_ptr<const Predictor> model_;
  std::atomic<std::uint64_t> count_{0};
};

// HTTP/JSON protocol: POST /predict {"features": [..]} ->
// {"posteriors": [..], "query_id": n}; GET /stats -> {"queries": n}.
// Numbers travel with 17 significant digits, so a remote attack sees
// bit-identical posteriors to an in-process one.

class BlackBoxServer {
 public:
  explicit BlackBoxServer(std::shared_ptr<BlackBox> box);
  ~BlackBoxServer();

  // Binds and serves on a background thread. port 0 picks a free port;
  // returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  // Blocks until the server stops.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot client call; throws TransportError when the server is
// unreachable and ValidationError when the server rejects the input.
PosteriorVector http_query(const std::string& host, int port,
                           std::span<const double> features);

std::uint64_t http_query_count(const std::string& host, int port);

class HttpBlackBox final : public BlackBox {
 public:
  // The caller supplies the dimensions it expects (an attacker knows d from
  // its own data and c from any answer); the server is authoritative and
  // rejects mismatched queries.
  HttpBlackBox(std::string host, int port, std::size_t input_dim,
               int num_classes);

  PosteriorVector query(std::span<const double> features) override;
  std::uint64_t query_count() const override;
  std::size_t input_dim() const override { return input_dim_; }
  int num_classes() const override { return num_classes_; }

 private:
  std::string host_;
  int port_;
  std::size_t input_dim_;
  int num_classes_;
};

// "host:port" -> pair; validates the port.
std::pair<std::string, int> parse_address(const std::string& address);

}  // namespace mileaks
