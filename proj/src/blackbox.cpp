#include "mileaks/blackbox.hpp"

#include <cmath>

#include "httplib.h"
#include "mileaks/jsonio.hpp"

namespace mileaks {

ModelBlackBox::ModelBlackBox(std::shared_ptr<const Predictor> model)
    : model_(std::move(model)) {
  if (!model_) throw ValidationError("black box needs a model");
}

PosteriorVector ModelBlackBox::query(std::span<const double> features) {
  validate_input(features, model_->input_dim());  // throws before counting
  PosteriorVector out = model_->predict(features);
  count_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

namespace {

std::string posterior_body(const PosteriorVector& posteriors,
                           std::uint64_t query_id) {
  nlohmann::json doc{{"posteriors", posteriors.probs()},
                     {"query_id", query_id}};
  return dump_json17(doc);
}

std::string error_body(const std::string& message) {
  return dump_json17(nlohmann::json{{"error", message}});
}

}  // namespace

struct BlackBoxServer::Impl {
  std::shared_ptr<BlackBox> box;
  httplib::Server server;
  std::thread worker;
};

BlackBoxServer::BlackBoxServer(std::shared_ptr<BlackBox> box)
    : impl_(std::make_unique<Impl>()) {
  if (!box) throw ValidationError("server needs a black box");
  impl_->box = std::move(box);

  impl_->server.Post("/predict", [this](const httplib::Request& req,
                                        httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.body = error_body("request body is not valid JSON");
      return;
    }
    if (!doc.is_object() || !doc.contains("features") ||
        !doc.at("features").is_array()) {
      res.status = 400;
      res.body = error_body("request needs a \"features\" array");
      return;
    }
    std::vector<double> features;
    try {
      features = doc.at("features").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.body = error_body("\"features\" must hold numbers");
      return;
    }
    try {
      const PosteriorVector posteriors = impl_->box->query(features);
      res.status = 200;
      res.body = posterior_body(posteriors, impl_->box->query_count());
    } catch (const Error& e) {
      res.status = 400;
      res.body = error_body(e.what());
    }
  });

  impl_->server.Get("/stats", [this](const httplib::Request&,
                                     httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    res.body =
        dump_json17(nlohmann::json{{"queries", impl_->box->query_count()}});
  });
}

BlackBoxServer::~BlackBoxServer() { stop(); }

int BlackBoxServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw TransportError("cannot bind to " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port))
      throw TransportError("cannot bind to " + host + ":" +
                           std::to_string(port));
  }
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void BlackBoxServer::stop() {
  if (impl_->worker.joinable()) {
    impl_->server.stop();
    impl_->worker.join();
  }
}

void BlackBoxServer::wait() {
  if (impl_->worker.joinable()) impl_->worker.join();
}

PosteriorVector http_query(const std::string& host, int port,
                           std::span<const double> features) {
  httplib::Client client(host, port);
  nlohmann::json body{
      {"features", std::vector<double>(features.begin(), features.end())}};
  auto res = client.Post("/predict", dump_json17(body), "application/json");
  if (!res)
    throw TransportError("cannot reach " + host + ":" + std::to_string(port) +
                         ": " + httplib::to_string(res.error()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw TransportError("malformed response from " + host);
  }
  if (res->status != 200) {
    const std::string msg =
        doc.is_object() && doc.contains("error") ? doc.at("error") : "unknown";
    throw ValidationError("query rejected: " + msg);
  }
  return PosteriorVector(doc.at("posteriors").get<std::vector<double>>());
}

std::uint64_t http_query_count(const std::string& host, int port) {
  httplib::Client client(host, port);
  auto res = client.Get("/stats");
  if (!res)
    throw TransportError("cannot reach " + host + ":" + std::to_string(port) +
                         ": " + httplib::to_string(res.error()));
  const nlohmann::json doc = nlohmann::json::parse(res->body);
  return doc.at("queries").get<std::uint64_t>();
}

HttpBlackBox::HttpBlackBox(std::string host, int port, std::size_t input_dim,
                           int num_classes)
    : host_(std::move(host)),
      port_(port),
      input_dim_(input_dim),
      num_classes_(num_classes) {}

PosteriorVector HttpBlackBox::query(std::span<const double> features) {
  return http_query(host_, port_, features);
}

std::uint64_t HttpBlackBox::query_count() const {
  return http_query_count(host_, port_);
}

std::pair<std::string, int> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 >= address.size())
    throw ValidationError("address must look like host:port, got '" +
                          address + "'");
  const std::string host = address.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("invalid port in address '" + address + "'");
  }
  if (port < 1 || port > 65535)
    throw ValidationError("port out of range in address '" + address + "'");
  return {host, port};
}

}  // namespace mileaks
