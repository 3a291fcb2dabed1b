#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kgd {

struct ServiceConfig {
    std::string base_url;
    std::string api_key_env = "KGDENOISE_API_KEY";
    std::string chat_model;
    std::string embed_model;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    int max_in_flight = 4;
    int embed_batch_size = 64;
};

struct ChatMessage {
    enum class Role { system, user };
    Role role;
    std::string content;
};

struct TransportError : std::runtime_error {
    int attempts = 0;
    TransportError(const std::string& what, int attempts_)
        : std::runtime_error(what), attempts(attempts_) {}
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Minimal transport seam: POST a JSON body to a path under the service base
// URL. Implementations may throw to signal connection-level failures.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers) = 0;
};

// Transport over HTTP(S) using the configured base_url and timeout.
std::shared_ptr<Transport> make_http_transport(const ServiceConfig& config);

struct BackoffPolicy {
    std::chrono::milliseconds base{1000};
    double multiplier = 2.0;
    double jitter = 0.25; // extra delay drawn uniformly from [0, jitter*delay]
    std::uint64_t seed = 0;
    std::function<void(std::chrono::milliseconds)> sleeper; // default: real sleep
};

// Chat-completion and text-embedding client with retries, exponential
// backoff on transient failures (rate limit, 5xx, transport errors), and a
// bounded number of in-flight requests. Shareable across threads.
class LlmClient {
public:
    LlmClient(ServiceConfig config, std::shared_ptr<Transport> transport,
              BackoffPolicy backoff = {});

    // Returns the assistant reply text. Throws TransportError with the
    // attempt count once retries are exhausted, ProtocolError on malformed
    // service replies.
    std::string chat_complete(const std::vector<ChatMessage>& messages);

    // Batched embedding; preserves input order. Throws std::invalid_argument
    // on an empty input list and ProtocolError when the service returns
    // vectors of inconsistent dimension.
    std::vector<Eigen::VectorXd> embed_texts(const std::vector<std::string>& texts);

    const ServiceConfig& config() const { return config_; }

private:
    struct Gate;
    HttpResponse post_with_retries(const std::string& path, const std::string& body);
    std::string bearer_key() const;

    ServiceConfig config_;
    std::shared_ptr<Transport> transport_;
    BackoffPolicy backoff_;
    std::shared_ptr<Gate> gate_;
};

} // namespace kgd
