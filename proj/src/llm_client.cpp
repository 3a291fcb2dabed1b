#include "kgdenoise/llm_client.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

namespace kgd {

namespace {

using json = nlohmann::json;

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    // "http://host:port/v1" -> ("http://host:port", "/v1")
    auto scheme_end = base_url.find("://");
    auto path_start = scheme_end == std::string::npos
                          ? base_url.find('/')
                          : base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/')
        prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(const ServiceConfig& config) {
        auto [host, prefix] = split_base_url(config.base_url);
        host_ = host;
        prefix_ = prefix;
        timeout_ = config.timeout;
    }

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::map<std::string, std::string>& headers) override {
        httplib::Client client(host_);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        client.set_connection_timeout(secs.count(), 0);
        client.set_read_timeout(secs.count(), 0);
        client.set_write_timeout(secs.count(), 0);
        httplib::Headers hl;
        for (const auto& [k, v] : headers)
            hl.emplace(k, v);
        auto res = client.Post(prefix_ + path, hl, body, "application/json");
        if (!res)
            throw std::runtime_error("connection failure: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

private:
    std::string host_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
};

} // namespace

std::shared_ptr<Transport> make_http_transport(const ServiceConfig& config) {
    return std::make_shared<HttplibTransport>(config);
}

// Bounds concurrent requests without a compile-time semaphore limit.
struct LlmClient::Gate {
    explicit Gate(int limit) : limit(limit) {}
    void acquire() {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return active < limit; });
        ++active;
    }
    void release() {
        {
            std::lock_guard lock(m);
            --active;
        }
        cv.notify_one();
    }
    std::mutex m;
    std::condition_variable cv;
    int active = 0;
    int limit;
};

LlmClient::LlmClient(ServiceConfig config, std::shared_ptr<Transport> transport,
                     BackoffPolicy backoff)
    : config_(std::move(config)), transport_(std::move(transport)), backoff_(std::move(backoff)) {
    if (config_.max_retries < 0)
        throw std::invalid_argument("max_retries must be >= 0");
    if (config_.max_in_flight < 1)
        throw std::invalid_argument("max_in_flight must be >= 1");
    gate_ = std::make_shared<Gate>(config_.max_in_flight);
    if (!backoff_.sleeper)
        backoff_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string LlmClient::bearer_key() const {
    // Read at request time only; never stored or logged.
    const char* key = std::getenv(config_.api_key_env.c_str());
    return key ? key : "";
}

HttpResponse LlmClient::post_with_retries(const std::string& path, const std::string& body) {
    std::map<std::string, std::string> headers;
    if (auto key = bearer_key(); !key.empty())
        headers["Authorization"] = "Bearer " + key;

    std::mt19937_64 rng(backoff_.seed);
    std::string last_error;
    int attempts = 0;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        ++attempts;
        try {
            gate_->acquire();
            HttpResponse res;
            try {
                res = transport_->post(path, body, headers);
            } catch (...) {
                gate_->release();
                throw;
            }
            gate_->release();

            if (res.status == 200)
                return res;
            if (!transient_status(res.status))
                throw TransportError("service returned status " + std::to_string(res.status),
                                     attempts);
            last_error = "status " + std::to_string(res.status);
        } catch (const TransportError&) {
            throw;
        } catch (const std::exception& e) {
            last_error = e.what();
        }

        if (attempt < config_.max_retries) {
            double factor = std::pow(backoff_.multiplier, attempt);
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff_.base.count()) * factor));
            if (backoff_.jitter > 0 && delay.count() > 0) {
                std::uniform_real_distribution<double> dist(0.0, backoff_.jitter);
                delay += std::chrono::milliseconds(
                    static_cast<long long>(dist(rng) * static_cast<double>(delay.count())));
            }
            backoff_.sleeper(delay);
        }
    }
    throw TransportError("request failed after " + std::to_string(attempts) +
                             " attempts: " + last_error,
                         attempts);
}

std::string LlmClient::chat_complete(const std::vector<ChatMessage>& messages) {
    json body;
    body["model"] = config_.chat_model;
    body["messages"] = json::array();
    for (const auto& m : messages) {
        body["messages"].push_back(
            {{"role", m.role == ChatMessage::Role::system ? "system" : "user"},
             {"content", m.content}});
    }
    auto res = post_with_retries("/chat/completions", body.dump());
    try {
        auto doc = json::parse(res.body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed chat reply: ") + e.what());
    }
}

std::vector<Eigen::VectorXd> LlmClient::embed_texts(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw std::invalid_argument("embed_texts requires a non-empty text list");

    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    const std::size_t batch = static_cast<std::size_t>(std::max(1, config_.embed_batch_size));
    for (std::size_t start = 0; start < texts.size(); start += batch) {
        std::size_t end = std::min(texts.size(), start + batch);
        json body;
        body["model"] = config_.embed_model;
        body["input"] = json::array();
        for (std::size_t i = start; i < end; ++i)
            body["input"].push_back(texts[i]);

        auto res = post_with_retries("/embeddings", body.dump());
        try {
            auto doc = json::parse(res.body);
            auto& data = doc.at("data");
            if (data.size() != end - start)
                throw ProtocolError("embedding reply count mismatch");
            std::vector<Eigen::VectorXd> chunk(data.size());
            for (auto& item : data) {
                std::size_t index = item.at("index").get<std::size_t>();
                if (index >= chunk.size())
                    throw ProtocolError("embedding reply index out of range");
                const auto& values = item.at("embedding");
                Eigen::VectorXd v(values.size());
                for (Eigen::Index j = 0; j < v.size(); ++j)
                    v[j] = values.at(static_cast<std::size_t>(j)).get<double>();
                chunk[index] = std::move(v);
            }
            for (auto& v : chunk) {
                if (!out.empty() && v.size() != out.front().size())
                    throw ProtocolError("service returned inconsistent embedding dimensions");
                out.push_back(std::move(v));
            }
        } catch (const ProtocolError&) {
            throw;
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed embedding reply: ") + e.what());
        }
    }
    return out;
}

} // namespace kgd
