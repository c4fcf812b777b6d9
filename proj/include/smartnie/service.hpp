#pragma once

#include <cstddef>
#include <memory>
#include <string>

namespace smartnie {

struct ServiceConfig {
    std::size_t reps_cap = 10'000;
    std::string cors_origin = "http://localhost:5173"; // bundled UI dev server
    unsigned threads = 1;                               // Monte Carlo workers per request
    std::string static_dir;                             // optional UI assets mounted at /
};

struct HttpResponse {
    int status = 200;
    std::string body;
};

// Pure request handlers: body in, status and JSON body out. Every response
// carries "version"; successful ones also echo the parsed "inputs".
HttpResponse handle_plan(const std::string& body, const ServiceConfig& config = {});
HttpResponse handle_power(const std::string& body, const ServiceConfig& config = {});
HttpResponse handle_analyze(const std::string& body, const ServiceConfig& config = {});
HttpResponse handle_simulate(const std::string& body, const ServiceConfig& config = {});
HttpResponse handle_presets(const ServiceConfig& config = {});

std::string service_version();

class HttpService {
public:
    explicit HttpService(ServiceConfig config);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds host:port (port 0 picks a free port) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace smartnie
