#include "jigsaw/server.hpp"

#include <sys/socket.h>

#include <algorithm>

#include <boost/asio.hpp>
#include <httplib.h>

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxLine = 64u << 20;

int http_status(const json& resp) {
    if (resp.value("ok", false)) return 200;
    const std::string code = resp.value("error_code", "");
    if (code == "UnknownEpisode") return 404;
    if (code == "Busy" || code == "EpisodeFinished") return 409;
    if (code == "Internal") return 500;
    return 400;
}

}  // namespace

struct Server::Impl {
    asio::io_context io;
    std::optional<tcp::acceptor> acceptor;
    std::thread io_thread;

    std::mutex conn_mutex;
    std::condition_variable conn_cv;
    std::set<std::shared_ptr<tcp::socket>> connections;
    bool draining = false;

    httplib::Server http;
    std::thread http_thread;

    void accept_next(EpisodeStore& store) {
        acceptor->async_accept([this, &store](boost::system::error_code ec, tcp::socket sock) {
            if (ec) return;  // acceptor closed
            auto shared = std::make_shared<tcp::socket>(std::move(sock));
            {
                std::lock_guard lock(conn_mutex);
                if (draining) return;
                connections.insert(shared);
            }
            std::thread([this, &store, shared]() mutable { serve(store, std::move(shared)); })
                .detach();
            accept_next(store);
        });
    }

    void serve(EpisodeStore& store, std::shared_ptr<tcp::socket> sock) {
        asio::streambuf buf(kMaxLine);
        boost::system::error_code ec;
        while (true) {
            const std::size_t n = asio::read_until(*sock, buf, '\n', ec);
            if (ec) break;
            std::string line(asio::buffers_begin(buf.data()),
                             asio::buffers_begin(buf.data()) + static_cast<std::ptrdiff_t>(n - 1));
            buf.consume(n);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            json resp;
            try {
                resp = store.handle(json::parse(line));
            } catch (const json::parse_error& e) {
                resp = wire_error(std::string("malformed JSON: ") + e.what(), "SchemaError");
            }
            const std::string out = resp.dump() + "\n";
            asio::write(*sock, asio::buffer(out), ec);
            if (ec) break;
        }
        sock->close(ec);
        // The socket must be gone before stop() can return and tear down io.
        std::lock_guard lock(conn_mutex);
        connections.erase(sock);
        sock.reset();
        conn_cv.notify_all();
    }

    void setup_http(EpisodeStore& store) {
        const auto reply = [](httplib::Response& res, const json& body) {
            res.status = http_status(body);
            res.set_content(body.dump(), "application/json");
        };
        const auto body_of = [](const httplib::Request& req) {
            return req.body.empty() ? json::object() : json::parse(req.body);
        };
        http.Post("/episodes", [&store, reply, body_of](const httplib::Request& req,
                                                         httplib::Response& res) {
            try {
                reply(res, store.handle(json{{"v", kWireVersion}, {"op", "new_episode"},
                                             {"payload", body_of(req)}}));
            } catch (const json::parse_error& e) {
                reply(res, wire_error(e.what(), "SchemaError"));
            }
        });
        http.Post(R"(/episodes/([^/]+)/step)", [&store, reply, body_of](const httplib::Request& req,
                                                                        httplib::Response& res) {
            try {
                reply(res, store.handle(json{{"v", kWireVersion}, {"op", "step"},
                                             {"episode_id", req.matches[1].str()},
                                             {"payload", body_of(req)}}));
            } catch (const json::parse_error& e) {
                reply(res, wire_error(e.what(), "SchemaError"));
            }
        });
        http.Get(R"(/episodes/([^/]+))", [&store, reply](const httplib::Request& req,
                                                          httplib::Response& res) {
            const bool full = req.has_param("trajectory") && req.get_param_value("trajectory") != "0";
            reply(res, store.handle(json{{"v", kWireVersion}, {"op", "state"},
                                         {"episode_id", req.matches[1].str()},
                                         {"payload", {{"trajectory", full}}}}));
        });
        http.Delete(R"(/episodes/([^/]+))", [&store, reply](const httplib::Request& req,
                                                             httplib::Response& res) {
            reply(res, store.handle(json{{"v", kWireVersion}, {"op", "abort"},
                                         {"episode_id", req.matches[1].str()}}));
        });
        http.Get("/health", [&store, reply](const httplib::Request&, httplib::Response& res) {
            reply(res, store.handle(json{{"v", kWireVersion}, {"op", "health"}}));
        });
    }
};

Server::Server(ServerConfig cfg) : store_(std::move(cfg)), impl_(std::make_unique<Impl>()) {}

Server::~Server() { stop(); }

void Server::start() {
    if (started_) return;
    const ServerConfig& cfg = store_.config();
    try {
        const tcp::endpoint ep(asio::ip::make_address(cfg.host), static_cast<unsigned short>(cfg.port));
        impl_->acceptor.emplace(impl_->io, ep);
        port_ = impl_->acceptor->local_endpoint().port();
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::kBind, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port) +
                                          ": " + e.what());
    }
    if (cfg.http_port >= 0) {
        impl_->setup_http(store_);
        if (cfg.http_port == 0) {
            http_port_ = impl_->http.bind_to_any_port(cfg.host);
        } else {
            http_port_ = impl_->http.bind_to_port(cfg.host, cfg.http_port) ? cfg.http_port : -1;
        }
        if (http_port_ < 0) {
            impl_->acceptor.reset();
            throw Error(ErrorCode::kBind, "cannot bind HTTP port " + std::to_string(cfg.http_port));
        }
        impl_->http_thread = std::thread([this] { impl_->http.listen_after_bind(); });
    }
    impl_->accept_next(store_);
    impl_->io_thread = std::thread([this] { impl_->io.run(); });
    reaper_ = std::thread([this] { reaper_loop(); });
    started_ = true;
}

void Server::stop() {
    if (!started_) return;
    started_ = false;
    asio::post(impl_->io, [this] {
        boost::system::error_code ec;
        impl_->acceptor->close(ec);
    });
    impl_->io_thread.join();
    {
        // Stop reading new requests; a request already being handled still
        // gets its response before the connection thread exits.
        std::unique_lock lock(impl_->conn_mutex);
        impl_->draining = true;
        for (const auto& sock : impl_->connections) ::shutdown(sock->native_handle(), SHUT_RD);
        impl_->conn_cv.wait(lock, [this] { return impl_->connections.empty(); });
    }
    if (impl_->http_thread.joinable()) {
        impl_->http.stop();
        impl_->http_thread.join();
    }
    {
        std::lock_guard lock(reaper_mutex_);
        stopping_ = true;
    }
    reaper_cv_.notify_all();
    reaper_.join();
}

void Server::reaper_loop() {
    const auto period = std::chrono::milliseconds(
        std::clamp(store_.config().ttl_seconds * 250, 50, 30'000));
    std::unique_lock lock(reaper_mutex_);
    while (!reaper_cv_.wait_for(lock, period, [this] { return stopping_; })) {
        store_.reap(std::chrono::steady_clock::now());
    }
}

struct WireClient::Impl {
    asio::io_context io;
    tcp::socket socket{io};
    asio::streambuf buf{kMaxLine};
};

WireClient::WireClient(const std::string& host, int port) : impl_(std::make_unique<Impl>()) {
    try {
        tcp::resolver resolver(impl_->io);
        asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::kIo, "cannot connect to " + host + ":" + std::to_string(port) +
                                        ": " + e.what());
    }
}

WireClient::~WireClient() = default;

json WireClient::call(const json& request) {
    try {
        const std::string out = request.dump() + "\n";
        asio::write(impl_->socket, asio::buffer(out));
        const std::size_t n = asio::read_until(impl_->socket, impl_->buf, '\n');
        std::string line(asio::buffers_begin(impl_->buf.data()),
                         asio::buffers_begin(impl_->buf.data()) + static_cast<std::ptrdiff_t>(n - 1));
        impl_->buf.consume(n);
        return json::parse(line);
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::kIo, std::string("wire call failed: ") + e.what());
    }
}

}  // namespace jigsaw
