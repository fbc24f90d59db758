// Copyright 2026 The rnnscope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rnnscope/server.h"

#include <atomic>
#include <deque>
#include <optional>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "rnnscope/protocol.h"

namespace rnnscope {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

// Maps a request target onto a file below root, or nullopt if it escapes.
std::optional<std::filesystem::path> resolve_static(
    const std::filesystem::path& root, std::string_view target) {
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::filesystem::path rel(std::string(target.substr(1)));
  rel = rel.lexically_normal();
  if (rel.empty() || rel == ".") rel = "index.html";
  for (const auto& part : rel) {
    if (part == "..") return std::nullopt;
  }
  std::filesystem::path full = root / rel;
  std::error_code ec;
  if (std::filesystem::is_directory(full, ec)) full /= "index.html";
  return full;
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::string id, const NetworkConfig& defaults)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        controller_(std::move(id), defaults) {}

  void start(http::request<http::string_body> request) {
    ws_.text(true);
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->send({self->controller_.hello()});
      self->send({self->controller_.snapshot_message()});
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                         std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->send(self->controller_.handle_text(text));
      self->schedule();
      self->read();
    });
  }

  void schedule() {
    auto wait = controller_.next_tick_in();
    if (!wait) {
      timer_.cancel();
      return;
    }
    timer_.expires_after(*wait);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->send(self->controller_.on_timer());
      self->schedule();
    });
  }

  void send(const std::vector<Message>& messages) {
    for (const auto& m : messages) {
      outbox_.push_back(serialize(envelope(m, next_seq_++)));
    }
    if (!writing_) write();
  }

  void write() {
    if (outbox_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec,
                                                std::size_t) {
                      self->outbox_.pop_front();
                      if (ec) {
                        self->closed_ = true;
                        self->writing_ = false;
                        return;
                      }
                      self->write();
                    });
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  SessionController controller_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::uint64_t next_seq_ = 1;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, const ServerOptions& options,
              std::atomic<std::uint64_t>& session_counter)
      : stream_(std::move(socket)),
        options_(options),
        session_counter_(session_counter) {}

  void start() { read(); }

 private:
  void read() {
    request_ = {};
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec,
                                                 std::size_t) {
                       if (ec) return;
                       self->dispatch();
                     });
  }

  void dispatch() {
    if (websocket::is_upgrade(request_)) {
      const std::string id = "s" + std::to_string(++session_counter_);
      std::make_shared<WsSession>(stream_.release_socket(), id,
                                  options_.defaults)
          ->start(std::move(request_));
      return;
    }
    respond();
  }

  template <class Body>
  void finish(http::response<Body>&& response) {
    response.set(http::field::server, "rnnscope");
    response.keep_alive(request_.keep_alive());
    response.prepare_payload();
    auto shared = std::make_shared<http::response<Body>>(std::move(response));
    http::async_write(stream_, *shared,
                      [self = shared_from_this(), shared](beast::error_code ec,
                                                          std::size_t) {
                        if (ec) return;
                        if (!shared->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(
                              tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  void text_response(http::status status, std::string body) {
    http::response<http::string_body> res{status, request_.version()};
    res.set(http::field::content_type, "text/plain; charset=utf-8");
    res.body() = std::move(body);
    finish(std::move(res));
  }

  void respond() {
    if (request_.method() != http::verb::get &&
        request_.method() != http::verb::head) {
      text_response(http::status::method_not_allowed, "method not allowed\n");
      return;
    }
    if (options_.static_dir.empty()) {
      text_response(http::status::not_found, "no static directory\n");
      return;
    }
    const auto target = request_.target();
    auto path = resolve_static(options_.static_dir,
                               std::string_view(target.data(), target.size()));
    if (!path) {
      text_response(http::status::bad_request, "bad path\n");
      return;
    }
    beast::error_code ec;
    http::file_body::value_type file;
    file.open(path->c_str(), beast::file_mode::scan, ec);
    if (ec) {
      text_response(http::status::not_found, "not found\n");
      return;
    }
    if (request_.method() == http::verb::head) {
      http::response<http::empty_body> res{http::status::ok,
                                           request_.version()};
      res.set(http::field::content_type, mime_type(*path));
      res.content_length(file.size());
      res.keep_alive(request_.keep_alive());
      auto shared = std::make_shared<decltype(res)>(std::move(res));
      http::async_write(stream_, *shared,
                        [self = shared_from_this(), shared](beast::error_code,
                                                            std::size_t) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(
                              tcp::socket::shutdown_send, ignored);
                        });
      return;
    }
    http::response<http::file_body> res{
        std::piecewise_construct, std::make_tuple(std::move(file)),
        std::make_tuple(http::status::ok, request_.version())};
    res.set(http::field::content_type, mime_type(*path));
    finish(std::move(res));
  }

  beast::tcp_stream stream_;
  const ServerOptions& options_;
  std::atomic<std::uint64_t>& session_counter_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServerOptions opts)
      : options(std::move(opts)), acceptor(io) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), options,
                                      session_counter)
            ->start();
      }
      accept();
    });
  }

  ServerOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::atomic<std::uint64_t> session_counter{0};
};

Server::Server(ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  validate_config(impl_->options.defaults);
  const std::string where = impl_->options.address + ":" +
                            std::to_string(impl_->options.port);
  beast::error_code ec;
  auto address = asio::ip::make_address(impl_->options.address, ec);
  if (ec) throw StartupError("cannot bind " + where + ": " + ec.message());
  tcp::endpoint endpoint(address, impl_->options.port);
  auto& acceptor = impl_->acceptor;
  if (!ec) acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw StartupError("cannot bind " + where + ": " + ec.message());
  impl_->accept();
}

Server::~Server() = default;

std::uint16_t Server::port() const {
  return impl_->acceptor.local_endpoint().port();
}

void Server::run() { impl_->io.run(); }

void Server::stop() { impl_->io.stop(); }

}  // namespace rnnscope
