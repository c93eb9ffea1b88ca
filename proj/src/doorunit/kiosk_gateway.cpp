#include "gatekeeper/kiosk_gateway.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper::door {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::string_view kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>Door</title></head>"
    "<body><p id=\"screen\">connecting...</p><script>"
    "const ws = new WebSocket(`ws://${location.host}/kiosk`);"
    "ws.onmessage = (m) => { document.getElementById('screen').textContent = JSON.parse(m.data).name; };"
    "</script></body></html>";

std::string_view mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

}  // namespace

class WsSession;

struct KioskGateway::Impl {
  DoorUnit& door;
  GatewayConfig config;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::mutex mutex;
  std::shared_ptr<WsSession> active;

  Impl(DoorUnit& d, GatewayConfig c) : door(d), config(std::move(c)) {}

  void accept();
  void send(const KioskEvent& event);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, KioskGateway::Impl& gw) : ws_(std::move(socket)), gw_(gw) {}

  void start(http::request<http::string_body> request) {
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->closed();
      self->gw_.door.on_ui_connected();
      self->read();
    });
  }

  void post(std::string text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1) self->write();
    });
  }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      try {
        self->gw_.door.on_ui_event(kiosk_event_from_json(nlohmann::json::parse(text)));
      } catch (const std::exception& e) {
        logger()->warn("bad kiosk message: {}", e.what());
      }
      self->read();
    });
  }

  void write() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  void closed() {
    if (done_) return;
    done_ = true;
    {
      std::lock_guard lock(gw_.mutex);
      if (gw_.active.get() == this) gw_.active.reset();
    }
    gw_.door.on_ui_disconnected();
  }

  websocket::stream<beast::tcp_stream> ws_;
  KioskGateway::Impl& gw_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool done_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, KioskGateway::Impl& gw) : stream_(std::move(socket)), gw_(gw) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->dispatch();
    });
  }

 private:
  void dispatch() {
    if (websocket::is_upgrade(request_)) {
      if (request_.target() != "/kiosk") return respond(http::status::not_found, "text/plain", "no such endpoint");
      std::shared_ptr<WsSession> session;
      {
        std::lock_guard lock(gw_.mutex);
        if (gw_.active) return respond(http::status::conflict, "text/plain", "a kiosk is already connected");
        stream_.expires_never();
        session = std::make_shared<WsSession>(stream_.release_socket(), gw_);
        gw_.active = session;
      }
      session->start(std::move(request_));
      return;
    }
    if (request_.method() != http::verb::get) {
      return respond(http::status::method_not_allowed, "text/plain", "GET only");
    }
    std::string target(request_.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/") target = "/index.html";
    if (gw_.config.ui_dir.empty()) {
      if (target == "/index.html") return respond(http::status::ok, "text/html", std::string(kPlaceholderPage));
      return respond(http::status::not_found, "text/plain", "not found");
    }
    const std::filesystem::path relative = std::filesystem::path(target.substr(1)).lexically_normal();
    if (relative.empty() || relative.is_absolute() || *relative.begin() == "..") {
      return respond(http::status::forbidden, "text/plain", "forbidden");
    }
    std::ifstream in(gw_.config.ui_dir / relative, std::ios::binary);
    if (!in) return respond(http::status::not_found, "text/plain", "not found");
    respond(http::status::ok, mime_type(relative),
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
  }

  void respond(http::status status, std::string_view type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  KioskGateway::Impl& gw_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

void KioskGateway::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->start();
    accept();
  });
}

void KioskGateway::Impl::send(const KioskEvent& event) {
  std::shared_ptr<WsSession> session;
  {
    std::lock_guard lock(mutex);
    session = active;
  }
  if (session) session->post(to_json(event).dump());
}

KioskGateway::KioskGateway(DoorUnit& door, GatewayConfig config)
    : impl_(std::make_unique<Impl>(door, std::move(config))) {}

KioskGateway::~KioskGateway() { stop(); }

void KioskGateway::start() {
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->config.host, ec);
  if (ec) throw Error(ErrorCode::kInvalidArgument, "invalid kiosk bind address " + impl_->config.host);
  const tcp::endpoint endpoint(address, impl_->config.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::kIo, "kiosk gateway cannot listen: " + ec.message());
  impl_->door.set_ui([impl = impl_.get()](const KioskEvent& e) { impl->send(e); });
  impl_->accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->io.run(); });
}

void KioskGateway::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->door.set_ui(nullptr);
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    std::lock_guard lock(impl->mutex);
    if (impl->active) impl->active->close();
  });
  // Give pending handlers a moment to run their close paths.
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  impl_->io.stop();
  impl_->thread.join();
}

std::uint16_t KioskGateway::port() const {
  beast::error_code ec;
  const auto endpoint = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : endpoint.port();
}

bool KioskGateway::ui_connected() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->active != nullptr;
}

}  // namespace gatekeeper::door
