#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "sensorhub/errors.hpp"

namespace sensorhub::net {

class SocketError : public Error {
public:
    using Error::Error;
};

inline std::string errno_message(const std::string& what) {
    return what + ": " + std::strerror(errno);
}

// Owning socket fd.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    // Wakes any thread blocked on this socket; the fd stays owned.
    void shutdown_both() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

private:
    int fd_ = -1;
};

enum class ReadStatus {
    ok,             // buffer filled completely
    clean_eof,      // peer closed before the first byte of this read
    truncated_eof,  // peer closed mid-buffer
    timeout,        // deadline passed
    cancelled,      // cancel predicate fired
};

inline std::string_view to_string(ReadStatus s) {
    switch (s) {
        case ReadStatus::ok: return "ok";
        case ReadStatus::clean_eof: return "clean_eof";
        case ReadStatus::truncated_eof: return "truncated_eof";
        case ReadStatus::timeout: return "timeout";
        case ReadStatus::cancelled: return "cancelled";
    }
    return "?";
}

// A connected TCP stream.
class TcpStream {
public:
    TcpStream() = default;
    TcpStream(Socket socket, std::string peer) : socket_(std::move(socket)), peer_(std::move(peer)) {}

    static TcpStream connect(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* result = nullptr;
        const auto service = std::to_string(port);
        if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
            throw SocketError("cannot resolve " + host + ": " + gai_strerror(rc));
        }
        int last_errno = 0;
        for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
            Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (!s.valid()) {
                last_errno = errno;
                continue;
            }
            if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
                ::freeaddrinfo(result);
                int one = 1;
                ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
                return TcpStream(std::move(s), host + ":" + service);
            }
            last_errno = errno;
        }
        ::freeaddrinfo(result);
        errno = last_errno;
        throw SocketError(errno_message("cannot connect to " + host + ":" + service));
    }

    bool valid() const { return socket_.valid(); }
    const std::string& peer() const { return peer_; }
    void shutdown_both() { socket_.shutdown_both(); }
    void close() { socket_.close(); }

    // Reads exactly buffer.size() bytes, polling in short slices so the
    // cancel predicate and the deadline stay responsive.
    ReadStatus read_exact(std::span<std::uint8_t> buffer, std::chrono::milliseconds timeout,
                          const std::function<bool()>& cancelled = {}) {
        using clock = std::chrono::steady_clock;
        const auto deadline = clock::now() + timeout;
        std::size_t filled = 0;
        while (filled < buffer.size()) {
            if (cancelled && cancelled()) return ReadStatus::cancelled;
            const auto now = clock::now();
            if (now >= deadline) return ReadStatus::timeout;
            const auto remaining =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
            const int slice = static_cast<int>(std::min<std::int64_t>(remaining.count(), 200));
            pollfd pfd{socket_.fd(), POLLIN, 0};
            const int ready = ::poll(&pfd, 1, slice);
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw SocketError(errno_message("poll"));
            }
            if (ready == 0) continue;
            const ssize_t n =
                ::recv(socket_.fd(), buffer.data() + filled, buffer.size() - filled, 0);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                // Treat a reset like an EOF so callers apply the framing rule.
                return filled == 0 ? ReadStatus::clean_eof : ReadStatus::truncated_eof;
            }
            if (n == 0) {
                return filled == 0 ? ReadStatus::clean_eof : ReadStatus::truncated_eof;
            }
            filled += static_cast<std::size_t>(n);
        }
        return ReadStatus::ok;
    }

    void write_all(std::span<const std::uint8_t> bytes) {
        std::size_t sent = 0;
        while (sent < bytes.size()) {
            const ssize_t n =
                ::send(socket_.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw SocketError(errno_message("send"));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

private:
    Socket socket_;
    std::string peer_;
};

// Listening TCP socket. Port 0 binds an ephemeral port; port() reports the
// actual one.
class TcpListener {
public:
    static TcpListener bind(const std::string& host, std::uint16_t port) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) {
            throw SocketError(errno_message("socket"));
        }
        int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (host.empty() || host == "0.0.0.0") {
            addr.sin_addr.s_addr = htonl(INADDR_ANY);
        } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            throw SocketError("invalid listen address: " + host);
        }
        if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            throw SocketError(errno_message("cannot bind " + host + ":" + std::to_string(port)));
        }
        if (::listen(s.fd(), 16) != 0) {
            throw SocketError(errno_message("listen"));
        }
        sockaddr_in bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
        TcpListener listener;
        listener.socket_ = std::move(s);
        listener.port_ = ntohs(bound.sin_port);
        return listener;
    }

    std::uint16_t port() const { return port_; }
    bool valid() const { return socket_.valid(); }
    void shutdown_both() { socket_.shutdown_both(); }
    void close() { socket_.close(); }

    // Waits up to poll_interval for one connection; empty when none arrived.
    std::optional<TcpStream> accept(std::chrono::milliseconds poll_interval) {
        pollfd pfd{socket_.fd(), POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(poll_interval.count()));
        if (ready <= 0) return std::nullopt;
        sockaddr_in peer{};
        socklen_t len = sizeof(peer);
        const int fd = ::accept(socket_.fd(), reinterpret_cast<sockaddr*>(&peer), &len);
        if (fd < 0) return std::nullopt;
        char ip[INET_ADDRSTRLEN] = "?";
        ::inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof(ip));
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return TcpStream(Socket(fd), std::string(ip) + ":" + std::to_string(ntohs(peer.sin_port)));
    }

private:
    Socket socket_;
    std::uint16_t port_ = 0;
};

}  // namespace sensorhub::net
