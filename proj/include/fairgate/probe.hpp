#pragma once

// Black-box model client. One request line of canonical JSON
// {"id":N,"rows":[...]} buys one response line {"id":N,"outcomes":[...]};
// transports are a spawned child process (stdin/stdout) or HTTP POST.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "fairgate/canonical.hpp"
#include "fairgate/data_table.hpp"
#include "fairgate/errors.hpp"

namespace fairgate {

enum class Transport { SpawnedProcess, Http };

struct ModelProbe {
  Transport transport = Transport::SpawnedProcess;
  std::string endpoint;  // command line or URL
  std::int64_t timeout_ms = 10000;
  std::int64_t batch_size = 32;
  bool operator==(const ModelProbe&) const = default;
};

// "cmd:<argv>" or "http:<url>" (https is out of scope).
inline ModelProbe parse_probe_spec(const std::string& spec) {
  ModelProbe probe;
  if (spec.rfind("cmd:", 0) == 0) {
    probe.transport = Transport::SpawnedProcess;
    probe.endpoint = spec.substr(4);
  } else if (spec.rfind("http:", 0) == 0) {
    probe.transport = Transport::Http;
    std::string rest = spec.substr(5);
    probe.endpoint = rest.rfind("//", 0) == 0 ? "http:" + rest : rest;
  } else {
    throw Error(Errc::InvalidValue, "probe spec must start with cmd: or http:", spec);
  }
  if (probe.endpoint.empty()) {
    throw Error(Errc::InvalidValue, "probe spec has an empty endpoint", spec);
  }
  return probe;
}

namespace detail {

inline std::vector<std::string> split_argv(const std::string& command) {
  std::vector<std::string> out;
  std::string token;
  for (char c : command) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) {
        out.push_back(token);
        token.clear();
      }
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

class ProcessClient {
 public:
  explicit ProcessClient(const std::string& command) {
    auto argv = split_argv(command);
    if (argv.empty()) throw Error(Errc::InvalidValue, "empty probe command");
    static bool sigpipe_ignored = [] {
      std::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw Error(Errc::IoError, "pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw Error(Errc::IoError, "fork failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> cargv;
      for (auto& a : argv) cargv.push_back(a.data());
      cargv.push_back(nullptr);
      ::execvp(cargv[0], cargv.data());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  ~ProcessClient() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line, const std::string& endpoint) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      ssize_t n = ::write(in_fd_, p, left);
      if (n < 0) {
        throw Error(Errc::ProbeCrashed, "probe process closed its input", endpoint);
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::int64_t timeout_ms, const std::string& endpoint) {
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      struct pollfd pfd{out_fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(timeout_ms));
      if (rc == 0) throw Error(Errc::ProbeTimeout, "no response within timeout", endpoint);
      if (rc < 0) throw Error(Errc::IoError, "poll failed", endpoint);
      char chunk[4096];
      ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0) throw Error(Errc::IoError, "read failed", endpoint);
      if (n == 0) throw Error(Errc::ProbeCrashed, "probe process exited", endpoint);
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline ParsedUrl parse_http_url(const std::string& url) {
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) {
    rest = rest.substr(7);
  } else {
    throw Error(Errc::InvalidValue, "probe url must use http://", url);
  }
  ParsedUrl out;
  std::size_t slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) out.path = rest.substr(slash);
  std::size_t colon = authority.find(':');
  if (colon == std::string::npos) {
    out.host = authority;
  } else {
    out.host = authority.substr(0, colon);
    out.port = std::atoi(authority.c_str() + colon + 1);
  }
  if (out.host.empty() || out.port <= 0) {
    throw Error(Errc::InvalidValue, "malformed probe url", url);
  }
  return out;
}

inline std::vector<double> parse_probe_response(const std::string& body,
                                                std::int64_t expected_id,
                                                std::size_t expected_count,
                                                const std::string& endpoint) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::ProtocolViolation, "response is not a JSON object", endpoint);
  }
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer() ||
      id->get<std::int64_t>() != expected_id) {
    throw Error(Errc::ProtocolViolation, "response id mismatch", endpoint);
  }
  auto outcomes = j.find("outcomes");
  if (outcomes == j.end() || !outcomes->is_array()) {
    throw Error(Errc::ProtocolViolation, "response lacks an outcomes array", endpoint);
  }
  if (outcomes->size() != expected_count) {
    throw Error(Errc::ProtocolViolation,
                "response outcome count " + std::to_string(outcomes->size()) +
                    " does not match request row count " +
                    std::to_string(expected_count),
                endpoint);
  }
  std::vector<double> out;
  out.reserve(outcomes->size());
  for (const auto& v : *outcomes) {
    if (!v.is_number()) {
      throw Error(Errc::ProtocolViolation, "outcomes must be numbers", endpoint);
    }
    double d = v.get<double>();
    if (!std::isfinite(d)) {
      throw Error(Errc::ProtocolViolation, "outcomes must be finite", endpoint);
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace detail

inline std::vector<double> probe_model(const ModelProbe& probe,
                                       const DataTable& table) {
  if (table.rows.empty()) throw Error(Errc::InvalidValue, "probe table is empty");
  if (probe.timeout_ms <= 0 || probe.batch_size < 1) {
    throw Error(Errc::InvalidValue, "probe timeout and batch size must be positive");
  }
  std::vector<double> outcomes;
  outcomes.reserve(table.rows.size());

  auto batches = [&](auto&& exchange) {
    std::int64_t id = 0;
    for (std::size_t begin = 0; begin < table.rows.size();
         begin += static_cast<std::size_t>(probe.batch_size), ++id) {
      std::size_t end = std::min(
          table.rows.size(), begin + static_cast<std::size_t>(probe.batch_size));
      json rows = json::array();
      for (std::size_t r = begin; r < end; ++r) rows.push_back(row_to_json(table, r));
      std::string request = canonical_dump(json{{"id", id}, {"rows", rows}});
      std::string response = exchange(request);
      auto batch = detail::parse_probe_response(response, id, end - begin,
                                                probe.endpoint);
      outcomes.insert(outcomes.end(), batch.begin(), batch.end());
    }
  };

  if (probe.transport == Transport::SpawnedProcess) {
    detail::ProcessClient client(probe.endpoint);
    batches([&](const std::string& request) {
      client.send_line(request, probe.endpoint);
      return client.read_line(probe.timeout_ms, probe.endpoint);
    });
  } else {
    auto url = detail::parse_http_url(probe.endpoint);
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(probe.timeout_ms / 1000,
                                  (probe.timeout_ms % 1000) * 1000);
    client.set_read_timeout(probe.timeout_ms / 1000,
                            (probe.timeout_ms % 1000) * 1000);
    batches([&](const std::string& request) {
      auto res = client.Post(url.path, request, "application/json");
      if (!res) {
        if (res.error() == httplib::Error::Read ||
            res.error() == httplib::Error::ConnectionTimeout) {
          throw Error(Errc::ProbeTimeout, "http probe timed out", probe.endpoint);
        }
        throw Error(Errc::ProbeCrashed, "http probe unreachable", probe.endpoint);
      }
      if (res->status != 200) {
        throw Error(Errc::ProtocolViolation,
                    "http probe returned status " + std::to_string(res->status),
                    probe.endpoint);
      }
      return res->body;
    });
  }
  return outcomes;
}

}  // namespace fairgate
