#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/error.hpp"
#include "genscale/util/delimited.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::service {

/// Append-only JSON-lines event log. Each event is one write(2) of a complete
/// line; a torn final line left by a crash is dropped when the log is opened.
class EventLog {
 public:
  EventLog() = default;
  EventLog(const std::string& path, bool fsync) : path_(path), fsync_(fsync) {
    if (std::filesystem::exists(path_)) recover();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw Error(ErrorCode::io_error, "cannot open event log " + path_ + ": " + std::strerror(errno));
  }
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  bool enabled() const { return fd_ >= 0; }

  /// Events that were present when the log was opened.
  const std::vector<nlohmann::json>& recovered() const { return recovered_; }

  void append(const nlohmann::json& event) {
    if (fd_ < 0) return;
    std::string line = event.dump() + "\n";
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::io_error, "event log write failed: " + std::string(std::strerror(errno)));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (fsync_ && ::fsync(fd_) != 0)
      throw Error(ErrorCode::io_error, "event log fsync failed: " + std::string(std::strerror(errno)));
  }

 private:
  void recover() {
    const std::string text = util::read_file(path_);
    std::size_t keep = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn tail
      const auto line = std::string_view(text).substr(pos, nl - pos);
      if (!line.empty()) {
        try {
          recovered_.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error&) {
          throw Error(ErrorCode::io_error, "event log " + path_ + " is corrupt at byte " + std::to_string(pos));
        }
      }
      pos = nl + 1;
      keep = pos;
    }
    if (keep < text.size()) std::filesystem::resize_file(path_, keep);
  }

  std::string path_;
  bool fsync_ = false;
  int fd_ = -1;
  std::vector<nlohmann::json> recovered_;
};

}  // namespace genscale::service
