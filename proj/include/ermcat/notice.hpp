#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace ermcat {

struct ChangeNotice {
  std::uint64_t catalog = 0;
  std::uint64_t version = 0;
  std::string timestamp;  // RFC 3339, UTC
};

std::string now_rfc3339();

class NoticeSink {
 public:
  virtual ~NoticeSink() = default;
  /// May throw; the service logs and continues.
  virtual void publish(const ChangeNotice& notice) = 0;
};

/// Appends one JSON object per line.
class FileNoticeSink : public NoticeSink {
 public:
  explicit FileNoticeSink(std::filesystem::path path) : path_(std::move(path)) {}
  void publish(const ChangeNotice& notice) override;

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

class MemoryNoticeSink : public NoticeSink {
 public:
  void publish(const ChangeNotice& notice) override;
  std::vector<ChangeNotice> notices() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ChangeNotice> notices_;
};

}  // namespace ermcat
