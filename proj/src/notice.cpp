#include "ermcat/notice.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "ermcat/errors.hpp"
#include "ermcat/value.hpp"

namespace ermcat {

std::string now_rfc3339() {
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();
  return format_value(Timestamp{micros});
}

void FileNoticeSink::publish(const ChangeNotice& notice) {
  nlohmann::ordered_json rec = {{"catalog", notice.catalog}, {"version", notice.version},
                                {"timestamp", notice.timestamp}};
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::internal, "cannot append to " + path_.string());
}

void MemoryNoticeSink::publish(const ChangeNotice& notice) {
  std::lock_guard<std::mutex> lock(mutex_);
  notices_.push_back(notice);
}

std::vector<ChangeNotice> MemoryNoticeSink::notices() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return notices_;
}

}  // namespace ermcat
