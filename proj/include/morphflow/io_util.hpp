#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "morphflow/types.hpp"

namespace morphflow {

inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return std::string(buf);
}

// Writes to <path>.tmp and renames on commit so readers never observe a
// partially written file.
class AtomicWriter {
 public:
  explicit AtomicWriter(const std::string& path)
      : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + tmp_ + " for writing");
  }

  ~AtomicWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw Error("write failed for " + tmp_);
    out_.close();
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace morphflow
