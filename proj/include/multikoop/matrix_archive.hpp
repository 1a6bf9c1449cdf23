#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vendor/json.hpp"

#include "multikoop/types.hpp"

namespace multikoop {

// Single-file container for named matrices: one JSON header line (format tag,
// user metadata, matrix directory) followed by the concatenated column-major
// little-endian float64 payloads. Round-trips bit-exactly.
class MatrixArchive {
 public:
  nlohmann::json meta;

  void add(const std::string& name, const MatrixXd& m);
  bool has(const std::string& name) const;
  const MatrixXd& get(const std::string& name) const;
  const std::vector<std::pair<std::string, MatrixXd>>& items() const { return items_; }

  void save(const std::string& path) const;
  static MatrixArchive load(const std::string& path);

 private:
  std::vector<std::pair<std::string, MatrixXd>> items_;
};

// FNV-1a 64-bit over a file's bytes; hex string. Used as the model hash.
std::string file_hash(const std::string& path);

}  // namespace multikoop
