#include "multikoop/matrix_archive.hpp"

#include <cstdio>
#include <fstream>

namespace multikoop {

void MatrixArchive::add(const std::string& name, const MatrixXd& m) {
  if (has(name)) throw IoError("archive: duplicate matrix name '" + name + "'");
  items_.emplace_back(name, m);
}

bool MatrixArchive::has(const std::string& name) const {
  for (const auto& [n, m] : items_)
    if (n == name) return true;
  return false;
}

const MatrixXd& MatrixArchive::get(const std::string& name) const {
  for (const auto& [n, m] : items_)
    if (n == name) return m;
  throw IoError("archive: missing matrix '" + name + "'");
}

void MatrixArchive::save(const std::string& path) const {
  nlohmann::json header;
  header["format"] = "mkoop-archive-v1";
  header["meta"] = meta;
  auto& dir = header["matrices"] = nlohmann::json::array();
  for (const auto& [name, m] : items_)
    dir.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("archive: cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  for (const auto& [name, m] : items_)
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!out) throw IoError("archive: write failed for '" + path + "'");
}

MatrixArchive MatrixArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("archive: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("archive: missing header in '" + path + "'");
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "mkoop-archive-v1")
    throw IoError("archive: '" + path + "' is not an mkoop-archive-v1 file");
  MatrixArchive ar;
  ar.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("matrices")) {
    MatrixXd m(entry.at("rows").get<long>(), entry.at("cols").get<long>());
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!in) throw IoError("archive: truncated payload in '" + path + "'");
    ar.items_.emplace_back(entry.at("name").get<std::string>(), std::move(m));
  }
  return ar;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("hash: cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

}  // namespace multikoop
