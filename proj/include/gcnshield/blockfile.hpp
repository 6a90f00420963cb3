#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnshield/common.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/gvae.hpp"

namespace gcnshield {

/// Simple binary container: a little-endian uint64 header length, a JSON
/// header, then the described blocks as row-major float64. Doubles are
/// written verbatim (float builds widen), so round-trips are bitwise exact.
namespace blockfile {

namespace detail {

inline void write_block(std::ofstream& out, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = static_cast<double>(m(i, j));
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

inline Mat read_block(std::ifstream& in, Eigen::Index rows, Eigen::Index cols,
                      const std::string& path) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!in) throw InputError(path + ": truncated block data");
      m(i, j) = static_cast<real_t>(v);
    }
  return m;
}

}  // namespace detail

inline void write(const std::filesystem::path& path, nlohmann::json header,
                  const std::vector<const Mat*>& blocks) {
  header["blocks"] = nlohmann::json::array();
  for (const Mat* b : blocks)
    header["blocks"].push_back({{"rows", b->rows()}, {"cols", b->cols()}});
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  const auto len = static_cast<std::uint64_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Mat* b : blocks) detail::write_block(out, *b);
  if (!out) throw InputError("write failed: " + path.string());
}

struct Contents {
  nlohmann::json header;
  std::vector<Mat> blocks;
};

inline Contents read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1ULL << 30)) throw InputError(path.string() + ": bad header length");
  std::string hs(static_cast<std::size_t>(len), '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw InputError(path.string() + ": truncated header");

  Contents c;
  try {
    c.header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": malformed header: " + e.what());
  }
  for (const auto& bj : c.header.at("blocks"))
    c.blocks.push_back(detail::read_block(in, bj.at("rows").get<Eigen::Index>(),
                                          bj.at("cols").get<Eigen::Index>(), path.string()));
  return c;
}

}  // namespace blockfile

inline void save_model(const std::filesystem::path& path, const GcnModel& m,
                       nlohmann::json meta = {}) {
  meta["kind"] = "gcn_model";
  blockfile::write(path, std::move(meta), {&m.w0, &m.w1});
}

inline GcnModel load_model(const std::filesystem::path& path) {
  auto c = blockfile::read(path);
  if (c.header.value("kind", "") != "gcn_model" || c.blocks.size() != 2)
    throw InputError(path.string() + ": not a model checkpoint");
  return GcnModel{std::move(c.blocks[0]), std::move(c.blocks[1])};
}

inline void save_embedding(const std::filesystem::path& path, const Mat& e,
                           const std::string& embedder, std::uint64_t seed) {
  nlohmann::json meta{{"kind", "embedding"},
                      {"n", e.rows()},
                      {"d", e.cols()},
                      {"embedder", embedder},
                      {"seed", seed}};
  blockfile::write(path, std::move(meta), {&e});
}

struct EmbeddingFile {
  Mat e;
  std::string embedder;
  std::uint64_t seed = 0;
};

inline EmbeddingFile load_embedding(const std::filesystem::path& path) {
  auto c = blockfile::read(path);
  if (c.header.value("kind", "") != "embedding" || c.blocks.size() != 1)
    throw InputError(path.string() + ": not an embedding cache");
  EmbeddingFile f;
  f.e = std::move(c.blocks[0]);
  f.embedder = c.header.at("embedder").get<std::string>();
  f.seed = c.header.at("seed").get<std::uint64_t>();
  if (f.e.rows() != c.header.at("n").get<Eigen::Index>() ||
      f.e.cols() != c.header.at("d").get<Eigen::Index>())
    throw InputError(path.string() + ": embedding shape mismatch");
  return f;
}

/// FNV-1a 64-bit over a file's bytes, as a fixed-width hex string.
inline std::string fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace gcnshield
