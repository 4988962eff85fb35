#ifndef BFC_CONTAINER_HPP
#define BFC_CONTAINER_HPP

#include "bfc/network.hpp"

#include <json.hpp>

#include <bit>
#include <filesystem>
#include <fstream>
#include <variant>

namespace bfc {

static_assert(std::endian::native == std::endian::little,
              "network containers are little-endian; big-endian hosts are unsupported");

// Network container: a JSON manifest
//   {format: "butterfly"|"qtt"|"lowrank", levels, leaf, rank,
//    cores: [{file, slices, rows, cols}, ...]}
// plus one binary file per core holding complex128 little-endian values,
// slice-major then row-major within each slice.

using NetworkVariant =
    std::variant<ButterflyNetwork<Cplx>, QttNetwork<Cplx>, LowRankPair<Cplx>>;

namespace detail {

inline void write_core_file(const std::filesystem::path& path,
                            const std::vector<Mat<Cplx>>& slices) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_format_error("cannot open " + path.string() + " for writing");
  for (const auto& s : slices)
    out.write(reinterpret_cast<const char*>(s.data()),
              static_cast<std::streamsize>(sizeof(Cplx) * static_cast<std::size_t>(s.size())));
  if (!out) throw data_format_error("write error on " + path.string());
}

inline std::vector<Mat<Cplx>> read_core_file(const std::filesystem::path& path, Index slices,
                                             Index rows, Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_format_error("cannot open " + path.string());
  std::vector<Mat<Cplx>> out(static_cast<std::size_t>(slices));
  for (auto& s : out) {
    s.resize(rows, cols);
    in.read(reinterpret_cast<char*>(s.data()),
            static_cast<std::streamsize>(sizeof(Cplx) * static_cast<std::size_t>(s.size())));
    if (!in) throw data_format_error(path.string() + ": truncated core file");
  }
  char extra;
  if (in.read(&extra, 1))
    throw data_format_error(path.string() + ": trailing bytes in core file");
  return out;
}

struct CoreMeta {
  std::string file;
  Index slices, rows, cols;
};

inline nlohmann::json manifest_json(const std::string& format, int levels, int leaf, int rank,
                                    const std::vector<CoreMeta>& cores) {
  nlohmann::json j;
  j["format"] = format;
  j["levels"] = levels;
  j["leaf"] = leaf;
  j["rank"] = rank;
  j["cores"] = nlohmann::json::array();
  for (const auto& c : cores)
    j["cores"].push_back(
        {{"file", c.file}, {"slices", c.slices}, {"rows", c.rows}, {"cols", c.cols}});
  return j;
}

inline std::string core_file_name(const std::filesystem::path& manifest, std::size_t index) {
  auto stem = manifest.stem().string();
  return stem + ".core" + std::to_string(index) + ".bin";
}

} // namespace detail

template <typename Net>
void save_network_cores(const Net& net, const std::string& format,
                        const std::filesystem::path& manifest_path) {
  net.validate();
  const auto dir = manifest_path.parent_path();
  std::vector<detail::CoreMeta> metas;
  for (std::size_t k = 0; k < net.cores.size(); ++k) {
    detail::CoreMeta meta;
    meta.file = detail::core_file_name(manifest_path, k + 1);
    meta.slices = static_cast<Index>(net.cores[k].size());
    meta.rows = net.cores[k].front().rows();
    meta.cols = net.cores[k].front().cols();
    detail::write_core_file(dir / meta.file, net.cores[k]);
    metas.push_back(std::move(meta));
  }
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw data_format_error("cannot open " + manifest_path.string() + " for writing");
  out << detail::manifest_json(format, net.levels, net.leaf, net.rank, metas).dump(2) << "\n";
}

inline void save_network(const ButterflyNetwork<Cplx>& net, const std::string& path) {
  save_network_cores(net, "butterfly", path);
}

inline void save_network(const QttNetwork<Cplx>& net, const std::string& path) {
  save_network_cores(net, "qtt", path);
}

inline void save_network(const LowRankPair<Cplx>& pair, const std::string& path) {
  pair.validate();
  const std::filesystem::path manifest(path);
  const auto dir = manifest.parent_path();
  std::vector<detail::CoreMeta> metas;
  const Mat<Cplx>* mats[2] = {&pair.A, &pair.B};
  for (std::size_t k = 0; k < 2; ++k) {
    detail::CoreMeta meta;
    meta.file = detail::core_file_name(manifest, k + 1);
    meta.slices = 1;
    meta.rows = mats[k]->rows();
    meta.cols = mats[k]->cols();
    detail::write_core_file(dir / meta.file, {*mats[k]});
    metas.push_back(std::move(meta));
  }
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw data_format_error("cannot open " + path + " for writing");
  out << detail::manifest_json("lowrank", 0, static_cast<int>(pair.dim()),
                               static_cast<int>(pair.rank()), metas)
             .dump(2)
      << "\n";
}

inline NetworkVariant load_network(const std::string& path) {
  const std::filesystem::path manifest(path);
  std::ifstream in(manifest);
  if (!in) throw data_format_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw data_format_error(path + ": invalid manifest: " + ex.what());
  }
  for (const char* key : {"format", "levels", "leaf", "rank", "cores"})
    if (!j.contains(key)) throw data_format_error(path + ": manifest missing \"" + key + "\"");

  const std::string format = j["format"];
  const int levels = j["levels"], leaf = j["leaf"], rank = j["rank"];
  const auto dir = manifest.parent_path();

  std::vector<std::vector<Mat<Cplx>>> cores;
  for (const auto& cj : j["cores"]) {
    for (const char* key : {"file", "slices", "rows", "cols"})
      if (!cj.contains(key)) throw data_format_error(path + ": core entry missing \"" + key + "\"");
    cores.push_back(detail::read_core_file(dir / std::string(cj["file"]), cj["slices"],
                                           cj["rows"], cj["cols"]));
  }

  try {
    if (format == "butterfly") {
      ButterflyNetwork<Cplx> net;
      net.levels = levels;
      net.leaf = leaf;
      net.rank = rank;
      net.cores = std::move(cores);
      net.validate();
      return net;
    }
    if (format == "qtt") {
      QttNetwork<Cplx> net;
      net.levels = levels;
      net.leaf = leaf;
      net.rank = rank;
      net.cores = std::move(cores);
      net.validate();
      return net;
    }
    if (format == "lowrank") {
      if (cores.size() != 2 || cores[0].size() != 1 || cores[1].size() != 1)
        throw std::invalid_argument("lowrank container must hold exactly two single-slice cores");
      LowRankPair<Cplx> pair{std::move(cores[0][0]), std::move(cores[1][0])};
      pair.validate();
      return pair;
    }
  } catch (const std::invalid_argument& ex) {
    throw data_format_error(path + ": " + ex.what());
  }
  throw data_format_error(path + ": unknown format \"" + format + "\"");
}

} // namespace bfc

#endif
