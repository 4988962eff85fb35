#ifndef BFC_TRIPLETS_HPP
#define BFC_TRIPLETS_HPP

#include "bfc/common.hpp"
#include "bfc/observed.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace bfc {

// Triplet container: UTF-8 CSV with header "i,j,re,im", 0-based indices.
// Paths ending in .gz are transparently gzip-compressed.
struct TripletData {
  std::vector<Index> rows, cols;
  std::vector<Cplx> values;
  std::size_t size() const { return rows.size(); }
};

namespace detail {

inline bool has_gz_suffix(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

class LineSource {
public:
  explicit LineSource(const std::string& path) : gz_(has_gz_suffix(path)) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "rb");
      if (!gzf_) throw data_format_error("cannot open " + path);
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw data_format_error("cannot open " + path);
    }
  }
  ~LineSource() {
    if (gzf_) gzclose(gzf_);
  }
  LineSource(const LineSource&) = delete;
  LineSource& operator=(const LineSource&) = delete;

  bool next(std::string& line) {
    if (!gz_) {
      if (!std::getline(file_, line)) return false;
      strip(line);
      return true;
    }
    line.clear();
    for (;;) {
      while (pos_ < len_) {
        const char ch = buf_[pos_++];
        if (ch == '\n') {
          strip(line);
          return true;
        }
        line.push_back(ch);
      }
      const int got = gzread(gzf_, buf_, sizeof(buf_));
      if (got < 0) throw data_format_error("gzip read error");
      if (got == 0) {
        if (line.empty()) return false;
        strip(line);
        return true;
      }
      len_ = static_cast<std::size_t>(got);
      pos_ = 0;
    }
  }

private:
  static void strip(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  bool gz_ = false;
  std::ifstream file_;
  gzFile gzf_ = nullptr;
  char buf_[1 << 16];
  std::size_t pos_ = 0, len_ = 0;
};

class LineSink {
public:
  explicit LineSink(const std::string& path) : gz_(has_gz_suffix(path)) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "wb");
      if (!gzf_) throw data_format_error("cannot open " + path + " for writing");
    } else {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw data_format_error("cannot open " + path + " for writing");
    }
  }
  ~LineSink() {
    if (gzf_) gzclose(gzf_);
  }
  LineSink(const LineSink&) = delete;
  LineSink& operator=(const LineSink&) = delete;

  void write(std::string_view s) {
    if (gz_) {
      if (gzwrite(gzf_, s.data(), static_cast<unsigned>(s.size())) !=
          static_cast<int>(s.size()))
        throw data_format_error("gzip write error");
    } else {
      file_.write(s.data(), static_cast<std::streamsize>(s.size()));
      if (!file_) throw data_format_error("write error");
    }
  }

private:
  bool gz_ = false;
  std::ofstream file_;
  gzFile gzf_ = nullptr;
};

inline const char* parse_index(const char* p, const char* end, Index& out) {
  auto [q, ec] = std::from_chars(p, end, out);
  return ec == std::errc() ? q : nullptr;
}

inline const char* parse_double(const char* p, const char* end, double& out) {
  auto [q, ec] = std::from_chars(p, end, out);
  return ec == std::errc() ? q : nullptr;
}

} // namespace detail

inline TripletData load_triplets(const std::string& path) {
  detail::LineSource src(path);
  TripletData out;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (src.next(line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "i,j,re,im")
        throw data_format_error(path + ":" + std::to_string(lineno) +
                                ": expected header \"i,j,re,im\"");
      saw_header = true;
      continue;
    }
    const char* p = line.data();
    const char* end = p + line.size();
    Index i = 0, j = 0;
    double re = 0, im = 0;
    const char* q = detail::parse_index(p, end, i);
    if (!q || q >= end || *q != ',') q = nullptr;
    if (q) q = detail::parse_index(q + 1, end, j);
    if (q && (q >= end || *q != ',')) q = nullptr;
    if (q) q = detail::parse_double(q + 1, end, re);
    if (q && (q >= end || *q != ',')) q = nullptr;
    if (q) q = detail::parse_double(q + 1, end, im);
    if (!q || q != end)
      throw data_format_error(path + ":" + std::to_string(lineno) + ": malformed triplet line");
    if (i < 0 || j < 0)
      throw data_format_error(path + ":" + std::to_string(lineno) + ": negative index");
    out.rows.push_back(i);
    out.cols.push_back(j);
    out.values.emplace_back(re, im);
  }
  // an empty file is an empty store; a nonempty file must carry the header
  return out;
}

inline void save_triplets(const TripletData& data, const std::string& path) {
  detail::LineSink sink(path);
  sink.write("i,j,re,im\n");
  char buf[128];
  for (std::size_t e = 0; e < data.size(); ++e) {
    const int len = std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g\n",
                                  static_cast<long long>(data.rows[e]),
                                  static_cast<long long>(data.cols[e]),
                                  data.values[e].real(), data.values[e].imag());
    sink.write(std::string_view(buf, static_cast<std::size_t>(len)));
  }
}

// Load a triplet file into an observed store under the given tensorization;
// rejects duplicate pairs and out-of-range indices.
inline ObservedEntries<Cplx> load_observed(const std::string& path, Index n, int levels,
                                           int leaf) {
  auto t = load_triplets(path);
  try {
    return ObservedEntries<Cplx>(n, levels, leaf, std::move(t.rows), std::move(t.cols),
                                 std::move(t.values));
  } catch (const std::out_of_range& ex) {
    throw data_format_error(path + ": " + ex.what());
  }
}

template <typename Scalar>
void save_observed(const ObservedEntries<Scalar>& obs, const std::string& path) {
  TripletData data;
  data.rows = obs.rows();
  data.cols = obs.cols();
  data.values.reserve(obs.size());
  for (std::size_t e = 0; e < obs.size(); ++e) data.values.emplace_back(obs.value(e));
  save_triplets(data, path);
}

} // namespace bfc

#endif
