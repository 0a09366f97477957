// Copyright 2026 The pctta Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pctta/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "pctta/error.hpp"

namespace pctta {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::string located(const std::string& source, std::size_t line, const std::string& what) {
  return source + ":" + std::to_string(line) + ": " + what;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_int(std::string_view tok, long long& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

// Iterates lines keeping 1-based line numbers; strips a trailing '\r'.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const auto end = text_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
    line = text_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = stop + 1;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }
  std::size_t offset() const { return std::min(pos_, text_.size()); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void normalize_normals(Points& normals, const std::string& source) {
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    const double len = normals.row(i).norm();
    if (!(len > 0.0)) {
      throw Error(ErrorCode::ParseError,
                  source + ": zero-length normal at point " + std::to_string(i));
    }
    normals.row(i) /= len;
  }
}

// --- PLY -------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
  static const std::map<std::string_view, PlyType> types = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
      {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  const auto it = types.find(name);
  if (it == types.end()) return std::nullopt;
  return it->second;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
  // Row-major scalar values for non-list properties, in declaration order.
  std::vector<double> scalars;
  std::size_t scalar_props = 0;
  // List values, one entry per row, for the first list property only.
  std::vector<std::vector<long long>> lists;

  std::optional<std::size_t> scalar_column(std::string_view prop) const {
    std::size_t col = 0;
    for (const auto& p : props) {
      if (p.is_list) continue;
      if (p.name == prop) return col;
      ++col;
    }
    return std::nullopt;
  }
};

struct PlyFile {
  std::vector<PlyElement> elements;
  const PlyElement* find(std::string_view name) const {
    for (const auto& e : elements) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

double read_binary(const std::string& data, std::size_t& pos, PlyType t,
                   const std::string& source) {
  const std::size_t n = ply_size(t);
  if (data.size() - pos < n) {
    throw Error(ErrorCode::ParseError,
                source + ": truncated binary body at byte offset " + std::to_string(pos));
  }
  std::array<unsigned char, 8> b{};
  std::memcpy(b.data(), data.data() + pos, n);
  pos += n;
  auto u = [&](std::size_t bytes) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  };
  switch (t) {
    case PlyType::Int8: return static_cast<std::int8_t>(b[0]);
    case PlyType::UInt8: return b[0];
    case PlyType::Int16: return static_cast<std::int16_t>(u(2));
    case PlyType::UInt16: return static_cast<std::uint16_t>(u(2));
    case PlyType::Int32: return static_cast<std::int32_t>(u(4));
    case PlyType::UInt32: return static_cast<std::uint32_t>(u(4));
    case PlyType::Float32: {
      const auto bits = static_cast<std::uint32_t>(u(4));
      float f = 0.0f;
      std::memcpy(&f, &bits, sizeof f);
      return f;
    }
    case PlyType::Float64: {
      const std::uint64_t bits = u(8);
      double d = 0.0;
      std::memcpy(&d, &bits, sizeof d);
      return d;
    }
  }
  return 0.0;
}

PlyFile parse_ply(const std::string& data, const std::string& source) {
  LineReader lines(data);
  std::string_view line;
  if (!lines.next(line) || line != "ply") {
    throw Error(ErrorCode::ParseError, located(source, 1, "missing 'ply' magic"));
  }
  PlyFile ply;
  bool binary = false;
  bool have_format = false;
  for (;;) {
    if (!lines.next(line)) {
      throw Error(ErrorCode::ParseError, source + ": header has no end_header");
    }
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad format line"));
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else if (tok[1] == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, source + ": big-endian PLY is not supported");
      } else {
        throw Error(ErrorCode::ParseError,
                    located(source, lines.number(), "unknown format '" + std::string(tok[1]) + "'"));
      }
      have_format = true;
    } else if (tok[0] == "element") {
      long long count = 0;
      if (tok.size() != 3 || !parse_int(tok[2], count) || count < 0) {
        throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad element line"));
      }
      PlyElement e;
      e.name = std::string(tok[1]);
      e.count = static_cast<std::size_t>(count);
      ply.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (ply.elements.empty()) {
        throw Error(ErrorCode::ParseError,
                    located(source, lines.number(), "property before any element"));
      }
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = ply_type(tok[2]);
        const auto vt = ply_type(tok[3]);
        if (!ct || !vt) throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad list type"));
        p.is_list = true;
        p.count_type = *ct;
        p.type = *vt;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        const auto t = ply_type(tok[1]);
        if (!t) throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad property type"));
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad property line"));
      }
      ply.elements.back().props.push_back(std::move(p));
    } else {
      throw Error(ErrorCode::ParseError,
                  located(source, lines.number(),
                          "unexpected header keyword '" + std::string(tok[0]) + "'"));
    }
  }
  if (!have_format) throw Error(ErrorCode::ParseError, source + ": header has no format line");

  for (auto& e : ply.elements) {
    e.scalar_props = static_cast<std::size_t>(
        std::count_if(e.props.begin(), e.props.end(), [](const auto& p) { return !p.is_list; }));
    e.scalars.reserve(e.count * e.scalar_props);
    const bool has_list =
        std::any_of(e.props.begin(), e.props.end(), [](const auto& p) { return p.is_list; });
    if (has_list) e.lists.reserve(e.count);
  }

  if (binary) {
    std::size_t pos = lines.offset();
    for (auto& e : ply.elements) {
      for (std::size_t r = 0; r < e.count; ++r) {
        bool first_list = true;
        for (const auto& p : e.props) {
          if (!p.is_list) {
            e.scalars.push_back(read_binary(data, pos, p.type, source));
            continue;
          }
          const double cnt = read_binary(data, pos, p.count_type, source);
          if (cnt < 0) {
            throw Error(ErrorCode::ParseError,
                        source + ": negative list length at byte offset " + std::to_string(pos));
          }
          std::vector<long long> values(static_cast<std::size_t>(cnt));
          for (auto& v : values) v = static_cast<long long>(read_binary(data, pos, p.type, source));
          if (first_list) e.lists.push_back(std::move(values));
          first_list = false;
        }
      }
    }
    if (pos != data.size()) {
      throw Error(ErrorCode::ParseError,
                  source + ": trailing bytes after body at offset " + std::to_string(pos));
    }
  } else {
    for (auto& e : ply.elements) {
      for (std::size_t r = 0; r < e.count; ++r) {
        if (!lines.next(line)) {
          throw Error(ErrorCode::ParseError,
                      source + ": unexpected end of file in element '" + e.name + "'");
        }
        const auto tok = split_ws(line);
        std::size_t t = 0;
        auto take = [&](double& v) {
          if (t >= tok.size()) {
            throw Error(ErrorCode::ParseError, located(source, lines.number(), "too few values"));
          }
          if (!parse_double(tok[t], v)) {
            throw Error(ErrorCode::ParseError,
                        located(source, lines.number(),
                                "non-numeric token '" + std::string(tok[t]) + "'"));
          }
          ++t;
        };
        bool first_list = true;
        for (const auto& p : e.props) {
          double v = 0.0;
          take(v);
          if (!p.is_list) {
            e.scalars.push_back(v);
            continue;
          }
          if (v < 0 || v != std::floor(v)) {
            throw Error(ErrorCode::ParseError, located(source, lines.number(), "bad list length"));
          }
          std::vector<long long> values(static_cast<std::size_t>(v));
          for (auto& x : values) {
            double d = 0.0;
            take(d);
            x = static_cast<long long>(d);
          }
          if (first_list) e.lists.push_back(std::move(values));
          first_list = false;
        }
        if (t != tok.size()) {
          throw Error(ErrorCode::ParseError, located(source, lines.number(), "too many values"));
        }
      }
    }
  }
  return ply;
}

struct PlyVertices {
  Points points;
  std::optional<Points> normals;
};

PlyVertices ply_vertices(const PlyFile& ply, const std::string& source) {
  const PlyElement* v = ply.find("vertex");
  if (v == nullptr) throw Error(ErrorCode::ParseError, source + ": no vertex element");
  const auto x = v->scalar_column("x");
  const auto y = v->scalar_column("y");
  const auto z = v->scalar_column("z");
  if (!x || !y || !z) throw Error(ErrorCode::ParseError, source + ": vertex lacks x/y/z");
  PlyVertices out;
  out.points.resize(static_cast<Eigen::Index>(v->count), 3);
  const std::size_t w = v->scalar_props;
  for (std::size_t r = 0; r < v->count; ++r) {
    out.points.row(static_cast<Eigen::Index>(r)) << v->scalars[r * w + *x],
        v->scalars[r * w + *y], v->scalars[r * w + *z];
  }
  if (!out.points.allFinite()) {
    throw Error(ErrorCode::ParseError, source + ": non-finite vertex coordinate");
  }
  const auto nx = v->scalar_column("nx");
  const auto ny = v->scalar_column("ny");
  const auto nz = v->scalar_column("nz");
  if (nx && ny && nz) {
    Points n(static_cast<Eigen::Index>(v->count), 3);
    for (std::size_t r = 0; r < v->count; ++r) {
      n.row(static_cast<Eigen::Index>(r)) << v->scalars[r * w + *nx], v->scalars[r * w + *ny],
          v->scalars[r * w + *nz];
    }
    normalize_normals(n, source);
    out.normals = std::move(n);
  }
  return out;
}

void append_polygon(TriangleMesh& mesh, const std::vector<long long>& poly,
                    const std::string& where) {
  if (poly.size() < 3) throw Error(ErrorCode::ParseError, where + ": face has fewer than 3 vertices");
  const auto nv = static_cast<long long>(mesh.vertex_count());
  for (long long idx : poly) {
    if (idx < 0 || idx >= nv) {
      throw Error(ErrorCode::ParseError, where + ": face index " + std::to_string(idx) +
                                             " out of range [0, " + std::to_string(nv) + ")");
    }
  }
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    mesh.faces.push_back({static_cast<std::size_t>(poly[0]), static_cast<std::size_t>(poly[i]),
                          static_cast<std::size_t>(poly[i + 1])});
  }
}

std::string ply_header(const PointCloud& cloud, bool binary) {
  std::ostringstream h;
  h << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
    << "element vertex " << cloud.size() << "\n"
    << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.normals) h << "property double nx\nproperty double ny\nproperty double nz\n";
  h << "end_header\n";
  return h.str();
}

}  // namespace

PointCloud parse_xyz(const std::string& text, const std::string& source) {
  LineReader lines(text);
  std::string_view line;
  std::vector<std::array<double, 6>> rows;
  std::size_t width = 0;
  while (lines.next(line)) {
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 6) {
      throw Error(ErrorCode::ParseError,
                  located(source, lines.number(),
                          "expected 3 or 6 values, found " + std::to_string(tok.size())));
    }
    if (width == 0) width = tok.size();
    if (tok.size() != width) {
      throw Error(ErrorCode::ParseError,
                  located(source, lines.number(), "inconsistent column count"));
    }
    std::array<double, 6> row{};
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (!parse_double(tok[i], row[i])) {
        throw Error(ErrorCode::ParseError,
                    located(source, lines.number(),
                            "non-numeric token '" + std::string(tok[i]) + "'"));
      }
    }
    rows.push_back(row);
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cloud.points.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1], rows[i][2];
  }
  if (width == 6) {
    Points n(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      n.row(static_cast<Eigen::Index>(i)) << rows[i][3], rows[i][4], rows[i][5];
    }
    normalize_normals(n, source);
    cloud.normals = std::move(n);
  }
  return cloud;
}

PointCloud read_point_cloud(const fs::path& path) {
  const std::string data = read_text_file(path);
  const std::string ext = lower_extension(path);
  const bool looks_ply = data.rfind("ply", 0) == 0 &&
                         (data.size() == 3 || data[3] == '\n' || data[3] == '\r');
  if (ext == ".ply" || (ext != ".xyz" && ext != ".txt" && looks_ply)) {
    auto v = ply_vertices(parse_ply(data, path.string()), path.string());
    PointCloud cloud(std::move(v.points));
    cloud.normals = std::move(v.normals);
    return cloud;
  }
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return parse_xyz(data, path.string());
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": unknown point cloud format");
}

void write_point_cloud(const PointCloud& cloud, const fs::path& path, CloudFormat format) {
  std::string out;
  switch (format) {
    case CloudFormat::Xyz: {
      std::ostringstream s;
      for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
        s << format_double(cloud.points(i, 0)) << ' ' << format_double(cloud.points(i, 1)) << ' '
          << format_double(cloud.points(i, 2));
        if (cloud.normals) {
          s << ' ' << format_double((*cloud.normals)(i, 0)) << ' '
            << format_double((*cloud.normals)(i, 1)) << ' '
            << format_double((*cloud.normals)(i, 2));
        }
        s << '\n';
      }
      out = s.str();
      break;
    }
    case CloudFormat::PlyAscii: {
      std::ostringstream s;
      s << ply_header(cloud, false);
      for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
        s << format_double(cloud.points(i, 0)) << ' ' << format_double(cloud.points(i, 1)) << ' '
          << format_double(cloud.points(i, 2));
        if (cloud.normals) {
          for (int a = 0; a < 3; ++a) s << ' ' << format_double((*cloud.normals)(i, a));
        }
        s << '\n';
      }
      out = s.str();
      break;
    }
    case CloudFormat::PlyBinary: {
      out = ply_header(cloud, true);
      auto put = [&](double v) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
      };
      for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
        for (int a = 0; a < 3; ++a) put(cloud.points(i, a));
        if (cloud.normals) {
          for (int a = 0; a < 3; ++a) put((*cloud.normals)(i, a));
        }
      }
      break;
    }
  }
  write_text_file(path, out);
}

void write_point_cloud(const PointCloud& cloud, const fs::path& path) {
  write_point_cloud(cloud, path,
                    lower_extension(path) == ".ply" ? CloudFormat::PlyBinary : CloudFormat::Xyz);
}

TriangleMesh parse_off(const std::string& text, const std::string& source) {
  LineReader lines(text);
  std::string_view line;
  // Tokens with their line numbers, comments removed.
  std::vector<std::pair<std::string_view, std::size_t>> tokens;
  while (lines.next(line)) {
    for (auto t : split_ws(strip_comment(line))) tokens.emplace_back(t, lines.number());
  }
  std::size_t pos = 0;
  auto next = [&](const char* what) -> std::pair<std::string_view, std::size_t> {
    if (pos >= tokens.size()) {
      throw Error(ErrorCode::ParseError, source + ": unexpected end of file reading " + what);
    }
    return tokens[pos++];
  };
  auto next_int = [&](const char* what) {
    const auto [tok, ln] = next(what);
    long long v = 0;
    if (!parse_int(tok, v)) {
      throw Error(ErrorCode::ParseError,
                  located(source, ln, std::string("expected integer ") + what + ", found '" +
                                          std::string(tok) + "'"));
    }
    return std::make_pair(v, ln);
  };
  const auto [magic, magic_line] = next("header");
  if (magic != "OFF") {
    throw Error(ErrorCode::ParseError, located(source, magic_line, "missing OFF header"));
  }
  const auto [nv, l1] = next_int("vertex count");
  const auto [nf, l2] = next_int("face count");
  next_int("edge count");
  if (nv < 0 || nf < 0) throw Error(ErrorCode::ParseError, located(source, l1, "negative count"));

  TriangleMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long long i = 0; i < nv; ++i) {
    for (int a = 0; a < 3; ++a) {
      const auto [tok, ln] = next("vertex coordinate");
      double v = 0.0;
      if (!parse_double(tok, v)) {
        throw Error(ErrorCode::ParseError,
                    located(source, ln, "non-numeric token '" + std::string(tok) + "'"));
      }
      mesh.vertices(i, a) = v;
    }
  }
  for (long long f = 0; f < nf; ++f) {
    const auto [k, ln] = next_int("face size");
    if (k < 0) throw Error(ErrorCode::ParseError, located(source, ln, "negative face size"));
    std::vector<long long> poly;
    for (long long j = 0; j < k; ++j) poly.push_back(next_int("face index").first);
    // Optional per-face colour values run to the end of the line.
    while (pos < tokens.size() && tokens[pos].second == ln) ++pos;
    append_polygon(mesh, poly, located(source, ln, "face " + std::to_string(f)));
  }
  if (pos != tokens.size()) {
    throw Error(ErrorCode::ParseError,
                located(source, tokens[pos].second, "unexpected trailing data"));
  }
  return mesh;
}

TriangleMesh read_mesh(const fs::path& path) {
  const std::string data = read_text_file(path);
  const std::string ext = lower_extension(path);
  if (ext == ".off") return parse_off(data, path.string());
  if (ext == ".ply") {
    const PlyFile ply = parse_ply(data, path.string());
    TriangleMesh mesh;
    mesh.vertices = ply_vertices(ply, path.string()).points;
    if (const PlyElement* faces = ply.find("face")) {
      if (faces->lists.size() != faces->count) {
        throw Error(ErrorCode::ParseError, path.string() + ": face element has no index list");
      }
      for (std::size_t f = 0; f < faces->count; ++f) {
        append_polygon(mesh, faces->lists[f], path.string() + ": face " + std::to_string(f));
      }
    }
    return mesh;
  }
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": unknown mesh format");
}

void write_mesh_off(const TriangleMesh& mesh, const fs::path& path) {
  std::ostringstream s;
  s << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    s << format_double(mesh.vertices(i, 0)) << ' ' << format_double(mesh.vertices(i, 1)) << ' '
      << format_double(mesh.vertices(i, 2)) << '\n';
  }
  for (const auto& f : mesh.faces) s << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  write_text_file(path, s.str());
}

std::size_t count_nonmanifold_edges(const TriangleMesh& mesh) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> uses;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      auto a = f[static_cast<std::size_t>(e)];
      auto b = f[static_cast<std::size_t>((e + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++uses[{a, b}];
    }
  }
  return static_cast<std::size_t>(
      std::count_if(uses.begin(), uses.end(), [](const auto& kv) { return kv.second > 2; }));
}

std::vector<int> parse_labels(const std::string& text, const std::string& source) {
  LineReader lines(text);
  std::string_view line;
  std::vector<int> labels;
  std::optional<std::size_t> blank_line;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) {
      if (!blank_line) blank_line = lines.number();
      continue;
    }
    if (blank_line) {
      throw Error(ErrorCode::ParseError, located(source, *blank_line, "blank line inside labels"));
    }
    long long v = 0;
    if (tok.size() != 1 || !parse_int(tok[0], v)) {
      throw Error(ErrorCode::ParseError,
                  located(source, lines.number(), "expected one integer label"));
    }
    if (v < 0 || v > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::ParseError,
                  located(source, lines.number(), "label must be a nonnegative int"));
    }
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

std::vector<int> read_labels(const fs::path& path) {
  return parse_labels(read_text_file(path), path.string());
}

void write_labels(const std::vector<int>& labels, const fs::path& path) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  write_text_file(path, out);
}

// --- manifest ------------------------------------------------------------

std::size_t DatasetManifest::part_count() const {
  int top = -1;
  for (const auto& c : categories) {
    if (!c.parts.empty()) top = std::max(top, *c.parts.rbegin());
  }
  return static_cast<std::size_t>(top + 1);
}

std::vector<std::size_t> DatasetManifest::split_indices(const std::string& split) const {
  const bool any_split = std::any_of(entries.begin(), entries.end(),
                                     [](const auto& e) { return !e.split.empty(); });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!any_split || entries[i].split == split) out.push_back(i);
  }
  return out;
}

DatasetManifest read_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path rel(p);
    return rel.is_absolute() ? rel : base / rel;
  };
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto task = j.at("task").get<std::string>();
    if (task == "classification") {
      m.task = Task::Classification;
    } else if (task == "part_segmentation") {
      m.task = Task::PartSegmentation;
    } else {
      throw Error(ErrorCode::ParseError, path.string() + ": unknown task '" + task + "'");
    }
    if (j.contains("classes")) m.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("categories")) {
      for (const auto& c : j.at("categories")) {
        Category cat;
        cat.name = c.value("name", std::string{});
        for (int p : c.at("parts").get<std::vector<int>>()) {
          if (p < 0) throw Error(ErrorCode::ParseError, path.string() + ": negative part label");
          cat.parts.insert(p);
        }
        if (cat.parts.empty()) {
          throw Error(ErrorCode::ParseError,
                      path.string() + ": category '" + cat.name + "' has no parts");
        }
        m.categories.push_back(std::move(cat));
      }
    }
    if (m.task == Task::PartSegmentation) {
      if (m.categories.empty()) {
        throw Error(ErrorCode::ParseError,
                    path.string() + ": part_segmentation manifest needs categories with parts");
      }
      std::set<int> seen;
      for (const auto& c : m.categories) {
        for (int p : c.parts) {
          if (!seen.insert(p).second) {
            throw Error(ErrorCode::ParseError, path.string() + ": part label " +
                                                   std::to_string(p) +
                                                   " belongs to two categories");
          }
        }
      }
    }
    const char* id_key = m.task == Task::Classification ? "class" : "category";
    const std::size_t id_limit =
        m.task == Task::Classification ? m.classes.size() : m.categories.size();
    const auto& entries = j.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      ManifestEntry entry;
      entry.cloud = resolve(e.at("cloud").get<std::string>());
      if (e.contains("mesh")) entry.mesh = resolve(e.at("mesh").get<std::string>());
      if (e.contains("labels")) entry.labels = resolve(e.at("labels").get<std::string>());
      entry.id = e.at(id_key).get<int>();
      if (entry.id < 0 || (id_limit > 0 && static_cast<std::size_t>(entry.id) >= id_limit)) {
        throw Error(ErrorCode::ParseError, path.string() + ": entry " + std::to_string(i) +
                                               " has out-of-range " + id_key);
      }
      entry.split = e.value("split", std::string{});
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }

  std::vector<std::string> missing;
  for (const auto& e : m.entries) {
    if (!fs::exists(e.cloud)) missing.push_back(e.cloud.string());
    if (e.mesh && !fs::exists(*e.mesh)) missing.push_back(e.mesh->string());
    if (e.labels && !fs::exists(*e.labels)) missing.push_back(e.labels->string());
  }
  if (!missing.empty()) {
    std::string msg;
    for (const auto& p : missing) msg += (msg.empty() ? "" : ", ") + p;
    throw Error(ErrorCode::MissingFile, msg);
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    const auto r = p.lexically_relative(base.empty() ? fs::path(".") : base);
    return (r.empty() ? p : r).generic_string();
  };
  nlohmann::ordered_json j;
  j["task"] = manifest.task == Task::Classification ? "classification" : "part_segmentation";
  j["classes"] = manifest.classes;
  if (!manifest.categories.empty()) {
    auto& cats = j["categories"] = nlohmann::ordered_json::array();
    for (const auto& c : manifest.categories) {
      cats.push_back({{"name", c.name}, {"parts", std::vector<int>(c.parts.begin(), c.parts.end())}});
    }
  }
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  const char* id_key = manifest.task == Task::Classification ? "class" : "category";
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json row;
    row["cloud"] = rel(e.cloud);
    if (e.mesh) row["mesh"] = rel(*e.mesh);
    if (e.labels) row["labels"] = rel(*e.labels);
    row[id_key] = e.id;
    if (!e.split.empty()) row["split"] = e.split;
    entries.push_back(std::move(row));
  }
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace pctta
