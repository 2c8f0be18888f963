#include "dualreg/io.hpp"

#include "dualreg/cloud.hpp"
#include "dualreg/spatial.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace dualreg::io {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

double to_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line);
  }
  return v;
}

std::size_t to_index(std::string_view tok, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a non-negative index, got '" + std::string(tok) + "'", line);
  }
  return v;
}

OrientedPointCloud read_ply(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  std::getline(in, line);
  if (tokens(line) != std::vector<std::string_view>{"ply"}) {
    throw ParseError("missing 'ply' magic", 1);
  }
  std::size_t vertices = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<std::string> props;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = tokens(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        throw ParseError("only ASCII PLY is supported", lineno);
      }
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line", lineno);
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        vertices = to_index(tok[2], lineno);
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw ParseError("vertex element must come first", lineno);
      }
    } else if (tok[0] == "property") {
      if (in_vertex) {
        if (tok.size() != 3) throw ParseError("unsupported vertex property", lineno);
        props.emplace_back(tok[2]);
      }
    } else if (tok[0] == "end_header") {
      header_done = true;
      break;
    } else {
      throw ParseError("unexpected header line '" + line + "'", lineno);
    }
  }
  if (!header_done) throw ParseError("missing end_header", lineno);

  auto find = [&](const char* name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto x = find("x"), y = find("y"), z = find("z");
  const auto nx = find("nx"), ny = find("ny"), nz = find("nz");
  if (!x || !y || !z) throw ParseError("vertex lacks x/y/z properties", lineno);
  const bool normals = nx && ny && nz;

  OrientedPointCloud cloud;
  cloud.points.reserve(vertices);
  while (cloud.points.size() < vertices) {
    if (!std::getline(in, line)) {
      throw ParseError("file ends after " + std::to_string(cloud.points.size()) + " of " +
                           std::to_string(vertices) + " vertices",
                       lineno);
    }
    ++lineno;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != props.size()) {
      throw ParseError("expected " + std::to_string(props.size()) + " values, got " +
                           std::to_string(tok.size()),
                       lineno);
    }
    cloud.points.emplace_back(to_real(tok[*x], lineno), to_real(tok[*y], lineno),
                              to_real(tok[*z], lineno));
    if (normals) {
      cloud.normals.emplace_back(to_real(tok[*nx], lineno), to_real(tok[*ny], lineno),
                                 to_real(tok[*nz], lineno));
    }
  }
  return cloud;
}

OrientedPointCloud read_xyz(std::istream& in) {
  OrientedPointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = tokens(strip_comment(line));
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 6) {
      throw ParseError("expected 3 or 6 columns, got " + std::to_string(tok.size()), lineno);
    }
    if (columns == 0) columns = tok.size();
    if (tok.size() != columns) throw ParseError("inconsistent column count", lineno);
    cloud.points.emplace_back(to_real(tok[0], lineno), to_real(tok[1], lineno),
                              to_real(tok[2], lineno));
    if (columns == 6) {
      cloud.normals.emplace_back(to_real(tok[3], lineno), to_real(tok[4], lineno),
                                 to_real(tok[5], lineno));
    }
  }
  return cloud;
}

// Normalizes stored normals; a zero normal marks the cloud as needing estimation.
bool normalize_normals(OrientedPointCloud& cloud) {
  if (!cloud.has_normals() || cloud.empty()) return false;
  for (auto& n : cloud.normals) {
    const double len = n.norm();
    if (!(len > 1e-12) || !std::isfinite(len)) return false;
    n /= len;
  }
  return true;
}

struct Appender {
  OrientedPointCloud& cloud;
  std::size_t original;
  std::optional<SpatialIndex> index;

  std::size_t add(const Point3& p) {
    if (cloud.has_normals() && original > 0) {
      if (!index) {
        index.emplace(std::vector<Point3>(cloud.points.begin(),
                                          cloud.points.begin() + static_cast<long>(original)));
      }
      cloud.normals.push_back(cloud.normals[index->nearest(p).index]);
    }
    cloud.points.push_back(p);
    return cloud.points.size() - 1;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

OrientedPointCloud read_points(const std::filesystem::path& path) {
  auto in = open_in(path);
  OrientedPointCloud cloud;
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") {
    cloud = read_ply(in);
  } else {
    cloud = read_xyz(in);
  }
  if (!normalize_normals(cloud)) cloud.normals.clear();
  return cloud;
}

OrientedPointCloud read_cloud(const std::filesystem::path& path, int normal_k) {
  OrientedPointCloud cloud = read_points(path);
  if (cloud.has_normals() && !cloud.empty()) return cloud;
  return estimate_normals(cloud.points, normal_k);
}

void write_ply(const std::filesystem::path& path, const OrientedPointCloud& cloud) {
  auto out = open_out(path);
  const bool normals = cloud.has_normals() && !cloud.empty();
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z());
    if (normals) {
      const auto& n = cloud.normals[i];
      out << ' ' << fmt(n.x()) << ' ' << fmt(n.y()) << ' ' << fmt(n.z());
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

CorrespondenceSet read_correspondences(const std::filesystem::path& path,
                                       OrientedPointCloud& source, OrientedPointCloud& target) {
  auto in = open_in(path);
  Appender src{source, source.size(), std::nullopt};
  Appender tgt{target, target.size(), std::nullopt};
  CorrespondenceSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = tokens(strip_comment(line));
    if (tok.empty()) continue;
    if (tok.size() == 2) {
      Correspondence c;
      c.source_index = to_index(tok[0], lineno);
      c.target_index = to_index(tok[1], lineno);
      if (c.source_index >= src.original || c.target_index >= tgt.original) {
        throw ParseError("index out of range for the supplied clouds", lineno);
      }
      out.push_back(c);
    } else if (tok.size() == 6) {
      Point3 v(to_real(tok[0], lineno), to_real(tok[1], lineno), to_real(tok[2], lineno));
      Point3 u(to_real(tok[3], lineno), to_real(tok[4], lineno), to_real(tok[5], lineno));
      Correspondence c;
      c.source_index = src.add(v);
      c.target_index = tgt.add(u);
      out.push_back(c);
    } else {
      throw ParseError("expected 2 indices or 6 coordinates, got " + std::to_string(tok.size()) +
                           " tokens",
                       lineno);
    }
  }
  return out;
}

void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& corr) {
  auto out = open_out(path);
  out << "# source_index target_index\n";
  for (const auto& c : corr) out << c.source_index << ' ' << c.target_index << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

RigidTransform read_transform(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (auto tok : tokens(strip_comment(line))) values.push_back(to_real(tok, lineno));
  }
  Matrix3 r;
  Vector3 t;
  if (values.size() == 12) {
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = values[i];
    t = Vector3(values[9], values[10], values[11]);
  } else if (values.size() == 16) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r(i, j) = values[i * 4 + j];
      t[i] = values[i * 4 + 3];
    }
  } else {
    throw ParseError("transform needs 12 or 16 numbers, found " + std::to_string(values.size()),
                     0);
  }
  // Files carry limited precision, so accept small drift and re-project.
  if (!r.allFinite() || !t.allFinite() ||
      (r.transpose() * r - Matrix3::Identity()).norm() > 1e-6 || r.determinant() <= 0.0) {
    throw ParseError("invalid transform: rotation block is not a proper rotation", 0);
  }
  try {
    return RigidTransform::from_approximate(r, t);
  } catch (const Error& e) {
    throw ParseError(std::string("invalid transform: ") + e.what(), 0);
  }
}

void write_transform(const std::filesystem::path& path, const RigidTransform& t) {
  auto out = open_out(path);
  const auto& r = t.rotation();
  for (int i = 0; i < 3; ++i) {
    out << fmt(r(i, 0)) << ' ' << fmt(r(i, 1)) << ' ' << fmt(r(i, 2)) << '\n';
  }
  out << fmt(t.translation().x()) << ' ' << fmt(t.translation().y()) << ' '
      << fmt(t.translation().z()) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string format_transform(const RigidTransform& t) {
  std::ostringstream os;
  const auto& r = t.rotation();
  for (int i = 0; i < 9; ++i) os << fmt(r(i / 3, i % 3)) << ' ';
  os << fmt(t.translation().x()) << ' ' << fmt(t.translation().y()) << ' '
     << fmt(t.translation().z());
  return os.str();
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto dir = path.parent_path();
  auto resolve = [&](std::string_view p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : dir / fp;
  };
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = tokens(strip_comment(line));
    if (tok.empty()) continue;
    ManifestRow row;
    row.line = lineno;
    if (tok.size() != 4) {
      row.error = "line " + std::to_string(lineno) + ": expected 4 paths, got " +
                  std::to_string(tok.size());
    } else {
      row.source = resolve(tok[0]);
      row.target = resolve(tok[1]);
      row.correspondences = resolve(tok[2]);
      row.ground_truth = resolve(tok[3]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dualreg::io
