#include "covseg/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "covseg/error.hpp"
#include "json.hpp"

namespace covseg::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVolumeMagic = "covol1";

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::string at_offset(const fs::path& path, std::uintmax_t offset) {
  return path.string() + "@" + std::to_string(offset);
}

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) |
           (bits >> 24);
  }
  return bits;
}

void append_float(std::string& out, double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(value)));
  out.append(buf, static_cast<std::size_t>(n));
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(at_offset(path, e.byte) + ": invalid JSON: " + e.what());
  }
}

GridSpec parse_volume_header(const fs::path& path, const std::string& line) {
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(at_offset(path, e.byte) + ": volume header is not valid JSON");
  }
  auto field = [&](const char* key) -> const json& {
    if (!header.is_object() || !header.contains(key)) {
      throw DataError(where(path, 1) + ": volume header lacks \"" + key + "\"");
    }
    return header.at(key);
  };
  if (!field("magic").is_string() || field("magic").get<std::string>() != kVolumeMagic) {
    throw DataError(where(path, 1) + ": bad volume magic");
  }
  if (!field("dtype").is_string() || field("dtype").get<std::string>() != "f32le") {
    throw DataError(where(path, 1) + ": unsupported volume dtype");
  }
  if (!field("order").is_string() || field("order").get<std::string>() != "x-fastest") {
    throw DataError(where(path, 1) + ": unsupported volume order");
  }
  GridSpec spec;
  try {
    const auto dims = field("dims").get<std::vector<int>>();
    const auto origin = field("origin_mm").get<std::vector<double>>();
    if (dims.size() != 3 || origin.size() != 3) throw DataError("size");
    spec.dims = {dims[0], dims[1], dims[2]};
    spec.origin = {origin[0], origin[1], origin[2]};
    spec.voxel_size = field("voxel_size_mm").get<double>();
  } catch (const json::exception&) {
    throw DataError(where(path, 1) + ": malformed volume dims/origin/voxel size");
  } catch (const DataError&) {
    throw DataError(where(path, 1) + ": dims and origin_mm must have three entries");
  }
  try {
    validate(spec);
  } catch (const DataError& e) {
    throw DataError(where(path, 1) + ": " + e.what());
  }
  return spec;
}

VoxelGrid read_volume_impl(const fs::path& path, bool keep_values) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError(at_offset(path, 0) + ": missing volume header");
  const GridSpec spec = parse_volume_header(path, header_line);
  const std::uintmax_t payload_offset = header_line.size() + 1;
  const std::size_t count = spec.voxel_count();

  std::vector<char> bytes(count * 4);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != bytes.size()) {
    throw DataError(at_offset(path, payload_offset + got) + ": truncated volume payload (expected " +
                    std::to_string(bytes.size()) + " bytes, found " + std::to_string(got) + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(at_offset(path, payload_offset + bytes.size()) + ": trailing bytes after payload");
  }
  VoxelGrid grid;
  grid.spec = spec;
  grid.values.resize(keep_values ? count : 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    const float value = std::bit_cast<float>(to_little_endian(bits));
    if (!std::isfinite(value)) {
      throw DataError(at_offset(path, payload_offset + 4 * i) + ": non-finite voxel value");
    }
    if (keep_values) grid.values[i] = value;
  }
  return grid;
}

struct PlyHeader {
  std::size_t vertex_count = 0;
  std::size_t face_count = 0;
  std::vector<std::string> vertex_properties;
  std::size_t header_lines = 0;
};

PlyHeader parse_ply_header(const fs::path& path, std::istream& in) {
  PlyHeader header;
  std::string line;
  std::size_t line_no = 0;
  std::string current_element;
  bool magic = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "ply") throw DataError(where(path, 1) + ": missing 'ply' magic");
      magic = true;
      continue;
    }
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (keyword == "format") {
      std::string kind;
      tokens >> kind;
      if (kind != "ascii") throw DataError(where(path, line_no) + ": only ASCII PLY is supported");
    } else if (keyword == "element") {
      std::size_t count = 0;
      tokens >> current_element >> count;
      if (!tokens) throw DataError(where(path, line_no) + ": malformed element line");
      if (current_element == "vertex") {
        header.vertex_count = count;
      } else if (current_element == "face") {
        header.face_count = count;
      } else if (count != 0) {
        throw DataError(where(path, line_no) + ": unsupported element '" + current_element + "'");
      }
    } else if (keyword == "property") {
      std::string type;
      tokens >> type;
      if (current_element == "vertex") {
        if (type == "list") throw DataError(where(path, line_no) + ": list vertex property");
        std::string name;
        tokens >> name;
        header.vertex_properties.push_back(name);
      } else if (current_element == "face") {
        std::string count_type, index_type, name;
        tokens >> count_type >> index_type >> name;
        if (type != "list" || (name != "vertex_indices" && name != "vertex_index")) {
          throw DataError(where(path, line_no) + ": faces need a vertex_indices list");
        }
      }
    } else if (keyword == "end_header") {
      header.header_lines = line_no;
      return header;
    } else if (keyword != "comment" && keyword != "obj_info" && !keyword.empty()) {
      throw DataError(where(path, line_no) + ": unexpected header keyword '" + keyword + "'");
    }
  }
  throw DataError(where(path, line_no) + (magic ? ": missing end_header" : ": empty file"));
}

struct PlyData {
  TriMesh mesh;
  std::vector<bool> flags;
};

PlyData read_ply(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const PlyHeader header = parse_ply_header(path, in);
  int axis_slot[3] = {-1, -1, -1};
  int quality_slot = -1;
  for (std::size_t i = 0; i < header.vertex_properties.size(); ++i) {
    const auto& name = header.vertex_properties[i];
    if (name == "x") axis_slot[0] = static_cast<int>(i);
    if (name == "y") axis_slot[1] = static_cast<int>(i);
    if (name == "z") axis_slot[2] = static_cast<int>(i);
    if (name == "quality") quality_slot = static_cast<int>(i);
  }
  if (header.vertex_count > 0 && (axis_slot[0] < 0 || axis_slot[1] < 0 || axis_slot[2] < 0)) {
    throw DataError(path.string() + ": vertex element lacks x/y/z properties");
  }

  PlyData data;
  data.mesh.vertices.reserve(header.vertex_count);
  data.flags.reserve(header.vertex_count);
  std::size_t line_no = header.header_lines;
  std::string line;
  std::vector<double> values(header.vertex_properties.size());
  for (std::size_t v = 0; v < header.vertex_count; ++v) {
    ++line_no;
    if (!std::getline(in, line)) throw DataError(where(path, line_no) + ": truncated vertex list");
    const char* cursor = line.data();
    const char* end = line.data() + line.size();
    for (double& value : values) {
      while (cursor < end && (*cursor == ' ' || *cursor == '\t')) ++cursor;
      const auto [next, ec] = std::from_chars(cursor, end, value);
      if (ec != std::errc()) throw DataError(where(path, line_no) + ": malformed vertex");
      cursor = next;
    }
    const Vec3 p{values[static_cast<std::size_t>(axis_slot[0])],
                 values[static_cast<std::size_t>(axis_slot[1])],
                 values[static_cast<std::size_t>(axis_slot[2])]};
    if (!is_finite(p)) throw DataError(where(path, line_no) + ": non-finite vertex");
    data.mesh.vertices.push_back(p);
    data.flags.push_back(quality_slot >= 0 && values[static_cast<std::size_t>(quality_slot)] != 0.0);
  }
  data.mesh.faces.reserve(header.face_count);
  for (std::size_t f = 0; f < header.face_count; ++f) {
    ++line_no;
    if (!std::getline(in, line)) throw DataError(where(path, line_no) + ": truncated face list");
    std::istringstream tokens(line);
    long long count = 0;
    tokens >> count;
    if (count != 3) throw DataError(where(path, line_no) + ": only triangle faces are supported");
    Face face{};
    for (auto& idx : face) {
      long long value = -1;
      tokens >> value;
      if (!tokens || value < 0 || static_cast<std::size_t>(value) >= header.vertex_count) {
        throw DataError(where(path, line_no) + ": face index out of range");
      }
      idx = static_cast<std::uint32_t>(value);
    }
    if (face[0] == face[1] && face[1] == face[2]) {
      throw DataError(where(path, line_no) + ": degenerate face");
    }
    data.mesh.faces.push_back(face);
  }
  return data;
}

std::string ply_text(const TriMesh& mesh, const std::vector<bool>* flags) {
  std::string out;
  out.reserve(mesh.vertices.size() * 36 + mesh.faces.size() * 24 + 256);
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (flags != nullptr) out += "property float quality\n";
  out += "element face " + std::to_string(mesh.faces.size()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    append_float(out, p.x);
    out += ' ';
    append_float(out, p.y);
    out += ' ';
    append_float(out, p.z);
    if (flags != nullptr) out += (*flags)[i] ? " 1" : " 0";
    out += '\n';
  }
  for (const Face& f : mesh.faces) {
    out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
  }
  return out;
}

}  // namespace

void write_text(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_volume(const fs::path& path, const VoxelGrid& grid) {
  validate(grid.spec);
  if (grid.values.size() != grid.spec.voxel_count()) {
    throw DataError("write_volume: value count does not match dims");
  }
  json header = {
      {"magic", kVolumeMagic},
      {"dims", {grid.spec.dims[0], grid.spec.dims[1], grid.spec.dims[2]}},
      {"voxel_size_mm", grid.spec.voxel_size},
      {"origin_mm", {grid.spec.origin.x, grid.spec.origin.y, grid.spec.origin.z}},
      {"dtype", "f32le"},
      {"order", "x-fastest"},
  };
  std::string out = header.dump();
  out += '\n';
  const std::size_t offset = out.size();
  out.resize(offset + 4 * grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (!std::isfinite(grid.values[i])) throw DataError("write_volume: non-finite voxel value");
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(grid.values[i]));
    std::memcpy(out.data() + offset + 4 * i, &bits, 4);
  }
  write_text(path, out);
}

VoxelGrid read_volume(const fs::path& path) { return read_volume_impl(path, true); }

GridSpec validate_volume(const fs::path& path) { return read_volume_impl(path, false).spec; }

void write_mesh(const fs::path& path, const TriMesh& mesh, const std::vector<bool>* vertex_flags) {
  validate(mesh);
  if (vertex_flags != nullptr && vertex_flags->size() != mesh.vertices.size()) {
    throw DataError("write_mesh: flag count does not match vertex count");
  }
  write_text(path, ply_text(mesh, vertex_flags));
}

TriMesh read_mesh(const fs::path& path) { return read_ply(path).mesh; }

void write_cloud(const fs::path& path, const PointCloud& cloud) {
  validate(cloud);
  write_text(path, ply_text(TriMesh{cloud.points, {}}, nullptr));
}

PointCloud read_cloud(const fs::path& path) { return PointCloud{read_ply(path).mesh.vertices}; }

std::vector<bool> read_vertex_flags(const fs::path& path) { return read_ply(path).flags; }

void write_polyline(const fs::path& path, const Polyline& line) {
  json points = json::array();
  for (const Vec3& p : line.points) {
    if (!is_finite(p)) throw DataError("write_polyline: non-finite point");
    points.push_back({p.x, p.y, p.z});
  }
  write_text(path, json{{"points_mm", points}}.dump() + "\n");
}

Polyline read_polyline(const fs::path& path) {
  const json doc = read_json(path);
  if (!doc.is_object() || !doc.contains("points_mm") || !doc["points_mm"].is_array()) {
    throw DataError(path.string() + ": polyline file needs a points_mm array");
  }
  Polyline line;
  std::size_t i = 0;
  for (const json& p : doc["points_mm"]) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number()) {
      throw DataError(path.string() + ": points_mm[" + std::to_string(i) + "] is not [x,y,z]");
    }
    line.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    ++i;
  }
  return line;
}

void write_manifest(const fs::path& path, const std::vector<SampleRecord>& records) {
  json doc = json::array();
  for (const SampleRecord& r : records) {
    json item = {
        {"id", r.id},
        {"partial_cloud", r.partial_cloud},
        {"gt_mesh", r.gt_mesh},
        {"gt_centerline", r.gt_centerline},
        {"gt_hole_points", r.gt_hole_points},
        {"arc_length_mm", r.arc_length_mm},
        {"gt_coverage", r.gt_coverage},
        {"noise_sigma_mm", r.noise_sigma_mm},
    };
    if (!r.h_input.empty()) item["h_input"] = r.h_input;
    if (!r.h_target.empty()) item["h_target"] = r.h_target;
    doc.push_back(std::move(item));
  }
  write_text(path, doc.dump(1) + "\n");
}

std::vector<SampleRecord> read_manifest(const fs::path& path) {
  const json doc = read_json(path);
  if (!doc.is_array()) throw DataError(path.string() + ": manifest must be a JSON array");
  std::vector<SampleRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    const std::string ctx = path.string() + ": record " + std::to_string(i);
    try {
      SampleRecord r;
      r.id = item.at("id").get<std::string>();
      r.partial_cloud = item.at("partial_cloud").get<std::string>();
      r.gt_mesh = item.at("gt_mesh").get<std::string>();
      r.gt_centerline = item.at("gt_centerline").get<std::string>();
      r.gt_hole_points = item.at("gt_hole_points").get<std::string>();
      r.arc_length_mm = item.at("arc_length_mm").get<double>();
      r.gt_coverage = item.at("gt_coverage").get<double>();
      r.noise_sigma_mm = item.at("noise_sigma_mm").get<double>();
      r.h_input = item.value("h_input", std::string{});
      r.h_target = item.value("h_target", std::string{});
      if (r.id.empty()) throw DataError(ctx + ": empty id");
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(ctx + ": " + e.what());
    }
  }
  return records;
}

}  // namespace covseg::io
