#include "crossdex/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crossdex/error.hpp"

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts unsupported");

namespace crossdex {

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open \"" + path.string() + "\" for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot open \"" + path.string() + "\" for writing");
  return out;
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw FormatError("\"" + path.string() + "\": invalid JSON");
  }
  return doc;
}

json parse_json_line(const std::string& line, const std::filesystem::path& path, size_t lineno) {
  json record = json::parse(line, nullptr, false);
  if (record.is_discarded() || !record.is_object()) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed JSON record");
  }
  return record;
}

Eigen::VectorXd json_vector(const json& node, size_t expected, const std::string& what) {
  if (!node.is_array() || (expected > 0 && node.size() != expected)) {
    throw FormatError(what + ": expected an array of " + std::to_string(expected) + " numbers");
  }
  Eigen::VectorXd v(node.size());
  for (size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number()) throw FormatError(what + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = node[i].get<double>();
  }
  return v;
}

Eigen::Vector3d json_vec3(const json& node, const std::string& what) {
  return json_vector(node, 3, what);
}

json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

template <typename Derived>
json row_to_json(const Eigen::MatrixBase<Derived>& row) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < row.size(); ++i) arr.push_back(row[i]);
  return arr;
}

void read_exact(std::ifstream& in, char* dst, size_t bytes, const std::filesystem::path& path) {
  in.read(dst, static_cast<std::streamsize>(bytes));
  if (static_cast<size_t>(in.gcount()) != bytes) {
    throw FormatError("\"" + path.string() + "\": truncated binary file");
  }
}

Eigen::MatrixXd read_pose_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  std::vector<double> values;
  std::string line;
  size_t lineno = 0;
  size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    int cols = 0;
    while (std::getline(row, cell, ',')) {
      try {
        size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) +
                          ": cannot parse \"" + cell + "\" as a number");
      }
      ++cols;
    }
    if (cols != kPoseDim) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(kPoseDim) + " columns, got " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("\"" + path.string() + "\": empty pose dataset");
  Eigen::MatrixXd poses(rows, kPoseDim);
  for (size_t r = 0; r < rows; ++r) {
    for (int c = 0; c < kPoseDim; ++c) poses(r, c) = values[r * kPoseDim + c];
  }
  return poses;
}

}  // namespace

Eigen::MatrixXd read_pose_dataset(const std::filesystem::path& path) {
  {
    std::ifstream probe = open_input(path, std::ios::binary);
    char magic[8] = {};
    probe.read(magic, 8);
    const bool binary = probe.gcount() == 8 && std::string_view(magic, 8) == kPoseMagic;
    if (!binary) {
      if (probe.gcount() == 8 && path.extension() != ".csv" &&
          std::string_view(magic, 4) == "XDEX") {
        throw FormatError("\"" + path.string() + "\": bad magic bytes, expected \"" +
                          std::string(kPoseMagic) + "\"");
      }
      Eigen::MatrixXd poses = read_pose_csv(path);
      for (Eigen::Index r = 0; r < poses.rows(); ++r) {
        poses.row(r) = canonicalize(poses.row(r).transpose()).transpose();
      }
      return poses;
    }
  }
  std::ifstream in = open_input(path, std::ios::binary);
  char magic[8];
  read_exact(in, magic, 8, path);
  std::uint32_t count = 0, dim = 0;
  read_exact(in, reinterpret_cast<char*>(&count), 4, path);
  read_exact(in, reinterpret_cast<char*>(&dim), 4, path);
  if (dim != kPoseDim) {
    throw FormatError("\"" + path.string() + "\": pose dim " + std::to_string(dim) +
                      ", expected " + std::to_string(kPoseDim));
  }
  if (count == 0) throw FormatError("\"" + path.string() + "\": empty pose dataset");
  std::vector<float> buffer(static_cast<size_t>(count) * kPoseDim);
  read_exact(in, reinterpret_cast<char*>(buffer.data()), buffer.size() * sizeof(float), path);
  Eigen::MatrixXd poses(count, kPoseDim);
  for (std::uint32_t r = 0; r < count; ++r) {
    for (int c = 0; c < kPoseDim; ++c) {
      poses(r, c) = static_cast<double>(buffer[static_cast<size_t>(r) * kPoseDim + c]);
    }
    poses.row(r) = canonicalize(poses.row(r).transpose()).transpose();
  }
  return poses;
}

void write_pose_dataset(const std::filesystem::path& path, const Eigen::MatrixXd& poses) {
  if (poses.cols() != kPoseDim) {
    throw std::invalid_argument("write_pose_dataset: poses must have 45 columns");
  }
  if (path.extension() == ".csv") {
    std::ofstream out = open_output(path, std::ios::out);
    out.precision(17);
    for (Eigen::Index r = 0; r < poses.rows(); ++r) {
      for (int c = 0; c < kPoseDim; ++c) {
        out << poses(r, c) << (c + 1 == kPoseDim ? "" : ",");
      }
      out << "\n";
    }
    return;
  }
  std::ofstream out = open_output(path, std::ios::binary);
  out.write(kPoseMagic.data(), 8);
  const std::uint32_t count = static_cast<std::uint32_t>(poses.rows());
  const std::uint32_t dim = kPoseDim;
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  std::vector<float> buffer(static_cast<size_t>(count) * kPoseDim);
  for (std::uint32_t r = 0; r < count; ++r) {
    for (int c = 0; c < kPoseDim; ++c) {
      buffer[static_cast<size_t>(r) * kPoseDim + c] = static_cast<float>(poses(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
}

EigengraspBasis read_basis(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  try {
    EigengraspBasis basis;
    basis.dim = doc.at("dim").get<int>();
    basis.k = doc.at("k").get<int>();
    basis.centered = doc.at("centered").get<bool>();
    basis.mean = json_vector(doc.at("mean"), basis.dim, "basis mean");
    basis.eigenvalues = json_vector(doc.at("eigenvalues"), basis.k, "basis eigenvalues");
    const json& rows = doc.at("components");
    if (!rows.is_array() || static_cast<int>(rows.size()) != basis.k) {
      throw FormatError("basis components: expected " + std::to_string(basis.k) + " rows");
    }
    basis.components.resize(basis.k, basis.dim);
    for (int i = 0; i < basis.k; ++i) {
      basis.components.row(i) =
          json_vector(rows[i], basis.dim, "basis component " + std::to_string(i)).transpose();
    }
    basis.validate();
    return basis;
  } catch (const json::exception& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  }
}

void write_basis(const std::filesystem::path& path, const EigengraspBasis& basis) {
  basis.validate();
  json doc;
  doc["dim"] = basis.dim;
  doc["k"] = basis.k;
  doc["centered"] = basis.centered;
  doc["mean"] = to_json(basis.mean);
  doc["eigenvalues"] = to_json(basis.eigenvalues);
  json rows = json::array();
  for (int i = 0; i < basis.k; ++i) rows.push_back(row_to_json(basis.components.row(i)));
  doc["components"] = rows;
  open_output(path, std::ios::out) << doc.dump(2) << "\n";
}

HandSkeleton read_skeleton(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  try {
    HandSkeleton skeleton;
    const json& parent = doc.at("parent");
    const json& offsets = doc.at("rest_offset");
    const json& names = doc.at("names");
    if (parent.size() != kNumKeypoints || offsets.size() != kNumKeypoints ||
        names.size() != kNumKeypoints) {
      throw FormatError("skeleton: parent/rest_offset/names must each have 21 entries");
    }
    for (int i = 0; i < kNumKeypoints; ++i) {
      skeleton.parent[i] = parent[i].get<int>();
      skeleton.rest_offset[i] = json_vec3(offsets[i], "rest_offset[" + std::to_string(i) + "]");
      skeleton.names[i] = names[i].get<std::string>();
      // joint mapping follows from the fixed layout
      skeleton.joint_of_keypoint[i] =
          (i == 0 || i % 4 == 0) ? -1 : 3 * ((i - 1) / 4) + (i - 1) % 4;
    }
    skeleton.validate();
    return skeleton;
  } catch (const json::exception& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  }
}

void write_skeleton(const std::filesystem::path& path, const HandSkeleton& skeleton) {
  skeleton.validate();
  json doc;
  json parent = json::array(), offsets = json::array(), names = json::array();
  for (int i = 0; i < kNumKeypoints; ++i) {
    parent.push_back(skeleton.parent[i]);
    offsets.push_back(row_to_json(skeleton.rest_offset[i].transpose()));
    names.push_back(skeleton.names[i]);
  }
  doc["parent"] = parent;
  doc["rest_offset"] = offsets;
  doc["names"] = names;
  open_output(path, std::ios::out) << doc.dump(2) << "\n";
}

HandConfig read_hand_config(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  try {
    HandConfig config;
    config.urdf_path = doc.at("urdf_path").get<std::string>();
    config.palm_link = doc.at("palm_link").get<std::string>();
    for (const json& tip : doc.at("fingertips")) {
      config.fingertips.emplace_back(tip.at("link").get<std::string>(),
                                     finger_from_string(tip.at("finger_tag").get<std::string>()));
    }
    config.mount_joint = doc.value("mount_joint", "");
    config.scale = doc.value("scale", 0.0);
    if (doc.contains("joint_order_override")) {
      for (const json& name : doc.at("joint_order_override")) {
        config.joint_order_override.push_back(name.get<std::string>());
      }
    }
    return config;
  } catch (const json::exception& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  }
}

RobotHandModel load_hand(const std::filesystem::path& config_path) {
  const HandConfig config = read_hand_config(config_path);
  std::filesystem::path urdf_path(config.urdf_path);
  if (urdf_path.is_relative()) urdf_path = config_path.parent_path() / urdf_path;
  return load_urdf(read_text_file(urdf_path), config, config_path.stem().string());
}

MlpParams read_mlp(const std::filesystem::path& path) {
  std::ifstream probe = open_input(path, std::ios::binary);
  char magic[8] = {};
  probe.read(magic, 8);
  if (probe.gcount() == 8 && std::string_view(magic, 8) == kMlpMagic) {
    std::ifstream in = open_input(path, std::ios::binary);
    in.seekg(8);
    auto read_u32 = [&] {
      std::uint32_t v = 0;
      read_exact(in, reinterpret_cast<char*>(&v), 4, path);
      return v;
    };
    MlpParams params;
    const std::uint32_t n_dims = read_u32();
    if (n_dims < 2 || n_dims > 64) {
      throw FormatError("\"" + path.string() + "\": implausible layer count");
    }
    params.layer_dims.resize(n_dims);
    for (auto& d : params.layer_dims) d = static_cast<int>(read_u32());
    const std::uint32_t tag_len = read_u32();
    params.hand_tag.resize(tag_len);
    if (tag_len > 0) read_exact(in, params.hand_tag.data(), tag_len, path);
    const int m = params.layer_dims.back();
    auto read_doubles = [&](Eigen::Index count) {
      Eigen::VectorXd v(count);
      read_exact(in, reinterpret_cast<char*>(v.data()), sizeof(double) * count, path);
      return v;
    };
    params.clamp_lower = read_doubles(m);
    params.clamp_upper = read_doubles(m);
    for (size_t l = 0; l + 1 < params.layer_dims.size(); ++l) {
      const int rows = params.layer_dims[l], cols = params.layer_dims[l + 1];
      const Eigen::VectorXd flat = read_doubles(static_cast<Eigen::Index>(rows) * cols);
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r) w.row(r) = flat.segment(r * cols, cols).transpose();
      params.weights.push_back(std::move(w));
      params.biases.push_back(read_doubles(cols));
    }
    params.validate();
    return params;
  }
  if (path.extension() == ".bin") {
    throw FormatError("\"" + path.string() + "\": bad magic bytes, expected \"" +
                      std::string(kMlpMagic) + "\"");
  }

  const json doc = parse_json_file(path);
  try {
    MlpParams params;
    for (const json& d : doc.at("layer_dims")) params.layer_dims.push_back(d.get<int>());
    params.hand_tag = doc.value("hand_tag", "");
    const int m = params.layer_dims.back();
    params.clamp_lower = json_vector(doc.at("joint_limits").at("lower"), m, "mlp lower limits");
    params.clamp_upper = json_vector(doc.at("joint_limits").at("upper"), m, "mlp upper limits");
    const json& layers = doc.at("layers");
    if (layers.size() + 1 != params.layer_dims.size()) {
      throw FormatError("mlp: layers/layer_dims mismatch");
    }
    for (size_t l = 0; l < layers.size(); ++l) {
      const int rows = params.layer_dims[l], cols = params.layer_dims[l + 1];
      const Eigen::VectorXd flat = json_vector(
          layers[l].at("weight"), static_cast<size_t>(rows) * cols, "mlp weight " + std::to_string(l));
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r) w.row(r) = flat.segment(r * cols, cols).transpose();
      params.weights.push_back(std::move(w));
      params.biases.push_back(json_vector(layers[l].at("bias"), cols, "mlp bias"));
    }
    params.validate();
    return params;
  } catch (const json::exception& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("\"" + path.string() + "\": " + e.what());
  }
}

void write_mlp(const std::filesystem::path& path, const MlpParams& params) {
  params.validate();
  if (path.extension() == ".bin") {
    std::ofstream out = open_output(path, std::ios::binary);
    out.write(kMlpMagic.data(), 8);
    auto write_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    write_u32(static_cast<std::uint32_t>(params.layer_dims.size()));
    for (int d : params.layer_dims) write_u32(static_cast<std::uint32_t>(d));
    write_u32(static_cast<std::uint32_t>(params.hand_tag.size()));
    out.write(params.hand_tag.data(), static_cast<std::streamsize>(params.hand_tag.size()));
    auto write_doubles = [&](const double* data, Eigen::Index count) {
      out.write(reinterpret_cast<const char*>(data),
                static_cast<std::streamsize>(sizeof(double) * count));
    };
    write_doubles(params.clamp_lower.data(), params.clamp_lower.size());
    write_doubles(params.clamp_upper.data(), params.clamp_upper.size());
    for (size_t l = 0; l < params.weights.size(); ++l) {
      const Eigen::MatrixXd& w = params.weights[l];
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        Eigen::VectorXd row = w.row(r).transpose();
        write_doubles(row.data(), row.size());
      }
      write_doubles(params.biases[l].data(), params.biases[l].size());
    }
    return;
  }
  json doc;
  doc["layer_dims"] = params.layer_dims;
  doc["hand_tag"] = params.hand_tag;
  doc["joint_limits"] = {{"lower", to_json(params.clamp_lower)},
                         {"upper", to_json(params.clamp_upper)}};
  json layers = json::array();
  for (size_t l = 0; l < params.weights.size(); ++l) {
    json weight = json::array();
    const Eigen::MatrixXd& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) weight.push_back(w(r, c));
    }
    layers.push_back({{"weight", weight}, {"bias", to_json(params.biases[l])}});
  }
  doc["layers"] = layers;
  open_output(path, std::ios::out) << doc.dump() << "\n";
}

std::vector<SceneState> read_rollout(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  std::vector<SceneState> scenes;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json record = parse_json_line(line, path, lineno);
    try {
      SceneState scene;
      scene.palm = json_vec3(record.at("palm"), "palm");
      for (const json& tip : record.at("tips")) {
        scene.tips.push_back(json_vec3(tip, "tip"));
      }
      scene.object_center = json_vec3(record.at("object_center"), "object_center");
      const Eigen::VectorXd xy = json_vector(record.at("object_xy0"), 2, "object_xy0");
      scene.object_initial_xy = xy;
      scene.validate();
      scenes.push_back(std::move(scene));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (scenes.empty()) throw FormatError("\"" + path.string() + "\": empty rollout");
  return scenes;
}

void write_rollout(const std::filesystem::path& path, const std::vector<SceneState>& scenes) {
  std::ofstream out = open_output(path, std::ios::out);
  for (const auto& scene : scenes) {
    json record;
    record["palm"] = row_to_json(scene.palm.transpose());
    json tips = json::array();
    for (const auto& tip : scene.tips) tips.push_back(row_to_json(tip.transpose()));
    record["tips"] = tips;
    record["object_center"] = row_to_json(scene.object_center.transpose());
    record["object_xy0"] = row_to_json(scene.object_initial_xy.transpose());
    out << record.dump() << "\n";
  }
}

std::vector<WeightStreamRecord> read_weight_stream(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  std::vector<WeightStreamRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json node = parse_json_line(line, path, lineno);
    try {
      WeightStreamRecord record;
      record.t = node.value("t", static_cast<double>(records.size()));
      if (node.contains("weights")) {
        record.weights = json_vector(node.at("weights"), 0, "weights");
      } else if (node.contains("keypoints")) {
        const json& rows = node.at("keypoints");
        if (rows.size() != kNumKeypoints) {
          throw FormatError("keypoints: expected 21 rows");
        }
        Keypoints keypoints;
        for (int i = 0; i < kNumKeypoints; ++i) {
          keypoints.row(i) = json_vec3(rows[i], "keypoint").transpose();
        }
        record.keypoints = keypoints;
      } else {
        throw FormatError("record needs \"weights\" or \"keypoints\"");
      }
      records.push_back(std::move(record));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw FormatError("\"" + path.string() + "\": empty input stream");
  return records;
}

std::string fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::string fnv1a64_file(const std::filesystem::path& path) {
  return fnv1a64(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace crossdex
