#include "handkit/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "handkit/errors.hpp"

namespace handkit::io {
namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& what) {
  throw ValidationError("[io] " + what);
}

double get_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    bad_field("expected numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    bad_field("expected integer field '" + key + "'");
  }
  return j.at(key).get<int>();
}

const json& get_array(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    bad_field("expected array field '" + key + "'");
  }
  return j.at(key);
}

Eigen::VectorXd vector_from(const json& arr, const std::string& key) {
  Eigen::VectorXd v(static_cast<int>(arr.size()));
  for (int i = 0; i < v.size(); ++i) {
    if (!arr[i].is_number()) bad_field("non-numeric entry in '" + key + "'");
    v[i] = arr[i].get<double>();
  }
  return v;
}

Eigen::Vector3d vec3_from(const json& j, const std::string& key) {
  const json& arr = get_array(j, key);
  if (arr.size() != 3) bad_field("field '" + key + "' must have 3 entries");
  return Eigen::Vector3d(vector_from(arr, key));
}

json to_array(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::MatrixXd matrix_from(const json& arr, const std::string& key, int rows,
                            int cols) {
  if (static_cast<int>(arr.size()) != rows) {
    bad_field("field '" + key + "' must have " + std::to_string(rows) +
              " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!arr[r].is_array() || static_cast<int>(arr[r].size()) != cols) {
      bad_field("row " + std::to_string(r) + " of '" + key + "' must have " +
                std::to_string(cols) + " entries");
    }
    for (int c = 0; c < cols; ++c) {
      if (!arr[r][c].is_number()) {
        bad_field("non-numeric entry in '" + key + "'");
      }
      m(r, c) = arr[r][c].get<double>();
    }
  }
  return m;
}

json to_rows(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("[io] cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("[io] failed while reading '" + path + "'");
  return buf.str();
}

void save_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("[io] cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("[io] failed while writing '" + path + "'");
}

json load_json(const std::string& path) {
  const std::string text = load_text(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ValidationError("[io] '" + path + "' is not valid JSON");
  }
  return j;
}

void save_json(const std::string& path, const json& j) {
  save_text(path, j.dump(2) + "\n");
}

camera::Intrinsics intrinsics_from_json(const json& j) {
  camera::Intrinsics cam;
  cam.fx = get_number(j, "fx");
  cam.fy = get_number(j, "fy");
  cam.ppx = get_number(j, "ppx");
  cam.ppy = get_number(j, "ppy");
  cam.width = get_int(j, "width");
  cam.height = get_int(j, "height");
  cam.validate();
  return cam;
}

json to_json(const camera::Intrinsics& cam) {
  return json{{"fx", cam.fx},   {"fy", cam.fy},
              {"ppx", cam.ppx}, {"ppy", cam.ppy},
              {"width", cam.width}, {"height", cam.height}};
}

hand::Params params_from_json(const json& j) {
  hand::Params p;
  const json& beta = get_array(j, "beta");
  p.beta = vector_from(beta, "beta");
  p.theta = matrix_from(get_array(j, "theta"), "theta", kNumArticulated, 3);
  p.root_rot = vec3_from(j, "root_rot");
  p.root_trans = vec3_from(j, "root_trans");
  return p;
}

json to_json(const hand::Params& p) {
  return json{{"beta", to_array(p.beta)},
              {"theta", to_rows(p.theta)},
              {"root_rot", to_array(p.root_rot)},
              {"root_trans", to_array(p.root_trans)}};
}

KeypointSet3D keypoints3d_from_json(const json& j) {
  KeypointSet3D k;
  k.joints = matrix_from(get_array(j, "joints"), "joints", kNumJoints, 3);
  return k;
}

json to_json(const KeypointSet3D& k) {
  return json{{"joints", to_rows(k.joints)}};
}

KeypointSet2D keypoints2d_from_json(const json& j) {
  KeypointSet2D k;
  k.points = matrix_from(get_array(j, "points"), "points", kNumJoints, 2);
  return k;
}

json to_json(const KeypointSet2D& k) {
  return json{{"points", to_rows(k.points)}};
}

hand::SkinnedModel model_from_json(const json& j) {
  hand::SkinnedModel m;
  const json& verts = get_array(j, "template_vertices");
  const int nv = static_cast<int>(verts.size());
  m.template_vertices = matrix_from(verts, "template_vertices", nv, 3);

  const json& faces = get_array(j, "faces");
  m.faces.resize(static_cast<int>(faces.size()), 3);
  for (int f = 0; f < m.faces.rows(); ++f) {
    if (!faces[f].is_array() || faces[f].size() != 3) {
      bad_field("face " + std::to_string(f) + " must have 3 vertex indices");
    }
    for (int c = 0; c < 3; ++c) {
      if (!faces[f][c].is_number_integer()) {
        bad_field("non-integer vertex index in 'faces'");
      }
      m.faces(f, c) = faces[f][c].get<int>();
    }
  }

  const json& parents = get_array(j, "joint_parents");
  if (parents.size() != kNumJoints) {
    bad_field("'joint_parents' must have " +
              std::to_string(kNumJoints) + " entries");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    if (!parents[i].is_number_integer()) {
      bad_field("non-integer entry in 'joint_parents'");
    }
    m.joint_parents[i] = parents[i].get<int>();
  }

  m.rest_joints = matrix_from(get_array(j, "rest_joints"), "rest_joints",
                              kNumJoints, 3);
  m.skinning_weights = matrix_from(get_array(j, "skinning_weights"),
                                   "skinning_weights", nv, kNumJoints);
  m.joint_regressor = matrix_from(get_array(j, "joint_regressor"),
                                  "joint_regressor", kNumJoints, nv);
  const json& basis = get_array(j, "shape_basis");
  m.shape_basis.clear();
  for (size_t b = 0; b < basis.size(); ++b) {
    const std::string key = "shape_basis[" + std::to_string(b) + "]";
    if (!basis[b].is_array()) bad_field("'" + key + "' must be a 2d array");
    m.shape_basis.push_back(matrix_from(basis[b], key, nv, 3));
  }
  m.validate();
  return m;
}

json to_json(const hand::SkinnedModel& m) {
  json faces = json::array();
  for (int f = 0; f < m.faces.rows(); ++f) {
    faces.push_back({m.faces(f, 0), m.faces(f, 1), m.faces(f, 2)});
  }
  json parents = json::array();
  for (int i = 0; i < kNumJoints; ++i) parents.push_back(m.joint_parents[i]);
  json basis = json::array();
  for (const auto& dir : m.shape_basis) basis.push_back(to_rows(dir));
  return json{{"template_vertices", to_rows(m.template_vertices)},
              {"faces", faces},
              {"joint_parents", parents},
              {"rest_joints", to_rows(m.rest_joints)},
              {"skinning_weights", to_rows(m.skinning_weights)},
              {"joint_regressor", to_rows(m.joint_regressor)},
              {"shape_basis", basis}};
}

alignment::RigidPose pose_from_json(const json& j) {
  alignment::RigidPose p;
  p.rotation = matrix_from(get_array(j, "rotation"), "rotation", 3, 3);
  p.translation = vec3_from(j, "translation");
  p.validate();
  return p;
}

json to_json(const alignment::RigidPose& p) {
  return json{{"rotation", to_rows(p.rotation)},
              {"translation", to_array(p.translation)}};
}

grasp::Mlp mlp_from_json(const json& j) {
  grasp::Mlp net;
  net.extra_inputs = get_int(j, "extra_inputs");
  const json& weights = get_array(j, "weights");
  const json& biases = get_array(j, "biases");
  if (weights.size() != biases.size()) {
    bad_field("'weights' and 'biases' must have the same layer count");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    const std::string wkey = "weights[" + std::to_string(l) + "]";
    if (!weights[l].is_array() || weights[l].empty() ||
        !weights[l][0].is_array()) {
      bad_field("'" + wkey + "' must be a 2d array");
    }
    const int rows = static_cast<int>(weights[l].size());
    const int cols = static_cast<int>(weights[l][0].size());
    net.weights.push_back(matrix_from(weights[l], wkey, rows, cols));
    if (!biases[l].is_array()) {
      bad_field("biases[" + std::to_string(l) + "] must be an array");
    }
    net.biases.push_back(
        vector_from(biases[l], "biases[" + std::to_string(l) + "]"));
  }
  net.validate();
  return net;
}

json to_json(const grasp::Mlp& net) {
  json weights = json::array();
  json biases = json::array();
  for (size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(to_rows(net.weights[l]));
    biases.push_back(to_array(net.biases[l]));
  }
  return json{{"extra_inputs", net.extra_inputs},
              {"weights", weights},
              {"biases", biases}};
}

std::vector<grasp::Sample> dataset_from_json(const json& j) {
  const json& samples = get_array(j, "samples");
  std::vector<grasp::Sample> data;
  data.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const json& s = samples[i];
    grasp::Sample sample;
    sample.theta = vector_from(
        get_array(s, "theta"), "samples[" + std::to_string(i) + "].theta");
    sample.label = get_int(s, "label");
    data.push_back(std::move(sample));
  }
  return data;
}

json to_json(const std::vector<grasp::Sample>& data) {
  json samples = json::array();
  for (const auto& s : data) {
    samples.push_back(json{{"theta", to_array(s.theta)}, {"label", s.label}});
  }
  return json{{"samples", samples}};
}

softras::MaskImage load_mask_pgm(const std::string& path) {
  const std::string raw = load_text(path);
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < raw.size()) {
      char c = raw[pos];
      if (c == '#') {
        while (pos < raw.size() && raw[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[pos]))) {
      ++pos;
    }
    if (start == pos) {
      throw ValidationError("[io] truncated PGM header in '" + path + "'");
    }
    return raw.substr(start, pos - start);
  };

  if (next_token() != "P5") {
    throw ValidationError("[io] '" + path + "' is not a binary PGM (P5)");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ValidationError("[io] malformed PGM header in '" + path + "'");
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("[io] PGM '" + path + "' has non-positive size");
  }
  if (maxval != 255) {
    throw ValidationError("[io] PGM '" + path + "' must use maxval 255");
  }
  ++pos;  // single whitespace byte after maxval
  const size_t need = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (raw.size() - pos < need) {
    throw ValidationError("[io] PGM '" + path + "' pixel data truncated");
  }

  softras::MaskImage mask;
  mask.width = width;
  mask.height = height;
  mask.values.resize(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const unsigned char b = static_cast<unsigned char>(raw[pos++]);
      if (b != 0 && b != 255) {
        throw ValidationError("[io] PGM '" + path +
                              "' contains a non-binary pixel value " +
                              std::to_string(int(b)));
      }
      mask.values(r, c) = b == 255 ? 1.0 : 0.0;
    }
  }

  const std::string sidecar_path = path + ".json";
  std::ifstream probe(sidecar_path);
  if (!probe) {
    throw ValidationError("[io] mask '" + path +
                          "' missing amodal sidecar '" + sidecar_path + "'");
  }
  probe.close();
  const json sidecar = load_json(sidecar_path);
  if (!sidecar.contains("amodal") || !sidecar.at("amodal").is_boolean()) {
    throw ValidationError("[io] sidecar '" + sidecar_path +
                          "' must contain boolean 'amodal'");
  }
  mask.amodal = sidecar.at("amodal").get<bool>();
  mask.validate();
  return mask;
}

std::string pgm_bytes(const softras::MaskImage& mask) {
  mask.validate();
  std::string out = "P5\n" + std::to_string(mask.width) + " " +
                    std::to_string(mask.height) + "\n255\n";
  out.reserve(out.size() +
              static_cast<size_t>(mask.width) * static_cast<size_t>(mask.height));
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      out.push_back(mask.values(r, c) > 0.5 ? char(255) : char(0));
    }
  }
  return out;
}

void save_mask_pgm(const std::string& path, const softras::MaskImage& mask) {
  save_text(path, pgm_bytes(mask));
  save_json(path + ".json", nlohmann::json{{"amodal", mask.amodal}});
}

}  // namespace handkit::io
