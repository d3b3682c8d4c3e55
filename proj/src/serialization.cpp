#include "bmnet/serialization.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace bmnet::io {
namespace {

void dump_into(const Json& value, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (value.type()) {
    case Json::value_t::number_float:
      out += format_double(value.get<double>());
      return;
    case Json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(value.begin(), value.end(), [](const Json& v) { return v.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& item : value) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) out += "\n" + inner;
        dump_into(item, indent + 1, out);
        first = false;
      }
      if (!flat) out += "\n" + pad;
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        out += "\n" + inner + Json(key).dump() + ": ";
        dump_into(item, indent + 1, out);
        first = false;
      }
      out += "\n" + pad + '}';
      return;
    }
    default:
      out += value.dump();
  }
}

bool is_count(const Json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

// Field-by-field reader that reports the dotted path of anything it rejects.
class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string path) : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) throw FormatError("field '" + path_ + "' must be an object");
  }

  bool has(const char* key) const { return json_.contains(key); }

  const Json& child(const char* key) {
    seen_.insert(key);
    if (!json_.contains(key)) throw FormatError("missing field '" + where(key) + "'");
    return json_.at(key);
  }

  void read(const char* key, double& out) {
    if (!json_.contains(key)) return;
    const Json& v = child(key);
    if (!v.is_number()) throw FormatError("field '" + where(key) + "' must be a number");
    out = v.get<double>();
  }

  template <typename Unsigned>
  void read_unsigned(const char* key, Unsigned& out) {
    if (!json_.contains(key)) return;
    const Json& v = child(key);
    if (!is_count(v)) throw FormatError("field '" + where(key) + "' must be a non-negative integer");
    out = v.get<Unsigned>();
  }

  void read(const char* key, std::size_t& out) { read_unsigned(key, out); }
#if SIZE_MAX != UINT64_MAX
  void read(const char* key, std::uint64_t& out) { read_unsigned(key, out); }
#endif

  void read(const char* key, std::vector<std::size_t>& out) {
    if (!json_.contains(key)) return;
    const Json& v = child(key);
    if (!v.is_array()) throw FormatError("field '" + where(key) + "' must be an array");
    out.clear();
    for (const auto& item : v) {
      if (!is_count(item)) throw FormatError("field '" + where(key) + "' must hold non-negative integers");
      out.push_back(item.get<std::size_t>());
    }
  }

  void read(const char* key, std::string& out) {
    if (!json_.contains(key)) return;
    const Json& v = child(key);
    if (!v.is_string()) throw FormatError("field '" + where(key) + "' must be a string");
    out = v.get<std::string>();
  }

  // Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, unused] : json_.items()) {
      if (!seen_.count(key)) throw FormatError("unknown field '" + where(key) + "'");
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string> seen_;
};

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index k = 0; k < m.size(); ++k) data.push_back(m.data()[k]);
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& json, const std::string& path) {
  ObjectReader r(json, path);
  std::size_t rows = 0, cols = 0;
  r.read("rows", rows);
  r.read("cols", cols);
  const Json& data = r.child("data");
  r.finish();
  if (!data.is_array() || data.size() != rows * cols) {
    throw FormatError("field '" + path + ".data' must hold rows*cols numbers");
  }
  Matrix m(rows, cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!data[k].is_number()) throw FormatError("field '" + path + ".data' must hold numbers");
    m.data()[k] = data[k].get<double>();
  }
  return m;
}

Json points_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix points_from_json(const Json& json, Eigen::Index cols, const std::string& path) {
  if (!json.is_array() || json.empty()) throw FormatError("field '" + path + "' must be a non-empty array");
  Matrix m(static_cast<Eigen::Index>(json.size()), cols);
  for (std::size_t i = 0; i < json.size(); ++i) {
    if (!json[i].is_array() || json[i].size() != static_cast<std::size_t>(cols)) {
      throw FormatError("field '" + path + "' must hold points of dimension " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = json[i][static_cast<std::size_t>(c)];
      if (!v.is_number()) throw FormatError("field '" + path + "' must hold numbers");
      m(static_cast<Eigen::Index>(i), c) = v.get<double>();
    }
  }
  return m;
}

Json circle_to_json(const flow::CirclePrior& c) {
  return Json{{"center", Json::array({c.center[0], c.center[1]})}, {"radius", c.radius}};
}

flow::CirclePrior circle_from_json(const Json& json, const std::string& path) {
  ObjectReader r(json, path);
  const Json& center = r.child("center");
  flow::CirclePrior c;
  r.read("radius", c.radius);
  r.finish();
  if (!center.is_array() || center.size() != 2 || !center[0].is_number() || !center[1].is_number()) {
    throw FormatError("field '" + path + ".center' must be two numbers");
  }
  c.center = {center[0].get<double>(), center[1].get<double>()};
  if (!(c.radius > 0.0)) throw FormatError("field '" + path + ".radius' must be positive");
  return c;
}

const char* kind_name(flow::LayerKind kind) {
  switch (kind) {
    case flow::LayerKind::CondAffine: return "cond_affine";
    case flow::LayerKind::Coupling: return "coupling";
    case flow::LayerKind::Permutation: return "permutation";
  }
  return "unknown";
}

Json subnet_to_json(const flow::Subnet& net, const numerics::ParamStore& params) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    layers.push_back(Json{{"weight", matrix_to_json(params.value(net.weights[l]))},
                          {"bias", matrix_to_json(params.value(net.biases[l]))}});
  }
  return Json{{"in", net.in}, {"out", net.out}, {"layers", std::move(layers)}};
}

void subnet_from_json(const Json& json, const flow::Subnet& net, numerics::ParamStore& params,
                      const std::string& path) {
  ObjectReader r(json, path);
  std::size_t in = 0, out = 0;
  r.read("in", in);
  r.read("out", out);
  const Json& layers = r.child("layers");
  r.finish();
  if (in != net.in || out != net.out || !layers.is_array() || layers.size() != net.weights.size()) {
    throw FormatError("field '" + path + "' does not match the configured subnet shape");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const std::string lp = path + ".layers[" + std::to_string(l) + "]";
    ObjectReader lr(layers[l], lp);
    Matrix w = matrix_from_json(lr.child("weight"), lp + ".weight");
    Matrix b = matrix_from_json(lr.child("bias"), lp + ".bias");
    lr.finish();
    Matrix& w_slot = params.value(net.weights[l]);
    Matrix& b_slot = params.value(net.biases[l]);
    if (w.rows() != w_slot.rows() || w.cols() != w_slot.cols() || b.rows() != b_slot.rows() ||
        b.cols() != b_slot.cols()) {
      throw FormatError("field '" + lp + "' has the wrong shape");
    }
    if (!w.allFinite() || !b.allFinite()) throw FormatError("field '" + lp + "' holds non-finite values");
    w_slot = std::move(w);
    b_slot = std::move(b);
  }
}

void check_row_field_count(std::string_view line, std::size_t line_no, std::size_t expected) {
  const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (commas + 1 != expected) {
    throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " fields");
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string dump_json(const Json& value) {
  std::string out;
  dump_into(value, 0, out);
  out += '\n';
  return out;
}

Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(what + ": malformed JSON (" + e.what() + ")");
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string points_to_csv(const Matrix& points, const std::vector<std::string>& header) {
  if (header.size() != static_cast<std::size_t>(points.cols())) {
    throw std::invalid_argument("points_to_csv: header does not match column count");
  }
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (c) out += ',';
      out += format_double(points(i, c));
    }
    out += '\n';
  }
  return out;
}

std::string dataset_to_csv(const datasets::Dataset& data) {
  Matrix rows(data.size(), 5);
  rows << data.xs(), data.ys();
  return points_to_csv(rows, {"x0", "x1", "x2", "y0", "y1"});
}

datasets::Dataset dataset_from_csv(std::string_view text) {
  datasets::Dataset data;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != "x0,x1,x2,y0,y1") throw FormatError("line 1: expected header x0,x1,x2,y0,y1");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    check_row_field_count(line, line_no, 5);
    double v[5];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 5; ++k) {
      const auto [next, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc{} || (k < 4 && (next == end || *next != ',')) || (k == 4 && next != end) ||
          !std::isfinite(v[k])) {
        throw FormatError("line " + std::to_string(line_no) + ": field " + std::to_string(k + 1) +
                          " is not a finite number");
      }
      p = next + 1;
    }
    data.pairs.push_back({Eigen::Vector3d(v[0], v[1], v[2]), Eigen::Vector2d(v[3], v[4])});
  }
  if (!header_seen) throw FormatError("dataset CSV is empty");
  if (data.pairs.empty()) throw FormatError("dataset CSV has no rows");
  return data;
}

Json to_json(const RunConfig& c) {
  const auto& f = c.flow;
  const auto& k = c.clustering;
  const auto& t = c.train;
  const auto& p = c.protocol;
  return Json{
      {"flow",
       {{"x_dim", f.x_dim}, {"z1_dim", f.z1_dim}, {"y_dim", f.y_dim}, {"z2_dim", f.z2_dim},
        {"blocks", f.blocks}, {"coupling_split", f.coupling_split}, {"hidden", f.hidden},
        {"hidden_layers", f.hidden_layers}, {"scale_clamp", f.scale_clamp}, {"seed", f.seed}}},
      {"clustering", {{"n_x", k.n_x}, {"n_y", k.n_y}, {"max_iter", k.max_iter}, {"tol", k.tol}, {"seed", k.seed}}},
      {"train",
       {{"epochs", t.epochs}, {"base_lr", t.base_lr}, {"milestones", t.milestones}, {"batch_cap", t.batch_cap},
        {"min_cell", t.min_cell}, {"reg_weight", t.reg_weight}, {"seed", t.seed}}},
      {"inference", {{"k", c.inference_k}}},
      {"protocol",
       {{"global_points", p.global_points}, {"local_anchors", p.local_anchors}, {"local_points", p.local_points},
        {"knn_k", p.knn_k}, {"wasserstein_exact_limit", p.wasserstein.exact_limit},
        {"wasserstein_slices", p.wasserstein.slices}, {"wasserstein_slice_seed", p.wasserstein.slice_seed}}},
  };
}

RunConfig run_config_from_json(const Json& json) {
  RunConfig c;
  ObjectReader root(json, "");
  if (root.has("flow")) {
    ObjectReader r(root.child("flow"), "flow");
    auto& f = c.flow;
    r.read("x_dim", f.x_dim);
    r.read("z1_dim", f.z1_dim);
    r.read("y_dim", f.y_dim);
    r.read("z2_dim", f.z2_dim);
    r.read("blocks", f.blocks);
    r.read("coupling_split", f.coupling_split);
    r.read("hidden", f.hidden);
    r.read("hidden_layers", f.hidden_layers);
    r.read("scale_clamp", f.scale_clamp);
    r.read_unsigned("seed", f.seed);
    r.finish();
  }
  if (root.has("clustering")) {
    ObjectReader r(root.child("clustering"), "clustering");
    auto& k = c.clustering;
    r.read("n_x", k.n_x);
    r.read("n_y", k.n_y);
    r.read("max_iter", k.max_iter);
    r.read("tol", k.tol);
    r.read_unsigned("seed", k.seed);
    r.finish();
  }
  if (root.has("train")) {
    ObjectReader r(root.child("train"), "train");
    auto& t = c.train;
    r.read("epochs", t.epochs);
    r.read("base_lr", t.base_lr);
    r.read("milestones", t.milestones);
    r.read("batch_cap", t.batch_cap);
    r.read("min_cell", t.min_cell);
    r.read("reg_weight", t.reg_weight);
    r.read_unsigned("seed", t.seed);
    r.finish();
  }
  if (root.has("inference")) {
    ObjectReader r(root.child("inference"), "inference");
    r.read("k", c.inference_k);
    r.finish();
  }
  if (root.has("protocol")) {
    ObjectReader r(root.child("protocol"), "protocol");
    auto& p = c.protocol;
    r.read("global_points", p.global_points);
    r.read("local_anchors", p.local_anchors);
    r.read("local_points", p.local_points);
    r.read("knn_k", p.knn_k);
    r.read("wasserstein_exact_limit", p.wasserstein.exact_limit);
    r.read("wasserstein_slices", p.wasserstein.slices);
    r.read_unsigned("wasserstein_slice_seed", p.wasserstein.slice_seed);
    r.finish();
  }
  root.finish();

  try {
    c.flow.validate();
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  if (c.clustering.n_x == 0 || c.clustering.n_y == 0) throw FormatError("field 'clustering.n_x/n_y' must be positive");
  if (c.inference_k == 0) throw FormatError("field 'inference.k' must be positive");
  return c;
}

Json checkpoint_to_json(const training::TrainedModel& model, const RunConfig& config, const TrainingDataRef& data) {
  Json layers = Json::array();
  for (const auto& layer : model.network.layers) {
    Json j{{"kind", kind_name(layer.kind)}};
    if (layer.kind == flow::LayerKind::CondAffine) j["condition"] = layer.side == flow::ConditionSide::X ? "x" : "y";
    if (layer.kind == flow::LayerKind::Permutation) {
      j["indices"] = layer.permutation;
    } else {
      j["subnet"] = subnet_to_json(layer.subnet, model.network.params);
    }
    layers.push_back(std::move(j));
  }
  Json z1 = Json::array(), z2 = Json::array();
  for (const auto& c : model.prior.z1) z1.push_back(circle_to_json(c));
  for (const auto& c : model.prior.z2) z2.push_back(circle_to_json(c));
  return Json{
      {"format_version", kCheckpointVersion},
      {"config", to_json(config)},
      {"clusters", {{"x", points_to_json(model.clusters.centroids_x)}, {"y", points_to_json(model.clusters.centroids_y)}}},
      {"priors", {{"momentum", model.prior.momentum}, {"z1", std::move(z1)}, {"z2", std::move(z2)}}},
      {"network", {{"layers", std::move(layers)}}},
      {"training_data", {{"path", data.path}, {"hash", data.hash}, {"rows", data.rows}}},
  };
}

Checkpoint checkpoint_from_json(const Json& json) {
  ObjectReader root(json, "");
  std::size_t version = 0;
  root.read("format_version", version);
  if (version != static_cast<std::size_t>(kCheckpointVersion)) {
    throw FormatError("field 'format_version': expected " + std::to_string(kCheckpointVersion) + ", found " +
                      std::to_string(version));
  }
  Checkpoint cp;
  cp.config = run_config_from_json(root.child("config"));
  auto& model = cp.model;
  model.cluster_config = cp.config.clustering;
  model.train_config = cp.config.train;

  {
    ObjectReader r(root.child("clusters"), "clusters");
    model.clusters.centroids_x = points_from_json(r.child("x"), 3, "clusters.x");
    model.clusters.centroids_y = points_from_json(r.child("y"), 2, "clusters.y");
    r.finish();
    if (model.clusters.n1() != cp.config.clustering.n_x || model.clusters.n2() != cp.config.clustering.n_y) {
      throw FormatError("field 'clusters': centroid counts do not match config.clustering");
    }
  }
  {
    ObjectReader r(root.child("priors"), "priors");
    model.prior = flow::make_prior(0, 0, cp.config.flow.z2_dim);
    r.read("momentum", model.prior.momentum);
    const Json& z1 = r.child("z1");
    const Json& z2 = r.child("z2");
    r.finish();
    if (!z1.is_array() || z1.size() != model.clusters.n1()) throw FormatError("field 'priors.z1': one entry per X cluster");
    if (!z2.is_array() || z2.size() != model.clusters.n2()) throw FormatError("field 'priors.z2': one entry per Y cluster");
    for (std::size_t i = 0; i < z1.size(); ++i) model.prior.z1.push_back(circle_from_json(z1[i], "priors.z1[" + std::to_string(i) + "]"));
    for (std::size_t j = 0; j < z2.size(); ++j) model.prior.z2.push_back(circle_from_json(z2[j], "priors.z2[" + std::to_string(j) + "]"));
  }
  {
    model.network = flow::init_network(cp.config.flow);
    ObjectReader r(root.child("network"), "network");
    const Json& layers = r.child("layers");
    r.finish();
    if (!layers.is_array() || layers.size() != model.network.layers.size()) {
      throw FormatError("field 'network.layers': layer count does not match config.flow");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = model.network.layers[l];
      const std::string lp = "network.layers[" + std::to_string(l) + "]";
      ObjectReader lr(layers[l], lp);
      std::string kind;
      lr.read("kind", kind);
      if (kind != kind_name(layer.kind)) throw FormatError("field '" + lp + ".kind': expected " + kind_name(layer.kind));
      if (layer.kind == flow::LayerKind::CondAffine) {
        std::string side;
        lr.read("condition", side);
        if (side != (layer.side == flow::ConditionSide::X ? "x" : "y")) {
          throw FormatError("field '" + lp + ".condition' does not match the layer order");
        }
      }
      if (layer.kind == flow::LayerKind::Permutation) {
        std::vector<std::size_t> indices;
        lr.read("indices", indices);
        std::vector<bool> hit(layer.permutation.size(), false);
        if (indices.size() != layer.permutation.size()) throw FormatError("field '" + lp + ".indices' has the wrong length");
        for (std::size_t c = 0; c < indices.size(); ++c) {
          if (indices[c] >= hit.size() || hit[indices[c]]) throw FormatError("field '" + lp + ".indices' is not a permutation");
          hit[indices[c]] = true;
          layer.permutation[c] = static_cast<Eigen::Index>(indices[c]);
        }
      } else {
        subnet_from_json(lr.child("subnet"), layer.subnet, model.network.params, lp + ".subnet");
      }
      lr.finish();
    }
  }
  {
    ObjectReader r(root.child("training_data"), "training_data");
    r.read("path", cp.data.path);
    r.read("hash", cp.data.hash);
    r.read("rows", cp.data.rows);
    r.finish();
  }
  root.finish();
  return cp;
}

namespace {

Json values_to_json(const metrics::MetricValues& v) {
  return Json{{"w1", v.w1}, {"w2", v.w2}, {"msmd", v.msmd}, {"mmd", v.mmd}, {"kl_fwd", v.kl_fwd}, {"kl_bwd", v.kl_bwd}};
}

}  // namespace

Json report_to_json(const metrics::MetricReport& report) {
  Json flat = Json::object();
  Json modes = Json::object();
  Json per_anchor = Json::object();
  auto add_level = [&](const std::string& prefix, const metrics::LevelReport& level) {
    const Json values = values_to_json(level.values);
    for (const auto& [name, value] : values.items()) flat[prefix + "." + name] = value;
    modes[prefix] = {{"w1", metrics::to_string(level.modes.w1)}, {"w2", metrics::to_string(level.modes.w2)}};
  };
  auto add_direction = [&](const std::string& name, const metrics::DirectionReport& d) {
    add_level(name + ".global", d.global);
    add_level(name + ".local", d.local);
    Json anchors = Json::array();
    for (std::size_t a = 0; a < d.local.per_anchor.size(); ++a) {
      Json entry = values_to_json(d.local.per_anchor[a]);
      Json point = Json::array();
      for (Eigen::Index c = 0; c < d.local.anchors.cols(); ++c) point.push_back(d.local.anchors(static_cast<Eigen::Index>(a), c));
      entry["anchor"] = std::move(point);
      anchors.push_back(std::move(entry));
    }
    per_anchor[name] = std::move(anchors);
  };
  add_direction("forward", report.forward);
  add_direction("reverse", report.reverse);

  const auto& p = report.protocol;
  return Json{
      {"dataset", datasets::to_string(report.dataset)},
      {"metrics", std::move(flat)},
      {"local_per_anchor", std::move(per_anchor)},
      {"wasserstein_mode", std::move(modes)},
      {"protocol",
       {{"global_points", p.global_points}, {"local_anchors", p.local_anchors}, {"local_points", p.local_points},
        {"knn_k", p.knn_k}, {"seed", p.seed}, {"inference_k", report.inference_k},
        {"wasserstein_exact_limit", p.wasserstein.exact_limit}, {"wasserstein_slices", p.wasserstein.slices},
        {"wasserstein_slice_seed", p.wasserstein.slice_seed}}},
      {"metadata",
       {{"scale", "all values unscaled; tabulated conventions multiply W1 and W2 by 1e2, MSMD by 1e4, MMD by 1e3"},
        {"kl_convention", "kl_fwd = KL(generated || true), kl_bwd = KL(true || generated)"},
        {"local_aggregate", "arithmetic mean over local anchors"},
        {"mmd", "biased squared-MMD, Gaussian kernel, median-heuristic bandwidth"}}},
  };
}

}  // namespace bmnet::io
