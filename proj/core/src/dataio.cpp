#include "dqmor/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dqmor/errors.hpp"
#include "dqmor/rng.hpp"
#include "text_format.hpp"

namespace dqmor {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kQmr ? "qmr" : "dmkdc";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "qmr") return ModelKind::kQmr;
  if (name == "dmkdc") return ModelKind::kDmkdc;
  throw InvalidArgumentError("unknown model kind '" + name +
                             "' (expected qmr|dmkdc)");
}

bool FeatureDataset::labeled() const {
  for (const PatchRecord& rec : records) {
    if (rec.label == kUnlabeled) return false;
  }
  return true;
}

std::vector<BagGroup> group_by_bag(const FeatureDataset& dataset) {
  std::vector<BagGroup> bags;
  std::unordered_map<std::string, std::size_t> index_of;
  for (int i = 0; i < dataset.size(); ++i) {
    const PatchRecord& rec = dataset.records[i];
    auto [it, inserted] = index_of.emplace(rec.bag_id, bags.size());
    if (inserted) {
      bags.push_back({rec.bag_id, {}, rec.label});
    }
    BagGroup& bag = bags[it->second];
    bag.record_indices.push_back(i);
    if (rec.label != bag.label) bag.label = kUnlabeled;
  }
  return bags;
}

namespace {

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line,
                             const std::string& what) {
  throw ParseError(path.string() + ": line " + std::to_string(line) + ": " +
                   what);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

double parse_double_field(const std::filesystem::path& path, int line,
                          std::string_view field, const char* what) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    parse_fail(path, line,
               std::string("malformed ") + what + " '" + std::string(field) +
                   "'");
  }
  if (!std::isfinite(value)) {
    parse_fail(path, line,
               std::string("non-finite ") + what + " '" + std::string(field) +
                   "'");
  }
  return value;
}

}  // namespace

FeatureDataset load_csv(const std::filesystem::path& path, int num_grades,
                        bool allow_unlabeled) {
  if (num_grades < 1) {
    throw InvalidArgumentError("load_csv: num_grades must be positive");
  }
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw ParseError("cannot open '" + path.string() + "'");
  }

  std::string line;
  int line_number = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(file, line)) return false;
    ++line_number;
    if (!line.empty() && line.back() == '\r') {
      parse_fail(path, line_number,
                 "carriage return found (CRLF line endings are not accepted)");
    }
    return true;
  };

  if (!next_line()) {
    throw ParseError(path.string() + ": empty file");
  }
  const std::vector<std::string_view> header = split_fields(line);
  if (header.size() < 4 || header[0] != "bag_id" || header[1] != "patch_id" ||
      header[2] != "label") {
    parse_fail(path, line_number,
               "header must be bag_id,patch_id,label,f0,...");
  }
  const int feature_dim = static_cast<int>(header.size()) - 3;
  for (int j = 0; j < feature_dim; ++j) {
    if (header[3 + j] != "f" + std::to_string(j)) {
      parse_fail(path, line_number,
                 "feature column " + std::to_string(j) + " must be named f" +
                     std::to_string(j));
    }
  }

  FeatureDataset dataset;
  dataset.feature_dim = feature_dim;
  dataset.num_grades = num_grades;
  std::unordered_map<std::string, int> first_seen;  // "bag/patch" -> line

  while (next_line()) {
    if (line.empty()) {
      parse_fail(path, line_number, "empty line");
    }
    const std::vector<std::string_view> fields = split_fields(line);
    if (fields.size() != header.size()) {
      parse_fail(path, line_number,
                 "expected " + std::to_string(header.size()) +
                     " fields, got " + std::to_string(fields.size()));
    }
    PatchRecord rec;
    if (!valid_id(fields[0])) {
      parse_fail(path, line_number,
                 "bag_id '" + std::string(fields[0]) +
                     "' does not match [A-Za-z0-9_-]+");
    }
    if (!valid_id(fields[1])) {
      parse_fail(path, line_number,
                 "patch_id '" + std::string(fields[1]) +
                     "' does not match [A-Za-z0-9_-]+");
    }
    rec.bag_id = std::string(fields[0]);
    rec.patch_id = std::string(fields[1]);

    const std::string key = rec.bag_id + "/" + rec.patch_id;
    auto [it, inserted] = first_seen.emplace(key, line_number);
    if (!inserted) {
      parse_fail(path, line_number,
                 "duplicate (bag_id, patch_id) pair '" + key +
                     "', first seen at line " + std::to_string(it->second));
    }

    const std::string_view label_field = fields[2];
    if (label_field.empty()) {
      if (!allow_unlabeled) {
        parse_fail(path, line_number,
                   "empty label (pass allow_unlabeled to accept)");
      }
      rec.label = kUnlabeled;
    } else {
      int label = 0;
      const auto [ptr, ec] = std::from_chars(
          label_field.data(), label_field.data() + label_field.size(), label);
      if (ec != std::errc{} ||
          ptr != label_field.data() + label_field.size()) {
        parse_fail(path, line_number,
                   "malformed label '" + std::string(label_field) + "'");
      }
      if (label < 0 || label >= num_grades) {
        parse_fail(path, line_number,
                   "label " + std::to_string(label) + " outside [0, " +
                       std::to_string(num_grades) + ")");
      }
      rec.label = label;
    }

    rec.features.resize(feature_dim);
    for (int j = 0; j < feature_dim; ++j) {
      rec.features[j] =
          parse_double_field(path, line_number, fields[3 + j],
                             ("f" + std::to_string(j)).c_str());
    }
    dataset.records.push_back(std::move(rec));
  }
  return dataset;
}

void save_csv(const FeatureDataset& dataset,
              const std::filesystem::path& path) {
  std::string out = "bag_id,patch_id,label";
  for (int j = 0; j < dataset.feature_dim; ++j) {
    out += ",f" + std::to_string(j);
  }
  out += "\n";
  for (const PatchRecord& rec : dataset.records) {
    if (rec.features.size() != dataset.feature_dim) {
      throw InvalidArgumentError("save_csv: record '" + rec.bag_id + "/" +
                                 rec.patch_id + "' has " +
                                 std::to_string(rec.features.size()) +
                                 " features, expected " +
                                 std::to_string(dataset.feature_dim));
    }
    if (!valid_id(rec.bag_id) || !valid_id(rec.patch_id)) {
      throw InvalidArgumentError("save_csv: id '" + rec.bag_id + "/" +
                                 rec.patch_id +
                                 "' does not match [A-Za-z0-9_-]+");
    }
    out += rec.bag_id;
    out += ',';
    out += rec.patch_id;
    out += ',';
    if (rec.label != kUnlabeled) out += std::to_string(rec.label);
    for (int j = 0; j < dataset.feature_dim; ++j) {
      out += ',';
      out += detail::format_double(rec.features[j]);
    }
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  file << out;
  if (!file) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

FeatureDataset synth_generate(int num_bags, int patches_per_bag,
                              int feature_dim, int num_grades,
                              double noise_sigma, std::uint64_t seed) {
  if (num_bags < 1 || patches_per_bag < 1) {
    throw InvalidArgumentError("synth_generate: need at least one bag and "
                               "one patch per bag");
  }
  if (feature_dim < 2) {
    throw InvalidArgumentError(
        "synth_generate: the curve needs feature_dim >= 2");
  }
  if (num_grades < 1) {
    throw InvalidArgumentError("synth_generate: num_grades must be positive");
  }
  if (!(noise_sigma >= 0.0)) {
    throw InvalidArgumentError("synth_generate: noise_sigma must be >= 0");
  }

  constexpr double kRadius = 2.0;
  constexpr double kPi = 3.14159265358979323846;
  Rng rng(seed);

  FeatureDataset dataset;
  dataset.feature_dim = feature_dim;
  dataset.num_grades = num_grades;
  dataset.records.reserve(static_cast<std::size_t>(num_bags) *
                          patches_per_bag);
  for (int b = 0; b < num_bags; ++b) {
    const double t = rng.uniform(0.0, static_cast<double>(num_grades));
    const int label = std::min(static_cast<int>(t), num_grades - 1);
    const double angle = kPi * t / num_grades;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(feature_dim);
    mu[0] = kRadius * std::cos(angle);
    mu[1] = kRadius * std::sin(angle);

    const std::string bag_id = "bag" + std::to_string(b);
    for (int p = 0; p < patches_per_bag; ++p) {
      PatchRecord rec;
      rec.bag_id = bag_id;
      rec.patch_id = "p" + std::to_string(p);
      rec.label = label;
      rec.features.resize(feature_dim);
      for (int d = 0; d < feature_dim; ++d) {
        rec.features[d] = mu[d] + noise_sigma * rng.gaussian();
      }
      dataset.records.push_back(std::move(rec));
    }
  }
  return dataset;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

template <class Matrix>
nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (long i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd json_to_vector(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array()) {
    throw CheckpointError(std::string(what) + " is not an array");
  }
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<long>(i)] = arr[i].get<double>();
  }
  return v;
}

template <class Matrix>
Matrix json_to_matrix(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw CheckpointError(std::string(what) +
                          " is not a non-empty array of rows");
  }
  const std::size_t num_cols = rows[0].size();
  Matrix m(rows.size(), num_cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != num_cols) {
      throw CheckpointError(std::string(what) + " row " + std::to_string(i) +
                            " is ragged");
    }
    for (std::size_t j = 0; j < num_cols; ++j) {
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

nlohmann::json config_to_json(const QmrConfig& config) {
  return {{"rff_dim", config.rff_dim},
          {"num_grades", config.num_grades},
          {"num_components", config.num_components},
          {"gamma", config.gamma},
          {"alpha", config.alpha},
          {"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"seed", config.seed}};
}

QmrConfig config_from_json(const nlohmann::json& j) {
  QmrConfig config;
  config.rff_dim = j.at("rff_dim").get<int>();
  config.num_grades = j.at("num_grades").get<int>();
  config.num_components = j.at("num_components").get<int>();
  config.gamma = j.at("gamma").get<double>();
  config.alpha = j.at("alpha").get<double>();
  config.learning_rate = j.at("learning_rate").get<double>();
  config.epochs = j.at("epochs").get<int>();
  config.batch_size = j.at("batch_size").get<int>();
  config.seed = j.at("seed").get<std::uint64_t>();
  return config;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  if ((checkpoint.kind == ModelKind::kQmr) != checkpoint.qmr.has_value() ||
      (checkpoint.kind == ModelKind::kDmkdc) !=
          checkpoint.dmkdc.has_value()) {
    throw CheckpointError(
        "save_checkpoint: populated model does not match kind");
  }

  nlohmann::json j;
  j["version"] = checkpoint.version;
  j["kind"] = to_string(checkpoint.kind);
  j["encoder"] = {{"input_dim", checkpoint.encoder.input_dim()},
                  {"rff_dim", checkpoint.encoder.rff_dim()},
                  {"gamma", checkpoint.encoder.gamma()},
                  {"seed", checkpoint.encoder.seed()},
                  {"W", matrix_to_json(checkpoint.encoder.weights())},
                  {"b", vector_to_json(checkpoint.encoder.phases())}};
  if (checkpoint.kind == ModelKind::kQmr) {
    const FactoredJointDensity& m = *checkpoint.qmr;
    j["model"] = {{"state_dim", m.state_dim},
                  {"num_grades", m.num_grades},
                  {"lambda_logits", vector_to_json(m.lambda_logits)},
                  {"V", matrix_to_json(m.v)}};
  } else {
    const ClassDensityEnsemble& m = *checkpoint.dmkdc;
    nlohmann::json classes = nlohmann::json::array();
    for (const ClassDensity& cls : m.classes) {
      classes.push_back({{"lambda_logits", vector_to_json(cls.lambda_logits)},
                         {"V", matrix_to_json(cls.v)}});
    }
    j["model"] = {{"state_dim", m.state_dim},
                  {"classes", std::move(classes)}};
  }
  j["config"] = config_to_json(checkpoint.config);

  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw CheckpointError("cannot open '" + path.string() + "' for writing");
  }
  file << j.dump(2) << "\n";
  if (!file) {
    throw CheckpointError("failed writing '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw CheckpointError("cannot open '" + path.string() + "'");
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(file);

    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " +
                            std::to_string(version) + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    const ModelKind kind =
        model_kind_from_string(j.at("kind").get<std::string>());

    const nlohmann::json& je = j.at("encoder");
    RffEncoder encoder(
        je.at("input_dim").get<int>(), je.at("rff_dim").get<int>(),
        je.at("gamma").get<double>(), je.at("seed").get<std::uint64_t>(),
        json_to_matrix<Eigen::MatrixXd>(je.at("W"), "encoder W"),
        json_to_vector(je.at("b"), "encoder b"));

    const nlohmann::json& jm = j.at("model");
    std::optional<FactoredJointDensity> qmr;
    std::optional<ClassDensityEnsemble> dmkdc;
    if (kind == ModelKind::kQmr) {
      FactoredJointDensity m;
      m.state_dim = jm.at("state_dim").get<int>();
      m.num_grades = jm.at("num_grades").get<int>();
      m.lambda_logits =
          json_to_vector(jm.at("lambda_logits"), "model lambda_logits");
      m.v = json_to_matrix<RowMatrixXd>(jm.at("V"), "model V");
      if (m.state_dim != encoder.rff_dim() || m.num_grades < 1 ||
          m.v.cols() !=
              static_cast<long>(m.state_dim) * m.num_grades ||
          m.v.rows() != m.lambda_logits.size()) {
        throw CheckpointError("inconsistent model dimensions");
      }
      qmr = std::move(m);
    } else {
      ClassDensityEnsemble m;
      m.state_dim = jm.at("state_dim").get<int>();
      const nlohmann::json& classes = jm.at("classes");
      if (!classes.is_array() || classes.empty()) {
        throw CheckpointError("model classes must be a non-empty array");
      }
      for (const nlohmann::json& jc : classes) {
        ClassDensity cls;
        cls.lambda_logits =
            json_to_vector(jc.at("lambda_logits"), "class lambda_logits");
        cls.v = json_to_matrix<RowMatrixXd>(jc.at("V"), "class V");
        if (cls.v.cols() != m.state_dim ||
            cls.v.rows() != cls.lambda_logits.size()) {
          throw CheckpointError("inconsistent class dimensions");
        }
        m.classes.push_back(std::move(cls));
      }
      if (m.state_dim != encoder.rff_dim()) {
        throw CheckpointError("inconsistent model dimensions");
      }
      dmkdc = std::move(m);
    }

    return Checkpoint{version,          kind,
                      std::move(encoder), std::move(qmr),
                      std::move(dmkdc), config_from_json(j.at("config"))};
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("malformed checkpoint '" + path.string() +
                          "': " + e.what());
  }
}

}  // namespace dqmor
