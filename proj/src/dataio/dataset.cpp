#include "tvhsd/dataio.hpp"

#include "tvhsd/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace tvhsd::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

void Dataset::validate() const {
  const DatasetManifest& m = manifest;
  if (m.version != 1) throw VersionError("unsupported dataset version " + std::to_string(m.version));
  if (m.num_samples < 1 || m.text_dim < 1 || m.image_dim < 1 || m.num_classes < 2) {
    throw ValidationError("manifest needs num_samples, text_dim, image_dim >= 1 and num_classes >= 2");
  }
  if (m.label_names.size() != m.num_classes) {
    throw ValidationError("label_names has " + std::to_string(m.label_names.size()) +
                          " entries for num_classes " + std::to_string(m.num_classes));
  }
  if (m.dtype != "f32") throw ValidationError("dtype must be \"f32\", got \"" + m.dtype + "\"");
  if (m.endianness != "little") {
    throw ValidationError("endianness must be \"little\", got \"" + m.endianness + "\"");
  }
  if (samples.size() != m.num_samples) {
    throw ValidationError("manifest declares " + std::to_string(m.num_samples) + " samples, have " +
                          std::to_string(samples.size()));
  }
  std::set<std::string_view> seen;
  for (const SampleRecord& s : samples) {
    if (s.id.empty() || s.id.find_first_of(",\"\r\n") != std::string::npos) {
      throw ValidationError("sample id \"" + s.id + "\" is empty or contains , \" or a newline");
    }
    if (!seen.insert(s.id).second) throw ValidationError("duplicate sample id \"" + s.id + "\"");
    if (s.text_emb.size() != m.text_dim || s.image_emb.size() != m.image_dim) {
      throw ValidationError("sample \"" + s.id + "\" embedding sizes " +
                            std::to_string(s.text_emb.size()) + "/" +
                            std::to_string(s.image_emb.size()) + " do not match manifest " +
                            std::to_string(m.text_dim) + "/" + std::to_string(m.image_dim));
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= m.num_classes) {
      throw ValidationError("sample \"" + s.id + "\" has label " + std::to_string(s.label) +
                            " outside [0, " + std::to_string(m.num_classes) + ")");
    }
    if (s.token_count < 0) {
      throw ValidationError("sample \"" + s.id + "\" has negative token_count");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.manifest = manifest;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(samples.at(i));
  out.manifest.num_samples = out.samples.size();
  return out;
}

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kEmbeddings = "embeddings.bin";
constexpr const char* kLabels = "labels.csv";

void put_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xff));
}

double get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return static_cast<double>(std::bit_cast<float>(bits));
}

json manifest_to_json(const DatasetManifest& m) {
  return json{{"version", m.version},         {"num_samples", m.num_samples},
              {"text_dim", m.text_dim},       {"image_dim", m.image_dim},
              {"num_classes", m.num_classes}, {"label_names", m.label_names},
              {"dtype", m.dtype},             {"endianness", m.endianness}};
}

DatasetManifest manifest_from_json(const json& j) {
  static const std::set<std::string> kFields{"version",     "num_samples", "text_dim",
                                             "image_dim",   "num_classes", "label_names",
                                             "dtype",       "endianness"};
  if (!j.is_object()) throw FormatError("manifest.json is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.contains(key)) throw FormatError("manifest.json has unknown field \"" + key + "\"");
  }
  for (const std::string& key : kFields) {
    if (!j.contains(key)) throw FormatError("manifest.json is missing \"" + key + "\"");
  }
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw VersionError("unsupported dataset version " + std::to_string(m.version));
    auto positive = [&](const char* key) {
      const json& v = j.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw FormatError(std::string("manifest field \"") + key + "\" must be a non-negative integer");
      }
      return v.get<std::size_t>();
    };
    m.num_samples = positive("num_samples");
    m.text_dim = positive("text_dim");
    m.image_dim = positive("image_dim");
    m.num_classes = positive("num_classes");
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    m.dtype = j.at("dtype").get<std::string>();
    m.endianness = j.at("endianness").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

template <class T>
T parse_int(std::string_view text, std::size_t line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("labels.csv line " + std::to_string(line) + ": bad " + column + " \"" +
                      std::string(text) + "\"");
  }
  return value;
}

}  // namespace

void save(const Dataset& dataset, const fs::path& directory) {
  dataset.validate();
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw FormatError("cannot create " + directory.string() + ": " + ec.message());

  const DatasetManifest& m = dataset.manifest;
  std::string blob;
  blob.reserve(m.num_samples * (m.text_dim + m.image_dim) * 4);
  std::string csv = "id,label,token_count\n";
  for (const SampleRecord& s : dataset.samples) {
    for (double v : s.text_emb) put_f32(blob, v);
    for (double v : s.image_emb) put_f32(blob, v);
    csv += s.id + ',' + std::to_string(s.label) + ',' + std::to_string(s.token_count) + '\n';
  }
  write_file(directory / kManifest, manifest_to_json(m).dump(2) + "\n");
  write_file(directory / kEmbeddings, blob);
  write_file(directory / kLabels, csv);
}

Dataset load(const fs::path& directory) {
  Dataset d;
  json manifest_json;
  try {
    manifest_json = json::parse(read_file(directory / kManifest));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  d.manifest = manifest_from_json(manifest_json);
  const DatasetManifest& m = d.manifest;

  const std::string blob = read_file(directory / kEmbeddings);
  const std::size_t row = m.text_dim + m.image_dim;
  const std::size_t expected = m.num_samples * row * 4;
  if (blob.size() != expected) {
    throw FormatError("embeddings.bin should hold " + std::to_string(expected) + " bytes, found " +
                      std::to_string(blob.size()));
  }

  const std::string csv = read_file(directory / kLabels);
  std::istringstream lines(csv);
  std::string line;
  if (!std::getline(lines, line) || line != "id,label,token_count") {
    throw FormatError("labels.csv must start with the header id,label,token_count");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw FormatError("labels.csv line " + std::to_string(line_no) + " needs exactly 3 columns");
    }
    if (d.samples.size() == m.num_samples) {
      throw FormatError("labels.csv has more rows than num_samples " + std::to_string(m.num_samples));
    }
    SampleRecord s;
    s.id = line.substr(0, c1);
    const std::string_view view(line);
    s.label = parse_int<int>(view.substr(c1 + 1, c2 - c1 - 1), line_no, "label");
    s.token_count = parse_int<int>(view.substr(c2 + 1), line_no, "token_count");
    const unsigned char* p = bytes + d.samples.size() * row * 4;
    s.text_emb.resize(m.text_dim);
    s.image_emb.resize(m.image_dim);
    for (std::size_t i = 0; i < m.text_dim; ++i) s.text_emb[i] = get_f32(p + 4 * i);
    p += 4 * m.text_dim;
    for (std::size_t i = 0; i < m.image_dim; ++i) s.image_emb[i] = get_f32(p + 4 * i);
    d.samples.push_back(std::move(s));
  }
  if (d.samples.size() != m.num_samples) {
    throw FormatError("labels.csv has " + std::to_string(d.samples.size()) + " rows, manifest says " +
                      std::to_string(m.num_samples));
  }
  d.validate();
  return d;
}

std::vector<FoldSplit> split_kfold(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (k < 2) throw ArgumentError("k-fold needs k >= 2, got " + std::to_string(k));
  if (k > n) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                        " available samples");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.manifest.num_classes);
  for (std::size_t i = 0; i < n; ++i) by_class.at(dataset.samples[i].label).push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(n);
  std::size_t cursor = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold_of[i] = cursor++ % k;
  }

  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].fold_index = f;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].test_indices : folds[f].train_indices).push_back(i);
    }
  }
  return folds;
}

}  // namespace tvhsd::dataio
