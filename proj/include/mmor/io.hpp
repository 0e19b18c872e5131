#pragma once

// File formats: little-endian column-major float64 blobs described by JSON
// manifests, CSV with 17 significant digits, and config hashing.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmor/embeddings.hpp"
#include "mmor/errors.hpp"
#include "mmor/integrate.hpp"
#include "mmor/training.hpp"
#include "mmor/types.hpp"

namespace mmor::io {

using json = nlohmann::json;

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string formatDouble(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical (sorted-key, compact) serialization.
inline std::string configHash(const json& config) { return hex64(fnv1a(config.dump())); }

inline void writeText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string readText(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline json readJson(const std::filesystem::path& path) {
  try {
    return json::parse(readText(path));
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline void writeJson(const std::filesystem::path& path, const json& j) {
  writeText(path, j.dump(2) + "\n");
}

//
// Binary blobs.
//

inline void appendLittleEndian(std::string& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  for (int b = 0; b < 8; ++b) out.push_back(char((bits >> (8 * b)) & 0xff));
}

inline double readLittleEndian(const std::string& in, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  double x;
  std::memcpy(&x, &bits, sizeof x);
  return x;
}

/// Accumulates named matrices into one blob; the manifest records
/// {name, rows, cols, offset} with offset counted in doubles.
class BlobWriter {
 public:
  json add(const std::string& name, const Mat& m) {
    json entry = {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", count_}};
    for (long j = 0; j < m.cols(); ++j)
      for (long i = 0; i < m.rows(); ++i) appendLittleEndian(bytes_, m(i, j));
    count_ += m.size();
    entries_.push_back(entry);
    return entry;
  }
  json add(const std::string& name, const Vec& v) { return add(name, Mat(v)); }

  const json& entries() const { return entries_; }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
  long count_ = 0;
  json entries_ = json::array();
};

class BlobReader {
 public:
  BlobReader(std::string bytes, json entries) : bytes_(std::move(bytes)), entries_(std::move(entries)) {}

  Mat get(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.at("name") != name) continue;
      const long rows = e.at("rows"), cols = e.at("cols"), offset = e.at("offset");
      if (std::size_t(8 * (offset + rows * cols)) > bytes_.size())
        throw IoError("blob too short for entry '" + name + "'");
      Mat m(rows, cols);
      for (long j = 0; j < cols; ++j)
        for (long i = 0; i < rows; ++i) m(i, j) = readLittleEndian(bytes_, std::size_t(8 * (offset + j * rows + i)));
      return m;
    }
    throw IoError("blob has no entry '" + name + "'");
  }
  Vec getVec(const std::string& name) const {
    const Mat m = get(name);
    return Eigen::Map<const Vec>(m.data(), m.size());
  }

 private:
  std::string bytes_;
  json entries_;
};

inline json vecToJson(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec jsonToVec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), long(v.size()));
}

//
// Snapshots.
//

/// Writes <stem>.json and <stem>.bin.
inline void writeSnapshots(const std::filesystem::path& stem, const SnapshotSet& s,
                           const std::string& hash = "") {
  BlobWriter blob;
  blob.add("states", s.states);
  if (!s.identityMetric()) blob.add("metric", s.metric);
  json prov = json::array();
  for (const auto& p : s.provenance) prov.push_back({{"t", p.t}, {"mu", vecToJson(p.mu)}});
  json manifest = {{"kind", "snapshots"},
                   {"dims", s.fullDim()},
                   {"count", s.count()},
                   {"provenance", prov},
                   {"blob", stem.filename().string() + ".bin"},
                   {"entries", blob.entries()},
                   {"byteOrder", "little"},
                   {"layout", "column-major float64"}};
  if (!hash.empty()) manifest["configHash"] = hash;
  writeText(stem.string() + ".bin", blob.bytes());
  writeJson(stem.string() + ".json", manifest);
}

inline SnapshotSet readSnapshots(const std::filesystem::path& stem) {
  const json m = readJson(stem.string() + ".json");
  const auto dir = std::filesystem::path(stem).parent_path();
  BlobReader blob(readText(dir / m.at("blob").get<std::string>()), m.at("entries"));
  Mat metric;
  for (const auto& e : m.at("entries"))
    if (e.at("name") == "metric") metric = blob.get("metric");
  std::vector<SnapshotOrigin> prov;
  for (const auto& p : m.at("provenance")) prov.push_back({p.at("t").get<double>(), jsonToVec(p.at("mu"))});
  SnapshotSet s(blob.get("states"), metric, prov);
  requireDim(s.fullDim(), m.at("dims").get<long>(), "snapshot manifest dims");
  requireDim(s.count(), m.at("count").get<long>(), "snapshot manifest count");
  return s;
}

//
// Embeddings.
//

inline void writeEmbedding(const std::filesystem::path& stem, const EmbeddingPair& pair,
                           const json& extra = json::object()) {
  BlobWriter blob;
  json manifest = {{"kind", "embedding"},
                   {"family", toString(pair.phi.family)},
                   {"reducedDim", pair.reducedDim()},
                   {"fullDim", pair.fullDim()}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParameters>) {
          blob.add("V", p.V);
          blob.add("W", p.W);
        } else if constexpr (std::is_same_v<T, QuadraticParameters>) {
          blob.add("A2", p.A2);
          blob.add("A1", p.A1);
          blob.add("A0", p.A0);
        } else if constexpr (std::is_same_v<T, NcaParameters>) {
          blob.add("A2", p.A2);
          blob.add("A1", p.A1);
          blob.add("A0", p.A0);
          blob.add("B", p.B);
          manifest["feature"] = p.feature;
          manifest["featureConstant"] = p.featureConstant;
        } else if constexpr (std::is_same_v<T, AutoencoderParameters>) {
          manifest["decoderWidths"] = p.decoder.widths();
          manifest["encoderWidths"] = p.encoder.widths();
          for (std::size_t l = 0; l < p.decoder.layers().size(); ++l) {
            blob.add("decoder." + std::to_string(l) + ".weight", p.decoder.layers()[l].weight);
            blob.add("decoder." + std::to_string(l) + ".bias", p.decoder.layers()[l].bias);
          }
          for (std::size_t l = 0; l < p.encoder.layers().size(); ++l) {
            blob.add("encoder." + std::to_string(l) + ".weight", p.encoder.layers()[l].weight);
            blob.add("encoder." + std::to_string(l) + ".bias", p.encoder.layers()[l].bias);
          }
        }
      },
      pair.parameters);
  manifest["blob"] = stem.filename().string() + ".bin";
  manifest["entries"] = blob.entries();
  manifest.update(extra);
  writeText(stem.string() + ".bin", blob.bytes());
  writeJson(stem.string() + ".json", manifest);
}

inline std::vector<DenseLayer> readLayers(const BlobReader& blob, const std::string& prefix,
                                          std::size_t count) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < count; ++l)
    layers.push_back({blob.get(prefix + "." + std::to_string(l) + ".weight"),
                      blob.getVec(prefix + "." + std::to_string(l) + ".bias")});
  return layers;
}

inline EmbeddingPair readEmbedding(const std::filesystem::path& stem) {
  const json m = readJson(stem.string() + ".json");
  const auto dir = std::filesystem::path(stem).parent_path();
  const std::string family = m.at("family");
  const int n = m.at("reducedDim");
  if (family == "identity") return makeIdentity(n);
  BlobReader blob(readText(dir / m.at("blob").get<std::string>()), m.at("entries"));
  if (family == "linear") return makeLinear(blob.get("V"), blob.get("W"));
  if (family == "quadratic") return makeQuadratic(blob.get("A2"), blob.get("A1"), blob.getVec("A0"));
  if (family == "nca") {
    const Mat a2 = blob.get("A2");
    const FeatureMap f = makeFeature(m.at("feature"), n, int(a2.cols()), m.value("featureConstant", 1.0));
    EmbeddingPair p = makeNca(a2, blob.get("A1"), blob.getVec("A0"), blob.get("B"), f);
    std::get<NcaParameters>(p.parameters).featureConstant = m.value("featureConstant", 1.0);
    return p;
  }
  if (family == "autoencoder") {
    const auto dw = m.at("decoderWidths").get<std::vector<int>>();
    const auto ew = m.at("encoderWidths").get<std::vector<int>>();
    return makeAutoencoder(Mlp(readLayers(blob, "decoder", dw.size() - 1)),
                           Mlp(readLayers(blob, "encoder", ew.size() - 1)));
  }
  throw IoError("embedding family '" + family + "' cannot be read from file");
}

//
// CSV.
//

/// Header row "t,x0,x1,..." then one row per sample time.
inline std::string trajectoryCsv(const Trajectory& traj) {
  std::string s = "t";
  for (int i = 0; i < traj.dim(); ++i) s += ",x" + std::to_string(i);
  s += "\n";
  for (long k = 0; k < traj.size(); ++k) {
    s += formatDouble(traj.times[std::size_t(k)]);
    for (int i = 0; i < traj.dim(); ++i) s += "," + formatDouble(traj.states(i, k));
    s += "\n";
  }
  return s;
}

/// One snapshot per column: a label column and then K value columns; rows
/// are t, mu0.., x0.. .
inline std::string snapshotsCsv(const SnapshotSet& s) {
  std::string out;
  const long pdim = s.provenance.empty() ? 0 : s.provenance.front().mu.size();
  auto row = [&](const std::string& label, auto value) {
    out += label;
    for (int k = 0; k < s.count(); ++k) out += "," + formatDouble(value(k));
    out += "\n";
  };
  row("t", [&](int k) { return s.provenance.empty() ? 0.0 : s.provenance[std::size_t(k)].t; });
  for (long p = 0; p < pdim; ++p)
    row("mu" + std::to_string(p), [&](int k) { return s.provenance[std::size_t(k)].mu(p); });
  for (int i = 0; i < s.fullDim(); ++i) row("x" + std::to_string(i), [&](int k) { return s.states(i, k); });
  return out;
}

inline std::vector<std::vector<std::string>> splitCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double parseDouble(const std::string& s) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("invalid number '" + s + "' in CSV");
  }
  if (used != s.size()) throw IoError("invalid number '" + s + "' in CSV");
  return x;
}

inline SnapshotSet parseSnapshotsCsv(const std::string& text) {
  const auto rows = splitCsv(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "t") throw IoError("snapshot CSV must start with a 't' row");
  const std::size_t k = rows[0].size() - 1;
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> x;
  std::vector<double> t;
  for (const auto& r : rows) {
    if (r.size() != k + 1) throw IoError("ragged snapshot CSV");
    std::vector<double> vals;
    for (std::size_t j = 1; j < r.size(); ++j) vals.push_back(parseDouble(r[j]));
    if (r[0] == "t") t = vals;
    else if (r[0].rfind("mu", 0) == 0) mu.push_back(vals);
    else x.push_back(vals);
  }
  Mat states(long(x.size()), long(k));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < k; ++j) states(long(i), long(j)) = x[i][j];
  std::vector<SnapshotOrigin> prov;
  for (std::size_t j = 0; j < k; ++j) {
    Vec m(long(mu.size()));
    for (std::size_t p = 0; p < mu.size(); ++p) m(long(p)) = mu[p][j];
    prov.push_back({t[j], m});
  }
  return SnapshotSet(states, Mat(), prov);
}

inline Trajectory parseTrajectoryCsv(const std::string& text) {
  const auto rows = splitCsv(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "t") throw IoError("trajectory CSV must start with a header");
  const long dim = long(rows[0].size()) - 1;
  Trajectory tr;
  tr.states.resize(dim, long(rows.size()) - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (long(rows[r].size()) != dim + 1) throw IoError("ragged trajectory CSV");
    tr.times.push_back(parseDouble(rows[r][0]));
    for (long i = 0; i < dim; ++i) tr.states(i, long(r) - 1) = parseDouble(rows[r][std::size_t(i) + 1]);
  }
  return tr;
}

inline void writeTrajectoryBlob(const std::filesystem::path& stem, const Trajectory& traj,
                                const std::string& hash = "") {
  BlobWriter blob;
  blob.add("times", Vec(Eigen::Map<const Vec>(traj.times.data(), long(traj.times.size()))));
  blob.add("states", traj.states);
  json manifest = {{"kind", "trajectory"},
                   {"dims", traj.dim()},
                   {"count", traj.size()},
                   {"stats",
                    {{"steps", traj.stats.steps},
                     {"rejectedSteps", traj.stats.rejectedSteps},
                     {"rhsEvals", traj.stats.rhsEvals}}},
                   {"blob", stem.filename().string() + ".bin"},
                   {"entries", blob.entries()}};
  if (!hash.empty()) manifest["configHash"] = hash;
  writeText(stem.string() + ".bin", blob.bytes());
  writeJson(stem.string() + ".json", manifest);
}

}  // namespace mmor::io
