#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "mmor/io.hpp"
#include "mmor/random.hpp"
#include "mmor/samples.hpp"

using namespace mmor;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mmor_io_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void expectSameOnPoints(const EmbeddingPair& a, const EmbeddingPair& b, Rng& rng) {
  ASSERT_EQ(a.reducedDim(), b.reducedDim());
  ASSERT_EQ(a.fullDim(), b.fullDim());
  for (int k = 0; k < 5; ++k) {
    const Vec x = 0.5 * rng.normalVec(a.reducedDim());
    EXPECT_EQ(a.phi(x), b.phi(x));
    EXPECT_EQ(a.phi.jacobianAt(x), b.phi.jacobianAt(x));
    const Vec y = rng.normalVec(a.fullDim());
    EXPECT_EQ(a.rho(y), b.rho(y));
  }
}

}  // namespace

TEST(Format, RoundTripsExactly) {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(io::parseDouble(io::formatDouble(x)), x);
  }
  EXPECT_EQ(io::formatDouble(0.1), "0.10000000000000001");
  EXPECT_THROW(io::parseDouble("1.5x"), IoError);
  EXPECT_THROW(io::parseDouble(""), IoError);
}

TEST(Blob, LittleEndianColumnMajor) {
  Mat m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  io::BlobWriter w;
  const json e = w.add("m", m);
  EXPECT_EQ(e.at("rows"), 2);
  EXPECT_EQ(e.at("offset"), 0);
  ASSERT_EQ(w.bytes().size(), 32u);
  double second = 0.0;
  // Column-major: the second stored value is m(1, 0) = 3.
  const unsigned char* raw = reinterpret_cast<const unsigned char*>(w.bytes().data()) + 8;
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[b];
  std::memcpy(&second, &bits, 8);
  EXPECT_EQ(second, 3.0);
  w.add("v", Vec(Vec::Ones(3)));
  const io::BlobReader r(w.bytes(), w.entries());
  EXPECT_EQ(r.get("m"), m);
  EXPECT_EQ(r.getVec("v"), Vec(Vec::Ones(3)));
  EXPECT_THROW(r.get("missing"), IoError);
  EXPECT_THROW(io::BlobReader(w.bytes().substr(0, 40), w.entries()).get("v"), IoError);
}

TEST(Snapshots, BlobRoundTrip) {
  Rng rng(2);
  std::vector<SnapshotOrigin> prov;
  for (int k = 0; k < 6; ++k) prov.push_back({0.1 * k, Vec::Constant(1, 0.5 + k)});
  const SnapshotSet s(rng.normalMat(5, 6), randomSpd(rng, 5), prov);
  const fs::path dir = scratch("snapshots");
  io::writeSnapshots(dir / "snaps", s, "abc");
  const SnapshotSet back = io::readSnapshots(dir / "snaps");
  EXPECT_EQ(back.states, s.states);
  EXPECT_EQ(back.metric, s.metric);
  ASSERT_EQ(back.provenance.size(), 6u);
  EXPECT_EQ(back.provenance[3].t, 0.1 * 3);
  EXPECT_EQ(back.provenance[3].mu, prov[3].mu);
  EXPECT_EQ(io::readJson(dir / "snaps.json").at("configHash"), "abc");
}

TEST(Snapshots, CsvRoundTrip) {
  Rng rng(3);
  std::vector<SnapshotOrigin> prov;
  for (int k = 0; k < 4; ++k) prov.push_back({0.25 * k, Vec::Constant(1, 1.0 / 3.0)});
  const SnapshotSet s(rng.normalMat(3, 4), Mat(), prov);
  const std::string csv = io::snapshotsCsv(s);
  EXPECT_EQ(csv.substr(0, 2), "t,");
  const SnapshotSet back = io::parseSnapshotsCsv(csv);
  EXPECT_EQ(back.states, s.states);
  EXPECT_EQ(back.provenance[2].t, 0.5);
  EXPECT_EQ(back.provenance[2].mu(0), 1.0 / 3.0);
  EXPECT_THROW(io::parseSnapshotsCsv("x0,1,2\n"), IoError);
  EXPECT_THROW(io::parseSnapshotsCsv("t,1,2\nx0,1\n"), IoError);
}

TEST(Trajectory, CsvRoundTrip) {
  Rng rng(4);
  Trajectory t;
  t.times = {0.0, 0.5, 1.0};
  t.states = rng.normalMat(2, 3);
  const std::string csv = io::trajectoryCsv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x0,x1");
  const Trajectory back = io::parseTrajectoryCsv(csv);
  EXPECT_EQ(back.times, t.times);
  EXPECT_EQ(back.states, t.states);
  EXPECT_THROW(io::parseTrajectoryCsv("a,b\n1,2\n"), IoError);
}

TEST(Trajectory, BlobManifest) {
  Rng rng(5);
  Trajectory t;
  t.times = {0.0, 1.0};
  t.states = rng.normalMat(3, 2);
  t.stats.steps = 7;
  const fs::path dir = scratch("traj");
  io::writeTrajectoryBlob(dir / "traj", t);
  const json m = io::readJson(dir / "traj.json");
  EXPECT_EQ(m.at("stats").at("steps"), 7);
  const io::BlobReader r(io::readText(dir / "traj.bin"), m.at("entries"));
  EXPECT_EQ(r.get("states"), t.states);
}

TEST(Embedding, RoundTripEveryFamily) {
  Rng rng(6);
  const fs::path dir = scratch("embeddings");
  std::vector<EmbeddingPair> pairs{samples::randomLinear(rng, 10, 3), samples::randomQuadratic(rng, 10, 3),
                                   samples::randomNca(rng, 14, 2), makeAutoencoder(std::vector<int>{2, 5, 10}, 3), makeIdentity(4)};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const fs::path stem = dir / ("e" + std::to_string(i));
    io::writeEmbedding(stem, pairs[i]);
    const EmbeddingPair back = io::readEmbedding(stem);
    EXPECT_EQ(back.phi.family, pairs[i].phi.family);
    expectSameOnPoints(pairs[i], back, rng);
  }
}

TEST(Files, MissingFileAndBadJson) {
  const fs::path dir = scratch("files");
  EXPECT_THROW(io::readText(dir / "nope.txt"), IoError);
  io::writeText(dir / "bad.json", "{not json");
  EXPECT_THROW(io::readJson(dir / "bad.json"), IoError);
}

TEST(Hash, StableAndSensitive) {
  const json a = {{"x", 1}, {"y", {1, 2}}};
  const json b = {{"y", {1, 2}}, {"x", 1}};
  EXPECT_EQ(io::configHash(a), io::configHash(b));
  EXPECT_NE(io::configHash(a), io::configHash(json{{"x", 2}, {"y", {1, 2}}}));
  EXPECT_EQ(io::fnv1a(""), 14695981039346656037ULL);
  EXPECT_EQ(io::hex64(255).size(), 16u);
}

TEST(Embedding, UnsupportedFamilyIsAnIoError) {
  const fs::path dir = scratch("custom");
  io::writeJson(dir / "c.json", json{{"kind", "embedding"}, {"family", "custom"}, {"reducedDim", 2},
                                     {"fullDim", 4}, {"blob", "c.bin"}, {"entries", json::array()}});
  io::writeText(dir / "c.bin", "");
  EXPECT_THROW(io::readEmbedding(dir / "c"), IoError);
}
