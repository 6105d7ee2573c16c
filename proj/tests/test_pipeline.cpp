#include <gtest/gtest.h>

#include <future>

#include <provenance/pipeline.hpp>
#include <provenance/service.hpp>

#include "fixture.hpp"
#include "test_util.hpp"

using namespace provenance;

namespace {

EngineConfig config_for(const std::filesystem::path& root, FrameworkMode mode) {
  EngineConfig c;
  c.root = root;
  c.mode = mode;
  return c;
}

} // namespace

TEST(Engine, IngestEmptyFileIsNoop) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  write_embedding_file({}, dir / "empty.emb", 8);
  EXPECT_EQ(e.ingest(dir / "empty.emb", "ai", "train").count, 0u);
  EXPECT_FALSE(e.store().contains("ai"));
  EXPECT_EQ(e.ledger(Label::AI).size(), 0u);
}

TEST(Engine, IngestFrameworkScaleAndIdempotence) {
  testutil::TempDir dir;
  std::mt19937_64 rng(70);
  write_embedding_file(testutil::random_records(rng, 7000, 32, "a"), dir / "ai.emb");
  write_embedding_file(testutil::random_records(rng, 7000, 32, "h", Label::HUMAN), dir / "human.emb");
  Engine e(config_for(dir / "data", FrameworkMode::Hybrid));
  EXPECT_EQ(e.ingest(dir / "ai.emb", "ai", "train").count, 7000u);
  EXPECT_EQ(e.ingest(dir / "human.emb", "human", "train").count, 7000u);
  EXPECT_EQ(e.store().open_collection("ai").size("train"), 7000u);
  EXPECT_EQ(e.store().open_collection("human").size("train"), 7000u);
  EXPECT_EQ(e.ledger(Label::AI).size(), 7000u);
  EXPECT_EQ(e.ledger(Label::HUMAN).size(), 7000u);

  const std::string manifest = fileio::read_all(dir / "data/store/ai/train.emb");
  const auto again = e.ingest(dir / "ai.emb", "ai", "train");
  EXPECT_EQ(again.replaced, 7000u);
  EXPECT_EQ(again.ledger_appended, 0u);
  EXPECT_EQ(e.store().open_collection("ai").size("train"), 7000u);
  EXPECT_EQ(e.ledger(Label::AI).size(), 7000u);
  EXPECT_EQ(fileio::read_all(dir / "data/store/ai/train.emb"), manifest);
}

TEST(Engine, IngestRejectsDimensionMismatch) {
  testutil::TempDir dir;
  std::mt19937_64 rng(71);
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  e.ingest_records(testutil::random_records(rng, 3, 8), "ai", "train");
  EXPECT_THROW(e.ingest_records(testutil::random_records(rng, 3, 9), "ai", "train"), ValidationError);
  EXPECT_THROW(e.ingest_records(testutil::random_records(rng, 3, 8), "other", "train"), ValidationError);
  EXPECT_NO_THROW(e.ingest_records(testutil::random_records(rng, 3, 8), "other", "train", Label::HUMAN));
}

TEST(Engine, VectorOnlyIngestSkipsLedger) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::VectorOnly));
  testutil::seed_engine(e);
  EXPECT_EQ(e.ledger(Label::AI).size(), 0u);
  const auto r = e.classify(testutil::fixture_records(Label::AI)[3].vector);
  EXPECT_EQ(r.prediction, "ai");
  EXPECT_FALSE(r.verified);
  EXPECT_TRUE(schema_valid(r));
}

TEST(Engine, HashOnlyModes) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::HashOnly));
  testutil::seed_engine(e);
  const auto ai = e.classify(testutil::fixture_records(Label::AI)[0].vector);
  EXPECT_EQ(ai.prediction, "ai");
  EXPECT_EQ(ai.verified, true);
  EXPECT_FALSE(ai.ai_similarity);
  const auto unseen = e.classify(testutil::fixture_probes(2)[1]);
  EXPECT_EQ(unseen.prediction, "undetermined");
  EXPECT_EQ(unseen.verified, false);
  EXPECT_TRUE(schema_valid(ai));
  EXPECT_TRUE(schema_valid(unseen));
}

TEST(Engine, HybridUnseenNearAiIsUnverified) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  testutil::seed_engine(e);
  const auto img = synthetic_image(1000 + 4, 128, 128, 3);
  const auto near = toy_embed(apply_single_patch(img, 8, 1));
  const auto r = e.classify(near);
  EXPECT_EQ(r.prediction, "ai");
  EXPECT_EQ(r.nearest_ai_id, "ai4");
  EXPECT_EQ(r.verified, false);
  EXPECT_FALSE(r.warning);
}

TEST(Engine, HybridFlagsLedgerConflict) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  testutil::seed_engine(e);
  const auto v = testutil::fixture_records(Label::AI)[2].vector;
  e.ledger(Label::HUMAN).store_hash(embed_hash(v));
  const auto r = e.classify(v);
  EXPECT_EQ(r.prediction, "ai");
  EXPECT_EQ(r.verified, true);
  EXPECT_TRUE(r.warning);
}

TEST(Engine, UninitializedStoreIsNotDeterminable) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::VectorOnly));
  EXPECT_THROW(e.classify(EmbeddingVector{1.0f, 2.0f}), NotDeterminable);
}

TEST(Engine, CorruptLedgerFailsClosed) {
  testutil::TempDir dir;
  {
    Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
    testutil::seed_engine(e);
  }
  std::string data = fileio::read_all(dir / "ledger/ai.lgr");
  data[data.size() - 20] ^= 0x40;
  fileio::write_atomic(dir / "ledger/ai.lgr", data);
  EXPECT_THROW(Engine(config_for(dir.path(), FrameworkMode::Hybrid)), IntegrityError);
}

TEST(Engine, ModesAgreeAndRespectSchema) {
  testutil::TempDir dir;
  {
    Engine seed(config_for(dir.path(), FrameworkMode::Hybrid));
    testutil::seed_engine(seed);
  }
  Engine hybrid(config_for(dir.path(), FrameworkMode::Hybrid));
  Engine vector(config_for(dir.path(), FrameworkMode::VectorOnly));
  for (const auto& q : testutil::fixture_probes()) {
    const auto h = hybrid.classify(q), v = vector.classify(q);
    EXPECT_EQ(h.prediction, v.prediction);
    EXPECT_EQ(h.nearest_ai_id, v.nearest_ai_id);
    EXPECT_TRUE(schema_valid(h));
    EXPECT_TRUE(schema_valid(v));
  }
}

TEST(ClassifyResponse, JsonRoundTrip) {
  ClassifyResponse r;
  r.prediction = "human";
  r.human_similarity = 0.75;
  r.ai_similarity = 0.5;
  r.nearest_ai_id = "a";
  r.nearest_human_id = "h";
  r.verified = false;
  r.mode = FrameworkMode::Hybrid;
  EXPECT_EQ(response_from_json(to_json(r)), r);
  const auto j = to_json(r);
  EXPECT_FALSE(j.contains("warning"));
  EXPECT_EQ(j["mode"], "hybrid");
}

TEST(Config, LoadsAndOverrides) {
  testutil::TempDir dir;
  fileio::write_atomic(dir / "cfg.json", R"({"root": "/tmp/x", "mode": "hash_only", "namespace": "test", "seed": 9})");
  const auto c = load_config(dir / "cfg.json");
  EXPECT_EQ(c.root, "/tmp/x");
  EXPECT_EQ(c.mode, FrameworkMode::HashOnly);
  EXPECT_EQ(c.ns, "test");
  EXPECT_EQ(c.seed, 9u);
  fileio::write_atomic(dir / "bad.json", R"({"mode": "quantum"})");
  EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
}

// --- HTTP service ------------------------------------------------------------

namespace {

struct RunningService {
  Service service;
  std::thread thread;
  explicit RunningService(Engine& e) : service(e) {
    if (service.bind("127.0.0.1", 0) <= 0) throw std::runtime_error("bind failed");
    thread = std::thread([this] { service.serve(); });
    service.wait_until_ready();
  }
  ~RunningService() {
    service.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", service.port());
    c.set_read_timeout(10, 0);
    return c;
  }
};

} // namespace

TEST(Service, HealthOnFreshService) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  RunningService s(e);
  auto res = s.client().Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["ledgers"]["ai"]["chain"], "valid");
  EXPECT_EQ(j["ledgers"]["human"]["chain"], "valid");
}

TEST(Service, ClassifyVectorAndImageBodies) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  testutil::seed_engine(e);
  RunningService s(e);
  auto cli = s.client();

  const auto v = testutil::fixture_records(Label::AI)[7].vector;
  auto res = cli.Post("/classify", vector_body(v).dump(), "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto r = response_from_json(nlohmann::json::parse(res->body));
  EXPECT_EQ(r.prediction, "ai");
  EXPECT_EQ(r.verified, true);
  EXPECT_EQ(r, e.classify(v)); // service and in-process answers agree

  const auto img = synthetic_image(2000 + 5, 128, 128, 3);
  res = cli.Post("/classify", encode_pnm(img), "image/x-portable-pixmap");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto ri = response_from_json(nlohmann::json::parse(res->body));
  EXPECT_EQ(ri.prediction, "human");
  EXPECT_EQ(ri.nearest_human_id, "hu5");
  EXPECT_EQ(ri.verified, true);
}

TEST(Service, MalformedRequestsAre4xx) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::Hybrid));
  testutil::seed_engine(e);
  RunningService s(e);
  auto cli = s.client();
  for (const std::string& body : {std::string(R"({"dim": 3, "components": [1, 2, 3]})"),
                                 std::string(R"({"dim": 2, "components": [1, 2, 3]})"), std::string("not json"),
                                 std::string(R"({"components": [0, 0]})")}) {
    auto res = cli.Post("/classify", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << body;
    const auto j = nlohmann::json::parse(res->body);
    EXPECT_EQ(j["error"], "validation");
    EXPECT_TRUE(j.contains("reason"));
  }
  auto res = cli.Post("/classify", "GIF89a", "image/gif");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST(Service, UninitializedStoreIs503) {
  testutil::TempDir dir;
  Engine e(config_for(dir.path(), FrameworkMode::VectorOnly));
  RunningService s(e);
  auto res = s.client().Post("/classify", R"({"components": [1, 2]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
}
