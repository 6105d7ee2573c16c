#include <gtest/gtest.h>

#include <map>
#include <random>

#include <provenance/benchmark.hpp>
#include <provenance/perturb.hpp>

#include "test_util.hpp"

using namespace provenance;

namespace {

Image noise_image(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h, c);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 255); // never pure white
  return img;
}

// 8x8 blocks of random gray; high frequency but resolvable by the blur sizes.
Image block_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(size, size, 1);
  for (int by = 0; by < size; by += 8)
    for (int bx = 0; bx < size; bx += 8) {
      const auto v = static_cast<std::uint8_t>(rng() % 256);
      for (int y = by; y < std::min(size, by + 8); ++y)
        for (int x = bx; x < std::min(size, bx + 8); ++x) img.at(x, y) = v;
    }
  return img;
}

double variance(const Image& img) {
  double s = 0, s2 = 0;
  for (auto p : img.pixels) {
    s += p;
    s2 += static_cast<double>(p) * p;
  }
  const double n = static_cast<double>(img.pixels.size());
  return s2 / n - (s / n) * (s / n);
}

std::size_t diff_count(const Image& a, const Image& b) {
  std::size_t n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      for (int c = 0; c < a.channels; ++c)
        if (a.at(x, y, c) != b.at(x, y, c)) {
          ++n;
          break;
        }
  return n;
}

} // namespace

TEST(SinglePatch, FullSizePatchWhitensEverything) {
  const auto out = apply_single_patch(noise_image(64, 64, 3, 1), 64, 5);
  for (auto p : out.pixels) ASSERT_EQ(p, 255);
}

TEST(SinglePatch, DeterministicAndExactArea) {
  const auto img = noise_image(512, 512, 3, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = apply_single_patch(img, 128, seed);
    EXPECT_EQ(a, apply_single_patch(img, 128, seed));
    // No source pixel is white, so every patch pixel differs.
    EXPECT_EQ(diff_count(img, a), 128u * 128u);
  }
}

TEST(SinglePatch, ChangesNothingOutsideASquare) {
  const auto img = noise_image(200, 150, 1, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = apply_single_patch(img, 40, seed);
    int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (out.at(x, y) != img.at(x, y)) {
          EXPECT_EQ(out.at(x, y), 255);
          x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
        }
    EXPECT_EQ(x1 - x0 + 1, 40);
    EXPECT_EQ(y1 - y0 + 1, 40);
  }
}

TEST(SinglePatch, RejectsOversizedPatch) {
  EXPECT_THROW(apply_single_patch(Image(100, 50, 1), 51, 0), ValidationError);
}

TEST(MultiPatch, DeterministicAndBounded) {
  const auto img = noise_image(256, 256, 3, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = apply_multi_patch(img, 3, 5, 64, seed);
    EXPECT_EQ(a, apply_multi_patch(img, 3, 5, 64, seed));
    const int k = multi_patch_count(3, 5, seed);
    EXPECT_GE(k, 3);
    EXPECT_LE(k, 5);
    const auto changed = diff_count(img, a);
    EXPECT_LE(changed, static_cast<std::size_t>(k) * 64 * 64);
    EXPECT_GE(changed, 64u * 64u);
  }
  EXPECT_THROW(apply_multi_patch(img, 3, 5, 300, 0), ValidationError);
  EXPECT_THROW(apply_multi_patch(img, 5, 3, 10, 0), ValidationError);
}

TEST(MultiPatch, CountIsUniformOverThreeToFive) {
  std::map<int, int> freq;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++freq[multi_patch_count(3, 5, derive_seed(77, seed))];
  ASSERT_EQ(freq.size(), 3u);
  double chi2 = 0;
  for (auto [k, n] : freq) {
    EXPECT_GE(k, 3);
    EXPECT_LE(k, 5);
    chi2 += (n - 1000.0 / 3) * (n - 1000.0 / 3) / (1000.0 / 3);
  }
  EXPECT_LT(chi2, 13.82); // chi-square, 2 dof, p = 0.001
}

TEST(Resize, DimensionsIdentityAndConstants) {
  const auto img = noise_image(512, 512, 3, 5);
  const auto small = apply_resize(img, 128);
  EXPECT_EQ(small.width, 128);
  EXPECT_EQ(small.height, 128);
  EXPECT_EQ(apply_resize(img, 512), img);
  const Image gray(300, 200, 1, 137);
  for (int t : {1, 7, 128, 640}) {
    const auto out = apply_resize(gray, t);
    EXPECT_EQ(out.width, t);
    for (auto p : out.pixels) ASSERT_EQ(p, 137);
  }
  EXPECT_THROW(apply_resize(img, 0), ValidationError);
}

TEST(Resize, AreaAverageOfBlocks) {
  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * (y * 4 + x));
  const auto out = apply_resize(img, 2);
  // mean of {0,10,40,50} = 25
  EXPECT_EQ(out.at(0, 0), 25);
  EXPECT_EQ(out.at(1, 1), static_cast<std::uint8_t>((100 + 110 + 140 + 150) / 4));
}

TEST(Blur, ZeroIsIdentityAndConstantsUnchanged) {
  const auto img = noise_image(64, 64, 3, 6);
  EXPECT_EQ(apply_blur(img, 0), img);
  const Image flat(128, 96, 3, 201);
  for (int p : {20, 40, 60, 80, 100}) EXPECT_EQ(apply_blur(flat, p), flat);
  EXPECT_THROW(apply_blur(img, 101), ValidationError);
  EXPECT_THROW(apply_blur(img, -1), ValidationError);
}

TEST(Blur, SigmaScalesWithImageSize) {
  EXPECT_DOUBLE_EQ(blur_sigma(100, 512, 512), 10.0);
  EXPECT_DOUBLE_EQ(blur_sigma(20, 512, 512), 2.0);
  EXPECT_DOUBLE_EQ(blur_sigma(80, 256, 1024), 4.0);
}

TEST(Blur, VarianceStrictlyDecreasesWithIntensity) {
  const auto img = block_image(512, 8);
  double prev = variance(img);
  for (int p : {20, 40, 60, 80}) {
    const double v = variance(apply_blur(img, p));
    EXPECT_LT(v, prev) << "p=" << p;
    prev = v;
  }
}

TEST(Perturbation, NamesAndParsing) {
  std::vector<std::string> names;
  for (const auto& s : default_perturbations()) names.push_back(s.name());
  EXPECT_EQ(names, (std::vector<std::string>{"single_patch", "multi_patch", "resize", "blur20", "blur40", "blur60",
                                             "blur80"}));
  for (const auto& n : names) EXPECT_EQ(parse_perturbation(n).name(), n);
  EXPECT_EQ(parse_perturbation("identity").kind, PerturbationKind::Identity);
  EXPECT_THROW(parse_perturbation("blur"), ValidationError);
  EXPECT_THROW(parse_perturbation("blur101"), ValidationError);
  EXPECT_THROW(parse_perturbation("jpeg"), ValidationError);
}

TEST(Perturbation, ApplyIsPure) {
  const auto img = noise_image(128, 128, 1, 9);
  for (auto spec : default_perturbations()) {
    spec = spec.with_seed(42);
    if (spec.kind == PerturbationKind::SinglePatch) spec.patch_size = 32;
    if (spec.kind == PerturbationKind::MultiPatch) spec.patch_size = 16;
    EXPECT_EQ(apply(img, spec), apply(img, spec)) << spec.name();
  }
}

TEST(Benchmark, IdsAndSuffixes) {
  EXPECT_EQ(variant_id("img1", "blur20"), "img1#blur20");
  EXPECT_EQ(source_id_of("img1#blur20"), "img1");
  EXPECT_EQ(source_id_of("a#b#resize"), "a#b");
  EXPECT_EQ(perturbation_of("img1#blur20"), "blur20");
  EXPECT_EQ(source_id_of("plain"), "plain");
}

TEST(Benchmark, OriginalsAgainstThemselvesScoreFullMarks) {
  std::mt19937_64 rng(10);
  auto store = VectorStore::in_memory();
  auto& c = store.create_collection("o", Label::AI, 12);
  const auto recs = testutil::random_records(rng, 40, 12, "o");
  c.upsert_batch("original", recs);
  std::vector<Record> modified;
  for (const auto& r : recs) modified.push_back({{variant_id(r.meta.id, "identity"), "", Label::AI, "m"}, r.vector});
  const auto res = run_robustness_benchmark(c, "original", modified);
  EXPECT_DOUBLE_EQ(res.accuracy_percent, 100.0);
  EXPECT_EQ(res.correct, 40u);
}

TEST(Benchmark, AccuracyIsExactRatio) {
  auto store = VectorStore::in_memory();
  auto& c = store.create_collection("o", Label::AI, 2);
  c.upsert("original", {"a", "", Label::AI, ""}, EmbeddingVector{1.0f, 0.0f});
  c.upsert("original", {"b", "", Label::AI, ""}, EmbeddingVector{0.0f, 1.0f});
  c.upsert("original", {"c", "", Label::AI, ""}, EmbeddingVector{-1.0f, 0.0f});
  const std::vector<Record> modified = {
      {{"a#x", "", Label::AI, ""}, EmbeddingVector{1.0f, 0.1f}},  // correct
      {{"b#x", "", Label::AI, ""}, EmbeddingVector{1.0f, 0.2f}},  // nearest a
      {{"c#x", "", Label::AI, ""}, EmbeddingVector{-1.0f, 0.3f}}, // correct
  };
  const auto res = run_robustness_benchmark(c, "original", modified);
  EXPECT_EQ(res.correct, 2u);
  EXPECT_DOUBLE_EQ(res.accuracy_percent, 100.0 * 2 / 3);
  EXPECT_FALSE(res.matches[1].correct);
  EXPECT_EQ(res.matches[1].nearest_original_id, "a");

  const std::vector<Record> unknown = {{{"zz#x", "", Label::AI, ""}, EmbeddingVector{1.0f, 0.0f}}};
  EXPECT_THROW(run_robustness_benchmark(c, "original", unknown), ValidationError);
}

TEST(Benchmark, GridShapeAndDeterminism) {
  const auto corpus = synthetic_corpus(10, 3, 128);
  std::vector<PerturbationSpec> specs = {PerturbationSpec::identity(), PerturbationSpec::single_patch(32),
                                         PerturbationSpec::multi_patch(16), PerturbationSpec::resize(32),
                                         PerturbationSpec::blur(20), PerturbationSpec::blur(40),
                                         PerturbationSpec::blur(60), PerturbationSpec::blur(80)};
  const auto a = run_perturbation_grid(corpus, specs, 5, toy_embed, 4);
  const auto b = run_perturbation_grid(corpus, specs, 5, toy_embed, 1);
  ASSERT_EQ(a.size(), specs.size());
  EXPECT_EQ(a.front().perturbation, "identity");
  EXPECT_DOUBLE_EQ(a.front().accuracy_percent, 100.0);
  EXPECT_EQ(render_grid(a), render_grid(b));
  EXPECT_EQ(render_grid_detail(a), render_grid_detail(b));
  for (const auto& row : a) {
    EXPECT_EQ(row.total, 10u);
    EXPECT_GE(row.accuracy_percent, 0.0);
    EXPECT_LE(row.accuracy_percent, 100.0);
  }
  const std::string grid = render_grid(a);
  EXPECT_EQ(grid.substr(0, grid.find('\n')), "perturbation,total,correct,accuracy_percent");
  EXPECT_NE(grid.find("\nidentity,10,10,100.00\n"), std::string::npos);
}

TEST(Benchmark, GridFromPrecomputedEmbeddings) {
  std::mt19937_64 rng(21);
  const auto originals = testutil::random_records(rng, 5, 6, "o");
  std::vector<Record> modified;
  for (const char* p : {"resize", "blur20"})
    for (const auto& r : originals) modified.push_back({{variant_id(r.meta.id, p), "", Label::AI, "m"}, r.vector});
  const auto rows = grid_from_embeddings(originals, modified);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].perturbation, "resize");
  EXPECT_EQ(rows[1].perturbation, "blur20");
  EXPECT_DOUBLE_EQ(rows[1].accuracy_percent, 100.0);
}

TEST(SyntheticImage, DistinctAndDeterministic) {
  EXPECT_EQ(synthetic_image(1, 64, 64), synthetic_image(1, 64, 64));
  EXPECT_NE(synthetic_image(1, 64, 64), synthetic_image(2, 64, 64));
  EXPECT_EQ(synthetic_image(5, 32, 16, 3).channels, 3);
}
