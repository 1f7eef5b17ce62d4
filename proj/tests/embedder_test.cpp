#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "maxsim/embedder.hpp"
#include "maxsim/endpoints.hpp"
#include "support/fakes.hpp"
#include "support/oracles.hpp"

using namespace maxsim;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() /
             ("maxsim_embed_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

double row_norm(const EmbeddingSet& set, int row) {
  double sq = 0;
  for (int d = 0; d < set.dim(); ++d) {
    sq += static_cast<double>(set.vectors(row, d)) * set.vectors(row, d);
  }
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("cache keys are stable, content-sensitive, and field-delimited") {
  CHECK(cache_key("m", "text") == cache_key("m", "text"));
  CHECK(cache_key("m", "text") != cache_key("m", "texu"));
  CHECK(cache_key("m", "text") != cache_key("n", "text"));
  // The (model, text) boundary is part of the digest.
  CHECK(cache_key("ab", "c") != cache_key("a", "bc"));
  CHECK(cache_key("", "abc") != cache_key("abc", ""));
}

TEST_CASE("empty sentence list embeds to the empty set without any call") {
  fakes::ScriptedEmbedEndpoint endpoint;
  auto set = embed_sentences({}, endpoint, nullptr, fakes::instant_retries());
  CHECK(set.size() == 0);
  CHECK(set.empty());
  CHECK(set.model_id == "scripted-encoder");
  CHECK(endpoint.requests.empty());
}

TEST_CASE("raw endpoint vectors are L2-normalized before storage") {
  fakes::ScriptedEmbedEndpoint endpoint;
  endpoint.enqueue({{3.0f, 4.0f}});
  auto set = embed_sentences({"a"}, endpoint, nullptr, fakes::instant_retries());
  REQUIRE(set.size() == 1);
  REQUIRE(set.dim() == 2);
  CHECK(set.vectors(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(set.vectors(0, 1) == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("cached sentences are not re-fetched") {
  auto dir = fresh_dir("warm");
  EmbedCache cache(dir, "scripted-encoder");

  fakes::ScriptedEmbedEndpoint endpoint;
  endpoint.enqueue({{1.0f, 0.0f}});
  auto first =
      embed_sentences({"alpha"}, endpoint, &cache, fakes::instant_retries());
  REQUIRE(endpoint.requests.size() == 1);

  // Second call: "alpha" is warm, only "beta" may reach the endpoint.
  endpoint.enqueue({{0.0f, 2.0f}});
  auto second = embed_sentences({"alpha", "beta"}, endpoint, &cache,
                                fakes::instant_retries());
  REQUIRE(endpoint.requests.size() == 2);
  CHECK(endpoint.requests[1] == std::vector<std::string>{"beta"});
  CHECK(second.vectors(0, 0) == first.vectors(0, 0));
  CHECK(second.vectors(0, 1) == first.vectors(0, 1));
  CHECK(second.vectors(1, 1) == doctest::Approx(1.0));
  fs::remove_all(dir);
}

TEST_CASE("warm reruns are bitwise identical to the cold run") {
  auto dir = fresh_dir("bitwise");
  std::vector<std::string> sentences;
  for (int i = 0; i < 37; ++i) {
    sentences.push_back("sentence number " + std::to_string(i * i));
  }

  MockEmbedEndpoint cold_endpoint("mock-encoder", 48);
  EmbeddingSet cold;
  {
    EmbedCache cache(dir, "mock-encoder");
    cold = embed_sentences(sentences, cold_endpoint, &cache,
                           fakes::instant_retries());
    CHECK(cold_endpoint.calls() == 1);
    CHECK(cold_endpoint.embedded_inputs() == sentences.size());
  }

  // A new process would reopen the cache from disk exactly like this.
  MockEmbedEndpoint warm_endpoint("mock-encoder", 48);
  EmbedCache cache(dir, "mock-encoder");
  auto warm = embed_sentences(sentences, warm_endpoint, &cache,
                              fakes::instant_retries());
  CHECK(warm_endpoint.calls() == 0);
  REQUIRE(warm.vectors.rows() == cold.vectors.rows());
  REQUIRE(warm.vectors.cols() == cold.vectors.cols());
  CHECK((warm.vectors.array() == cold.vectors.array()).all());
  fs::remove_all(dir);
}

TEST_CASE("misses are fetched in batches of 64") {
  fakes::ScriptedEmbedEndpoint endpoint;
  std::vector<std::string> sentences;
  for (int i = 0; i < 130; ++i) sentences.push_back("s" + std::to_string(i));
  std::vector<std::vector<float>> batch64(64, {1.0f, 1.0f});
  endpoint.enqueue(batch64).enqueue(batch64).enqueue(
      std::vector<std::vector<float>>(2, {1.0f, 1.0f}));

  auto set =
      embed_sentences(sentences, endpoint, nullptr, fakes::instant_retries());
  CHECK(set.size() == 130);
  REQUIRE(endpoint.requests.size() == 3);
  CHECK(endpoint.requests[0].size() == 64);
  CHECK(endpoint.requests[1].size() == 64);
  CHECK(endpoint.requests[2].size() == 2);
  CHECK(endpoint.requests[0][0] == "s0");
  CHECK(endpoint.requests[2][1] == "s129");
}

TEST_CASE("duplicate sentences are fetched once and share their vector") {
  fakes::ScriptedEmbedEndpoint endpoint;
  endpoint.enqueue({{5.0f, 0.0f}, {0.0f, 7.0f}});
  auto set = embed_sentences({"same", "other", "same"}, endpoint, nullptr,
                             fakes::instant_retries());
  REQUIRE(endpoint.requests.size() == 1);
  CHECK(endpoint.requests[0] == std::vector<std::string>{"same", "other"});
  REQUIRE(set.size() == 3);
  CHECK(set.vectors(0, 0) == set.vectors(2, 0));
  CHECK(set.vectors(0, 1) == set.vectors(2, 1));
  CHECK(set.vectors(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("every stored vector has unit norm within 1e-6") {
  MockEmbedEndpoint endpoint("norm-check", 96);
  std::vector<std::string> sentences;
  for (int i = 0; i < 300; ++i) {
    sentences.push_back("probe " + std::to_string(i));
  }
  auto set =
      embed_sentences(sentences, endpoint, nullptr, fakes::instant_retries());
  for (int r = 0; r < set.size(); ++r) {
    CHECK(std::abs(row_norm(set, r) - 1.0) <= 1e-6);
  }
}

TEST_CASE("whole-text mode always yields at most one vector") {
  MockEmbedEndpoint endpoint("whole", 32);
  auto one = embed_whole_text("First sentence. Second sentence.", endpoint,
                              nullptr, fakes::instant_retries());
  CHECK(one.size() == 1);

  auto empty =
      embed_whole_text("", endpoint, nullptr, fakes::instant_retries());
  CHECK(empty.empty());
  auto blank =
      embed_whole_text("  \n\t ", endpoint, nullptr, fakes::instant_retries());
  CHECK(blank.empty());
}

TEST_CASE("split-then-embed differs from whole-text on multi-sentence text") {
  MockEmbedEndpoint endpoint("ablation", 32);
  const std::string text = "A person opens the door. A person leaves.";
  auto split_set = embed_sentences(
      {"A person opens the door.", "A person leaves."}, endpoint, nullptr,
      fakes::instant_retries());
  auto whole_set =
      embed_whole_text(text, endpoint, nullptr, fakes::instant_retries());
  CHECK(split_set.size() == 2);
  CHECK(whole_set.size() == 1);
  // The whole-text vector matches neither sentence vector.
  bool same0 = true, same1 = true;
  for (int d = 0; d < 32; ++d) {
    same0 = same0 && split_set.vectors(0, d) == whole_set.vectors(0, d);
    same1 = same1 && split_set.vectors(1, d) == whole_set.vectors(0, d);
  }
  CHECK(!same0);
  CHECK(!same1);
}

TEST_CASE("transient endpoint failures are retried with bounded attempts") {
  MockEmbedEndpoint inner("retry", 16);

  fakes::FlakyEmbedEndpoint twice(inner, 2);
  auto set = embed_sentences({"x"}, twice, nullptr, fakes::instant_retries());
  CHECK(set.size() == 1);
  CHECK(twice.attempts == 3);

  fakes::FlakyEmbedEndpoint always(inner, 1000);
  try {
    embed_sentences({"x"}, always, nullptr, fakes::instant_retries());
    FAIL("expected endpoint exhaustion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEndpointUnavailable);
  }
  CHECK(always.attempts == 5);
}

TEST_CASE("degenerate endpoint vectors are rejected") {
  fakes::ScriptedEmbedEndpoint zeros;
  zeros.enqueue({{0.0f, 0.0f, 0.0f}});
  CHECK_THROWS_AS(
      embed_sentences({"z"}, zeros, nullptr, fakes::instant_retries()), Error);

  fakes::ScriptedEmbedEndpoint nans;
  nans.enqueue({{1.0f, std::nanf("")}});
  CHECK_THROWS_AS(
      embed_sentences({"n"}, nans, nullptr, fakes::instant_retries()), Error);

  fakes::ScriptedEmbedEndpoint short_reply;
  short_reply.enqueue({});
  CHECK_THROWS_AS(
      embed_sentences({"s"}, short_reply, nullptr, fakes::instant_retries()),
      Error);
}

TEST_CASE("dimension changes are refused") {
  // Mid-run switch across batches.
  fakes::ScriptedEmbedEndpoint endpoint;
  std::vector<std::vector<float>> first(64, {1.0f, 2.0f});
  endpoint.enqueue(first).enqueue({{1.0f, 2.0f, 3.0f}});
  std::vector<std::string> sentences;
  for (int i = 0; i < 65; ++i) sentences.push_back("d" + std::to_string(i));
  try {
    embed_sentences(sentences, endpoint, nullptr, fakes::instant_retries());
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }

  // Vector that does not fit the cache's recorded dimension.
  auto dir = fresh_dir("dim");
  EmbedCache cache(dir, "scripted-encoder", 4);
  fakes::ScriptedEmbedEndpoint narrow;
  narrow.enqueue({{1.0f, 2.0f}});
  try {
    embed_sentences({"w"}, narrow, &cache, fakes::instant_retries());
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("cache refuses a different model or dimension") {
  auto dir = fresh_dir("mismatch");
  {
    EmbedCache cache(dir, "encoder-a");
    cache.insert(cache_key("encoder-a", "x"), {0.6f, 0.8f});
    CHECK(cache.dim() == 2);
  }
  try {
    EmbedCache other(dir, "encoder-b");
    FAIL("expected model mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCacheMismatch);
  }
  try {
    EmbedCache other(dir, "encoder-a", 1024);
    FAIL("expected dim mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCacheMismatch);
  }
  // Matching parameters reopen fine and serve the stored vector.
  EmbedCache same(dir, "encoder-a", 2);
  auto hit = same.lookup(cache_key("encoder-a", "x"));
  REQUIRE(hit.has_value());
  CHECK((*hit)[0] == 0.6f);
  CHECK((*hit)[1] == 0.8f);
  CHECK(same.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("keys round-trip through the on-disk index byte-identically") {
  auto dir = fresh_dir("roundtrip");
  std::vector<std::pair<std::string, std::vector<float>>> entries;
  std::mt19937_64 rng(20240817);
  for (int i = 0; i < 50; ++i) {
    std::vector<float> v(8);
    double sq = 0;
    for (auto& x : v) {
      x = static_cast<float>((rng() % 2000) / 1000.0 - 1.0) + 0.001f;
      sq += static_cast<double>(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(sq));
    entries.emplace_back(cache_key("rt", "t" + std::to_string(i)), v);
  }
  {
    EmbedCache cache(dir, "rt");
    for (const auto& [key, vec] : entries) cache.insert(key, vec);
    // Same-process readback, including re-insertion being a no-op.
    cache.insert(entries[0].first, entries[0].second);
    CHECK(cache.size() == entries.size());
  }
  EmbedCache reopened(dir, "rt");
  CHECK(reopened.size() == entries.size());
  for (const auto& [key, vec] : entries) {
    auto hit = reopened.lookup(key);
    REQUIRE(hit.has_value());
    REQUIRE(hit->size() == vec.size());
    for (size_t d = 0; d < vec.size(); ++d) CHECK((*hit)[d] == vec[d]);
  }
  CHECK(!reopened.lookup("absent-key").has_value());
  fs::remove_all(dir);
}

TEST_CASE("a torn final index line is dropped on reload") {
  auto dir = fresh_dir("torn");
  {
    EmbedCache cache(dir, "torn-model");
    cache.insert(cache_key("torn-model", "a"), {1.0f, 0.0f});
    cache.insert(cache_key("torn-model", "b"), {0.0f, 1.0f});
  }
  {
    std::ofstream index(dir / "index.jsonl", std::ios::app);
    index << "{\"key\": \"half-written";  // no newline, no closing brace
  }
  EmbedCache cache(dir, "torn-model");
  CHECK(cache.size() == 2);
  CHECK(cache.lookup(cache_key("torn-model", "a")).has_value());
  fs::remove_all(dir);
}

TEST_CASE("concurrent embedding against one cache is safe and consistent") {
  auto dir = fresh_dir("threads");
  MockEmbedEndpoint endpoint("concurrent", 24);
  EmbedCache cache(dir, "concurrent");

  std::vector<std::string> pool;
  for (int i = 0; i < 40; ++i) pool.push_back("shared " + std::to_string(i));

  std::vector<std::thread> threads;
  std::vector<EmbeddingSet> results(4);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      // Overlapping slices so threads race on the same keys.
      std::vector<std::string> slice(pool.begin() + t * 5, pool.end());
      results[t] =
          embed_sentences(slice, endpoint, &cache, fakes::instant_retries());
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == pool.size());

  // Reference: a fresh fetch with no cache involved.
  MockEmbedEndpoint reference_endpoint("concurrent", 24);
  auto reference = embed_sentences(pool, reference_endpoint, nullptr,
                                   fakes::instant_retries());
  for (int t = 0; t < 4; ++t) {
    int offset = t * 5;
    REQUIRE(results[t].size() == static_cast<int>(pool.size()) - offset);
    for (int r = 0; r < results[t].size(); ++r) {
      for (int d = 0; d < 24; ++d) {
        CHECK(results[t].vectors(r, d) == reference.vectors(r + offset, d));
      }
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("mock embedder is a pure function of model, dim, and text") {
  MockEmbedEndpoint a("purity", 16);
  MockEmbedEndpoint b("purity", 16);
  auto va = a.embed({"hello"});
  auto vb = b.embed({"hello"});
  CHECK(va == vb);
  CHECK(a.embed({"hello"})[0] == va[0]);
  CHECK(a.embed({"world"})[0] != va[0]);
  MockEmbedEndpoint c("other-model", 16);
  CHECK(c.embed({"hello"})[0] != va[0]);
}
