#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include "screensum/embed.hpp"
#include "screensum/sha256.hpp"

using namespace screensum;

namespace {

real l2_norm(const std::vector<real>& v) {
  real sum = 0;
  for (real x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hash embedder maps empty text to the zero vector") {
  HashingEmbedder embedder(16, 0);
  std::vector<real> vec = embedder.embed("");
  CHECK(vec.size() == 16);
  CHECK(l2_norm(vec) == 0.0);
  CHECK(l2_norm(embedder.embed("?!., --")) == 0.0);
}

TEST_CASE("hash embedder outputs are unit length or zero") {
  HashingEmbedder embedder(32, 3);
  for (const char* text : {"a", "one two three", "Rain falls on the door.",
                           "seven 7 tokens in a row here"}) {
    CHECK(l2_norm(embedder.embed(text)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("repeated single token collapses to the same unit vector") {
  HashingEmbedder embedder(64, 0);
  CHECK(embedder.embed("abc abc") == embedder.embed("abc"));
}

TEST_CASE("hash embedder matches frozen golden vectors") {
  // pins cross-process and cross-platform reproducibility of (text, d, seed)
  HashingEmbedder embedder(8, 0);
  std::vector<real> a = embedder.embed("night rain falls");
  // "night" (+) and "falls" (-) share bucket 1 and cancel; "rain" (-) lands in 3
  CHECK(a == std::vector<real>{0, 0, 0, -1, 0, 0, 0, 0});
  std::vector<real> b = embedder.embed("quiet runs");
  const real inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(b[3] == doctest::Approx(inv_sqrt2).epsilon(1e-15));
  CHECK(b[7] == doctest::Approx(inv_sqrt2).epsilon(1e-15));
  CHECK(b[0] == 0.0);
}

TEST_CASE("hash embedder is deterministic across instances") {
  HashingEmbedder a(768, 42);
  HashingEmbedder b(768, 42);
  CHECK(a.embed("The same text.") == b.embed("The same text."));
  HashingEmbedder other_seed(768, 43);
  CHECK(a.embed("The same text.") != other_seed.embed("The same text."));
}

TEST_CASE("identical texts have cosine exactly 1") {
  HashingEmbedder embedder(128, 0);
  auto v = embedder.embed("storm over the bay");
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("idf table reweights tokens") {
  HashingEmbedder plain(64, 0);
  HashingEmbedder weighted(64, 0, {{"rare", 10.0}, {"common", 0.1}});
  auto a = plain.embed("rare common");
  auto b = weighted.embed("rare common");
  CHECK(a != b);
  CHECK(l2_norm(b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("external embedder loads entries of one dim") {
  ExternalEmbedder embedder = ExternalEmbedder::parse(
      "{\"text\":\"alpha\",\"vec\":[1,0,0,0]}\n"
      "{\"text\":\"beta\",\"vec\":[0,1,0,0]}\n");
  CHECK(embedder.dim() == 4);
  CHECK(embedder.entry_count() == 2);
  CHECK(embedder.embed("alpha") == std::vector<real>{1, 0, 0, 0});
}

TEST_CASE("external embedder rejects inconsistent dims") {
  try {
    ExternalEmbedder::parse(
        "{\"text\":\"alpha\",\"vec\":[1,0,0,0]}\n"
        "{\"text\":\"beta\",\"vec\":[0,1,0,0,9]}\n");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimInconsistent);
  }
}

TEST_CASE("external embedder misses loudly") {
  ExternalEmbedder embedder =
      ExternalEmbedder::parse("{\"text\":\"alpha\",\"vec\":[1,0]}\n");
  try {
    embedder.embed("missing text");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingText);
  }
}

TEST_CASE("embed is safe to call from several threads") {
  HashingEmbedder embedder(64, 5);
  std::vector<real> expected = embedder.embed("storm over the quiet bay");
  std::vector<std::vector<real>> results(8);
  {
    std::vector<std::thread> workers;
    for (auto& slot : results) {
      workers.emplace_back([&embedder, &slot]() {
        for (int repeat = 0; repeat < 50; ++repeat)
          slot = embedder.embed("storm over the quiet bay");
      });
    }
    for (auto& worker : workers) worker.join();
  }
  for (const auto& result : results) CHECK(result == expected);
}

TEST_CASE("external embedder resolves sha256-keyed entries") {
  std::string digest = sha256_hex("secret scene text");
  ExternalEmbedder embedder = ExternalEmbedder::parse(
      "{\"hash\":\"" + digest + "\",\"vec\":[0.5,0.5]}\n");
  CHECK(embedder.embed("secret scene text") == std::vector<real>{0.5, 0.5});
}
