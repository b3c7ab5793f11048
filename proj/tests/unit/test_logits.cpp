#include <doctest.h>

#include <cmath>

#include "paths.hpp"
#include "recinv/error.hpp"
#include "recinv/logits.hpp"
#include "recinv/util/rng.hpp"

using namespace recinv;
using namespace recinv::logits;

namespace {

LogitMatrix one_row(std::vector<double> v) {
  LogitMatrix m;
  m.rows = 1;
  m.cols = v.size();
  m.values = std::move(v);
  for (std::size_t i = 0; i < m.cols; ++i) m.vocab.push_back("t" + std::to_string(i));
  return m;
}

}  // namespace

TEST_SUITE("logits") {
  TEST_CASE("identity filter is a copy") {
    auto m = one_row({1, 2, 3});
    CHECK(apply_filters(m).values == m.values);
  }

  TEST_CASE("top-k keeps the largest and breaks ties by index") {
    auto m = one_row({1, 3, 3, 2});
    m.filter.top_k = 2;
    CHECK(apply_filters(m).values == std::vector<double>{kFloor, 3, 3, kFloor});
    m.values = {5, 5, 5, 1};
    CHECK(apply_filters(m).values == std::vector<double>{5, 5, kFloor, kFloor});
  }

  TEST_CASE("temperature divides before filtering") {
    auto m = one_row({2, 4, 6});
    m.filter.temperature = 2.0;
    CHECK(apply_filters(m).values == std::vector<double>{1, 2, 3});
  }

  TEST_CASE("top-p keeps the smallest prefix reaching the mass") {
    auto m = one_row({std::log(0.5), std::log(0.3), std::log(0.2)});
    m.filter.top_p = 0.7;
    auto out = apply_filters(m).values;
    CHECK(out[0] == doctest::Approx(std::log(0.5)));
    CHECK(out[1] == doctest::Approx(std::log(0.3)));
    CHECK(out[2] == kFloor);
    m.filter.top_p = 0.5;
    out = apply_filters(m).values;
    CHECK(out[1] == kFloor);
    m.filter.top_p = 1.0;
    CHECK(apply_filters(m).values[2] == doctest::Approx(std::log(0.2)));
  }

  TEST_CASE("top-k under unit temperature is idempotent on random rows") {
    util::Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> v(12);
      for (auto& x : v) x = static_cast<double>(rng.uniform_int(-20, 20)) / 4;
      auto m = one_row(v);
      m.filter.top_k = static_cast<int>(rng.uniform_int(1, 12));
      auto once = apply_filters(m);
      auto twice = apply_filters(once);
      REQUIRE(once.values == twice.values);
      int kept = 0;
      for (double x : once.values) kept += x != kFloor;
      REQUIRE(kept == *m.filter.top_k);
    }
  }

  TEST_CASE("invalid filters are rejected") {
    auto m = one_row({1, 2});
    m.filter.temperature = 0;
    CHECK_THROWS_AS(apply_filters(m), Error);
    m.filter = {};
    m.filter.top_k = 0;
    CHECK_THROWS_AS(apply_filters(m), Error);
    m.filter = {};
    m.filter.top_p = 1.5;
    CHECK_THROWS_AS(apply_filters(m), Error);
  }

  TEST_CASE("alignment maps by token string with the floor for gaps") {
    LogitMatrix m;
    m.rows = 1;
    m.cols = 3;
    m.values = {1, 2, 3};
    m.vocab = {"a", "b", "c"};
    std::vector<std::string> target{"c", "a", "z"};
    auto h = align_vocab(m, target);
    CHECK(h.values == std::vector<double>{3, 1, kFloor});
    CHECK(h.target_vocab_digest.size() == 64);
  }

  TEST_CASE("row reduction") {
    LogitMatrix m;
    m.rows = 2;
    m.cols = 2;
    m.values = {1, 2, 3, 6};
    m.vocab = {"a", "b"};
    CHECK(reduce_rows(m, RowReduction::Last) == std::vector<double>{3, 6});
    CHECK(reduce_rows(m, RowReduction::Mean) == std::vector<double>{2, 4});
  }

  TEST_CASE("fixture json round trip and shape errors") {
    Json j{{"vocab", {"a", "b"}}, {"values", {{1.0, 2.0}}}, {"filter", {{"top_k", 1}}}};
    auto m = LogitMatrix::from_json(j);
    CHECK(m.filter.top_k == 1);
    CHECK(LogitMatrix::from_json(m.to_json()).values == m.values);
    CHECK_THROWS(LogitMatrix::from_json(Json{{"vocab", {"a", "b"}}, {"values", {{1.0}}}}));
  }

  TEST_CASE("projection matches the affine map") {
    auto w = ProjectionWeights::seeded(5, 3, 2, 7);
    for (std::size_t i = 0; i < w.bias.size(); ++i) w.bias[i] = 0.1 * static_cast<double>(i);
    w.finalize();
    AlignedLogits h{{1.0, -2.0, 0.5, 0.0, 3.0}, ""};
    auto e = project(h, w);
    REQUIRE(e.values.size() == 6);
    for (std::size_t o = 0; o < 6; ++o) {
      double s = w.bias[o];
      for (std::size_t v = 0; v < 5; ++v) s += h.values[v] * w.matrix[v * 6 + o];
      CHECK(e.values[o] == doctest::Approx(s).epsilon(1e-12));
    }
    CHECK(e.projection_digest == w.digest());
    CHECK(ProjectedEmbedding::from_json(e.to_json()).values == e.values);
    CHECK_THROWS(project(AlignedLogits{{1.0}, ""}, w));
  }

  TEST_CASE("seeded projection is reproducible and bounded") {
    auto a = ProjectionWeights::seeded(10, 4, 3, 7);
    auto b = ProjectionWeights::seeded(10, 4, 3, 7);
    auto c = ProjectionWeights::seeded(10, 4, 3, 8);
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    const double bound = 1.0 / std::sqrt(10.0);
    for (double v : a.matrix) CHECK(std::abs(v) <= bound);
    for (double v : a.bias) CHECK(v == 0.0);
  }

  TEST_CASE("projection files round trip and detect edits") {
    auto dir = testing::scratch_dir("projection");
    auto w = ProjectionWeights::seeded(4, 2, 2, 3);
    w.save(dir / "w.json");
    auto back = ProjectionWeights::load(dir / "w.json");
    CHECK(back.digest() == w.digest());
    CHECK(back.provenance == Provenance::Loaded);

    auto j = w.to_json();
    j["bias"][0] = 0.5;
    try {
      ProjectionWeights::from_json(j);
      FAIL("expected digest mismatch");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("digest mismatch") != std::string::npos);
    }
    auto bad = w;
    bad.matrix.pop_back();
    CHECK_THROWS(bad.validate());
  }
}
