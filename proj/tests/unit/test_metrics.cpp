#include <doctest.h>

#include "oracles.hpp"
#include "paths.hpp"
#include "recinv/metrics.hpp"
#include "recinv/util/io.hpp"

using namespace recinv;
using namespace recinv::metrics;
using corpus::Gender;
using corpus::Profile;

namespace {

corpus::InstructionSample sample(std::string id, std::string prompt, std::vector<std::string> titles,
                                 bool has_profile = false, Profile p = {}) {
  corpus::InstructionSample s;
  s.sample_id = std::move(id);
  s.prompt = std::move(prompt);
  s.ground_truth_titles = std::move(titles);
  s.n_items = static_cast<int>(s.ground_truth_titles.size());
  s.has_profile = has_profile;
  s.profile = p;
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("title extraction") {
    auto r = extract_titles("Liked \"Up\", \" Big  Fish \", \"Up\" and \"");
    CHECK(r.titles == std::vector<std::string>{"Up", "Big Fish"});
    CHECK(r.unbalanced_quotes);
    CHECK(extract_titles("no quotes").titles.empty());
  }

  TEST_CASE("profile extraction") {
    auto p = extract_profile("Hi. the USER is a 34-year-old Female. Liked \"Up\".");
    REQUIRE(p.profile);
    CHECK(*p.profile == Profile{34, Gender::Female});
    CHECK_FALSE(extract_profile("nothing here").profile);
    auto bad = extract_profile("The user is a young-year-old male.");
    CHECK(bad.malformed);
    CHECK_FALSE(bad.profile);
    CHECK(extract_profile("The user is a 20-year-old robot.").malformed);
    CHECK(extract("The user is a 20-year-old robot.").eligible_for_profile);
  }

  TEST_CASE("item match") {
    std::vector<std::string> ref{"A", "B", "C", "D", "E", "F", "G"};
    CHECK(*item_match(ref, std::vector<std::string>{"A", "B", "C", "D", "E", "F", "X"}) ==
          doctest::Approx(6.0 / 7.0));
    CHECK(*item_match(std::vector<std::string>{"A", "B", "C"}, std::vector<std::string>{"C", "A", "A", "Z"}) ==
          doctest::Approx(2.0 / 3.0));
    CHECK(*item_match(std::vector<std::string>{"Am\xC3\xA9lie"}, std::vector<std::string>{"Ame\xCC\x81lie"}) == 1.0);
    CHECK_FALSE(item_match({}, std::vector<std::string>{"A"}));
  }

  TEST_CASE("item match agrees with the set oracle") {
    util::Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::string> a, b;
      for (auto n = rng.uniform_int(1, 8); n > 0; --n) a.push_back("t" + std::to_string(rng.below(12)));
      for (auto n = rng.uniform_int(0, 8); n > 0; --n) b.push_back("t" + std::to_string(rng.below(12)));
      REQUIRE(*item_match(a, b) == doctest::Approx(testing::oracle::item_match(a, b)).epsilon(1e-15));
    }
  }

  TEST_CASE("profile match needs both fields") {
    std::vector<ProfilePair> batch{{Profile{30, Gender::Male}, Profile{30, Gender::Female}}};
    CHECK(*profile_match(batch) == 0.0);
    batch.push_back({Profile{30, Gender::Male}, Profile{30, Gender::Male}});
    batch.push_back({Profile{30, Gender::Male}, Profile{31, Gender::Male}});
    batch.push_back({Profile{30, Gender::Male}, std::nullopt});
    CHECK(*profile_match(batch) == doctest::Approx(0.25));
    CHECK_FALSE(profile_match({}));
  }

  TEST_CASE("bleu matches sacrebleu reference values") {
    CHECK(bleu("the cat sat on the mat", "the cat sat on the mat") == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(bleu("the cat sat on the mat", "the cat on the mat") == doctest::Approx(40.93653765389909).epsilon(1e-12));
    CHECK(bleu("the cat sat on the mat", "a dog") == 0.0);
    CHECK(bleu("a b c d e f", "a b c d e f g h") == doctest::Approx(68.037493331712).epsilon(1e-12));
    CHECK(bleu("The user liked \"Up\".", "The user liked \"Up\" .") ==
          doctest::Approx(39.76353643835252).epsilon(1e-12));
    CHECK(bleu("a b", "") == 0.0);
  }

  TEST_CASE("rouge-l and token f1 examples") {
    CHECK(rouge_l("the cat sat on the mat", "the cat on the mat") == doctest::Approx(10.0 / 11.0));
    CHECK(token_f1("the cat sat on the mat", "the cat on the mat") == doctest::Approx(10.0 / 11.0));
    CHECK(rouge_l("a b", "") == 0.0);
    CHECK(token_f1("a b", "c d") == 0.0);
    CHECK(token_f1("a a b", "a") == doctest::Approx(0.5));
  }

  TEST_CASE("text metrics agree with the frozen oracle corpus") {
    auto j = util::read_json(testing::fixture("metric_oracle.json"));
    for (const auto& p : j.at("pairs")) {
      const auto ref = p.at("reference").get<std::string>();
      const auto hyp = p.at("hypothesis").get<std::string>();
      REQUIRE(std::abs(bleu(ref, hyp) - p.at("bleu").get<double>()) <= 1e-9);
      REQUIRE(std::abs(rouge_l(ref, hyp) - p.at("rouge_l").get<double>()) <= 1e-9);
      REQUIRE(std::abs(token_f1(ref, hyp) - p.at("token_f1").get<double>()) <= 1e-9);
    }
  }

  TEST_CASE("segmentation of free text") {
    auto s = segment_prompt("Recommend a film. The user is a 30-year-old male. Liked \"A. B\", \"C\". Thanks!");
    CHECK(s.task == "Recommend a film.");
    CHECK(s.profile == "The user is a 30-year-old male.");
    CHECK(s.history == "Liked \"A. B\", \"C\".");
    CHECK(s.context == "Thanks!");
  }

  TEST_CASE("positional item match") {
    std::vector<corpus::InstructionSample> ss{sample("a", "", {"A", "B", "C"}), sample("b", "", {"D", "E"})};
    std::vector<ExtractionResult> ex(2);
    ex[0].titles = {"A", "C"};
    ex[1].titles = {"E"};
    auto rate = positional_item_match(ss, ex);
    CHECK(rate == std::vector<double>{0.5, 0.5, 1.0});
  }

  TEST_CASE("evaluate on identity reconstructions") {
    std::vector<corpus::InstructionSample> ss{
        sample("u/a", "The user is a 30-year-old male. Liked \"A\", \"B\".", {"A", "B"}, true,
               Profile{30, Gender::Male}),
        sample("u/b", "Liked \"C\".", {"C"})};
    std::vector<EvalPair> pairs{{&ss[0], ss[0].prompt}, {&ss[1], ss[1].prompt}};
    auto r = evaluate(pairs);
    CHECK(*r.aggregates.item_match == 1.0);
    CHECK(*r.aggregates.profile_match == 1.0);
    CHECK(r.profile_total == 1);
    CHECK(r.aggregates.bleu == doctest::Approx(100.0));
    CHECK(r.aggregates.rouge_l == doctest::Approx(1.0));
    CHECK(r.by_item_count.size() == 2);
    auto j = r.to_json();
    CHECK(j.contains("per_sample"));
    CHECK(r.per_sample_csv().find("u/b") != std::string::npos);

    std::vector<EvalPair> wrong{{&ss[0], "The user is a 30-year-old female. Liked \"A\"."}};
    auto w = evaluate(wrong);
    CHECK(*w.aggregates.profile_match == 0.0);
    CHECK(*w.aggregates.item_match == doctest::Approx(0.5));
  }

  TEST_CASE("evaluate on an empty batch") {
    auto r = evaluate({});
    CHECK(r.aggregates.count == 0);
    CHECK_FALSE(r.aggregates.item_match);
    CHECK_FALSE(r.aggregates.profile_match);
    CHECK_NOTHROW(r.to_json().dump());
  }
}
