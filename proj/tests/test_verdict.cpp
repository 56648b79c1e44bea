#include <doctest.h>

#include "stepwiser/errors.hpp"
#include "stepwiser/rng.hpp"
#include "stepwiser/verdict.hpp"

using namespace stepwiser;

TEST_SUITE("verdict") {

TEST_CASE("parse_verdict handles both boxed spellings") {
  auto v = parse_verdict("…Thus, the final judgment is: \\boxed{Positive}");
  REQUIRE(v.ok());
  CHECK(*v.verdict == Label::Positive);

  v = parse_verdict("analysis text\n\\boxed{\\text{Negative}}");
  REQUIRE(v.ok());
  CHECK(*v.verdict == Label::Negative);

  v = parse_verdict("The final judgment is:\n\\[ \\boxed{Positive} \\] .");
  REQUIRE(v.ok());
  CHECK(*v.verdict == Label::Positive);
}

TEST_CASE("parse_verdict missing and malformed boxes") {
  auto v = parse_verdict("I think it is fine.");
  CHECK(v.parse_status == ParseStatus::MissingBox);
  CHECK_FALSE(v.verdict.has_value());

  v = parse_verdict("the answer is \\boxed{42}");
  CHECK(v.parse_status == ParseStatus::Malformed);

  v = parse_verdict("\\boxed{Posit");
  CHECK(v.parse_status == ParseStatus::Malformed);
}

TEST_CASE("parse_verdict last matching occurrence wins") {
  auto v = parse_verdict("\\boxed{Positive} ... wait, actually \\boxed{Negative}");
  REQUIRE(v.ok());
  CHECK(*v.verdict == Label::Negative);

  // A trailing non-vocabulary box does not erase an earlier verdict.
  v = parse_verdict("\\boxed{Negative} and the value was \\boxed{7}");
  REQUIRE(v.ok());
  CHECK(*v.verdict == Label::Negative);
}

TEST_CASE("parse_verdict rationale precedes the verdict box") {
  auto v = parse_verdict("step-by-step analysis here. \\boxed{Positive}");
  REQUIRE(v.ok());
  CHECK(v.rationale == "step-by-step analysis here. ");
}

TEST_CASE("parse_verdict recovers appended verdicts from fuzzed prefixes") {
  Rng rng(31337);
  static const char* fillers[] = {"check the algebra. ", "so far so good\n",
                                  "x = 3 follows, ", "verify: 2+2=4. "};
  for (int i = 0; i < 1000; ++i) {
    std::string prefix;
    const std::size_t parts = rng.next_index(5);
    for (std::size_t p = 0; p < parts; ++p) prefix += fillers[rng.next_index(4)];
    const bool positive = rng.next_bernoulli(0.5);
    const std::string text = prefix + (positive ? "\\boxed{Positive}" : "\\boxed{Negative}");
    auto v = parse_verdict(text);
    REQUIRE(v.ok());
    CHECK(*v.verdict == (positive ? Label::Positive : Label::Negative));
  }
}

TEST_CASE("reward definition") {
  RewardConfig standard;
  const JudgeVerdict positive{Label::Positive, "", ParseStatus::Ok};
  const JudgeVerdict negative{Label::Negative, "", ParseStatus::Ok};
  const JudgeVerdict missing{std::nullopt, "", ParseStatus::MissingBox};

  CHECK(reward(positive, Label::Positive, standard) == 1.0);
  CHECK(reward(negative, Label::Positive, standard) == 0.0);
  CHECK(reward(missing, Label::Positive, standard) == 0.0);
  CHECK(reward(missing, Label::Negative, standard) == 0.0);

  RewardConfig penalized;
  penalized.mode = RewardConfig::Mode::FormatPenalty;
  CHECK(reward(missing, Label::Positive, penalized) == -1.0);
  CHECK(reward(positive, Label::Positive, penalized) == 1.0);
  CHECK(reward(negative, Label::Positive, penalized) == 0.0);

  RewardConfig invalid;
  invalid.penalty = 0.5;
  CHECK_THROWS_AS(reward(positive, Label::Positive, invalid), ConfigError);
}

TEST_CASE("reward range in standard mode") {
  RewardConfig standard;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    JudgeVerdict v;
    switch (rng.next_index(3)) {
      case 0: v = {Label::Positive, "", ParseStatus::Ok}; break;
      case 1: v = {Label::Negative, "", ParseStatus::Ok}; break;
      default: v = {std::nullopt, "", ParseStatus::MissingBox}; break;
    }
    const Label gold = rng.next_bernoulli(0.5) ? Label::Positive : Label::Negative;
    const double r = reward(v, gold, standard);
    CHECK((r == 0.0 || r == 1.0));
  }
}

namespace {

std::vector<JudgeVerdict> ballots(const std::vector<char>& spec) {
  std::vector<JudgeVerdict> out;
  for (char c : spec) {
    if (c == 'P') out.push_back({Label::Positive, "", ParseStatus::Ok});
    if (c == 'N') out.push_back({Label::Negative, "", ParseStatus::Ok});
    if (c == 'x') out.push_back({std::nullopt, "", ParseStatus::MissingBox});
  }
  return out;
}

}  // namespace

TEST_CASE("majority_vote") {
  auto r = majority_vote(ballots({'P', 'P', 'P', 'N', 'N', 'P', 'N', 'P'}));
  CHECK(r.verdict == Label::Positive);  // 5-3

  r = majority_vote(ballots({'P', 'N', 'P', 'N'}));
  CHECK(r.verdict == Label::Negative);  // tie

  r = majority_vote(ballots({'P'}));
  CHECK(r.verdict == Label::Positive);

  r = majority_vote(ballots({'x', 'x'}));
  CHECK(r.verdict == Label::Negative);
  CHECK(r.all_failed);

  r = majority_vote(ballots({'x', 'P'}));
  CHECK(r.verdict == Label::Positive);  // failures excluded before voting
  CHECK_FALSE(r.all_failed);
}

TEST_CASE("majority_vote is permutation-invariant and duplication-idempotent") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::vector<char> spec;
    const std::size_t k = 1 + rng.next_index(9);
    for (std::size_t j = 0; j < k; ++j) {
      spec.push_back("PNx"[rng.next_index(3)]);
    }
    auto base = majority_vote(ballots(spec));

    std::vector<char> shuffled = spec;
    for (std::size_t j = shuffled.size(); j > 1; --j) {
      std::swap(shuffled[j - 1], shuffled[rng.next_index(j)]);
    }
    CHECK(majority_vote(ballots(shuffled)).verdict == base.verdict);

    std::vector<char> doubled = spec;
    doubled.insert(doubled.end(), spec.begin(), spec.end());
    CHECK(majority_vote(ballots(doubled)).verdict == base.verdict);
  }
}

}  // TEST_SUITE
