#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "signtrack/error.hpp"
#include "signtrack/metrics.hpp"
#include "support/synthetic.hpp"

using namespace signtrack;
using namespace signtrack::metrics;

namespace {

Caption cap(double s, double e, std::string t, std::size_t i = 0) { return {{s, e}, std::move(t), i}; }

// Frozen from sacrebleu 2.6.0, tokenize="intl", smooth_method="none".
const std::vector<std::string> kHyps = {
    "The quick brown fox jumps over the lazy dog.",
    "On 4:41.30, the train left the station, heading north!",
    "She said: \"I'll be there at 5 o'clock\".",
    "A new bridge opened in spring, connecting two towns.",
    "Prices rose by 3.5% in 2019 (mostly food).",
};
const std::vector<std::string> kRefs = {
    "The quick brown fox jumped over the lazy dog.",
    "At 4:41.30 the train left the station heading north.",
    "She said she would be there at 5 o'clock.",
    "In spring a new bridge opened, connecting the two towns.",
    "Prices rose 3.5% in 2019, mostly for food.",
};

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("matches the reference tokenizer") {
    CHECK(tokenize_intl("Hello, world!") == "Hello , world !");
    CHECK(tokenize_intl("4:41.30") == "4:41.30");
    CHECK(tokenize_intl("") == "");
    CHECK(tokenize_intl("It costs $5.00 (approx.) — really?") == "It costs $ 5.00 ( approx . ) — really ?");
    CHECK(tokenize_intl("In 2019. The end") == "In 2019 . The end");
    CHECK(tokenize_intl("«Bonjour», dit-il.") == "« Bonjour » , dit - il .");
    CHECK(tokenize_intl("a+b=c 3,000 people") == "a + b = c 3,000 people");
    CHECK(tokenize_intl("Ünïcödé… test’s") == "Ünïcödé … test ’ s");
    CHECK(tokenize_intl_tokens("  a  b ") == std::vector<std::string>{"a", "b"});
  }
}

TEST_SUITE("bleu") {
  TEST_CASE("five segment corpus") {
    const auto r = corpus_bleu(kHyps, kRefs);
    CHECK(r.score == doctest::Approx(40.4336920564122).epsilon(1e-12));
    CHECK(r.precisions[0] == doctest::Approx(73.77049180327869));
    CHECK(r.precisions[1] == doctest::Approx(50.0));
    CHECK(r.precisions[2] == doctest::Approx(33.333333333333336));
    CHECK(r.precisions[3] == doctest::Approx(21.73913043478261));
    CHECK(r.brevity_penalty == 1.0);
    CHECK(r.hyp_len == 61);
    CHECK(r.ref_len == 55);
    CHECK(r.correct == std::array<std::size_t, 4>{45, 28, 17, 10});
    CHECK(r.total == std::array<std::size_t, 4>{61, 56, 51, 46});
    CHECK(r.signature == "nrefs:1|case:mixed|eff:no|tok:intl|smooth:none|version:signtrack-0.1.0");
  }

  TEST_CASE("short hypothesis with no 4-grams") {
    const std::vector<std::string> h = {"the cat sat"}, r = {"the cat sat on the mat"};
    const auto b = corpus_bleu(h, r);
    CHECK(b.score == 0.0);
    CHECK(b.precisions == std::array<double, 4>{100, 100, 100, 0});
    CHECK(b.brevity_penalty == doctest::Approx(0.36787944117144233));
    CHECK(b.correct == std::array<std::size_t, 4>{3, 2, 1, 0});
    CHECK(b.total == std::array<std::size_t, 4>{3, 2, 1, 0});
    const std::vector<std::string> two = {"the cat"};
    const auto c = corpus_bleu(two, two);
    CHECK(c.score == 0.0);
    CHECK(c.precisions == std::array<double, 4>{100, 100, 0, 0});
  }

  TEST_CASE("identity scores exactly 100") {
    CHECK(corpus_bleu(kRefs, kRefs).score == 100.0);
  }

  TEST_CASE("empty hypotheses") {
    const std::vector<std::string> h(kRefs.size());
    CHECK(corpus_bleu(h, kRefs).score == 0.0);
  }

  TEST_CASE("segment count mismatch") {
    const std::vector<std::string> h = {"a"};
    CHECK_THROWS_AS(corpus_bleu(h, kRefs), Error);
  }

  TEST_CASE("corpus score does not depend on segment order") {
    auto h = kHyps;
    auto r = kRefs;
    std::swap(h[0], h[3]);
    std::swap(r[0], r[3]);
    CHECK(corpus_bleu(h, r).score == doctest::Approx(corpus_bleu(kHyps, kRefs).score));
  }
}

TEST_SUITE("timed bleu") {
  TEST_CASE("character times use midpoints") {
    const auto t = char_times(cap(0, 4, "abcd"));
    CHECK(t == std::vector<double>{0.5, 1.5, 2.5, 3.5});
    const auto u = char_times(cap(10, 11, "é"));
    REQUIRE(u.size() == 1);
    CHECK(u[0] == 10.5);
  }

  TEST_CASE("reslicing the reference is the identity") {
    const auto ref = testing::synthetic_track({.duration_s = 120, .seed = 5});
    const auto segs = reslice_by_reference(ref.captions(), ref.captions());
    CHECK(segs == ref.texts());
  }

  TEST_CASE("a caption split across two references") {
    const std::vector<Caption> hyp = {cap(0, 10, "abcde fghi")};
    const std::vector<Caption> ref = {cap(0, 5, "x", 0), cap(5, 10, "y", 1)};
    CHECK(reslice_by_reference(hyp, ref) == std::vector<std::string>{"abcde", "fghi"});
  }

  TEST_CASE("pieces from different captions are separated") {
    const std::vector<Caption> hyp = {cap(0, 2, "ab", 0), cap(2, 4, "cd", 1), cap(20, 22, "lost", 2)};
    const std::vector<Caption> ref = {cap(0, 4, "x", 0), cap(5, 6, "y", 1)};
    CHECK(reslice_by_reference(hyp, ref) == std::vector<std::string>{"ab cd", ""});
  }

  TEST_CASE("exact timing equals plain bleu and a large shift scores 0") {
    const auto ref = testing::synthetic_track({.duration_s = 120, .seed = 5});
    const auto texts = ref.texts();
    CHECK(timed_bleu(ref.captions(), ref.captions()).score == corpus_bleu(texts, texts).score);
    std::vector<Caption> shifted;
    for (const auto& c : ref.captions()) shifted.push_back(cap(c.span.start_s + 500, c.span.end_s + 500, c.text, c.index));
    CHECK(timed_bleu(shifted, ref.captions()).score == 0.0);
  }

  TEST_CASE("resliced segments export") {
    const std::vector<Caption> ref = {cap(0, 1, "a \"q\"")};
    const std::vector<std::string> hyp = {"b"};
    CHECK(resliced_segments_jsonl(hyp, ref, "v") ==
          "{\"hyp_text\":\"b\",\"ref_text\":\"a \\\"q\\\"\",\"segment_id\":0,\"video_id\":\"v\"}\n");
  }
}

TEST_SUITE("frame accuracy") {
  TEST_CASE("identity") {
    const auto ref = testing::synthetic_track({.duration_s = 60, .seed = 2});
    const auto c = frame_counts(ref, ref);
    CHECK(c.total == 1800);
    CHECK(c.matching == 1800);
  }

  TEST_CASE("half shifted") {
    const CaptionTrack ref({cap(0, 10, "a", 0), cap(10, 20, "b", 1)}, 20);
    const CaptionTrack pred({cap(5, 15, "a", 0), cap(15, 20, "b", 1)}, 20);
    CHECK(frame_accuracy(pred, ref).frame_accuracy == doctest::Approx(0.5));
  }

  TEST_CASE("background frames count") {
    const CaptionTrack ref({cap(2, 4, "a", 0)}, 10);
    const CaptionTrack none(std::vector<Caption>{}, 10);
    CHECK(frame_accuracy(none, ref).frame_accuracy == doctest::Approx(0.8));
    CHECK(frame_accuracy(none, none).frame_accuracy == 1.0);
  }

  TEST_CASE("durations must agree") {
    const CaptionTrack a(std::vector<Caption>{}, 10);
    const CaptionTrack b(std::vector<Caption>{}, 11);
    CHECK_THROWS_AS(frame_counts(a, b), Error);
    const CaptionTrack c(std::vector<Caption>{}, 10.01);
    CHECK_NOTHROW(frame_counts(a, c));
  }

  TEST_CASE("pooling weighs by frames") {
    const auto r = aggregate_alignment({{"a", {10, 10}}, {"b", {0, 30}}});
    CHECK(r.frame_accuracy == doctest::Approx(0.25));
  }
}

TEST_SUITE("length scaling") {
  TEST_CASE("equal texts get equal spans") {
    const std::vector<std::string> t = {"aaaaa", "bbbbb", "ccccc"};
    const auto track = length_scaling_align(t, {0, 30});
    REQUIRE(track.size() == 3);
    CHECK(track[0].span == captions::TimeSpan{0, 10});
    CHECK(track[1].span == captions::TimeSpan{10, 20});
    CHECK(track[2].span == captions::TimeSpan{20, 30});
  }

  TEST_CASE("thirds land on milliseconds and the end is exact") {
    const std::vector<std::string> t = {"a", "bb"};
    const auto track = length_scaling_align(t, {1, 9}, 12);
    CHECK(track[0].span.end_s == doctest::Approx(1 + 8.0 / 3).epsilon(1e-3));
    CHECK(track[0].span.end_s * 1000 == std::round(track[0].span.end_s * 1000));
    CHECK(track[1].span.end_s == 9.0);
    CHECK(track.video_duration_s() == 12);
  }

  TEST_CASE("no characters") {
    const std::vector<std::string> t = {"", ""};
    CHECK_THROWS_AS(length_scaling_align(t, {0, 10}), Error);
  }

  TEST_CASE("proportional speech is recovered") {
    const auto ref = testing::synthetic_track({.duration_s = 200, .max_gap_ds = 0, .seed = 3});
    std::vector<std::string> texts;
    // one character per tenth of a second
    for (const auto& c : ref.captions()) {
      texts.push_back(std::string(static_cast<std::size_t>(std::lround(c.span.duration() * 10)), 'x'));
    }
    const auto track = length_scaling_align(texts, {ref[0].span.start_s, ref[ref.size() - 1].span.end_s}, 200);
    for (std::size_t i = 0; i < track.size(); ++i) CHECK(track[i].span.end_s == doctest::Approx(ref[i].span.end_s));
  }
}
