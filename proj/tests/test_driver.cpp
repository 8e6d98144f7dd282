#include <doctest.h>

#include <string>
#include <vector>

#include "signtrack/chunker.hpp"
#include "signtrack/driver.hpp"
#include "signtrack/error.hpp"
#include "signtrack/metrics.hpp"
#include "signtrack/translator.hpp"
#include "support/synthetic.hpp"

using namespace signtrack;
using namespace signtrack::driver;

namespace {

const grammar::TimestampGrammar kGrammar{};

void check_same_track(const CaptionTrack& got, const CaptionTrack& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].span == want[i].span);
    CHECK(got[i].text == want[i].text);
  }
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_SUITE("timed translation") {
  TEST_CASE("empty translator advances by the fallback stride") {
    const auto features = FeatureTrack::timeline(300);
    EmptyTranslator t;
    const auto r = run_timed_translation(features, t, {}, kGrammar);
    CHECK(r.track.empty());
    REQUIRE(r.trace.windows.size() == 15);
    for (std::size_t i = 0; i < 15; ++i) CHECK(r.trace.windows[i].window.start_s == doctest::Approx(20.0 * i));
    CHECK(r.trace.windows.back().reason == AdvanceReason::finished);
    CHECK(r.trace.windows.front().reason == AdvanceReason::fallback);
  }

  TEST_CASE("oracle reproduces the reference") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto ref = testing::synthetic_track({.duration_s = 300, .seed = seed});
      const auto features = FeatureTrack::timeline(300);
      OracleTranslator t(ref);
      const auto r = run_timed_translation(features, t, {}, kGrammar);
      check_same_track(r.track, ref);
    }
  }

  TEST_CASE("window invariants") {
    const auto ref = testing::synthetic_track({.duration_s = 500, .seed = 8});
    const auto features = FeatureTrack::timeline(500);
    OracleTranslator t(ref);
    const DriverConfig cfg;
    const auto r = run_timed_translation(features, t, cfg, kGrammar);
    const auto& w = r.trace.windows;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i > 0) CHECK(w[i].window.start_s > w[i - 1].window.start_s);
      const bool first = i == 0;
      const bool last = i + 1 == w.size();
      for (const auto& c : w[i].accepted) {
        if (!first) CHECK(c.span.start_s >= w[i].window.start_s + cfg.head_margin_s - 1e-9);
        if (!last) CHECK(c.span.end_s <= w[i].window.start_s + cfg.window_s - cfg.tail_margin_s + 1e-9);
      }
    }
  }

  TEST_CASE("short video is one window") {
    const auto ref = testing::synthetic_track({.duration_s = 20, .seed = 2});
    const auto features = FeatureTrack::timeline(20);
    OracleTranslator t(ref);
    const auto r = run_timed_translation(features, t, {}, kGrammar);
    CHECK(r.trace.windows.size() == 1);
    check_same_track(r.track, ref);
  }

  TEST_CASE("stutter trips the livelock guard") {
    const auto features = FeatureTrack::timeline(300);
    StutterTranslator t;
    CHECK(code_of([&] { run_timed_translation(features, t, {}, kGrammar); }) == Errc::LivelockGuardTripped);
    DriverConfig cfg;
    cfg.max_windows = 5;
    CHECK(code_of([&] { run_timed_translation(features, t, cfg, kGrammar); }) == Errc::LivelockGuardTripped);
  }

  TEST_CASE("invalid config") {
    DriverConfig cfg;
    cfg.head_margin_s = 20;
    cfg.tail_margin_s = 20;
    CHECK(code_of([&] { cfg.validate(); }) == Errc::InvalidConfig);
  }

  TEST_CASE("jitter with zero sigma is the oracle") {
    const auto ref = testing::synthetic_track({.duration_s = 200, .seed = 4});
    const auto features = FeatureTrack::timeline(200);
    JitterOracle t(ref, 0.0, 3);
    check_same_track(run_timed_translation(features, t, {}, kGrammar).track, ref);
  }

  TEST_CASE("jittered captions stay in the video and keep their order of starts defined") {
    const auto ref = testing::synthetic_track({.duration_s = 200, .seed = 4});
    const auto a = jitter_captions(ref.captions(), 2.0, 11, 200);
    const auto b = jitter_captions(ref.captions(), 2.0, 11, 200);
    CHECK(a == b);
    REQUIRE(a.size() == ref.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].span.start_s >= 0);
      CHECK(a[i].span.end_s <= 200);
      CHECK(a[i].span.start_s <= a[i].span.end_s);
      CHECK(std::abs(a[i].span.start_s - ref[i].span.start_s) <= 4.0 + 1e-9);
    }
  }
}

TEST_SUITE("oracle") {
  TEST_CASE("answers relative to the window") {
    const CaptionTrack ref({{{10, 20}, "early", 0}, {{60, 70}, "hi", 1}, {{80, 90}, "crosses", 2}}, 100);
    const auto features = FeatureTrack::timeline(100);
    const auto slice = chunker::slice_features(features, {50, 84});
    OracleTranslator t(ref);
    CHECK(t.translate(slice, "<|translate|><|timed|>") == "<|10.0|><|20.0|> hi");
    CHECK(t.translate(slice, "<|translate|><|untimed|>") == "hi");
    CHECK(t.translate(slice, "<|align|><|breaks:input|><|overflow|><|left:0.0|>\nhi\ncrosses") ==
          "<|10.0|><|20.0|> hi\n<|30.0|><|34.0|><|cont|> crosses");
    CHECK(t.translate(slice, "<|align|><|breaks:input|><|overflow|><|left:15.0|>\ncrosses") ==
          "<|30.0|><|34.0|><|cont|> crosses");
  }
}

TEST_SUITE("untimed and sentence level") {
  TEST_CASE("untimed discourse joins the accepted text") {
    const auto ref = testing::synthetic_track({.duration_s = 150, .seed = 6});
    const auto features = FeatureTrack::timeline(150);
    OracleTranslator t(ref);
    const auto r = run_untimed_discourse(features, t, {}, kGrammar);
    std::string want;
    for (const auto& s : ref.texts()) want += (want.empty() ? "" : " ") + s;
    CHECK(r.text == want);
    EmptyTranslator e;
    CHECK(run_untimed_discourse(features, e, {}, kGrammar).text.empty());
  }

  TEST_CASE("sentence level passes the output through") {
    const CaptionTrack ref({{{3, 8}, "a sentence.", 0}}, 20);
    const auto features = FeatureTrack::timeline(20);
    OracleTranslator t(ref);
    CHECK(run_sentence_level(features, {3, 8}, std::nullopt, t, {}, kGrammar) == "a sentence.");
    CHECK(run_sentence_level(features, {3, 8}, std::string("before"), t, {}, kGrammar) == "a sentence.");
  }

  TEST_CASE("sentence longer than the window") {
    const auto features = FeatureTrack::timeline(100);
    EmptyTranslator t;
    CHECK(code_of([&] { run_sentence_level(features, {0, 40}, std::nullopt, t, {}, kGrammar); }) ==
          Errc::ClipTooLong);
  }
}

TEST_SUITE("alignment") {
  TEST_CASE("oracle alignment recovers the reference") {
    const auto ref = testing::synthetic_track({.duration_s = 300, .seed = 9});
    const auto features = FeatureTrack::timeline(300);
    OracleTranslator t(ref);
    const auto r = run_alignment(features, ref.texts(), t, {}, kGrammar);
    CHECK_FALSE(r.decoherence);
    CHECK(r.unconsumed.empty());
    check_same_track(r.track, ref);
    CHECK(metrics::frame_accuracy(r.track, ref).frame_accuracy == 1.0);
  }

  TEST_CASE("unrelated output is decoherent") {
    const auto ref = testing::synthetic_track({.duration_s = 100, .seed = 9});
    const auto features = FeatureTrack::timeline(100);
    StutterTranslator t;
    const auto r = run_alignment(features, ref.texts(), t, {}, kGrammar);
    CHECK(r.decoherence.has_value());
    CHECK_FALSE(r.unconsumed.empty());
  }

  TEST_CASE("nothing to align") {
    const auto features = FeatureTrack::timeline(100);
    EmptyTranslator t;
    const auto r = run_alignment(features, {}, t, {}, kGrammar);
    CHECK(r.track.empty());
    CHECK(r.track.video_duration_s() == 100);
  }
}

TEST_SUITE("subprocess") {
  TEST_CASE("line protocol round trip") {
    SubprocessTranslator t(
        "python3 -u -c 'import sys, json\n"
        "for l in sys.stdin:\n"
        "    r = json.loads(l)\n"
        "    print(json.dumps({\"request_id\": r[\"request_id\"], \"output_text\": r[\"input_text\"][::-1]}), flush=True)'");
    const auto features = FeatureTrack::timeline(50);
    const auto slice = chunker::slice_features(features, {0, 34});
    CHECK(t.translate(slice, "abc") == "cba");
    CHECK(t.translate(slice, "xy\nz") == "z\nyx");
  }

  TEST_CASE("echoing empty output drives to the end") {
    SubprocessTranslator t(
        "python3 -u -c 'import sys, json\n"
        "for l in sys.stdin:\n"
        "    print(json.dumps({\"request_id\": json.loads(l)[\"request_id\"], \"output_text\": \"\"}), flush=True)'");
    const auto features = FeatureTrack::timeline(100);
    const auto r = run_timed_translation(features, t, {}, kGrammar);
    CHECK(r.track.empty());
    CHECK(r.trace.windows.size() == 5);
  }

  TEST_CASE("a dead child is a translator failure") {
    SubprocessTranslator t("exit 0");
    const auto features = FeatureTrack::timeline(50);
    CHECK(code_of([&] { run_timed_translation(features, t, {}, kGrammar); }) == Errc::TranslatorFailure);
  }

  TEST_CASE("garbage responses are rejected") {
    SubprocessTranslator t("while read l; do echo '{\"request_id\": 999, \"output_text\": \"\"}'; done");
    const auto features = FeatureTrack::timeline(50);
    const auto slice = chunker::slice_features(features, {0, 34});
    CHECK(code_of([&] { t.translate(slice, "x"); }) == Errc::TranslatorFailure);
  }
}
