#include <doctest.h>

#include <string>
#include <vector>

#include "signtrack/chunker.hpp"
#include "signtrack/error.hpp"
#include "signtrack/task_grammar.hpp"
#include "signtrack/text.hpp"
#include "support/synthetic.hpp"

using namespace signtrack;
using namespace signtrack::grammar;
using captions::Caption;

namespace {

const TimestampGrammar kGrammar{};

Caption cap(double s, double e, std::string t) { return {{s, e}, std::move(t), 0}; }

}  // namespace

TEST_SUITE("timestamps") {
  TEST_CASE("format") {
    CHECK(kGrammar.decimals() == 1);
    CHECK(kGrammar.format(13.9) == "13.9");
    CHECK(kGrammar.format(6.04) == "6.0");
    CHECK(kGrammar.timestamp_token(0) == "<|0.0|>");
    CHECK(TimestampGrammar{0.02, 34}.format(1.234) == "1.24");
  }

  TEST_CASE("render is window-relative") {
    const std::vector<Caption> caps = {cap(56, 63.9, "first caption"), cap(64, 70, "second")};
    CHECK(render_timed_track(caps, 50, kGrammar) == "<|6.0|><|13.9|> first caption\n<|14.0|><|20.0|> second");
    CHECK(render_timed_track({}, 50, kGrammar).empty());
  }

  TEST_CASE("render rejects captions outside the window") {
    const std::vector<Caption> caps = {cap(49, 55, "early")};
    CHECK_THROWS_AS(render_timed_track(caps, 50, kGrammar), Error);
    const std::vector<Caption> late = {cap(60, 90, "late")};
    CHECK_THROWS_AS(render_timed_track(late, 50, kGrammar, 34.0), Error);
  }

  TEST_CASE("parse well-formed output") {
    const auto p = parse_timed_track("<|6.0|><|13.9|> first caption\n<|14.0|><|34.0|><|cont|> runs on", 50, kGrammar);
    REQUIRE(p.lines.size() == 2);
    CHECK(p.diagnostics.empty());
    CHECK(p.lines[0].span == captions::TimeSpan{56.0, 63.9});
    CHECK(p.lines[0].text == "first caption");
    CHECK(p.lines[1].continues);
    CHECK(p.lines[1].line == 2);
  }

  TEST_CASE("parse reports and skips bad lines") {
    const std::string out =
        "<|1.0|><|2.0|> ok\n"
        "<|3.0|> missing end\n"
        "<|2.5|><|3.0|> overlaps previous? no, starts after\n"
        "<|2.8|><|4.0|> starts before previous end\n"
        "<|5.0|><|4.0|> inverted\n"
        "<|5.05|><|6.0|> off grid\n"
        "<|6.0|><|40.0|> past window\n"
        "<|7.0|><|8.0|>   \n"
        "\n"
        "free text\n"
        "<|9.0|><|9.5|> ok again";
    const auto p = parse_timed_track(out, 0, kGrammar);
    REQUIRE(p.lines.size() == 3);
    CHECK(p.lines[2].text == "ok again");
    REQUIRE(p.diagnostics.size() == 7);
    CHECK(p.diagnostics[0].kind == LineError::MalformedTimestamp);
    CHECK(p.diagnostics[0].line == 2);
    CHECK(p.diagnostics[1].kind == LineError::NonMonotonic);
    CHECK(p.diagnostics[2].kind == LineError::NonMonotonic);
    CHECK(p.diagnostics[3].kind == LineError::MalformedTimestamp);
    CHECK(p.diagnostics[4].kind == LineError::OutOfWindow);
    CHECK(p.diagnostics[5].kind == LineError::EmptyText);
    CHECK(p.diagnostics[6].kind == LineError::MalformedTimestamp);
  }

  TEST_CASE("render then parse is the identity on quantized tracks") {
    KeyedRng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
      const double origin = static_cast<double>(rng.next_u64() % 100000) / 10.0;
      std::vector<Caption> caps;
      int t = static_cast<int>(rng.next_u64() % 30);
      while (true) {
        const int d = static_cast<int>(rng.next_u64() % 120);
        if (t + d > 340) break;
        caps.push_back({{captions::quantize_millis(origin + t / 10.0), captions::quantize_millis(origin + (t + d) / 10.0)},
                        testing::random_sentence(rng, 1 + rng.next_u64() % 6),
                        caps.size()});
        t += d + static_cast<int>(rng.next_u64() % 40);
      }
      const auto parsed = parse_timed_track(render_timed_track(caps, origin, kGrammar), origin, kGrammar);
      REQUIRE(parsed.diagnostics.empty());
      REQUIRE(parsed.captions() == caps);
    }
  }
}

TEST_SUITE("context budget") {
  TEST_CASE("suffix truncation keeps whole captions") {
    const std::vector<std::string> texts = {"one two three", "four five", "six"};
    CHECK(truncate_context(texts, 3) == "four five six");
    CHECK(truncate_context(texts, 4) == "four five six");
    CHECK(truncate_context(texts, 6) == "one two three four five six");
    CHECK(truncate_context(texts, 0).empty());
  }

  TEST_CASE("a single oversized caption is cut at a unit boundary") {
    const std::vector<std::string> texts = {"a b c d e f"};
    CHECK(truncate_context(texts, 2) == "e f");
    CHECK(truncate_context(std::string_view("x  y z"), 2) == "y z");
    CHECK(truncate_leading(texts, 2) == std::vector<std::string>{"a b"});
  }

  TEST_CASE("custom units") {
    const UnitSplitter chars = [](std::string_view s) {
      std::vector<std::string_view> out;
      for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.substr(i, 1));
      return out;
    };
    const std::vector<std::string> texts = {"abc", "de"};
    CHECK(truncate_context(texts, 3, chars) == "de");
  }

  TEST_CASE("leading truncation keeps whole captions from the front") {
    const std::vector<std::string> texts = {"one two", "three", "four five six"};
    CHECK(truncate_leading(texts, 4) == std::vector<std::string>{"one two", "three"});
  }
}

TEST_SUITE("inputs") {
  TEST_CASE("translation input layout and parse") {
    const auto in = translation_input(Timing::timed, 5.24, "earlier words", "later words", kGrammar);
    CHECK(in == "<|translate|><|timed|><|avgdur:5.2|>\n<|prev|> earlier words\n<|next|> later words");
    const auto p = parse_input(in);
    CHECK(p.branch == Branch::translation);
    CHECK(p.timing == Timing::timed);
    CHECK(*p.avg_duration_s == doctest::Approx(5.2));
    CHECK(p.prev_text == "earlier words");
    CHECK(p.next_text == "later words");
    CHECK(translation_input(Timing::untimed, std::nullopt, "", "", kGrammar) == "<|translate|><|untimed|>");
  }

  TEST_CASE("alignment input layout and parse") {
    const std::vector<std::string> caps = {"A.", "B."};
    const auto in = alignment_input(SepMode::input_specifies_breaks, SpanMode::overflow, std::nullopt, 3.0, caps, kGrammar);
    CHECK(in == "<|align|><|breaks:input|><|overflow|><|left:3.0|>\nA.\nB.");
    const auto p = parse_input(in);
    CHECK(p.branch == Branch::alignment);
    CHECK(p.captions_text == caps);
    CHECK(*p.left_edge_rel_s == 3.0);
    const auto joined = alignment_input(SepMode::model_predicts_breaks, SpanMode::subset, 4.0, 0.0, caps, kGrammar);
    CHECK(joined == "<|align|><|breaks:model|><|subset|><|avgdur:4.0|><|left:0.0|>\nA. B.");
  }

  TEST_CASE("unknown headers are rejected") {
    CHECK_THROWS_AS(parse_input("<|dance|>"), Error);
    CHECK_THROWS_AS(parse_input("hello"), Error);
    CHECK_THROWS_AS(parse_input("<|timed|>"), Error);
  }
}

TEST_SUITE("task mixture") {
  TEST_CASE("descriptors respect the branch structure") {
    KeyedRng rng(5);
    for (int i = 0; i < 5000; ++i) {
      const auto d = sample_task(rng);
      if (d.branch == Branch::alignment) {
        CHECK(d.context == ContextMode::none);
        if (d.sep == SepMode::input_specifies_breaks) CHECK_FALSE(d.duration_conditioning);
      } else if (d.timing == Timing::untimed) {
        CHECK_FALSE(d.duration_conditioning);
      }
    }
  }

  TEST_CASE("weights validation") {
    MixtureWeights w;
    w.context_prev = 0.7;
    CHECK_THROWS_AS(w.validate(), Error);
    MixtureWeights ok;
    CHECK_NOTHROW(ok.validate());
  }

  TEST_CASE("describe") {
    TaskDescriptor d;
    d.timing = Timing::timed;
    d.duration_conditioning = true;
    d.context = ContextMode::prev;
    CHECK(describe(d) == "translate/timed/dur/prev");
  }
}

TEST_SUITE("examples") {
  namespace ck = signtrack::chunker;

  ck::ChunkRecord chunk_with(std::vector<Caption> caps) {
    ck::ChunkRecord r;
    r.video_id = "v";
    r.span = {51, 119};
    r.position = ck::ChunkPosition::interior;
    r.context_span = {17, 153};
    r.context_captions = std::move(caps);
    r.video_duration_s = 340;
    r.mean_caption_s = 5.0;
    r.fps = 15;
    return r;
  }

  const std::vector<Caption> kCaps = {cap(40, 50, "before"),   cap(58, 64, "straddles start"),
                                      cap(65, 70, "inside one"), cap(71, 80, "inside two"),
                                      cap(90, 105, "crosses end"), cap(106, 110, "after")};

  TEST_CASE("timed translation example") {
    const auto chunk = chunk_with(kCaps);
    const ck::ClipSpec clip{"v", 0, 9, 34};  // absolute [60, 94]
    TaskDescriptor d;
    d.timing = Timing::timed;
    d.context = ContextMode::prev_and_next;
    const auto ex = render_example(chunk, clip, d, kGrammar);
    CHECK(ex.input_text == "<|translate|><|timed|>\n<|prev|> before straddles start\n<|next|> crosses end after");
    CHECK(ex.target_text == "<|5.0|><|10.0|> inside one\n<|11.0|><|20.0|> inside two");
    CHECK(ex.first_frame == 900);
    CHECK(ex.end_frame == 1410);
  }

  TEST_CASE("untimed translation without context") {
    const auto chunk = chunk_with(kCaps);
    TaskDescriptor d;
    d.timing = Timing::untimed;
    const auto ex = render_example(chunk, {"v", 0, 9, 34}, d, kGrammar);
    CHECK(ex.input_text == "<|translate|><|untimed|>");
    CHECK(ex.target_text == "inside one inside two");
  }

  TEST_CASE("alignment overflow flags the caption crossing the end") {
    const auto chunk = chunk_with(kCaps);
    TaskDescriptor d;
    d.branch = Branch::alignment;
    d.sep = SepMode::input_specifies_breaks;
    d.span = SpanMode::overflow;
    const auto ex = render_example(chunk, {"v", 0, 9, 34}, d, kGrammar);
    CHECK(ex.input_text ==
          "<|align|><|breaks:input|><|overflow|><|left:4.0|>\ninside one\ninside two\ncrosses end\nafter");
    CHECK(ex.target_text == "<|5.0|><|10.0|> inside one\n<|11.0|><|20.0|> inside two\n<|30.0|><|34.0|><|cont|> crosses end");
  }
}
