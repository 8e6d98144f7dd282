#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "signtrack/captions.hpp"
#include "signtrack/feature_track.hpp"
#include "signtrack/task_grammar.hpp"

namespace signtrack::driver {

using captions::Caption;
using captions::CaptionTrack;
using captions::FeatureSlice;
using captions::FeatureTrack;
using captions::TimeSpan;

/// The model boundary: one call per window. Implementations must not keep
/// state between calls that changes their output, and must be safe to call
/// from several threads (one per video) or serialize internally.
class TranslatorPort {
 public:
  virtual ~TranslatorPort() = default;
  virtual std::string translate(const FeatureSlice& features, std::string_view input_text) = 0;
};

/// Always "".
class EmptyTranslator final : public TranslatorPort {
 public:
  std::string translate(const FeatureSlice&, std::string_view) override { return {}; }
};

/// Emits the same short caption for every window, so the driver only ever
/// advances by half a second. Used to exercise the livelock guard.
class StutterTranslator final : public TranslatorPort {
 public:
  static constexpr std::string_view kLine = "<|4.0|><|4.5|> again";
  std::string translate(const FeatureSlice&, std::string_view) override { return std::string(kLine); }
};

/// Answers from a reference track. Translation inputs get the captions fully
/// inside the window (timed or plain text per the input header). Alignment
/// inputs get every caption starting at or after the left-edge token, with a
/// caption that crosses the window end clamped and flagged <|cont|>.
class OracleTranslator : public TranslatorPort {
 public:
  explicit OracleTranslator(CaptionTrack reference, grammar::TimestampGrammar grammar = {});
  std::string translate(const FeatureSlice& features, std::string_view input_text) override;

 protected:
  virtual std::vector<grammar::TimedLine> perturb(std::vector<grammar::TimedLine> lines,
                                                  const TimeSpan& window) const;

  CaptionTrack reference_;
  grammar::TimestampGrammar grammar_;
};

/// OracleTranslator with every timestamp moved by N(0, sigma^2) truncated to
/// +-2 sigma. The draw for a caption depends only on (seed, caption index), so
/// a caption gets the same noise in every window that shows it.
class JitterOracle final : public OracleTranslator {
 public:
  JitterOracle(CaptionTrack reference, double sigma_s, std::uint64_t seed,
               grammar::TimestampGrammar grammar = {});

 private:
  std::vector<grammar::TimedLine> perturb(std::vector<grammar::TimedLine> lines,
                                          const TimeSpan& window) const override;

  double sigma_s_;
  std::uint64_t seed_;
};

/// Standard normal truncated to [-2, 2] by rejection.
double truncated_normal(KeyedRng& rng);

/// Applies the JitterOracle noise model to a whole track: each boundary moves
/// independently, is clamped to [0, duration], and an inverted caption
/// collapses to its start. The result may overlap, so it is returned as a
/// plain caption list rather than a CaptionTrack.
std::vector<Caption> jitter_captions(std::span<const Caption> captions, double sigma_s,
                                     std::uint64_t seed, double duration_s);

/// Runs `/bin/sh -c command` once and exchanges one JSON object per line:
///   request  {"request_id", "window_start_s", "feature_file", "frame_range", "input_text"}
///   response {"request_id", "output_text"}
/// Calls are serialized, so one request is in flight at a time.
class SubprocessTranslator final : public TranslatorPort {
 public:
  explicit SubprocessTranslator(std::string command);
  ~SubprocessTranslator() override;
  SubprocessTranslator(const SubprocessTranslator&) = delete;
  SubprocessTranslator& operator=(const SubprocessTranslator&) = delete;

  std::string translate(const FeatureSlice& features, std::string_view input_text) override;

 private:
  void shutdown();

  std::string command_;
  std::mutex mu_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
  std::uint64_t next_id_ = 1;
};

/// Builds a translator from a CLI spec: "oracle", "empty", "stutter",
/// "jitter:SIGMA" (needs the reference), anything else is a shell command.
std::unique_ptr<TranslatorPort> make_translator(std::string_view spec, const CaptionTrack* reference,
                                                std::uint64_t seed);

}  // namespace signtrack::driver
