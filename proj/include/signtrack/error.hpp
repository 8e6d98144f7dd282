#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace signtrack {

enum class Errc {
  // captions
  MalformedCue,
  OverlappingCues,
  NonMonotonicTimes,
  InvalidCaption,
  InvalidTrack,
  UnknownSplit,
  DuplicateVideoId,
  MissingField,
  MalformedRecord,
  MalformedFeatureFile,
  EmptyInput,
  // chunker
  NonPositiveDuration,
  SpanOutOfRange,
  InvalidConfig,
  // grammar
  CaptionOutsideWindow,
  EmptyClip,
  // driver
  TranslatorFailure,
  LivelockGuardTripped,
  ClipTooLong,
  DecoherenceDetected,
  // metrics
  LengthMismatch,
  DurationMismatch,
  EmptyTexts,
  // plumbing
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every library failure is reported as an Error carrying a stable code; the
/// message holds the human-readable location (file, line, window, ...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix, for re-wrapping with more context.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace signtrack
