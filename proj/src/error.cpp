#include "signtrack/error.hpp"

namespace signtrack {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedCue: return "MalformedCue";
    case Errc::OverlappingCues: return "OverlappingCues";
    case Errc::NonMonotonicTimes: return "NonMonotonicTimes";
    case Errc::InvalidCaption: return "InvalidCaption";
    case Errc::InvalidTrack: return "InvalidTrack";
    case Errc::UnknownSplit: return "UnknownSplit";
    case Errc::DuplicateVideoId: return "DuplicateVideoId";
    case Errc::MissingField: return "MissingField";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::MalformedFeatureFile: return "MalformedFeatureFile";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonPositiveDuration: return "NonPositiveDuration";
    case Errc::SpanOutOfRange: return "SpanOutOfRange";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::CaptionOutsideWindow: return "CaptionOutsideWindow";
    case Errc::EmptyClip: return "EmptyClip";
    case Errc::TranslatorFailure: return "TranslatorFailure";
    case Errc::LivelockGuardTripped: return "LivelockGuardTripped";
    case Errc::ClipTooLong: return "ClipTooLong";
    case Errc::DecoherenceDetected: return "DecoherenceDetected";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DurationMismatch: return "DurationMismatch";
    case Errc::EmptyTexts: return "EmptyTexts";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace signtrack
