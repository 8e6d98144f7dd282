#include "signtrack/translator.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "signtrack/error.hpp"
#include "signtrack/keyed_rng.hpp"
#include "signtrack/text.hpp"

extern char** environ;

namespace signtrack::driver {

using grammar::TimedLine;

OracleTranslator::OracleTranslator(CaptionTrack reference, grammar::TimestampGrammar grammar)
    : reference_(std::move(reference)), grammar_(grammar) {}

std::vector<TimedLine> OracleTranslator::perturb(std::vector<TimedLine> lines,
                                                 const TimeSpan&) const {
  return lines;
}

std::string OracleTranslator::translate(const FeatureSlice& features, std::string_view input_text) {
  const auto input = grammar::parse_input(input_text);
  const TimeSpan window{features.start_s, features.end_s};
  std::vector<TimedLine> lines;

  if (input.branch == grammar::Branch::translation) {
    std::vector<std::string> texts;
    for (const Caption& c : reference_.captions()) {
      if (!window.contains(c.span)) continue;
      lines.push_back({c.span, text::normalize_whitespace(c.text), false, c.index});
      texts.push_back(lines.back().text);
    }
    if (input.timing == grammar::Timing::untimed) return text::join(texts, " ");
  } else {
    const double left = window.start_s + input.left_edge_rel_s.value_or(0.0);
    for (const Caption& c : reference_.captions()) {
      if (c.span.start_s < left - 1e-6 || c.span.start_s >= window.end_s) continue;
      const std::string flat = text::normalize_whitespace(c.text);
      if (c.span.end_s <= window.end_s) {
        lines.push_back({c.span, flat, false, c.index});
      } else {
        lines.push_back({{c.span.start_s, window.end_s}, flat, true, c.index});
      }
    }
  }
  return grammar::render_timed_lines(perturb(std::move(lines), window), window.start_s, grammar_,
                                     window.duration());
}

double truncated_normal(KeyedRng& rng) {
  for (;;) {
    const double z = rng.normal();
    if (std::abs(z) <= 2.0) return z;
  }
}

namespace {

std::pair<double, double> jitter_span(const TimeSpan& span, std::size_t index, double sigma,
                                      std::uint64_t seed, double lo, double hi) {
  if (sigma <= 0.0) return {span.start_s, span.end_s};
  auto rng = KeyedRng::for_record(seed, "", index, 0, "jitter");
  const double s = std::clamp(span.start_s + sigma * truncated_normal(rng), lo, hi);
  double e = std::clamp(span.end_s + sigma * truncated_normal(rng), lo, hi);
  if (e < s) e = s;
  return {s, e};
}

}  // namespace

JitterOracle::JitterOracle(CaptionTrack reference, double sigma_s, std::uint64_t seed,
                           grammar::TimestampGrammar grammar)
    : OracleTranslator(std::move(reference), grammar), sigma_s_(sigma_s), seed_(seed) {
  if (!(sigma_s >= 0.0)) throw Error(Errc::InvalidConfig, "jitter sigma must be >= 0");
}

std::vector<TimedLine> JitterOracle::perturb(std::vector<TimedLine> lines,
                                             const TimeSpan& window) const {
  for (TimedLine& l : lines) {
    const auto [s, e] = jitter_span(l.span, l.line, sigma_s_, seed_, window.start_s, window.end_s);
    l.span = {s, e};
  }
  return lines;
}

std::vector<Caption> jitter_captions(std::span<const Caption> captions, double sigma_s,
                                     std::uint64_t seed, double duration_s) {
  std::vector<Caption> out(captions.begin(), captions.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [s, e] = jitter_span(out[i].span, i, sigma_s, seed, 0.0, duration_s);
    out[i].span = {s, e};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subprocess protocol

SubprocessTranslator::SubprocessTranslator(std::string command) : command_(std::move(command)) {
  // A child that exits early must surface as a failed write, not a signal.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(Errc::TranslatorFailure, "pipe: " + std::string(std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(Errc::TranslatorFailure, "pipe: " + std::string(std::strerror(errno)));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
    posix_spawn_file_actions_addclose(&actions, fd);
  }
  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  char* argv[] = {sh.data(), dash_c.data(), command_.data(), nullptr};
  const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    pid_ = -1;
    throw Error(Errc::TranslatorFailure, "cannot start translator: " + std::string(std::strerror(rc)));
  }
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
}

SubprocessTranslator::~SubprocessTranslator() { shutdown(); }

void SubprocessTranslator::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  to_child_ = -1;
  if (from_child_ != nullptr) std::fclose(from_child_);
  from_child_ = nullptr;
  if (pid_ > 0) {
    int status = 0;
    while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
}

std::string SubprocessTranslator::translate(const FeatureSlice& features, std::string_view input_text) {
  std::lock_guard lock(mu_);
  if (to_child_ < 0) throw Error(Errc::TranslatorFailure, "translator process is not running");

  const std::uint64_t id = next_id_++;
  nlohmann::json req = {
      {"request_id", id},
      {"window_start_s", features.start_s},
      {"feature_file", features.track ? features.track->source_path() : std::string()},
      {"frame_range", {features.first_frame, features.end_frame}},
      {"input_text", std::string(input_text)},
  };
  std::string line;
  try {
    line = req.dump() + "\n";
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::TranslatorFailure, std::string("request is not valid UTF-8: ") + e.what());
  }
  for (std::size_t off = 0; off < line.size();) {
    const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(Errc::TranslatorFailure, "translator closed its input");
    off += static_cast<std::size_t>(n);
  }

  char* buf = nullptr;
  std::size_t cap = 0;
  const ssize_t got = getline(&buf, &cap, from_child_);
  std::string reply = got > 0 ? std::string(buf, static_cast<std::size_t>(got)) : std::string();
  std::free(buf);
  if (got <= 0) throw Error(Errc::TranslatorFailure, "translator exited without replying");
  try {
    const auto resp = nlohmann::json::parse(reply);
    if (resp.at("request_id").get<std::uint64_t>() != id) {
      throw Error(Errc::TranslatorFailure, "response id does not match request " + std::to_string(id));
    }
    return resp.at("output_text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::TranslatorFailure, std::string("bad translator response: ") + e.what());
  }
}

std::unique_ptr<TranslatorPort> make_translator(std::string_view spec, const CaptionTrack* reference,
                                                std::uint64_t seed) {
  auto need_reference = [&] {
    if (reference == nullptr) {
      throw Error(Errc::InvalidConfig, "translator '" + std::string(spec) + "' needs a reference track");
    }
  };
  if (spec == "empty") return std::make_unique<EmptyTranslator>();
  if (spec == "stutter") return std::make_unique<StutterTranslator>();
  if (spec == "oracle") {
    need_reference();
    return std::make_unique<OracleTranslator>(*reference);
  }
  if (spec.starts_with("jitter:")) {
    need_reference();
    const std::string sigma(spec.substr(7));
    char* end = nullptr;
    const double s = std::strtod(sigma.c_str(), &end);
    if (sigma.empty() || *end != '\0') throw Error(Errc::InvalidConfig, "bad jitter sigma '" + sigma + "'");
    return std::make_unique<JitterOracle>(*reference, s, seed);
  }
  if (text::is_blank(spec)) throw Error(Errc::InvalidConfig, "empty translator command");
  return std::make_unique<SubprocessTranslator>(std::string(spec));
}

}  // namespace signtrack::driver
