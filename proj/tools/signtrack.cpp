// signtrack: validate caption datasets, summarize them, build training
// examples, run chunked inference through a translator, and score results.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "signtrack/captions.hpp"
#include "signtrack/chunker.hpp"
#include "signtrack/driver.hpp"
#include "signtrack/error.hpp"
#include "signtrack/feature_track.hpp"
#include "signtrack/manifest.hpp"
#include "signtrack/metrics.hpp"
#include "signtrack/subtitle_io.hpp"
#include "signtrack/task_grammar.hpp"
#include "signtrack/text.hpp"
#include "signtrack/track_stats.hpp"
#include "signtrack/translator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace signtrack;
using captions::Caption;
using captions::CaptionTrack;
using captions::FeatureTrack;
using captions::ManifestEntry;
using captions::SubtitleFormat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

// "-" means stdout.
void emit(const std::string& path, std::string_view content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_file(path, content);
  }
}

SubtitleFormat subtitle_format(const fs::path& path) {
  const auto f = captions::format_from_path(path.string());
  if (!f) throw Error(Errc::Io, path.string() + ": expected a .vtt or .srt file");
  return *f;
}

CaptionTrack read_track(const fs::path& path, std::optional<double> duration = std::nullopt) {
  try {
    return captions::parse_caption_file(read_file(path), subtitle_format(path), duration);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// Dataset

struct Dataset {
  fs::path root;
  std::vector<ManifestEntry> entries;
};

Dataset load_dataset(const std::string& manifest_path, const std::string& split) {
  Dataset d;
  d.root = fs::path(manifest_path).parent_path();
  try {
    d.entries = captions::load_manifest(read_file(manifest_path));
  } catch (const Error& e) {
    throw Error(e.code(), manifest_path + ": " + e.message());
  }
  if (!split.empty()) {
    const auto s = captions::parse_split(split);
    if (!s) throw Error(Errc::UnknownSplit, "unknown split '" + split + "'");
    std::erase_if(d.entries, [&](const ManifestEntry& e) { return e.split != *s; });
  }
  return d;
}

struct Video {
  ManifestEntry entry;
  CaptionTrack track;
  std::optional<FeatureTrack> features;

  double duration() const { return track.video_duration_s(); }
  FeatureTrack timeline() const {
    if (features) return *features;
    return FeatureTrack::timeline(duration());
  }
};

std::optional<FeatureTrack> read_features(const fs::path& path) {
  auto f = captions::decode_feature_file(read_file(path));
  f.set_source_path(fs::absolute(path).lexically_normal().string());
  return f;
}

Video load_video(const Dataset& d, const ManifestEntry& e) {
  Video v;
  v.entry = e;
  std::optional<double> duration = e.duration_s;
  if (e.feature_track_ref) {
    const fs::path p = d.root / *e.feature_track_ref;
    try {
      v.features = read_features(p);
    } catch (const Error& err) {
      throw Error(err.code(), p.string() + ": " + err.message());
    }
    if (!duration) duration = v.features->duration_s();
  }
  v.track = read_track(d.root / e.caption_track_ref, duration);
  return v;
}

// ---------------------------------------------------------------------------
// Provenance and parallelism

json provenance(std::string_view command, json config) {
  return {{"provenance",
           {{"tool", "signtrack"},
            {"version", std::string(metrics::kVersion)},
            {"command", std::string(command)},
            {"config", std::move(config)}}}};
}

std::string provenance_line(std::string_view command, json config) {
  return provenance(command, std::move(config)).dump() + "\n";
}

std::string provenance_note(std::string_view command, json config) {
  return "provenance " + provenance(command, std::move(config)).dump();
}

// Runs fn(i) for i in [0, n) on `jobs` threads. The first failure by index is
// rethrown, so the reported error does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// validate

struct ValidateOpts {
  std::string manifest;
};

int cmd_validate(const ValidateOpts& o) {
  Dataset d;
  try {
    d = load_dataset(o.manifest, "");
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitData;
  }
  std::size_t problems = 0;
  for (const ManifestEntry& e : d.entries) {
    try {
      const Video v = load_video(d, e);
      if (v.features && v.track.video_duration_s() > v.features->duration_s() + 1.0 / v.features->fps()) {
        throw Error(Errc::SpanOutOfRange, (d.root / *e.feature_track_ref).string() +
                                              ": features end before the captions (" +
                                              std::to_string(v.features->duration_s()) + " s < " +
                                              std::to_string(v.track.video_duration_s()) + " s)");
      }
    } catch (const Error& err) {
      ++problems;
      std::cerr << e.video_id << ": " << err.what() << "\n";
    }
  }
  std::cout << "checked " << d.entries.size() << " videos, " << problems << " with errors\n";
  return problems == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// stats

struct StatsOpts {
  std::string manifest;
  std::string split;
  bool by_signer = false;
  std::string format = "jsonl";
  std::string out;
};

json stats_json(const captions::TrackStats& s) {
  return {{"signers", s.n_signers},
          {"discourses", s.n_discourses},
          {"sentences", s.n_sentences},
          {"length_chars", s.length_percentiles_chars},
          {"duration_s", s.duration_percentiles_s},
          {"hours", s.hours}};
}

std::string stats_row(const std::string& label, const captions::TrackStats& s) {
  char buf[512];
  const auto& l = s.length_percentiles_chars;
  const auto& t = s.duration_percentiles_s;
  std::snprintf(buf, sizeof(buf),
                "%-8s %7zu %10zu %9zu  %4.0f %4.0f %4.0f %4.0f %4.0f  %5.1f %5.1f %5.1f %5.1f %5.1f  %6.2f\n",
                label.c_str(), s.n_signers, s.n_discourses, s.n_sentences, l[0], l[1], l[2], l[3], l[4], t[0], t[1],
                t[2], t[3], t[4], s.hours);
  return buf;
}

int cmd_stats(const StatsOpts& o) {
  const Dataset d = load_dataset(o.manifest, o.split);
  std::vector<Video> videos(d.entries.size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) videos[i] = load_video(d, d.entries[i]);
  std::vector<captions::DiscourseTrack> discourses;
  for (const Video& v : videos) discourses.push_back({v.entry.signer_id, v.entry.article_id, &v.track});
  const auto table = captions::compute_stats(discourses);

  const json config = {{"manifest", o.manifest}, {"split", o.split}, {"by_signer", o.by_signer}};
  std::string out;
  if (o.format == "table") {
    out += "# " + provenance(std::string("stats"), config).dump() + "\n";
    out += "#        signers discourses sentences  length (chars) p0/10/50/90/100   duration (s) p0/10/50/90/100   hours\n";
    out += stats_row("overall", table.overall);
    if (o.by_signer) {
      for (const auto& [signer, s] : table.by_signer) out += stats_row("#" + std::to_string(signer), s);
    }
  } else {
    out += provenance_line("stats", config);
    json row = stats_json(table.overall);
    row["scope"] = "overall";
    out += row.dump() + "\n";
    if (o.by_signer) {
      for (const auto& [signer, s] : table.by_signer) {
        json r = stats_json(s);
        r["scope"] = "signer";
        r["signer_id"] = signer;
        out += r.dump() + "\n";
      }
    }
  }
  emit(o.out, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// make-examples

struct ExamplesOpts {
  std::string manifest;
  std::string split;
  std::uint64_t seed = 0;
  std::optional<std::size_t> count;
  std::optional<std::size_t> epochs;
  chunker::SamplerConfig sampler;
  std::size_t context_budget = 256;
  std::string out;
  std::string chunks_dir;
};

int cmd_make_examples(ExamplesOpts o) {
  o.sampler.seed = o.seed;
  o.sampler.validate();
  const Dataset d = load_dataset(o.manifest, o.split);

  std::vector<Video> videos(d.entries.size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) videos[i] = load_video(d, d.entries[i]);
  std::vector<chunker::ChunkRecord> chunks;
  std::string chunk_lines;
  for (const Video& v : videos) {
    const FeatureTrack* feats = v.features ? &*v.features : nullptr;
    for (auto& r : chunker::build_chunk_records(v.entry.video_id, v.track, feats, o.sampler)) {
      if (!o.chunks_dir.empty()) {
        chunk_lines += chunker::to_json_line(r) + "\n";
        if (feats) {
          const auto slice = chunker::slice_features(*feats, r.context_span);
          write_file(fs::path(o.chunks_dir) / r.feature_slice_ref, captions::encode_feature_file(slice));
        }
      }
      chunks.push_back(std::move(r));
    }
  }
  if (chunks.empty()) throw Error(Errc::EmptyInput, "no videos to sample from");

  const std::size_t total = o.count ? *o.count : *o.epochs * chunks.size();
  const json config = {{"manifest", o.manifest},
                       {"split", o.split},
                       {"seed", o.seed},
                       {"count", total},
                       {"n_s", o.sampler.n_s},
                       {"m_s", o.sampler.m_s},
                       {"p_truncate", o.sampler.p_truncate},
                       {"context_budget", o.context_budget}};
  if (!o.chunks_dir.empty()) {
    write_file(fs::path(o.chunks_dir) / "chunks.jsonl", provenance_line("make-examples", config) + chunk_lines);
  }

  const grammar::TimestampGrammar g{0.1, o.sampler.n_s};
  grammar::RenderOptions render;
  render.context_budget = o.context_budget;
  std::string out = provenance_line("make-examples", config);
  for (std::size_t i = 0; i < total; ++i) {
    const auto& chunk = chunks[i % chunks.size()];
    const std::uint64_t draw = i / chunks.size();
    auto task_rng = KeyedRng::for_record(o.seed, chunk.video_id, chunk.chunk_index, draw, "task");
    const auto desc = grammar::sample_task(task_rng);
    // A clip too short to hold a single frame is redrawn from a disjoint key.
    for (std::uint64_t attempt = 0;; ++attempt) {
      const auto clip = chunker::sample_clip(chunk, o.sampler, draw + (attempt << 40));
      try {
        out += grammar::to_json_line(grammar::render_example(chunk, clip, desc, g, render)) + "\n";
        break;
      } catch (const Error& e) {
        if (e.code() != Errc::EmptyClip || attempt >= 64) throw;
      }
    }
  }
  emit(o.out, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// translate

struct DriverOpts {
  driver::DriverConfig cfg;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;

  json to_json() const {
    return {{"window_s", cfg.window_s},
            {"head_margin_s", cfg.head_margin_s},
            {"tail_margin_s", cfg.tail_margin_s},
            {"fallback_stride_s", cfg.fallback_stride_s},
            {"context_budget", cfg.context_budget},
            {"max_windows", cfg.max_windows},
            {"seed", seed}};
  }
};

struct TranslateOpts {
  std::string manifest;
  std::string split;
  std::string translator;
  std::string mode;
  std::string out_dir;
  DriverOpts drv;
};

json segment_record(std::size_t id, const Caption* ref, const std::string& hyp, const std::string& ref_text) {
  json j = {{"segment_id", id}, {"hyp_text", hyp}, {"ref_text", ref_text}};
  if (ref != nullptr) {
    j["start_s"] = ref->span.start_s;
    j["end_s"] = ref->span.end_s;
  }
  return j;
}

int cmd_translate(const TranslateOpts& o) {
  o.drv.cfg.validate();
  const Dataset d = load_dataset(o.manifest, o.split);
  const grammar::TimestampGrammar g{0.1, o.drv.cfg.window_s};
  json config = o.drv.to_json();
  config["manifest"] = o.manifest;
  config["split"] = o.split;
  config["translator"] = o.translator;
  config["mode"] = o.mode;
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  std::vector<std::string> summaries(d.entries.size());
  parallel_for(d.entries.size(), o.drv.jobs, [&](std::size_t i) {
    const Video v = load_video(d, d.entries[i]);
    const FeatureTrack features = v.timeline();
    const auto translator = driver::make_translator(o.translator, &v.track, o.drv.seed);
    const std::string& vid = v.entry.video_id;
    std::size_t produced = 0;

    if (o.mode == "discourse-timed") {
      auto r = driver::run_timed_translation(features, *translator, o.drv.cfg, g, v.duration());
      write_file(out_dir / (vid + ".vtt"),
                 captions::serialize_caption_file(r.track, SubtitleFormat::vtt, provenance_note("translate", config)));
      write_file(out_dir / (vid + ".trace.jsonl"), provenance_line("translate", config) + driver::to_jsonl(r.trace, vid));
      produced = r.track.size();
    } else if (o.mode == "discourse-untimed") {
      auto r = driver::run_untimed_discourse(features, *translator, o.drv.cfg, g, v.duration());
      const std::string ref = text::normalize_whitespace(text::join(v.track.texts(), " "));
      write_file(out_dir / (vid + ".jsonl"),
                 provenance_line("translate", config) + segment_record(0, nullptr, r.text, ref).dump() + "\n");
      write_file(out_dir / (vid + ".trace.jsonl"), provenance_line("translate", config) + driver::to_jsonl(r.trace, vid));
      produced = 1;
    } else {
      const bool with_context = o.mode == "context-sentence";
      std::string lines = provenance_line("translate", config);
      std::vector<std::string> gold_prior;
      for (const Caption& c : v.track.captions()) {
        std::optional<std::string> prior;
        if (with_context) prior = grammar::truncate_context(gold_prior, o.drv.cfg.context_budget);
        std::string hyp;
        json rec;
        try {
          hyp = driver::run_sentence_level(features, c.span, prior, *translator, o.drv.cfg, g);
          rec = segment_record(c.index, &c, hyp, text::normalize_whitespace(c.text));
        } catch (const Error& e) {
          if (e.code() != Errc::ClipTooLong) throw;
          rec = segment_record(c.index, &c, "", text::normalize_whitespace(c.text));
          rec["error"] = e.what();
        }
        lines += rec.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
        gold_prior.push_back(text::normalize_whitespace(c.text));
        ++produced;
      }
      write_file(out_dir / (vid + ".jsonl"), lines);
    }
    summaries[i] = vid + "\t" + std::to_string(produced) + "\n";
  });
  for (const auto& s : summaries) std::cout << s;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// align

struct AlignOpts {
  std::string manifest;
  std::string split;
  std::string method;
  std::string translator = "oracle";
  std::string out_dir;
  DriverOpts drv;
};

int cmd_align(const AlignOpts& o) {
  o.drv.cfg.validate();
  const Dataset d = load_dataset(o.manifest, o.split);
  const grammar::TimestampGrammar g{0.1, o.drv.cfg.window_s};
  json config = o.drv.to_json();
  config["manifest"] = o.manifest;
  config["split"] = o.split;
  config["method"] = o.method;
  if (o.method == "model") config["translator"] = o.translator;
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  std::vector<std::string> summaries(d.entries.size());
  std::vector<std::string> warnings(d.entries.size());
  parallel_for(d.entries.size(), o.drv.jobs, [&](std::size_t i) {
    const Video v = load_video(d, d.entries[i]);
    const std::string& vid = v.entry.video_id;
    const auto texts = v.track.texts();
    CaptionTrack predicted;
    if (o.method == "length-scaling") {
      predicted = metrics::length_scaling_align(texts, {0.0, v.duration()}, v.duration());
      summaries[i] = vid + "\t" + std::to_string(predicted.size()) + "\n";
    } else {
      const auto translator = driver::make_translator(o.translator, &v.track, o.drv.seed);
      auto r = driver::run_alignment(v.timeline(), texts, *translator, o.drv.cfg, g, v.duration());
      json report = {{"video_id", vid},
                     {"aligned", r.track.size()},
                     {"unconsumed", r.unconsumed.size()},
                     {"decoherence", r.decoherence ? json(*r.decoherence) : json(nullptr)}};
      write_file(out_dir / (vid + ".align.jsonl"),
                 provenance_line("align", config) + report.dump() + "\n" + driver::to_jsonl(r.trace, vid));
      if (r.decoherence) warnings[i] = vid + ": DecoherenceDetected: " + *r.decoherence + "\n";
      summaries[i] = vid + "\t" + std::to_string(r.track.size()) + "/" + std::to_string(texts.size()) + "\n";
      predicted = std::move(r.track);
    }
    write_file(out_dir / (vid + ".vtt"),
               captions::serialize_caption_file(predicted, SubtitleFormat::vtt, provenance_note("align", config)));
  });
  for (const auto& w : warnings) std::cerr << w;
  for (const auto& s : summaries) std::cout << s;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
  std::string metric;
  std::string hyp;
  std::string ref;
  std::string manifest;
  std::string split;
  std::string hyp_dir;
  double fps = metrics::kEvalFps;
  std::string out;
  std::string segments_out;
};

// Segments of a .txt (one per line), .vtt/.srt (one per caption) or .jsonl
// file (field `field`, falling back to "text"; provenance records skipped).
std::vector<std::string> read_segments(const fs::path& path, const std::string& field) {
  const std::string ext = path.extension().string();
  std::vector<std::string> out;
  if (ext == ".vtt" || ext == ".srt") {
    for (const auto& t : read_track(path).texts()) out.push_back(text::normalize_whitespace(t));
    return out;
  }
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string line;
  if (ext == ".jsonl") {
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::is_blank(line)) continue;
      try {
        const json j = json::parse(line);
        if (j.contains("provenance")) continue;
        out.push_back(j.contains(field) ? j.at(field).get<std::string>() : j.at("text").get<std::string>());
      } catch (const json::exception& e) {
        throw Error(Errc::MalformedRecord, path.string() + " line " + std::to_string(n) + ": " + e.what());
      }
    }
    return out;
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

int cmd_score(const ScoreOpts& o) {
  json config = {{"metric", o.metric}};
  std::vector<std::string> hyp_segments;
  std::vector<std::string> ref_segments;
  std::vector<metrics::VideoAlignment> per_video;
  std::string exported;

  auto add_timed = [&](const std::string& vid, const CaptionTrack& hyp, const CaptionTrack& ref) {
    if (o.metric == "timed-bleu") {
      auto resliced = metrics::reslice_by_reference(hyp.captions(), ref.captions());
      exported += metrics::resliced_segments_jsonl(resliced, ref.captions(), vid);
      for (auto& s : resliced) hyp_segments.push_back(std::move(s));
      for (const auto& t : ref.texts()) ref_segments.push_back(t);
    } else {
      per_video.push_back({vid, metrics::frame_counts(hyp, ref, o.fps)});
    }
  };

  if (!o.hyp_dir.empty()) {
    config["manifest"] = o.manifest;
    config["split"] = o.split;
    config["hyp_dir"] = o.hyp_dir;
    const Dataset d = load_dataset(o.manifest, o.split);
    for (const ManifestEntry& e : d.entries) {
      const Video v = load_video(d, e);
      const fs::path base = fs::path(o.hyp_dir) / e.video_id;
      if (o.metric == "bleu") {
        if (fs::exists(base.string() + ".jsonl")) {
          for (auto& s : read_segments(base.string() + ".jsonl", "hyp_text")) hyp_segments.push_back(std::move(s));
          for (auto& s : read_segments(base.string() + ".jsonl", "ref_text")) ref_segments.push_back(std::move(s));
        } else {
          const auto hyp = read_track(base.string() + ".vtt", v.duration());
          hyp_segments.push_back(text::normalize_whitespace(text::join(hyp.texts(), " ")));
          ref_segments.push_back(text::normalize_whitespace(text::join(v.track.texts(), " ")));
        }
      } else {
        add_timed(e.video_id, read_track(base.string() + ".vtt", v.duration()), v.track);
      }
    }
  } else {
    config["hyp"] = o.hyp;
    config["ref"] = o.ref;
    if (o.metric == "bleu") {
      hyp_segments = read_segments(o.hyp, "hyp_text");
      ref_segments = read_segments(o.ref, "ref_text");
    } else {
      const CaptionTrack ref = read_track(o.ref);
      add_timed(fs::path(o.ref).stem().string(), read_track(o.hyp, ref.video_duration_s()), ref);
    }
  }

  std::string report;
  if (o.metric == "frame-acc") {
    config["eval_fps"] = o.fps;
    report = metrics::to_json(metrics::aggregate_alignment(std::move(per_video), o.fps));
  } else {
    report = metrics::to_json(metrics::corpus_bleu(hyp_segments, ref_segments), o.metric);
  }
  if (!o.segments_out.empty()) write_file(o.segments_out, provenance_line("score", config) + exported);
  emit(o.out, provenance_line("score", config) + report + "\n");
  return kExitOk;
}

void add_driver_options(CLI::App* cmd, DriverOpts& d) {
  cmd->add_option("--window", d.cfg.window_s, "Window length in seconds")->capture_default_str();
  cmd->add_option("--head", d.cfg.head_margin_s, "Head margin in seconds")->capture_default_str();
  cmd->add_option("--tail", d.cfg.tail_margin_s, "Tail margin in seconds")->capture_default_str();
  cmd->add_option("--stride", d.cfg.fallback_stride_s, "Fallback stride in seconds")->capture_default_str();
  cmd->add_option("--context-budget", d.cfg.context_budget, "Prior-context budget in words")->capture_default_str();
  cmd->add_option("--max-windows", d.cfg.max_windows, "Window cap per video (0 = automatic)")->capture_default_str();
  cmd->add_option("--jobs,-j", d.jobs, "Videos processed in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seed", d.seed, "Seed for noisy mock translators")->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Caption-track tooling for long-form sign language translation"};
  app.set_config("--config", "", "Read options from a TOML/INI file (flags win)");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(metrics::kVersion));

  ValidateOpts validate;
  auto* c_validate = app.add_subcommand("validate", "Check every track and feature file in a manifest");
  c_validate->add_option("manifest", validate.manifest)->required();

  StatsOpts stats;
  auto* c_stats = app.add_subcommand("stats", "Dataset summary statistics");
  c_stats->add_option("manifest", stats.manifest)->required();
  c_stats->add_option("--split", stats.split, "Only this split");
  c_stats->add_flag("--by-signer", stats.by_signer, "Add one row per signer");
  c_stats->add_option("--format", stats.format)->check(CLI::IsMember({"jsonl", "table"}))->capture_default_str();
  c_stats->add_option("-o,--out", stats.out, "Output file (default stdout)");

  ExamplesOpts ex;
  auto* c_ex = app.add_subcommand("make-examples", "Sample training clips and render model examples");
  c_ex->add_option("manifest", ex.manifest)->required();
  c_ex->add_option("--split", ex.split, "Only this split");
  c_ex->add_option("--seed", ex.seed, "Sampling seed")->required();
  auto* o_count = c_ex->add_option("--count", ex.count, "Number of examples");
  auto* o_epochs = c_ex->add_option("--epochs", ex.epochs, "Examples per chunk");
  o_count->excludes(o_epochs);
  c_ex->add_option("--n", ex.sampler.n_s, "Clip length in seconds")->capture_default_str();
  c_ex->add_option("--m", ex.sampler.m_s, "Shortest truncated clip in seconds")->capture_default_str();
  c_ex->add_option("--p-truncate", ex.sampler.p_truncate, "Probability of a truncated clip")->capture_default_str();
  c_ex->add_option("--context-budget", ex.context_budget, "Context budget in words")->capture_default_str();
  c_ex->add_option("--chunks-dir", ex.chunks_dir, "Also write chunk records and feature slices here");
  c_ex->add_option("-o,--out", ex.out, "Output file (default stdout)");

  TranslateOpts tr;
  auto* c_tr = app.add_subcommand("translate", "Translate every video of a manifest");
  c_tr->add_option("manifest", tr.manifest)->required();
  c_tr->add_option("--split", tr.split, "Only this split");
  c_tr->add_option("--translator", tr.translator,
                   "oracle | empty | stutter | jitter:SIGMA | shell command speaking the JSONL protocol")
      ->required();
  c_tr->add_option("--mode", tr.mode)
      ->required()
      ->check(CLI::IsMember({"sentence", "context-sentence", "discourse-timed", "discourse-untimed"}));
  c_tr->add_option("-o,--out-dir", tr.out_dir)->required();
  add_driver_options(c_tr, tr.drv);

  AlignOpts al;
  auto* c_al = app.add_subcommand("align", "Align known caption texts to their videos");
  c_al->add_option("manifest", al.manifest)->required();
  c_al->add_option("--split", al.split, "Only this split");
  c_al->add_option("--method", al.method)->required()->check(CLI::IsMember({"model", "length-scaling"}));
  c_al->add_option("--translator", al.translator, "Aligner for --method model")->capture_default_str();
  c_al->add_option("-o,--out-dir", al.out_dir)->required();
  add_driver_options(c_al, al.drv);

  ScoreOpts sc;
  auto* c_sc = app.add_subcommand("score", "Score hypotheses against references");
  c_sc->add_option("--metric", sc.metric)->required()->check(CLI::IsMember({"bleu", "timed-bleu", "frame-acc"}));
  auto* o_hyp = c_sc->add_option("--hyp", sc.hyp, "Hypothesis file");
  auto* o_ref = c_sc->add_option("--ref", sc.ref, "Reference file");
  auto* o_hdir = c_sc->add_option("--hyp-dir", sc.hyp_dir, "Directory of per-video outputs");
  auto* o_man = c_sc->add_option("--manifest", sc.manifest, "Manifest for --hyp-dir");
  c_sc->add_option("--split", sc.split, "Only this split");
  c_sc->add_option("--fps", sc.fps, "Evaluation frame rate for frame-acc")->capture_default_str();
  c_sc->add_option("--segments-out", sc.segments_out, "Write resliced segments (timed-bleu)");
  c_sc->add_option("-o,--out", sc.out, "Output file (default stdout)");
  o_hyp->needs(o_ref);
  o_ref->needs(o_hyp);
  o_hdir->needs(o_man);
  o_man->needs(o_hdir);
  o_hyp->excludes(o_hdir);

  try {
    app.parse(argc, argv);
    if (*c_ex && !ex.count && !ex.epochs) throw CLI::ValidationError("make-examples", "--count or --epochs is required");
    if (*c_sc && sc.hyp.empty() && sc.hyp_dir.empty()) {
      throw CLI::ValidationError("score", "give --hyp/--ref or --hyp-dir/--manifest");
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_validate) return cmd_validate(validate);
    if (*c_stats) return cmd_stats(stats);
    if (*c_ex) return cmd_make_examples(ex);
    if (*c_tr) return cmd_translate(tr);
    if (*c_al) return cmd_align(al);
    if (*c_sc) return cmd_score(sc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::InvalidConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
