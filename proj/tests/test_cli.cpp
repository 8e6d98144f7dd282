#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kBin = SIGNTRACK_BIN;
const std::string kFix = SIGNTRACK_FIXTURES;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  Run r;
  const std::string cmd = "'" + kBin + "' " + args + " 2>/dev/null";
  std::FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops provenance lines so outputs of differently-configured runs compare.
std::string without_provenance(const std::string& s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("NOTE provenance", 0) == 0 || line.rfind("{\"provenance\"", 0) == 0) continue;
    out += line + '\n';
  }
  return out;
}

nlohmann::json last_json(const std::string& out) {
  const auto end = out.find_last_not_of('\n');
  const auto start = out.rfind('\n', end);
  return nlohmann::json::parse(out.substr(start == std::string::npos ? 0 : start + 1, end + 1));
}

struct TempDir {
  fs::path path;
  TempDir() {
    char tmpl[] = "/tmp/signtrack-cli-XXXXXX";
    path = mkdtemp(tmpl);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

const std::string kManifest = kFix + "/manifest.jsonl";

}  // namespace

TEST_CASE("validate") {
  CHECK(run("validate " + kManifest).code == 0);
  CHECK(run("validate " + kFix + "/overlap.jsonl").code == 2);
  CHECK(run("validate " + kFix + "/dangling.jsonl").code == 2);
  CHECK(run("validate " + kFix + "/nope.jsonl").code == 2);
}

TEST_CASE("usage errors") {
  TempDir t;
  CHECK(run("translate " + kManifest + " --translator oracle --mode dance -o " + t / "o").code == 64);
  CHECK(run("frobnicate").code == 64);
  CHECK(run("translate " + kManifest + " --translator oracle --mode discourse-timed --head 20 --tail 20 -o " +
            t / "o").code == 64);
}

TEST_CASE("stats") {
  const auto r = run("stats " + kManifest + " --by-signer");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  bool saw_overall = false;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("provenance")) continue;
    ++rows;
    if (j["scope"] == "overall") {
      saw_overall = true;
      CHECK(j["sentences"] == 20);
      CHECK(j["discourses"] == 2);
    }
  }
  CHECK(saw_overall);
  CHECK(rows == 3);

  TempDir t;
  std::ofstream(t / "empty.jsonl") << "\n";
  CHECK(run("stats " + t / "empty.jsonl").code == 2);
}

TEST_CASE("make-examples is reproducible") {
  const auto a = run("make-examples " + kManifest + " --seed 7 --count 1000");
  const auto b = run("make-examples " + kManifest + " --seed 7 --count 1000");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  std::istringstream in(a.out);
  std::string line;
  int records = 0;
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line).contains("provenance"));
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["input_text"].get<std::string>().rfind("<|", 0) == 0);
    ++records;
  }
  CHECK(records == 1000);
  CHECK(run("make-examples " + kManifest + " --seed 8 --count 1000").out != a.out);
}

TEST_CASE("oracle translation scores perfectly") {
  TempDir t;
  REQUIRE(run("translate " + kManifest + " --translator oracle --mode discourse-timed -o " + t / "o").code == 0);
  const auto tb = run("score --metric timed-bleu --hyp-dir " + t / "o" + " --manifest " + kManifest);
  REQUIRE(tb.code == 0);
  CHECK(last_json(tb.out)["score"] == 100.0);
  const auto fa = run("score --metric frame-acc --hyp-dir " + t / "o" + " --manifest " + kManifest);
  CHECK(last_json(fa.out)["frame_accuracy"] == 1.0);
}

TEST_CASE("parallel jobs do not change the output") {
  TempDir t;
  REQUIRE(run("translate " + kManifest + " --translator jitter:1 --seed 3 --mode discourse-timed -o " + t / "a").code == 0);
  REQUIRE(run("translate " + kManifest + " --translator jitter:1 --seed 3 --mode discourse-timed -j 4 -o " + t / "b").code ==
          0);
  for (const char* f : {"v1.vtt", "v2.vtt", "v1.trace.jsonl", "v2.trace.jsonl"}) {
    CHECK(without_provenance(slurp(t.path / "a" / f)) == without_provenance(slurp(t.path / "b" / f)));
  }
}

TEST_CASE("external translator answering nothing") {
  TempDir t;
  const std::string echo =
      "python3 -u -c \"import sys, json\n"
      "for l in sys.stdin: print(json.dumps({'request_id': json.loads(l)['request_id'], 'output_text': ''}), flush=True)\"";
  std::ofstream(t / "echo.sh") << echo << "\n";
  const auto r = run("translate " + kManifest + " --translator 'sh " + t / "echo.sh" + "' --mode sentence -o " + t / "o");
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(t.path / "o" / "v1.jsonl"));
  std::string line;
  int segments = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("provenance")) continue;
    CHECK(j["hyp_text"] == "");
    ++segments;
  }
  CHECK(segments == 13);
  const auto bleu = run("score --metric bleu --hyp-dir " + t / "o" + " --manifest " + kManifest);
  CHECK(last_json(bleu.out)["score"] == 0.0);
}

TEST_CASE("length-scaling alignment on proportional speech") {
  TempDir t;
  const std::string manifest = kFix + "/proportional.jsonl";
  REQUIRE(run("align " + manifest + " --method length-scaling -o " + t / "a").code == 0);
  const auto fa = run("score --metric frame-acc --hyp-dir " + t / "a" + " --manifest " + manifest);
  REQUIRE(fa.code == 0);
  CHECK(last_json(fa.out)["frame_accuracy"].get<double>() >= 0.99);
}

TEST_CASE("model alignment with a stuck aligner reports decoherence") {
  TempDir t;
  const std::string cmd = "'" + kBin + "' align " + kManifest + " --method model --translator stutter -o " + t / "a" +
                          " 2>&1 >/dev/null";
  std::FILE* p = popen(cmd.c_str(), "r");
  std::string err;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) err.append(buf, n);
  pclose(p);
  CHECK(err.find("DecoherenceDetected") != std::string::npos);
  CHECK(fs::exists(t.path / "a" / "v1.vtt"));
}

TEST_CASE("timed bleu punishes bad timing that plain bleu ignores") {
  TempDir t;
  std::ofstream(t / "ref.vtt") << "WEBVTT\n\n00:00.000 --> 00:04.000\nthe river crossed the quiet valley\n\n"
                                  "00:04.000 --> 00:08.000\nfarmers watched the rain over the wheat\n\n"
                                  "00:08.000 --> 00:12.000\na new bridge opened in the spring\n";
  std::ofstream(t / "hyp.vtt") << "WEBVTT\n\n00:02.000 --> 00:06.000\nthe river crossed the quiet valley\n\n"
                                  "00:06.000 --> 00:10.000\nfarmers watched the rain over the wheat\n\n"
                                  "00:10.000 --> 00:12.000\na new bridge opened in the spring\n";
  const auto plain = run("score --metric bleu --hyp " + t / "hyp.vtt" + " --ref " + t / "ref.vtt");
  const auto timed = run("score --metric timed-bleu --hyp " + t / "hyp.vtt" + " --ref " + t / "ref.vtt" +
                         " --segments-out " + t / "segs.jsonl");
  REQUIRE(plain.code == 0);
  REQUIRE(timed.code == 0);
  CHECK(last_json(plain.out)["score"] == 100.0);
  CHECK(last_json(timed.out)["score"].get<double>() < 60.0);
  CHECK(fs::file_size(t.path / "segs.jsonl") > 0);
}
