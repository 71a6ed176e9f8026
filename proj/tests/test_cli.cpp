// Copyright 2026 The HSCJN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <sys/wait.h>

#include "json.hpp"

#include "support.hpp"

namespace testing = hscjn::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the captured text.
Run cli(const std::string& args) {
  const std::string cmd = std::string("'") + HSCJN_CLI + "' " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

const char* const kTiny =
    " --embed-dim 6 --word-enc-dim 6 --utt-enc-dim 6 --dec-dim 6 --attn-dim 6 --head-hidden-dim 6"
    " --learning-rate 0.01 --fixed-epochs --beam-width 2 --max-len 6 --threads 1";

}  // namespace

TEST_CASE("help and argument errors") {
  CHECK(cli("train --help").code == 0);
  CHECK(cli("train --help").out.find("--learning-rate") != std::string::npos);
  CHECK(cli("--help").code == 0);
  const Run unknown = cli("train --no-such-flag 3");
  CHECK(unknown.code == 1);
  CHECK(unknown.out.find("no-such-flag") != std::string::npos);
  CHECK(cli("").code == 1);
  CHECK(cli("train").code == 1);
  CHECK(cli("train --train x --alpha 3").code == 1);
  CHECK(cli("eval --responses a.txt").code == 1);
  CHECK(cli("generate --context 'hi'").code == 1);
}

TEST_CASE("runtime failures exit with 2") {
  testing::TempDir dir("cli_fail");
  CHECK(cli("train --train " + q(dir / "missing.txt")).code == 2);
  testing::write_file(dir / "junk.ckpt", "not a checkpoint");
  CHECK(cli("generate --checkpoint " + q(dir / "junk.ckpt") + " --context 'hello'").code == 2);
}

TEST_CASE("train, generate and eval round trip") {
  testing::TempDir dir("cli_run");
  testing::write_file(dir / "train.txt", testing::toy_corpus_20());
  testing::write_file(dir / "run.cfg", "epochs = 1\nalpha = 0.5\n");
  const Run t = cli("train --config " + q(dir / "run.cfg") + " --epochs 2 --train " + q(dir / "train.txt") +
                    " --checkpoint " + q(dir / "m.ckpt") + " --log " + q(dir / "train.log") + kTiny);
  REQUIRE(t.code == 0);
  CHECK(nlohmann::json::parse(t.out)["epochs"] == 2);  // flags override the file
  const std::string log = testing::read_file(dir / "train.log");
  const auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
  CHECK(first["total"].get<double>() ==
        first["nll"].get<double>() + 0.5 * first["l_wp"].get<double>() + 0.13 * first["l_me"].get<double>());

  const Run g = cli("generate --checkpoint " + q(dir / "m.ckpt") + " --context 'hi there __eou__ hello'");
  CHECK(g.code == 0);
  CHECK_FALSE(g.out.empty());

  testing::write_file(dir / "ctx.txt", "hi there\nwhat time is it\n");
  CHECK(cli("generate --checkpoint " + q(dir / "m.ckpt") + " --input " + q(dir / "ctx.txt") + " --output " +
            q(dir / "resp.txt"))
            .code == 0);
  CHECK(testing::read_file(dir / "resp.txt").size() > 0);

  const Run e = cli("eval --checkpoint " + q(dir / "m.ckpt") + " --test " + q(dir / "train.txt") + " --output " +
                    q(dir / "scored.txt") + " --freq-out " + q(dir / "freq.tsv") + " --exclude-punct --top-k 5");
  REQUIRE(e.code == 0);
  const auto report = nlohmann::json::parse(e.out);
  CHECK(report["bleu"].size() == 4);
  CHECK(report["distinct"][0]["formatted"].get<std::string>().find('/') != std::string::npos);

  testing::write_file(dir / "refs.txt", "a b c\nd e\n");
  const Run same = cli("eval --responses " + q(dir / "refs.txt") + " --references " + q(dir / "refs.txt"));
  REQUIRE(same.code == 0);
  CHECK(nlohmann::json::parse(same.out)["bleu"][0].get<double>() == doctest::Approx(100.0));
}

TEST_CASE("ablate labels its four runs") {
  testing::TempDir dir("cli_ablate");
  testing::write_file(dir / "train.txt", testing::toy_corpus_20());
  const Run a = cli("ablate --train " + q(dir / "train.txt") + " --out-dir " + q(dir / "grid") + " --epochs 1" + kTiny);
  REQUIRE(a.code == 0);
  const auto summary = nlohmann::json::parse(testing::read_file(dir / "grid" / "summary.json"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0]["label"] == "HSCJN");
  CHECK(summary[1]["label"] == "HSCJN(w/o ME)");
  CHECK(summary[2]["label"] == "HSCJN(w/o PN)");
  CHECK(summary[3]["label"] == "HRED");
  for (const auto& run : summary) {
    CHECK(std::filesystem::exists(dir / "grid" / run["dir"].get<std::string>() / "report.json"));
    CHECK(run["report"]["bleu"].size() == 4);
  }
}
