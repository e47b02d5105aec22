#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string capture = "cli_out_" + std::to_string(counter++) + ".txt";
  const std::string command = std::string(CDTM_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  std::ifstream in(capture);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  in.close();
  std::remove(capture.c_str());
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string write_corpus(const std::string& name, const std::string& content) {
  std::ofstream out(name, std::ios::trunc);
  out << content;
  return name;
}

const char* kTinyCorpus =
    "2008-05-01T04:00:00Z\tobama rally speech\n"
    "2008-05-01T18:00:00Z\tmccain rally town\n"
    "2008-05-02T09:00:00Z\tobama speech poll\n"
    "2008-05-04T10:00:00Z\tpoll town rally\n"
    "2008-05-07T12:00:00Z\tmccain poll town\n"
    "2008-05-09T20:00:00Z\tobama town speech\n";

}  // namespace

TEST_CASE("fit is byte-deterministic under --deterministic") {
  const auto corpus = write_corpus("cli_corpus_a.tsv", kTinyCorpus);
  const std::string flags = " fit --corpus " + corpus +
                            " --granularity day --topics 2 --seed 7 --deterministic"
                            " --max-outer 5";
  const auto first = run_cli(flags + " --out cli_model_1.cdtm --report cli_report_1.json");
  const auto second = run_cli(flags + " --out cli_model_2.cdtm --report cli_report_2.json");
  REQUIRE(first.exit_code == 0);
  REQUIRE(second.exit_code == 0);
  CHECK(read_file("cli_model_1.cdtm") == read_file("cli_model_2.cdtm"));
  CHECK(read_file("cli_report_1.json") == read_file("cli_report_2.json"));
  for (const auto* f : {"cli_model_1.cdtm", "cli_model_2.cdtm", "cli_report_1.json",
                        "cli_report_2.json", "cli_corpus_a.tsv"}) {
    std::remove(f);
  }
}

TEST_CASE("missing corpus file exits with the data code and names the path") {
  const auto result = run_cli("fit --corpus nowhere_to_be_found.tsv --out x.cdtm");
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("nowhere_to_be_found.tsv") != std::string::npos);
}

TEST_CASE("--topics 0 is a usage error before any work") {
  const auto corpus = write_corpus("cli_corpus_b.tsv", kTinyCorpus);
  const auto result = run_cli("fit --corpus " + corpus + " --topics 0 --out x.cdtm");
  CHECK(result.exit_code == 1);
  std::remove("cli_corpus_b.tsv");
}

TEST_CASE("unknown flags are rejected") {
  const auto result = run_cli("fit --corpus x.tsv --out y.cdtm --no-such-flag");
  CHECK(result.exit_code == 1);
}

TEST_CASE("malformed corpus lines exit with the data code and line number") {
  const auto corpus = write_corpus("cli_corpus_c.tsv",
                                   "2008-05-01\tgood tokens\n"
                                   "bad line without tab\n");
  const auto result = run_cli("fit --corpus " + corpus + " --out x.cdtm");
  CHECK(result.exit_code == 2);
  CHECK(result.output.find(":2") != std::string::npos);
  std::remove("cli_corpus_c.tsv");
}

TEST_CASE("numerical failures exit with code 3") {
  const auto corpus = write_corpus("cli_corpus_nan.tsv", kTinyCorpus);
  const auto result = run_cli("fit --corpus " + corpus +
                              " --granularity day --prior-mean 1e308 --out cli_nan.cdtm");
  CHECK(result.exit_code == 3);
  std::remove("cli_corpus_nan.tsv");
  std::remove("cli_nan.cdtm");
}

TEST_CASE("perplexity rejects eval ranges outside the grid") {
  const auto corpus = write_corpus("cli_corpus_d.tsv", kTinyCorpus);
  const auto result = run_cli("perplexity --corpus " + corpus +
                              " --granularity day --eval-begin 2009-01-01 --eval-end 2009-01-05");
  CHECK(result.exit_code == 2);
  std::remove("cli_corpus_d.tsv");
}

TEST_CASE("perplexity pipeline emits JSON lines and plot data") {
  const auto corpus = write_corpus("cli_corpus_e.tsv", kTinyCorpus);
  const auto result = run_cli("perplexity --corpus " + corpus +
                              " --granularity day --topics 1 --seed 3 --deterministic"
                              " --max-outer 4 --eval-begin 2008-05-02 --eval-end 2008-05-09"
                              " --out cli_perp.jsonl --plot-data cli_perp.tsv");
  REQUIRE(result.exit_code == 0);
  const auto lines = read_file("cli_perp.jsonl");
  CHECK(lines.find("cdtm.perplexity-tick/1") != std::string::npos);
  CHECK(lines.find("cdtm.perplexity-aggregate/1") != std::string::npos);
  const auto plot = read_file("cli_perp.tsv");
  CHECK(plot.find('\t') != std::string::npos);
  std::remove("cli_corpus_e.tsv");
  std::remove("cli_perp.jsonl");
  std::remove("cli_perp.tsv");
}

TEST_CASE("export-topics rejects stamps outside the model range") {
  const auto corpus = write_corpus("cli_corpus_f.tsv", kTinyCorpus);
  const auto fitted = run_cli("fit --corpus " + corpus +
                              " --granularity day --topics 1 --max-outer 3 --seed 1"
                              " --out cli_model_f.cdtm --report cli_report_f.json");
  REQUIRE(fitted.exit_code == 0);
  const auto bad = run_cli("export-topics --model cli_model_f.cdtm --at 2012-01-01");
  CHECK(bad.exit_code == 2);
  const auto good = run_cli("export-topics --model cli_model_f.cdtm --every 2days --top 3");
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("stamp\ttopic\trank\tword\tprobability") != std::string::npos);
  for (const auto* f : {"cli_corpus_f.tsv", "cli_model_f.cdtm", "cli_report_f.json"}) {
    std::remove(f);
  }
}

TEST_CASE("top-level --help matches the golden file and lists every subcommand") {
  const auto result = run_cli("--help");
  CHECK(result.exit_code == 0);
  const auto golden = read_file(std::string(CDTM_TEST_DATA_DIR) + "/help_top.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(result.output == golden);
}

TEST_CASE("subcommand --help enumerates every flag") {
  const auto fit_help = run_cli("fit --help");
  REQUIRE(fit_help.exit_code == 0);
  for (const auto* flag :
       {"--corpus", "--format", "--lowercase", "--granularity", "--topics", "--v-total", "--v0",
        "--prior-mean", "--alpha", "--vhat", "--outer-tol", "--max-outer", "--cg-iters",
        "--jitter-std", "--seed", "--deterministic", "--threads", "--out", "--report",
        "--oracle"}) {
    CHECK_MESSAGE(fit_help.output.find(flag) != std::string::npos, flag);
  }
  const auto perp_help = run_cli("perplexity --help");
  for (const auto* flag : {"--eval-begin", "--eval-end", "--refit", "--model", "--summary",
                           "--plot-data"}) {
    CHECK_MESSAGE(perp_help.output.find(flag) != std::string::npos, flag);
  }
  const auto time_help = run_cli("predict-time --help");
  for (const auto* flag : {"--test-fraction", "--levels", "--out"}) {
    CHECK_MESSAGE(time_help.output.find(flag) != std::string::npos, flag);
  }
  const auto export_help = run_cli("export-topics --help");
  for (const auto* flag : {"--model", "--every", "--at", "--top", "--out"}) {
    CHECK_MESSAGE(export_help.output.find(flag) != std::string::npos, flag);
  }
  const auto gen_help = run_cli("generate --help");
  for (const auto* flag : {"--vocab-size", "--ticks", "--docs-per-tick", "--doc-length",
                           "--gap-seconds", "--first-stamp", "--truth"}) {
    CHECK_MESSAGE(gen_help.output.find(flag) != std::string::npos, flag);
  }
}

TEST_CASE("generate -> fit -> predict-time round trip") {
  const auto gen = run_cli("generate --out cli_syn.tsv --topics 2 --vocab-size 12 --ticks 8"
                           " --docs-per-tick 3 --doc-length 12 --seed 9 --v-total 0.5");
  REQUIRE(gen.exit_code == 0);
  const auto fitres = run_cli("fit --corpus cli_syn.tsv --format epoch --granularity raw"
                              " --topics 2 --seed 9 --max-outer 4 --deterministic"
                              " --out cli_syn.cdtm --report cli_syn_report.json");
  REQUIRE(fitres.exit_code == 0);
  const auto timeres = run_cli("predict-time --corpus cli_syn.tsv --format epoch"
                               " --granularity raw --topics 2 --seed 9 --max-outer 4"
                               " --deterministic --test-fraction 0.25 --out cli_time.jsonl");
  REQUIRE(timeres.exit_code == 0);
  const auto lines = read_file("cli_time.jsonl");
  CHECK(lines.find("cdtm.time-prediction-aggregate/1") != std::string::npos);
  CHECK(lines.find("random_baseline") != std::string::npos);
  for (const auto* f :
       {"cli_syn.tsv", "cli_syn.cdtm", "cli_syn_report.json", "cli_time.jsonl"}) {
    std::remove(f);
  }
}
