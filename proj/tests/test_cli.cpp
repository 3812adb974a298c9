#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef DOCTOR_CLI_PATH
#error "DOCTOR_CLI_PATH must be defined"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string out_path = "cli_out.txt";
  std::string cmd = std::string(DOCTOR_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WEXITSTATUS(rc);
  std::ifstream in(out_path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  res.output = ss.str();
  return res;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("unknown flags exit with the usage code") {
  auto res = run("gen-data --bogus-flag 1");
  CHECK(res.exit_code == 2);
}

TEST_CASE("missing checkpoint is an io error naming the path") {
  auto res = run(
      "eval-align --checkpoint no_such_ckpt.jsonl --env dial --targets 2:18:2 "
      "--episodes 1 --out-csv cli_align.csv --r-max 20");
  CHECK(res.exit_code == 3);
  CHECK(res.output.find("no_such_ckpt.jsonl") != std::string::npos);
}

TEST_CASE("gen-data is byte-deterministic and prints the resolved config") {
  auto r1 = run("gen-data --env dial --episodes 50 --seed 7 --out cli_ds1.jsonl");
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.output.find("resolved config") != std::string::npos);
  CHECK(r1.output.find("seed = 7") != std::string::npos);

  auto r2 = run("gen-data --env dial --episodes 50 --seed 7 --out cli_ds2.jsonl");
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file("cli_ds1.jsonl") == read_file("cli_ds2.jsonl"));

  std::remove("cli_ds2.jsonl");
}

TEST_CASE("filter-data drop and keep modes") {
  REQUIRE(run("gen-data --env dial --episodes 40 --seed 3 --out cli_fd.jsonl").exit_code == 0);
  auto res = run("filter-data --in cli_fd.jsonl --out cli_fd_drop.jsonl --percent 10 --mode drop");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("kept 36 of 40") != std::string::npos);
  res = run("filter-data --in cli_fd.jsonl --out cli_fd_keep.jsonl --percent 10 --mode keep");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("kept 4 of 40") != std::string::npos);
  std::remove("cli_fd.jsonl");
  std::remove("cli_fd_drop.jsonl");
  std::remove("cli_fd_keep.jsonl");
}

TEST_CASE("train then eval-align produces the expected row count") {
  REQUIRE(run("gen-data --env dial --episodes 60 --seed 5 --out cli_train_ds.jsonl").exit_code ==
          0);
  auto train = run(
      "train --data cli_train_ds.jsonl --out cli_ck.jsonl "
      "--set model.embed_dim=8 --set model.enc_layers=1 --set model.dec_layers=1 "
      "--set model.heads=2 --set model.q_head_width=4 --set model.dropout=0 "
      "--set train.total_steps=40 --set train.warmup_steps=5 --set train.batch_size=8 "
      "--set train.lr=1e-3 --seed 1");
  REQUIRE(train.exit_code == 0);
  CHECK(read_file("cli_ck.jsonl.log").find("\"step\":40") != std::string::npos);

  auto eval = run(
      "eval-align --checkpoint cli_ck.jsonl --env dial --targets 2:18:2 --episodes 2 "
      "--out-csv cli_align.csv --data cli_train_ds.jsonl --set infer.n=4 --seed 2");
  REQUIRE(eval.exit_code == 0);
  auto csv = read_file("cli_align.csv");
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 10);  // header + 9 targets

  // grad-check subcommand passes.
  CHECK(run("grad-check").exit_code == 0);

  std::remove("cli_train_ds.jsonl");
  std::remove("cli_ck.jsonl");
  std::remove("cli_ck.jsonl.log");
  std::remove("cli_align.csv");
  std::remove("cli_out.txt");
}
