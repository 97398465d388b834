#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ramat/cli.hpp"
#include "ramat/container.hpp"
#include "ramat/report.hpp"
#include "ramat/synthetic.hpp"
#include "test_support.hpp"

using namespace ramat;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ramat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

constexpr const char* kSmallModel = R"("model": {"window_length": 16, "patch_length": 4, "embed_dim": 8,
  "num_layers": 1, "num_heads": 2, "ffn_dim": 16}, "reservoir": {"size": 16})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    const auto dir = testing::scratch_dir("cli_codes");
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({}).code == 2);
    CHECK(cli({"pretrain"}).code == 2);
    write(dir / "bad.json", R"({"modle": {}})");
    auto r = cli({"preprocess", "--in", "x.csv", "--out", (dir / "d").string(), "--config", (dir / "bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("modle") != std::string::npos);
    r = cli({"preprocess", "--in", (dir / "missing.csv").string(), "--out", (dir / "d").string()});
    CHECK(r.code == 3);
    CHECK(cli({"synth", "--kind", "noise", "--out", (dir / "x.csv").string()}).code == 2);
  }

  TEST_CASE("preprocess accepts the 13 KPI schema and rejects 12 columns") {
    const auto dir = testing::scratch_dir("cli_schema");
    const auto raw = (dir / "raw.csv").string();
    REQUIRE(cli({"synth", "--kind", "bursty", "--rows", "400", "--seed", "2", "--out", raw}).code == 0);
    write(dir / "cfg.json", R"({"data": {"n_seq": 8}})");
    auto r = cli({"preprocess", "--in", raw, "--out", (dir / "d.bin").string(), "--config", (dir / "cfg.json").string()});
    CHECK(r.code == 0);
    const auto summary = nlohmann::json::parse(r.out);
    CHECK(summary.at("channels") == 13);
    CHECK(summary.at("samples").get<int>() > 0);
    CHECK(fs::exists(dir / "d.bin.scalers.json"));
    CHECK(fs::exists(dir / "d.bin.config.json"));
    const auto echoed = nlohmann::json::parse(slurp(dir / "d.bin.config.json"));
    CHECK(echoed.at("model").at("mask_ratio") == 0.3);

    // Drop the last column.
    std::ifstream in(raw);
    std::ofstream out(dir / "twelve.csv");
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
    out.close();
    r = cli({"preprocess", "--in", (dir / "twelve.csv").string(), "--out", (dir / "e.bin").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("Packet Delay") != std::string::npos);

    // Clean input drops nothing.
    REQUIRE(cli({"synth", "--kind", "bursty", "--rows", "300", "--missing-rate", "0", "--outlier-rate", "0",
                 "--out", (dir / "clean.csv").string()})
                .code == 0);
    r = cli({"preprocess", "--in", (dir / "clean.csv").string(), "--out", (dir / "c.bin").string(), "--config",
             (dir / "cfg.json").string()});
    REQUIRE(r.code == 0);
    const auto clean = nlohmann::json::parse(r.out);
    CHECK(clean.at("dropped_missing") == 0);
    CHECK(clean.at("dropped_iqr") == 0);

    // Too few rows for one sample.
    write(dir / "short.csv", "timestamp_ms,a\n0,1\n20,2\n");
    write(dir / "short.json", R"({"data": {"channels": ["a"], "n_seq": 4}})");
    r = cli({"preprocess", "--in", (dir / "short.csv").string(), "--out", (dir / "s.bin").string(), "--config",
             (dir / "short.json").string()});
    CHECK(r.code == 3);
  }

  TEST_CASE("pretrain, finetune, predict and eval") {
    const auto dir = testing::scratch_dir("cli_flow");
    const auto raw = (dir / "raw.csv").string();
    REQUIRE(cli({"synth", "--kind", "ar2", "--rows", "600", "--channels", "2", "--seed", "4", "--out", raw}).code == 0);
    write(dir / "cfg.json", std::string(R"({"seed": 9, "data": {"channels": ["ch0", "ch1"]}, )") + kSmallModel +
                                R"(, "train": {"pretrain": {"epochs": 2, "batch_size": 4, "warmup_steps": 2},
                                  "finetune": {"epochs": 2, "batch_size": 16}}})");
    const auto cfg = (dir / "cfg.json").string();
    const auto data = (dir / "d.bin").string();
    REQUIRE(cli({"preprocess", "--in", raw, "--out", data, "--config", cfg}).code == 0);

    const auto ck = (dir / "p.ckpt").string();
    auto r = cli({"pretrain", "--data", data, "--config", cfg, "--out", ck});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("effective config") != std::string::npos);
    const auto trace = slurp(dir / "p.ckpt.trace.csv");
    CHECK(trace.rfind("step,split,metric,value,lr\n", 0) == 0);
    CHECK(trace.find("masked_mse") != std::string::npos);

    // Same seed, same bytes; another seed through the environment differs.
    REQUIRE(cli({"pretrain", "--data", data, "--config", cfg, "--out", (dir / "p2.ckpt").string()}).code == 0);
    CHECK(slurp(ck) == slurp(dir / "p2.ckpt"));
    setenv("RAMAT_SEED", "10", 1);
    REQUIRE(cli({"pretrain", "--data", data, "--config", cfg, "--out", (dir / "p3.ckpt").string()}).code == 0);
    unsetenv("RAMAT_SEED");
    CHECK(slurp(ck) != slurp(dir / "p3.ckpt"));

    // Halting then resuming reproduces the uninterrupted checkpoint's parameters.
    REQUIRE(cli({"pretrain", "--data", data, "--config", cfg, "--out", (dir / "h.ckpt").string(), "--halt-at", "5"})
                .code == 0);
    REQUIRE(cli({"pretrain", "--data", data, "--config", cfg, "--out", (dir / "r.ckpt").string(), "--resume",
                 (dir / "h.ckpt").string()})
                .code == 0);
    CHECK(slurp(ck) == slurp(dir / "r.ckpt"));

    const auto ft = (dir / "f.ckpt").string();
    r = cli({"finetune", "--ckpt", ck, "--data", data, "--config", cfg, "--out", ft});
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "f.ckpt.trace.csv").find(",val,mse,") != std::string::npos);
    const auto before = load_checkpoint(ck), after = load_checkpoint(ft);
    for (const auto& e : before.params.entries()) {
      const bool same = after.params.get(e.name).values() == e.tensor.values();
      CHECK(same == (e.group != ParamGroup::kHead));
    }

    // A config whose shapes disagree with the checkpoint is rejected by name.
    write(dir / "wide.json", std::string(R"({"data": {"channels": ["ch0", "ch1"]}, )") +
                                 R"("model": {"window_length": 16, "patch_length": 4, "embed_dim": 12,
                                  "num_layers": 1, "num_heads": 2, "ffn_dim": 16}, "reservoir": {"size": 16}})");
    r = cli({"finetune", "--ckpt", ck, "--data", data, "--config", (dir / "wide.json").string(), "--out",
             (dir / "x.ckpt").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("embed.weight") != std::string::npos);

    // predict on 20 clean rows: 5 steps × 2 channels.
    std::ostringstream window;
    window << "timestamp_ms,ch0,ch1\n";
    for (int i = 0; i < 20; ++i) window << i * 20 << ',' << std::sin(i * 0.3) << ',' << std::cos(i * 0.2) << '\n';
    write(dir / "win.csv", window.str());
    r = cli({"predict", "--ckpt", ft, "--in", (dir / "win.csv").string(), "--out", (dir / "pred.csv").string()});
    REQUIRE(r.code == 0);
    std::istringstream pred(slurp(dir / "pred.csv"));
    std::string line;
    std::getline(pred, line);
    CHECK(line == "timestamp_ms,channel,prediction");
    int rows = 0;
    while (std::getline(pred, line)) {
      ++rows;
      const double v = std::stod(line.substr(line.rfind(',') + 1));
      CHECK(std::isfinite(v));
    }
    CHECK(rows == 5 * 2);

    write(dir / "gap.csv", "timestamp_ms,ch0,ch1\n" + [] {
      std::string s;
      for (int i = 0; i < 20; ++i) s += std::to_string(i < 10 ? i * 20 : i * 20 + 40) + ",0.1,0.2\n";
      return s;
    }());
    r = cli({"predict", "--ckpt", ft, "--in", (dir / "gap.csv").string(), "--out", (dir / "g.csv").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("t=180") != std::string::npos);
    write(dir / "few.csv", "timestamp_ms,ch0,ch1\n0,1,2\n20,1,2\n");
    r = cli({"predict", "--ckpt", ft, "--in", (dir / "few.csv").string(), "--out", (dir / "g.csv").string()});
    CHECK(r.code == 3);

    const auto rep = dir / "report";
    r = cli({"eval", "--ckpt", ft, "--data", data, "--out", rep.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("KPI 0 (ch0), MSE=") != std::string::npos);
    CHECK(fs::exists(rep / "kpi_01.svg"));
    CHECK(slurp(rep / "kpi_00.svg").find("KPI 0 (ch0), MSE=") != std::string::npos);

    // Reported MSE recomputed from the emitted series.
    std::istringstream series(slurp(rep / "series.csv"));
    std::getline(series, line);
    std::map<std::string, std::pair<double, std::size_t>> acc;
    while (std::getline(series, line)) {
      std::vector<std::string> f;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      const double d = std::stod(f[3]) - std::stod(f[4]);
      acc[f[2]].first += d * d;
      acc[f[2]].second += 1;
    }
    std::istringstream mse(slurp(rep / "mse.csv"));
    std::getline(mse, line);
    int kpis = 0;
    while (std::getline(mse, line)) {
      std::vector<std::string> f;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      const auto& [sum, n] = acc.at(f[1]);
      CHECK(std::abs(std::stod(f[2]) - sum / n) <= 1e-6 * std::max(1.0, sum / n));
      ++kpis;
    }
    CHECK(kpis == 2);
  }

  TEST_CASE("numeric failure keeps the partial trace") {
    const auto dir = testing::scratch_dir("cli_numeric");
    const auto raw = (dir / "raw.csv").string();
    REQUIRE(cli({"synth", "--kind", "sinusoid", "--rows", "400", "--channels", "2", "--out", raw}).code == 0);
    write(dir / "cfg.json", std::string(R"({"data": {"channels": ["ch0", "ch1"]}, )") + kSmallModel +
                                R"(, "train": {"pretrain": {"epochs": 3, "warmup_steps": 1, "lr_peak": 1e30,
                                  "max_norm": 1e30}}})");
    const auto cfg = (dir / "cfg.json").string();
    REQUIRE(cli({"preprocess", "--in", raw, "--out", (dir / "d.bin").string(), "--config", cfg}).code == 0);
    const auto r = cli({"pretrain", "--data", (dir / "d.bin").string(), "--config", cfg, "--out",
                        (dir / "p.ckpt").string()});
    CHECK(r.code == 4);
    CHECK_FALSE(fs::exists(dir / "p.ckpt"));
    const auto trace = slurp(dir / "p.ckpt.trace.csv");
    CHECK(trace.find("masked_mse") != std::string::npos);
  }

  TEST_CASE("eval of a constant predictor on constant targets") {
    // All 13 KPIs constant: scalers clamp, predictions equal the mean.
    const auto schema = KpiSchema::oran_default();
    KpiFrame f;
    f.names = schema.names();
    std::vector<std::optional<float>> row;
    for (const auto& c : schema.channels) row.push_back(float(c.range_min));
    for (int r = 0; r < 40; ++r) f.append_row(r * 20, row);
    ModelConfig m;
    m.window_length = 8;
    m.patch_length = 4;
    m.channels = 13;
    m.embed_dim = 8;
    m.num_heads = 2;
    m.num_layers = 1;
    ReservoirConfig rc;
    rc.size = 8;
    auto state = init_model_state(m, rc, 1, fit_scalers(f));
    for (auto& e : state.params.entries())
      if (e.group == ParamGroup::kHead) std::fill(e.tensor.mutable_data().begin(), e.tensor.mutable_data().end(), 0.0f);
    const auto report = evaluate(state, build_sequences(f, 8, 20));
    CHECK(report.names == schema.names());
    for (double v : report.mse) CHECK(v == 0.0);
  }
}
