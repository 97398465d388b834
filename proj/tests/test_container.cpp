#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "checks.hpp"
#include "ramat/config.hpp"
#include "ramat/container.hpp"
#include "ramat/error.hpp"
#include "ramat/train.hpp"

using namespace ramat;
using namespace ramat::testing;

namespace {

ModelState trained_state() {
  auto m = tiny_model();
  auto state = init_model_state(m, tiny_reservoir(), 5, {{"a", 1.5, 2.0, false}, {"b", -3.0, 1.0, true}});
  Rng rng(6);
  std::vector<std::vector<float>> seg{normal_values<float>(200 * 2, 7)};
  PretrainOptions o;
  o.warmup_steps = 2;
  o.epochs = 1;
  Trace trace;
  pretrain(seg, state, o, trace);
  return state;
}

std::string bytes_of(const Container& c) {
  std::ostringstream out;
  write_container(out, c);
  return out.str();
}

}  // namespace

TEST_SUITE("container") {
  TEST_CASE("container roundtrip and manifest layout") {
    Container c;
    c.magic = kDatasetMagic;
    c.metadata["note"] = "x";
    c.add("a", {2, 3}, normal_values<float>(6, 1));
    c.add_i64("b", {4}, {1, -2, 1ll << 40, 7});
    c.add("c", {1}, {NAN});
    const auto bytes = bytes_of(c);
    CHECK(bytes.substr(0, 8) == "RAMATDS1");

    std::istringstream in(bytes);
    const auto back = read_container(in, kDatasetMagic);
    CHECK(back.metadata.at("note") == "x");
    CHECK_FALSE(back.metadata.contains("manifest"));
    CHECK(back.get("a").f32 == c.get("a").f32);
    CHECK(back.get("b").i64 == c.get("b").i64);
    CHECK(std::isnan(back.get("c").f32[0]));
    CHECK(bytes_of(back) == bytes);

    // Offsets are contiguous and cover the payload.
    std::uint64_t meta_len = 0;
    for (int i = 0; i < 8; ++i) meta_len |= std::uint64_t(std::uint8_t(bytes[8 + i])) << (8 * i);
    const auto meta = nlohmann::json::parse(bytes.substr(16, meta_len));
    std::uint64_t offset = 0;
    for (const auto& e : meta.at("manifest")) {
      CHECK(e.at("offset").get<std::uint64_t>() == offset);
      offset += e.at("bytes").get<std::uint64_t>();
    }
    CHECK(offset == bytes.size() - 16 - meta_len);

    std::istringstream wrong(bytes);
    CHECK_THROWS_AS(read_container(wrong, kCheckpointMagic), Error);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_container(truncated, kDatasetMagic), Error);
    std::istringstream extended(bytes + "zz");
    CHECK_THROWS_AS(read_container(extended, kDatasetMagic), Error);
  }

  TEST_CASE("checkpoint roundtrip is bit exact and resumes identically") {
    const auto dir = scratch_dir("ckpt");
    const auto path = (dir / "a.ckpt").string();
    auto state = trained_state();
    save_checkpoint(path, state, nlohmann::json{{"seed", 5}});
    nlohmann::json echo;
    auto back = load_checkpoint(path, &echo);
    CHECK(echo.at("seed") == 5);
    CHECK(back.model == state.model);
    CHECK(back.reservoir == state.reservoir);
    CHECK(back.rng == state.rng);
    CHECK(back.step == state.step);
    REQUIRE(back.optimizer.has_value());
    CHECK(back.optimizer->moments.size() == state.optimizer->moments.size());
    for (const auto& e : state.params.entries()) CHECK(back.params.get(e.name).values() == e.tensor.values());
    CHECK(back.scalers.size() == 2);
    CHECK(back.scalers[1].clamped);
    CHECK(back.scalers[0].mean == 1.5);

    const auto path2 = (dir / "b.ckpt").string();
    save_checkpoint(path2, back, echo);
    std::ifstream fa(path, std::ios::binary), fb(path2, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());

    // Both copies continue identically.
    std::vector<std::vector<float>> seg{normal_values<float>(200 * 2, 7)};
    PretrainOptions o;
    o.warmup_steps = 2;
    o.epochs = 2;
    Trace ta, tb;
    pretrain(seg, state, o, ta);
    pretrain(seg, back, o, tb);
    for (const auto& e : state.params.entries()) CHECK(back.params.get(e.name).values() == e.tensor.values());
  }

  TEST_CASE("checkpoint with mismatched shapes names the parameter") {
    auto state = trained_state();
    auto c = checkpoint_container(state, nlohmann::json::object());
    for (auto& a : c.arrays)
      if (a.name == "param.head.bias") {
        a.shape = {1, 2};
      }
    c.metadata["model"]["embed_dim"] = 4;
    c.metadata["model"]["num_heads"] = 2;
    try {
      state_from_container(c);
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kConfig);
      CHECK(std::string(e.what()).find("embed.weight") != std::string::npos);
    }
  }

  TEST_CASE("dataset roundtrip") {
    const auto dir = scratch_dir("dataset");
    DatasetFile f;
    f.frame.names = {"a", "b"};
    for (int r = 0; r < 6; ++r) {
      std::vector<std::optional<float>> row{float(r), float(-r)};
      f.frame.append_row(r * 20, row);
    }
    f.dataset = build_sequences(f.frame, 2, 20);
    f.scalers = fit_scalers(f.frame);
    f.t_step_ms = 20;
    f.summary = {{"samples", f.dataset.size()}};
    save_dataset((dir / "d.bin").string(), f);
    const auto g = load_dataset((dir / "d.bin").string());
    CHECK(g.frame.cells == f.frame.cells);
    CHECK(g.frame.timestamps == f.frame.timestamps);
    CHECK(g.dataset.x == f.dataset.x);
    CHECK(g.dataset.y == f.dataset.y);
    CHECK(g.dataset.target_rows == f.dataset.target_rows);
    CHECK(g.dataset.n_seq == 2);
    CHECK(g.t_step_ms == 20);
    CHECK(g.scalers[0].std == f.scalers[0].std);
    CHECK_THROWS_AS(load_checkpoint((dir / "d.bin").string()), Error);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults are materialized") {
    const auto c = RunConfig::from_json(nlohmann::json::object());
    const auto j = c.to_json();
    CHECK(j.at("model").at("mask_ratio") == 0.3);
    CHECK(j.at("reservoir").at("spectral_radius") == 0.9);
    CHECK(j.at("reservoir").at("zero_masked_reservoir_input") == false);
    CHECK(j.at("train").at("pretrain").at("weight_decay") == 0.01);
    CHECK(j.at("train").at("finetune").at("freeze") == "head_only");
    CHECK(j.at("data").at("window_ms") == 20);
    CHECK(j.at("data").at("schema").size() == 13);
    CHECK(j.at("model").at("channels") == 13);
    CHECK(j.at("data").at("n_seq") == j.at("model").at("window_length"));
    // The echo parses back to the same document.
    CHECK(RunConfig::from_json(j).to_json() == j);
  }

  TEST_CASE("strict parsing") {
    try {
      RunConfig::from_json(nlohmann::json::parse(R"({"model": {"embed_dims": 8}})"));
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kConfig);
      CHECK(std::string(e.what()).find("model.embed_dims") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"bogus": 1})")), Error);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"model": {"window_length": "x"}})")), Error);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"data": {"channels": ["a"]}, "model": {"channels": 2}})")),
                    Error);
    const auto c = RunConfig::from_json(nlohmann::json::parse(R"({"data": {"channels": ["a", "b"]}})"));
    CHECK(c.model.channels == 2);
    CHECK(c.data.schema.names() == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("seed precedence") {
    RunConfig c;
    c.seed = 3;
    unsetenv("RAMAT_SEED");
    CHECK(resolve_seed(c, std::nullopt) == 3);
    setenv("RAMAT_SEED", "17", 1);
    CHECK(resolve_seed(c, std::nullopt) == 17);
    CHECK(resolve_seed(c, 99) == 99);
    setenv("RAMAT_SEED", "abc", 1);
    CHECK_THROWS_AS(resolve_seed(c, std::nullopt), Error);
    unsetenv("RAMAT_SEED");
  }
}
