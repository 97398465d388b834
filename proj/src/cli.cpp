#include "ramat/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ramat/config.hpp"
#include "ramat/container.hpp"
#include "ramat/error.hpp"
#include "ramat/report.hpp"
#include "ramat/synthetic.hpp"

namespace ramat {
namespace {

using nlohmann::json;

RunConfig load_config(const std::string& path) {
  RunConfig c = path.empty() ? RunConfig{} : RunConfig::load(path);
  c.validate();
  return c;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// Effective config goes next to the primary output and to stderr.
void echo_config(const json& effective, const std::string& path, std::ostream& err) {
  write_json_file(path, effective);
  err << "effective config: " << effective.dump() << '\n';
}

std::string summary_of(const PreprocessSummary& s, json& j) {
  j = {{"raw_rows", s.raw_rows},
       {"aligned_rows", s.aligned_rows},
       {"imputed_rows", s.imputed_rows},
       {"dropped_missing", s.dropped_missing},
       {"dropped_iqr", s.dropped_iqr},
       {"kept_rows", s.kept_rows},
       {"samples", s.samples},
       {"channels", s.channels}};
  return j.dump(2);
}

// Dataset channel names must match the configured schema in order.
void check_dataset_schema(const DatasetFile& data, const RunConfig& config) {
  const auto expected = config.data.schema.names();
  if (data.dataset.names != expected) {
    std::string got, want;
    for (const auto& n : data.dataset.names) got += (got.empty() ? "" : ", ") + n;
    for (const auto& n : expected) want += (want.empty() ? "" : ", ") + n;
    throw config_error("schema: dataset channels [" + got + "] do not match the configured schema [" + want +
                       "]");
  }
}

std::vector<std::vector<float>> standardized_segments(const DatasetFile& data, const Scalers& scalers) {
  auto segments = contiguous_segments(data.frame, data.t_step_ms);
  for (auto& s : segments) apply_scalers(s, scalers);
  return segments;
}

// Shapes the config implies against the shapes stored in the checkpoint.
void check_compatible(const ModelState& state, const RunConfig& config) {
  Rng scratch(0);
  const auto expected = ModelParams<float>::init(config.model, config.reservoir.size, scratch);
  for (const auto& p : expected.entries()) {
    if (!state.params.contains(p.name))
      throw config_error("checkpoint has no parameter '" + p.name + "' required by the config");
    const auto& have = state.params.get(p.name).shape();
    if (have != p.tensor.shape())
      throw config_error("parameter '" + p.name + "' has shape " + shape_str(have) +
                         " in the checkpoint but the config implies " + shape_str(p.tensor.shape()));
  }
  for (const auto& p : state.params.entries())
    if (!expected.contains(p.name))
      throw config_error("checkpoint parameter '" + p.name + "' is not part of the configured model");
}

int cmd_synth(const std::string& kind, std::size_t rows, std::size_t channels, std::uint64_t seed,
              std::int64_t t_step, double missing, double outliers, const std::string& out_path) {
  SyntheticOptions o;
  o.kind = synthetic_kind_from_string(kind);
  o.rows = rows;
  o.channels = channels;
  o.seed = seed;
  o.t_step_ms = t_step;
  o.missing_rate = missing;
  o.outlier_rate = outliers;
  const auto frame = generate_synthetic(o);
  std::ofstream out(out_path);
  if (!out) throw data_error("cannot write '" + out_path + "'");
  write_kpi_csv(out, frame);
  return 0;
}

int cmd_preprocess(std::vector<std::string> inputs, const std::string& out_path, const std::string& config_path,
                   std::optional<std::uint64_t> seed_flag, std::ostream& out, std::ostream& err) {
  RunConfig config = load_config(config_path);
  config.seed = resolve_seed(config, seed_flag);
  if (inputs.empty()) inputs = config.data.csv;
  if (inputs.empty()) throw config_error("no input CSV given (--in or data.csv)");
  config.data.csv = inputs;
  echo_config(config.to_json(), out_path + ".config.json", err);

  std::vector<KpiFrame> raw;
  for (const auto& path : inputs) raw.push_back(read_kpi_csv_file(path));
  auto result = preprocess(raw, config.data.schema, config.data.preprocess);

  DatasetFile file;
  file.frame = std::move(result.frame);
  file.dataset = std::move(result.dataset);
  file.scalers = result.scalers;
  file.t_step_ms = config.data.preprocess.t_step_ms;
  const std::string text = summary_of(result.summary, file.summary);
  save_dataset(out_path, file);
  write_json_file(out_path + ".scalers.json", scalers_to_json(file.scalers));
  write_json_file(out_path + ".summary.json", file.summary);
  out << text << '\n';
  return 0;
}

int cmd_pretrain(const std::string& data_path, const std::string& config_path, const std::string& out_path,
                 std::string trace_path, std::optional<std::uint64_t> seed_flag, const std::string& resume,
                 std::uint64_t halt_at, std::ostream& err) {
  RunConfig config = load_config(config_path);
  config.seed = resolve_seed(config, seed_flag);
  const json effective = config.to_json();
  echo_config(effective, out_path + ".config.json", err);
  if (trace_path.empty()) trace_path = out_path + ".trace.csv";

  const auto data = load_dataset(data_path);
  check_dataset_schema(data, config);

  ModelState state;
  if (!resume.empty()) {
    state = load_checkpoint(resume);
    check_compatible(state, config);
    check_scaler_channels(state.scalers, data.dataset.names);
  } else {
    state = init_model_state(config.model, config.reservoir, config.seed, data.scalers);
  }
  const auto segments = standardized_segments(data, state.scalers);

  Trace trace;
  try {
    pretrain(segments, state, config.pretrain, trace, halt_at);
  } catch (const Error&) {
    write_trace_csv(trace_path, trace);
    throw;
  }
  write_trace_csv(trace_path, trace);
  save_checkpoint(out_path, state, effective);
  return 0;
}

int cmd_finetune(const std::string& ckpt_path, const std::string& data_path, const std::string& config_path,
                 const std::string& out_path, std::string trace_path, std::optional<std::uint64_t> seed_flag,
                 std::ostream& out, std::ostream& err) {
  RunConfig config = load_config(config_path);
  config.seed = resolve_seed(config, seed_flag);
  const json effective = config.to_json();
  echo_config(effective, out_path + ".config.json", err);
  if (trace_path.empty()) trace_path = out_path + ".trace.csv";
  if (config.model.head != HeadKind::kRegression)
    throw config_error("the command line fine-tunes regression heads only");

  auto state = load_checkpoint(ckpt_path);
  check_compatible(state, config);
  const auto data = load_dataset(data_path);
  check_dataset_schema(data, config);
  check_scaler_channels(state.scalers, data.dataset.names);
  state.model = config.model;
  state.rng = Rng(derive_seed(config.seed, 3));

  const auto standardized = apply_scalers(data.dataset, state.scalers);
  Trace trace;
  FinetuneReport report;
  try {
    report = finetune(state, standardized, config.finetune, trace);
  } catch (const Error&) {
    write_trace_csv(trace_path, trace);
    throw;
  }
  write_trace_csv(trace_path, trace);
  save_checkpoint(out_path, state, effective);
  out << json{{"epochs_run", report.epochs_run},
              {"best_epoch", report.best_epoch},
              {"best_val_mse", report.best_val},
              {"early_stopped", report.early_stopped}}
             .dump(2)
      << '\n';
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& in_path, const std::string& out_path,
                std::ostream& err) {
  json echo;
  const auto state = load_checkpoint(ckpt_path, &echo);
  const RunConfig config = RunConfig::from_json(echo);
  echo_config(echo, out_path + ".config.json", err);
  if (state.model.head != HeadKind::kRegression) throw config_error("predict needs a regression head");

  std::vector<std::string> names;
  for (const auto& s : state.scalers) names.push_back(s.channel);
  const auto raw = read_kpi_csv_file(in_path);
  KpiFrame frame = conform_to_schema(raw, KpiSchema::generic(names));
  if (frame.has_missing()) throw data_error("input window has missing cells");

  const std::size_t n_seq = state.model.window_length;
  const std::int64_t t_step = config.data.preprocess.t_step_ms;
  const std::size_t rows = frame.timestamps.size();
  if (rows < n_seq)
    throw data_error("need at least " + std::to_string(n_seq) + " rows, got " + std::to_string(rows));
  for (std::size_t r = 1; r < rows; ++r) {
    if (frame.timestamps[r] - frame.timestamps[r - 1] != t_step)
      throw data_error("gap in timestamps between rows " + std::to_string(r - 1) + " (t=" +
                       std::to_string(frame.timestamps[r - 1]) + ") and " + std::to_string(r) + " (t=" +
                       std::to_string(frame.timestamps[r]) + "), expected spacing " + std::to_string(t_step));
  }

  const std::size_t k = names.size();
  std::vector<float> values(rows * k);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = *frame.cells[i];
  apply_scalers(values, state.scalers);

  SequenceDataset windows;
  windows.names = names;
  windows.n_seq = n_seq;
  for (std::size_t end = n_seq; end <= rows; ++end) {
    windows.x.insert(windows.x.end(), values.begin() + (end - n_seq) * k, values.begin() + end * k);
    windows.y.insert(windows.y.end(), k, 0.0f);
    windows.target_timestamps.push_back(frame.timestamps[end - 1] + t_step);
    windows.target_rows.push_back(end);
  }
  auto pred = predict(state, windows);
  invert_scalers(pred, state.scalers);

  std::ofstream out(out_path);
  if (!out) throw data_error("cannot write '" + out_path + "'");
  out << "timestamp_ms,channel,prediction\n";
  for (std::size_t i = 0; i < windows.target_timestamps.size(); ++i)
    for (std::size_t c = 0; c < k; ++c)
      out << windows.target_timestamps[i] << ",\"" << names[c] << "\"," << format_number(pred[i * k + c])
          << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, const std::string& out_dir,
             std::ostream& out, std::ostream& err) {
  json echo;
  const auto state = load_checkpoint(ckpt_path, &echo);
  std::filesystem::create_directories(out_dir);
  echo_config(echo, (std::filesystem::path(out_dir) / "config.json").string(), err);
  const auto data = load_dataset(data_path);
  check_scaler_channels(state.scalers, data.dataset.names);
  const auto report = evaluate(state, data.dataset);
  write_eval_report(out_dir, report);
  for (std::size_t c = 0; c < report.names.size(); ++c)
    out << "KPI " << c << " (" << report.names[c] << "), MSE=" << format_number(report.mse[c]) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ramat: reservoir-fed masked transformer for KPI forecasting"};
  app.require_subcommand(1);

  std::string kind = "sinusoid", out_path, config_path, data_path, ckpt_path, trace_path, resume, in_path;
  std::vector<std::string> inputs;
  std::size_t rows = 1000, channels = 3;
  std::uint64_t synth_seed = 0, halt_at = 0;
  std::int64_t t_step = 20;
  double missing = 0.03, outliers = 0.01;
  std::optional<std::uint64_t> seed;

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic KPI CSV");
  synth->add_option("--kind", kind, "sinusoid | ar2 | bursty")->capture_default_str();
  synth->add_option("--rows", rows)->capture_default_str();
  synth->add_option("--channels", channels, "ignored by bursty")->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--t-step", t_step, "row spacing in ms")->capture_default_str();
  synth->add_option("--missing-rate", missing)->capture_default_str();
  synth->add_option("--outlier-rate", outliers)->capture_default_str();
  synth->add_option("--out", out_path)->required();

  auto* prep = app.add_subcommand("preprocess", "align, filter and window raw KPI CSVs");
  prep->add_option("--in", inputs, "raw CSV files");
  prep->add_option("--out", out_path, "dataset file")->required();
  prep->add_option("--config", config_path);
  prep->add_option("--seed", seed);

  auto* pre = app.add_subcommand("pretrain", "masked-patch pretraining");
  pre->add_option("--data", data_path)->required();
  pre->add_option("--config", config_path);
  pre->add_option("--out", out_path, "checkpoint")->required();
  pre->add_option("--trace", trace_path, "loss CSV (default <out>.trace.csv)");
  pre->add_option("--seed", seed);
  pre->add_option("--resume", resume, "continue from a checkpoint");
  pre->add_option("--halt-at", halt_at, "stop once this global step is reached");

  auto* fine = app.add_subcommand("finetune", "supervised one-step fine-tuning");
  fine->add_option("--ckpt", ckpt_path)->required();
  fine->add_option("--data", data_path)->required();
  fine->add_option("--config", config_path);
  fine->add_option("--out", out_path, "checkpoint")->required();
  fine->add_option("--trace", trace_path, "validation CSV (default <out>.trace.csv)");
  fine->add_option("--seed", seed);

  auto* pred = app.add_subcommand("predict", "one-step predictions for a window CSV");
  pred->add_option("--ckpt", ckpt_path)->required();
  pred->add_option("--in", in_path)->required();
  pred->add_option("--out", out_path)->required();

  auto* eval = app.add_subcommand("eval", "per-KPI test MSE report with SVG plots");
  eval->add_option("--ckpt", ckpt_path)->required();
  eval->add_option("--data", data_path)->required();
  eval->add_option("--out", out_path, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::kConfig);
  }

  try {
    if (*synth) return cmd_synth(kind, rows, channels, synth_seed, t_step, missing, outliers, out_path);
    if (*prep) return cmd_preprocess(inputs, out_path, config_path, seed, out, err);
    if (*pre) return cmd_pretrain(data_path, config_path, out_path, trace_path, seed, resume, halt_at, err);
    if (*fine) return cmd_finetune(ckpt_path, data_path, config_path, out_path, trace_path, seed, out, err);
    if (*pred) return cmd_predict(ckpt_path, in_path, out_path, err);
    if (*eval) return cmd_eval(ckpt_path, data_path, out_path, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace ramat
