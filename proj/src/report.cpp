#include "ramat/report.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ramat/error.hpp"

namespace ramat {

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

EvalReport evaluate(const ModelState& state, const SequenceDataset& dataset) {
  if (state.model.head != HeadKind::kRegression) throw config_error("eval needs a regression head");
  const auto standardized = apply_scalers(dataset, state.scalers);
  auto pred = predict(state, standardized);
  EvalReport r;
  r.names = dataset.names;
  r.mse_standardized = channel_mse(pred, standardized.y, dataset.channels());
  invert_scalers(pred, state.scalers);
  r.predictions = std::move(pred);
  r.targets = dataset.y;
  r.timestamps = dataset.target_timestamps;
  r.mse = channel_mse(r.predictions, r.targets, dataset.channels());
  return r;
}

std::string render_kpi_svg(const EvalReport& report, std::size_t channel) {
  constexpr double kWidth = 800, kHeight = 300, kMargin = 40;
  const std::size_t k = report.names.size();
  const std::size_t m = report.samples();
  double lo = 0.0, hi = 1.0;
  if (m > 0) {
    lo = hi = report.targets[channel];
    for (std::size_t i = 0; i < m; ++i) {
      for (float v : {report.targets[i * k + channel], report.predictions[i * k + channel]}) {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
      }
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  auto x_of = [&](std::size_t i) {
    return kMargin + (kWidth - 2 * kMargin) * (m > 1 ? static_cast<double>(i) / (m - 1) : 0.5);
  };
  auto y_of = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo); };
  auto polyline = [&](const std::vector<float>& series, const char* colour) {
    std::ostringstream out;
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
    char buf[48];
    for (std::size_t i = 0; i < m; ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_of(i), y_of(series[i * k + channel]));
      out << buf;
    }
    out << "\"/>\n";
    return out.str();
  };
  char title[256];
  std::snprintf(title, sizeof title, "KPI %zu (%s), MSE=%.3f", channel, report.names[channel].c_str(),
                report.mse[channel]);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n"
      << polyline(report.targets, "#1f77b4") << polyline(report.predictions, "#ff7f0e")
      << "</svg>\n";
  return svg.str();
}

void write_eval_report(const std::string& dir, const EvalReport& report) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw data_error("cannot create report directory '" + dir + "'");
  const fs::path root(dir);
  const std::size_t k = report.names.size();

  std::ofstream mse(root / "mse.csv");
  mse << "kpi,channel,mse,mse_standardized\n";
  for (std::size_t c = 0; c < k; ++c)
    mse << c << ",\"" << report.names[c] << "\"," << format_number(report.mse[c]) << ','
        << format_number(report.mse_standardized[c]) << '\n';

  std::ofstream series(root / "series.csv");
  series << "sample,timestamp_ms,channel,target,prediction\n";
  for (std::size_t i = 0; i < report.samples(); ++i)
    for (std::size_t c = 0; c < k; ++c)
      series << i << ',' << report.timestamps[i] << ",\"" << report.names[c] << "\","
             << format_number(report.targets[i * k + c]) << ','
             << format_number(report.predictions[i * k + c]) << '\n';

  nlohmann::json summary = {{"samples", report.samples()}, {"kpis", nlohmann::json::array()}};
  double total = 0.0, total_std = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    summary["kpis"].push_back({{"kpi", c},
                               {"channel", report.names[c]},
                               {"mse", report.mse[c]},
                               {"mse_standardized", report.mse_standardized[c]}});
    total += report.mse[c];
    total_std += report.mse_standardized[c];
  }
  summary["mean_mse"] = k ? total / k : 0.0;
  summary["mean_mse_standardized"] = k ? total_std / k : 0.0;
  std::ofstream(root / "summary.json") << summary.dump(2) << '\n';

  for (std::size_t c = 0; c < k; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "kpi_%02zu.svg", c);
    std::ofstream(root / name) << render_kpi_svg(report, c);
  }
  if (!mse || !series) throw data_error("failed writing report to '" + dir + "'");
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write trace '" + path + "'");
  out << "step,split,metric,value,lr\n";
  for (const auto& r : trace)
    out << r.step << ',' << r.split << ',' << r.metric << ',' << format_number(r.value) << ','
        << format_number(r.lr) << '\n';
}

}  // namespace ramat
