#ifndef RAMAT_REPORT_HPP
#define RAMAT_REPORT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ramat/pipeline.hpp"
#include "ramat/train.hpp"

namespace ramat {

// One-step-ahead evaluation in original units, one entry per KPI.
struct EvalReport {
  std::vector<std::string> names;
  std::vector<double> mse;               ///< original units
  std::vector<double> mse_standardized;  ///< scaler units
  std::vector<std::int64_t> timestamps;  ///< per sample
  std::vector<float> predictions;        ///< [M × K], original units
  std::vector<float> targets;            ///< [M × K], original units

  std::size_t samples() const { return timestamps.size(); }
};

/// Predicts every sample of an original-unit dataset with the checkpoint's
/// scalers and model.
EvalReport evaluate(const ModelState& state, const SequenceDataset& dataset);

/// mse.csv, series.csv, summary.json and one SVG per KPI under `dir`.
void write_eval_report(const std::string& dir, const EvalReport& report);

std::string render_kpi_svg(const EvalReport& report, std::size_t channel);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

void write_trace_csv(const std::string& path, const Trace& trace);

}  // namespace ramat

#endif  // RAMAT_REPORT_HPP
