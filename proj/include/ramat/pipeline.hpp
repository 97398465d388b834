#ifndef RAMAT_PIPELINE_HPP
#define RAMAT_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ramat {

enum class ChannelKind { kContinuous, kDiscreteIndex };

struct ChannelSpec {
  std::string name;
  std::string unit;
  ChannelKind kind = ChannelKind::kContinuous;
  double range_min = 0.0;  ///< plausible observed range, informational
  double range_max = 0.0;
  /// Value substituted when this channel alone is missing in a row. Rows
  /// missing any channel without an imputation value are dropped.
  std::optional<float> impute_missing;
};

struct KpiSchema {
  std::vector<ChannelSpec> channels;

  /// The 13 O-RAN KPIs (physical/MAC layer plus packet delay) in their
  /// canonical order. Packet Delay is imputed with -1 when missing.
  static KpiSchema oran_default();

  /// Generic continuous channels with no imputation; used for synthetic data.
  static KpiSchema generic(const std::vector<std::string>& names);

  std::size_t size() const { return channels.size(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(const std::string& name) const;
  void validate() const;
};

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& s);

// Timestamped rows of K named cells; an empty optional is a MISSING cell.
struct KpiFrame {
  std::vector<std::string> names;
  std::vector<std::int64_t> timestamps;
  std::vector<std::optional<float>> cells;  ///< row-major, rows × names.size()

  std::size_t rows() const { return timestamps.size(); }
  std::size_t channels() const { return names.size(); }
  const std::optional<float>& cell(std::size_t r, std::size_t c) const {
    return cells[r * names.size() + c];
  }
  std::span<const std::optional<float>> row(std::size_t r) const {
    return {cells.data() + r * names.size(), names.size()};
  }
  void append_row(std::int64_t timestamp, std::span<const std::optional<float>> values);
  bool has_missing() const;
  /// Throws a data error if a row has the wrong width or timestamps decrease.
  void validate() const;
};

struct KpiEvent {
  std::int64_t timestamp_ms;
  float value;
};

struct KpiStream {
  std::string name;
  std::vector<KpiEvent> events;  ///< sorted by timestamp
};

/// One stream per column holding that column's non-missing cells.
std::vector<KpiStream> streams_from_frame(const KpiFrame& raw);

/// Fixed-window averaging onto a common time grid. Each window
/// [t, t+window) yields one row stamped t; the grid starts at the earliest
/// event and advances by `step` until a window reaches past the last event.
KpiFrame moving_average_align(const std::vector<KpiStream>& streams, std::int64_t window_ms,
                              std::int64_t step_ms);

struct IqrBounds {
  double q1 = 0.0;  ///< 10th percentile
  double q3 = 0.0;  ///< 90th percentile
  double lower = 0.0;
  double upper = 0.0;

  double iqr() const { return q3 - q1; }
  bool contains(double v) const { return v >= lower && v <= upper; }
};

/// Linear-interpolation quantile at position (n-1)·p of the sorted samples.
double quantile_sorted(std::span<const double> sorted, double p);

IqrBounds iqr_bounds(std::span<const double> values);

/// Reorders the frame's columns into schema order. Unknown, duplicate or
/// absent channels are a data error naming the channel.
KpiFrame conform_to_schema(const KpiFrame& frame, const KpiSchema& schema);

struct ImputeResult {
  KpiFrame frame;
  std::size_t imputed_rows = 0;
  std::size_t dropped_rows = 0;
};

/// Missing-value policy: a row whose only missing cells have an imputation
/// value is kept with those cells filled; any other incomplete row is dropped.
ImputeResult impute_or_drop(const KpiFrame& frame, const KpiSchema& schema);

/// Per-channel bounds over a frame without missing cells.
std::vector<IqrBounds> channel_bounds(const KpiFrame& frame);

/// Drops every row with a value outside its channel's bounds.
std::pair<KpiFrame, std::size_t> prune_outliers(const KpiFrame& frame,
                                                const std::vector<IqrBounds>& bounds);

struct FilterResult {
  KpiFrame frame;
  std::size_t rows_in = 0;
  std::size_t imputed_rows = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_iqr = 0;
  std::vector<IqrBounds> bounds;
};

/// Missing-value policy followed by a single IQR pruning pass. Bounds are
/// computed on the imputed frame, so imputed values take part in them.
FilterResult pad_and_filter(const KpiFrame& frame, const KpiSchema& schema);

// X = [M, n_seq, K] windows (oldest row first) and y = [M, K] next-row
// targets, stored flat and row-major.
struct SequenceDataset {
  std::vector<std::string> names;
  std::size_t n_seq = 0;
  std::vector<float> x;
  std::vector<float> y;
  std::vector<std::int64_t> target_timestamps;
  std::vector<std::size_t> target_rows;  ///< frame row index of each target

  std::size_t size() const { return target_rows.size(); }
  std::size_t channels() const { return names.size(); }
  std::span<const float> window(std::size_t i) const {
    return {x.data() + i * n_seq * channels(), n_seq * channels()};
  }
  std::span<const float> target(std::size_t i) const {
    return {y.data() + i * channels(), channels()};
  }
  /// Samples [begin, end) as a new dataset.
  SequenceDataset slice(std::size_t begin, std::size_t end) const;
};

/// Emits a point for every row i whose window rows i-n_seq+1..i and target
/// row i+1 are spaced exactly t_step apart. Too-short frames give M = 0.
SequenceDataset build_sequences(const KpiFrame& frame, std::size_t n_seq, std::int64_t t_step_ms);

/// Maximal runs of rows spaced exactly t_step apart, each as [len × K] values.
std::vector<std::vector<float>> contiguous_segments(const KpiFrame& frame, std::int64_t t_step_ms);

struct ChannelScaler {
  std::string channel;
  double mean = 0.0;
  double std = 1.0;
  bool clamped = false;  ///< std was zero and replaced by 1
};

using Scalers = std::vector<ChannelScaler>;

/// Mean and population std of every channel over all frame rows.
Scalers fit_scalers(const KpiFrame& frame);
/// Same statistics over every row of every window in X.
Scalers fit_scalers(const SequenceDataset& dataset);

/// Standardizes interleaved rows (K values per row) in place.
void apply_scalers(std::span<float> rows, const Scalers& scalers);
void invert_scalers(std::span<float> rows, const Scalers& scalers);
SequenceDataset apply_scalers(const SequenceDataset& dataset, const Scalers& scalers);

/// Throws a config error unless the scalers cover exactly `names`, in order.
void check_scaler_channels(const Scalers& scalers, const std::vector<std::string>& names);

KpiFrame read_kpi_csv(std::istream& in);
KpiFrame read_kpi_csv_file(const std::string& path);
void write_kpi_csv(std::ostream& out, const KpiFrame& frame);

struct PreprocessOptions {
  std::int64_t window_ms = 20;
  std::int64_t step_ms = 20;
  std::size_t n_seq = 16;
  std::int64_t t_step_ms = 20;
};

struct PreprocessSummary {
  std::size_t raw_rows = 0;
  std::size_t aligned_rows = 0;
  std::size_t imputed_rows = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_iqr = 0;
  std::size_t kept_rows = 0;
  std::size_t samples = 0;  ///< M
  std::size_t channels = 0;  ///< K
};

struct PreprocessResult {
  KpiFrame frame;  ///< aligned, imputed and pruned
  SequenceDataset dataset;
  Scalers scalers;
  PreprocessSummary summary;
};

/// Align → impute/drop → IQR prune → build sequences → fit scalers. Several
/// raw files are merged into one timeline: each contributes its non-missing
/// cells as events of the matching channel.
PreprocessResult preprocess(const std::vector<KpiFrame>& raw_files, const KpiSchema& schema,
                            const PreprocessOptions& options);

}  // namespace ramat

#endif  // RAMAT_PIPELINE_HPP
