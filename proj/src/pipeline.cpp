#include "ramat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "ramat/error.hpp"

namespace ramat {

KpiSchema KpiSchema::oran_default() {
  using K = ChannelKind;
  KpiSchema s;
  s.channels = {
      {"Spectral Efficiency", "bps/Hz", K::kContinuous, 0.0, 3.74, std::nullopt},
      {"RSRP", "dBm", K::kContinuous, -102.0, -75.0, std::nullopt},
      {"SINR", "dB", K::kContinuous, 9.43, 24.33, std::nullopt},
      {"MIMO Rank", "", K::kDiscreteIndex, 1.0, 2.0, std::nullopt},
      {"MCS", "index", K::kDiscreteIndex, 0.0, 27.0, std::nullopt},
      {"RB Number", "RBs", K::kDiscreteIndex, 2.0, 25.0, std::nullopt},
      {"CQI", "index", K::kDiscreteIndex, 0.0, 13.0, std::nullopt},
      {"RSRQ", "dB", K::kContinuous, -14.0, -6.4, std::nullopt},
      {"PMI", "index", K::kDiscreteIndex, 0.0, 3.0, std::nullopt},
      {"UE RSSI", "dBm", K::kContinuous, -70.0, -60.0, std::nullopt},
      {"UE Buffer Status", "bytes", K::kContinuous, 0.0, 2944.0, std::nullopt},
      {"BLER", "%", K::kContinuous, 0.0, 78.0, std::nullopt},
      {"Packet Delay", "ms", K::kContinuous, 0.0, 3048.06, -1.0f},
  };
  return s;
}

KpiSchema KpiSchema::generic(const std::vector<std::string>& names) {
  KpiSchema s;
  for (const auto& n : names) s.channels.push_back({n, "", ChannelKind::kContinuous, 0.0, 0.0, {}});
  return s;
}

std::vector<std::string> KpiSchema::names() const {
  std::vector<std::string> out;
  for (const auto& c : channels) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> KpiSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name == name) return i;
  return std::nullopt;
}

void KpiSchema::validate() const {
  if (channels.empty()) throw config_error("schema has no channels");
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (c.name.empty()) throw config_error("schema channel with empty name");
    if (!seen.insert(c.name).second) throw config_error("duplicate schema channel '" + c.name + "'");
    if (c.range_min > c.range_max) throw config_error("empty range for channel '" + c.name + "'");
  }
}

std::string to_string(ChannelKind kind) {
  return kind == ChannelKind::kContinuous ? "continuous" : "discrete-index";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "continuous") return ChannelKind::kContinuous;
  if (s == "discrete-index") return ChannelKind::kDiscreteIndex;
  throw config_error("unknown channel kind '" + s + "'");
}

void KpiFrame::append_row(std::int64_t timestamp, std::span<const std::optional<float>> values) {
  if (values.size() != names.size()) {
    throw data_error("row with " + std::to_string(values.size()) + " cells, expected " +
                     std::to_string(names.size()));
  }
  if (!timestamps.empty() && timestamp < timestamps.back()) {
    throw data_error("timestamp " + std::to_string(timestamp) + " after " +
                     std::to_string(timestamps.back()) + " is out of order");
  }
  timestamps.push_back(timestamp);
  cells.insert(cells.end(), values.begin(), values.end());
}

bool KpiFrame::has_missing() const {
  return std::any_of(cells.begin(), cells.end(), [](const auto& c) { return !c.has_value(); });
}

void KpiFrame::validate() const {
  if (cells.size() != timestamps.size() * names.size()) throw data_error("ragged frame");
  if (!std::is_sorted(timestamps.begin(), timestamps.end()))
    throw data_error("frame timestamps are not sorted");
}

std::vector<KpiStream> streams_from_frame(const KpiFrame& raw) {
  std::vector<KpiStream> streams(raw.channels());
  for (std::size_t c = 0; c < raw.channels(); ++c) streams[c].name = raw.names[c];
  for (std::size_t r = 0; r < raw.rows(); ++r)
    for (std::size_t c = 0; c < raw.channels(); ++c)
      if (const auto& v = raw.cell(r, c)) streams[c].events.push_back({raw.timestamps[r], *v});
  return streams;
}

KpiFrame moving_average_align(const std::vector<KpiStream>& streams, std::int64_t window_ms,
                              std::int64_t step_ms) {
  if (window_ms <= 0 || step_ms <= 0) {
    throw config_error("moving average window and step must be positive (got " +
                       std::to_string(window_ms) + ", " + std::to_string(step_ms) + ")");
  }
  KpiFrame out;
  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : streams) {
    out.names.push_back(s.name);
    for (std::size_t i = 1; i < s.events.size(); ++i)
      if (s.events[i].timestamp_ms < s.events[i - 1].timestamp_ms)
        throw data_error("events of '" + s.name + "' are not sorted by timestamp");
    if (!s.events.empty()) {
      first = std::min(first, s.events.front().timestamp_ms);
      last = std::max(last, s.events.back().timestamp_ms);
    }
  }
  if (first > last) return out;

  // One cursor per stream; windows may overlap when window > step, so each
  // window rescans from the first event not before its start.
  std::vector<std::size_t> cursor(streams.size(), 0);
  std::vector<std::optional<float>> row(streams.size());
  for (std::int64_t start = first;; start += step_ms) {
    const std::int64_t end = start + window_ms;
    for (std::size_t c = 0; c < streams.size(); ++c) {
      const auto& ev = streams[c].events;
      while (cursor[c] < ev.size() && ev[cursor[c]].timestamp_ms < start) ++cursor[c];
      double total = 0.0;
      std::size_t count = 0;
      for (std::size_t i = cursor[c]; i < ev.size() && ev[i].timestamp_ms < end; ++i) {
        total += ev[i].value;
        ++count;
      }
      row[c] = count ? std::optional<float>(static_cast<float>(total / static_cast<double>(count)))
                     : std::nullopt;
    }
    out.append_row(start, row);
    if (end > last) break;
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw data_error("quantile of an empty sample");
  const double pos = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IqrBounds iqr_bounds(std::span<const double> values) {
  std::vector<double> sorted;
  for (double v : values)
    if (std::isfinite(v)) sorted.push_back(v);
  if (sorted.size() < 2) {
    throw data_error("IQR bounds need at least 2 finite samples, got " +
                     std::to_string(sorted.size()));
  }
  std::sort(sorted.begin(), sorted.end());
  IqrBounds b;
  b.q1 = quantile_sorted(sorted, 0.10);
  b.q3 = quantile_sorted(sorted, 0.90);
  b.lower = b.q1 - 1.5 * b.iqr();
  b.upper = b.q3 + 1.5 * b.iqr();
  return b;
}

KpiFrame conform_to_schema(const KpiFrame& frame, const KpiSchema& schema) {
  std::vector<std::size_t> source(schema.size(), SIZE_MAX);
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    const auto idx = schema.index_of(frame.names[c]);
    if (!idx) throw data_error("schema: unknown channel '" + frame.names[c] + "'");
    if (source[*idx] != SIZE_MAX) throw data_error("schema: duplicate channel '" + frame.names[c] + "'");
    source[*idx] = c;
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (source[i] == SIZE_MAX) {
      throw data_error("schema: channel '" + schema.channels[i].name + "' missing from input (" +
                       std::to_string(frame.channels()) + " of " + std::to_string(schema.size()) +
                       " channels present)");
    }
  }
  KpiFrame out;
  out.names = schema.names();
  std::vector<std::optional<float>> row(schema.size());
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    for (std::size_t i = 0; i < schema.size(); ++i) row[i] = frame.cell(r, source[i]);
    out.append_row(frame.timestamps[r], row);
  }
  return out;
}

ImputeResult impute_or_drop(const KpiFrame& frame, const KpiSchema& schema) {
  if (frame.names != schema.names()) throw data_error("schema: frame channels do not match schema");
  ImputeResult res;
  res.frame.names = frame.names;
  std::vector<std::optional<float>> row(frame.channels());
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    bool keep = true;
    bool imputed = false;
    for (std::size_t c = 0; c < frame.channels(); ++c) {
      row[c] = frame.cell(r, c);
      if (row[c]) continue;
      if (const auto& fill = schema.channels[c].impute_missing) {
        row[c] = *fill;
        imputed = true;
      } else {
        keep = false;
      }
    }
    if (!keep) {
      ++res.dropped_rows;
      continue;
    }
    if (imputed) ++res.imputed_rows;
    res.frame.append_row(frame.timestamps[r], row);
  }
  return res;
}

std::vector<IqrBounds> channel_bounds(const KpiFrame& frame) {
  std::vector<IqrBounds> bounds;
  std::vector<double> column(frame.rows());
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      const auto& v = frame.cell(r, c);
      if (!v) throw data_error("IQR bounds on a frame with missing cells");
      column[r] = *v;
    }
    bounds.push_back(iqr_bounds(column));
  }
  return bounds;
}

std::pair<KpiFrame, std::size_t> prune_outliers(const KpiFrame& frame,
                                                const std::vector<IqrBounds>& bounds) {
  if (bounds.size() != frame.channels()) throw dimension_error("one IQR bound per channel required");
  KpiFrame out;
  out.names = frame.names;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    const auto row = frame.row(r);
    bool inside = true;
    for (std::size_t c = 0; c < row.size() && inside; ++c)
      inside = row[c] && bounds[c].contains(*row[c]);
    if (inside) {
      out.append_row(frame.timestamps[r], row);
    } else {
      ++dropped;
    }
  }
  return {std::move(out), dropped};
}

FilterResult pad_and_filter(const KpiFrame& frame, const KpiSchema& schema) {
  FilterResult res;
  res.rows_in = frame.rows();
  auto imputed = impute_or_drop(frame, schema);
  res.imputed_rows = imputed.imputed_rows;
  res.dropped_missing = imputed.dropped_rows;
  if (imputed.frame.rows() < 2) {
    // Too few rows for quantiles; nothing to prune against.
    res.frame = std::move(imputed.frame);
    return res;
  }
  res.bounds = channel_bounds(imputed.frame);
  auto [pruned, dropped] = prune_outliers(imputed.frame, res.bounds);
  res.frame = std::move(pruned);
  res.dropped_iqr = dropped;
  return res;
}

SequenceDataset SequenceDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw dimension_error("dataset slice out of range");
  SequenceDataset out;
  out.names = names;
  out.n_seq = n_seq;
  const std::size_t k = channels();
  out.x.assign(x.begin() + begin * n_seq * k, x.begin() + end * n_seq * k);
  out.y.assign(y.begin() + begin * k, y.begin() + end * k);
  out.target_timestamps.assign(target_timestamps.begin() + begin, target_timestamps.begin() + end);
  out.target_rows.assign(target_rows.begin() + begin, target_rows.begin() + end);
  return out;
}

SequenceDataset build_sequences(const KpiFrame& frame, std::size_t n_seq, std::int64_t t_step_ms) {
  if (n_seq < 1) throw config_error("n_seq must be at least 1");
  if (t_step_ms <= 0) throw config_error("t_step must be positive");
  if (frame.has_missing()) throw data_error("sequence construction needs a frame without missing cells");
  SequenceDataset ds;
  ds.names = frame.names;
  ds.n_seq = n_seq;
  const std::size_t k = frame.channels();
  const auto& ts = frame.timestamps;
  for (std::size_t i = n_seq - 1; i + 1 < frame.rows(); ++i) {
    if (ts[i + 1] - ts[i] != t_step_ms) continue;
    bool consecutive = true;
    for (std::size_t j = i + 1 - n_seq; j < i && consecutive; ++j)
      consecutive = ts[j + 1] - ts[j] == t_step_ms;
    if (!consecutive) continue;
    for (std::size_t j = i + 1 - n_seq; j <= i; ++j)
      for (std::size_t c = 0; c < k; ++c) ds.x.push_back(*frame.cell(j, c));
    for (std::size_t c = 0; c < k; ++c) ds.y.push_back(*frame.cell(i + 1, c));
    ds.target_rows.push_back(i + 1);
    ds.target_timestamps.push_back(ts[i + 1]);
  }
  return ds;
}

std::vector<std::vector<float>> contiguous_segments(const KpiFrame& frame, std::int64_t t_step_ms) {
  if (frame.has_missing()) throw data_error("segments need a frame without missing cells");
  std::vector<std::vector<float>> segments;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (r == 0 || frame.timestamps[r] - frame.timestamps[r - 1] != t_step_ms) segments.emplace_back();
    for (const auto& v : frame.row(r)) segments.back().push_back(*v);
  }
  return segments;
}

namespace {

// Two-pass mean / population variance over interleaved rows.
Scalers scalers_from_rows(const std::vector<std::string>& names, std::span<const float> rows) {
  const std::size_t k = names.size();
  const std::size_t n = rows.size() / k;
  if (n == 0) throw data_error("cannot fit scalers on zero rows");
  Scalers out(k);
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += rows[r * k + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = rows[r * k + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    out[c].channel = names[c];
    out[c].mean = mean;
    out[c].std = std::sqrt(var);
    if (!(out[c].std > 1e-12)) {
      std::clog << "warning: channel '" << names[c] << "' is constant; std clamped to 1\n";
      out[c].std = 1.0;
      out[c].clamped = true;
    }
  }
  return out;
}

}  // namespace

Scalers fit_scalers(const KpiFrame& frame) {
  if (frame.has_missing()) throw data_error("cannot fit scalers on a frame with missing cells");
  std::vector<float> rows;
  rows.reserve(frame.cells.size());
  for (const auto& v : frame.cells) rows.push_back(*v);
  return scalers_from_rows(frame.names, rows);
}

Scalers fit_scalers(const SequenceDataset& dataset) {
  return scalers_from_rows(dataset.names, dataset.x);
}

void apply_scalers(std::span<float> rows, const Scalers& scalers) {
  const std::size_t k = scalers.size();
  if (k == 0 || rows.size() % k != 0) throw dimension_error("rows do not align with scalers");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = scalers[i % k];
    rows[i] = static_cast<float>((rows[i] - s.mean) / s.std);
  }
}

void invert_scalers(std::span<float> rows, const Scalers& scalers) {
  const std::size_t k = scalers.size();
  if (k == 0 || rows.size() % k != 0) throw dimension_error("rows do not align with scalers");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = scalers[i % k];
    rows[i] = static_cast<float>(rows[i] * s.std + s.mean);
  }
}

SequenceDataset apply_scalers(const SequenceDataset& dataset, const Scalers& scalers) {
  check_scaler_channels(scalers, dataset.names);
  SequenceDataset out = dataset;
  apply_scalers(out.x, scalers);
  apply_scalers(out.y, scalers);
  return out;
}

void check_scaler_channels(const Scalers& scalers, const std::vector<std::string>& names) {
  bool match = scalers.size() == names.size();
  for (std::size_t i = 0; match && i < names.size(); ++i) match = scalers[i].channel == names[i];
  if (!match) {
    std::string have, want;
    for (const auto& s : scalers) have += (have.empty() ? "" : ", ") + s.channel;
    for (const auto& n : names) want += (want.empty() ? "" : ", ") + n;
    throw config_error("scaler channels [" + have + "] do not match data channels [" + want + "]");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

KpiFrame read_kpi_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty CSV (no header row)");
  auto header = split_csv_line(line);
  if (header.empty() || trim(header[0]) != "timestamp_ms")
    throw data_error("first CSV column must be 'timestamp_ms'");
  KpiFrame frame;
  for (std::size_t i = 1; i < header.size(); ++i) frame.names.push_back(trim(header[i]));
  std::vector<std::optional<float>> row(frame.names.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw data_error("line " + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    const std::string ts_text = trim(fields[0]);
    std::int64_t ts = 0;
    const auto [p, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
    if (ec != std::errc() || p != ts_text.data() + ts_text.size())
      throw data_error("line " + std::to_string(line_no) + ": bad timestamp '" + ts_text + "'");
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string text = trim(fields[c + 1]);
      if (text.empty()) {
        row[c].reset();
        continue;
      }
      float v = 0.0f;
      const auto [q, ec2] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec2 != std::errc() || q != text.data() + text.size() || !std::isfinite(v))
        throw data_error("line " + std::to_string(line_no) + ": bad value '" + text + "'");
      row[c] = v;
    }
    frame.append_row(ts, row);
  }
  return frame;
}

KpiFrame read_kpi_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  return read_kpi_csv(in);
}

void write_kpi_csv(std::ostream& out, const KpiFrame& frame) {
  out << "timestamp_ms";
  for (const auto& n : frame.names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out << frame.timestamps[r];
    for (const auto& v : frame.row(r)) {
      out << ',';
      if (v) {
        // Shortest round-trip representation.
        const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, *v);
        out.write(buf, p - buf);
      }
    }
    out << '\n';
  }
}

PreprocessResult preprocess(const std::vector<KpiFrame>& raw_files, const KpiSchema& schema,
                            const PreprocessOptions& options) {
  schema.validate();
  std::vector<KpiStream> streams(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) streams[c].name = schema.channels[c].name;
  PreprocessResult res;
  for (const auto& raw : raw_files) {
    res.summary.raw_rows += raw.rows();
    const auto conformed = conform_to_schema(raw, schema);
    auto per_channel = streams_from_frame(conformed);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      auto& dst = streams[c].events;
      dst.insert(dst.end(), per_channel[c].events.begin(), per_channel[c].events.end());
    }
  }
  if (raw_files.size() > 1) {
    for (auto& s : streams)
      std::stable_sort(s.events.begin(), s.events.end(),
                       [](const KpiEvent& a, const KpiEvent& b) { return a.timestamp_ms < b.timestamp_ms; });
  }
  const KpiFrame aligned = moving_average_align(streams, options.window_ms, options.step_ms);
  res.summary.aligned_rows = aligned.rows();
  auto filtered = pad_and_filter(aligned, schema);
  res.summary.imputed_rows = filtered.imputed_rows;
  res.summary.dropped_missing = filtered.dropped_missing;
  res.summary.dropped_iqr = filtered.dropped_iqr;
  res.summary.kept_rows = filtered.frame.rows();
  res.frame = std::move(filtered.frame);
  res.dataset = build_sequences(res.frame, options.n_seq, options.t_step_ms);
  res.summary.samples = res.dataset.size();
  res.summary.channels = schema.size();
  if (res.dataset.size() == 0) throw data_error("preprocessing produced no sequences (M = 0)");
  res.scalers = fit_scalers(res.frame);
  return res;
}

}  // namespace ramat
