#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "preprocess_oracle.hpp"
#include "ramat/error.hpp"
#include "ramat/pipeline.hpp"
#include "ramat/synthetic.hpp"
#include "test_support.hpp"

using namespace ramat;

namespace {

KpiFrame frame_from(const std::vector<std::string>& names, const std::vector<std::int64_t>& ts,
                    const std::vector<std::vector<std::optional<float>>>& rows) {
  KpiFrame f;
  f.names = names;
  for (std::size_t r = 0; r < ts.size(); ++r) f.append_row(ts[r], rows[r]);
  return f;
}

KpiFrame regular_frame(std::size_t rows, std::size_t k, std::int64_t t_step, std::uint64_t seed) {
  KpiFrame f;
  for (std::size_t c = 0; c < k; ++c) f.names.push_back("c" + std::to_string(c));
  Rng rng(seed);
  std::vector<std::optional<float>> row(k);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : row) v = static_cast<float>(rng.normal());
    f.append_row(static_cast<std::int64_t>(r) * t_step, row);
  }
  return f;
}

// Every row of the O-RAN schema filled with a mid-range value.
std::vector<std::optional<float>> oran_row(const KpiSchema& s) {
  std::vector<std::optional<float>> row;
  for (const auto& c : s.channels) row.push_back(static_cast<float>((c.range_min + c.range_max) / 2));
  return row;
}

// All i whose window and target rows are consecutive, by direct enumeration.
std::vector<std::size_t> enumerate_targets(const std::vector<std::int64_t>& ts, std::size_t n_seq,
                                           std::int64_t t_step) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i + 1 >= ts.size() || i + 1 < n_seq) continue;
    bool ok = true;
    for (std::size_t r = i + 1 - n_seq; r < i + 1; ++r) ok = ok && ts[r + 1] - ts[r] == t_step;
    if (ok) out.push_back(i + 1);
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("moving average alignment") {
    KpiStream s{"x", {{0, 2.0f}, {5, 4.0f}, {15, 6.0f}}};
    auto f = moving_average_align({s}, 10, 10);
    REQUIRE(f.rows() == 2);
    CHECK(f.timestamps == std::vector<std::int64_t>{0, 10});
    CHECK(*f.cell(0, 0) == 3.0f);
    CHECK(*f.cell(1, 0) == 6.0f);

    KpiStream a{"a", {{0, 1.5f}, {10, 2.5f}, {20, 3.5f}}};
    KpiStream b{"b", {{0, 7.0f}, {20, 9.0f}}};
    f = moving_average_align({a, b}, 10, 10);
    REQUIRE(f.rows() == 3);
    CHECK(*f.cell(1, 0) == 2.5f);
    CHECK_FALSE(f.cell(1, 1).has_value());
    CHECK(*f.cell(2, 1) == 9.0f);

    CHECK(moving_average_align({KpiStream{"x", {}}}, 10, 10).rows() == 0);
    CHECK_THROWS_AS(moving_average_align({s}, 0, 10), Error);
    CHECK_THROWS_AS(moving_average_align({s}, 10, -1), Error);
  }

  TEST_CASE("missing-value policy") {
    const auto schema = KpiSchema::oran_default();
    auto full = oran_row(schema);
    auto no_delay = full;
    no_delay.back() = std::nullopt;
    auto no_sinr = full;
    no_sinr[*schema.index_of("SINR")] = std::nullopt;
    const auto f = frame_from(schema.names(), {0, 20, 40}, {full, no_delay, no_sinr});
    const auto r = impute_or_drop(f, schema);
    CHECK(r.frame.rows() == 2);
    CHECK(r.imputed_rows == 1);
    CHECK(r.dropped_rows == 1);
    CHECK(*r.frame.cell(1, schema.size() - 1) == -1.0f);
    CHECK(r.frame.timestamps == std::vector<std::int64_t>{0, 20});

    const auto clean = frame_from(schema.names(), {0, 20}, {full, full});
    const auto same = impute_or_drop(clean, schema);
    CHECK(same.frame.cells == clean.cells);
    CHECK(same.frame.timestamps == clean.timestamps);
  }

  TEST_CASE("schema") {
    const auto s = KpiSchema::oran_default();
    CHECK(s.size() == 13);
    CHECK(s.names().front() == "Spectral Efficiency");
    CHECK(s.names().back() == "Packet Delay");
    const auto& sinr = s.channels[*s.index_of("SINR")];
    CHECK(sinr.range_min == doctest::Approx(9.43));
    CHECK(sinr.range_max == doctest::Approx(24.33));
    for (const auto& c : s.channels) CHECK(c.impute_missing.has_value() == (c.name == "Packet Delay"));

    auto names = s.names();
    names.pop_back();
    KpiFrame twelve;
    twelve.names = names;
    CHECK_THROWS_AS(conform_to_schema(twelve, s), Error);
    auto reordered = s.names();
    std::swap(reordered[0], reordered[1]);
    KpiFrame f;
    f.names = reordered;
    std::vector<std::optional<float>> row(13);
    for (int i = 0; i < 13; ++i) row[i] = float(i);
    f.append_row(0, row);
    const auto c = conform_to_schema(f, s);
    CHECK(c.names == s.names());
    CHECK(*c.cell(0, 0) == 1.0f);
    CHECK(*c.cell(0, 1) == 0.0f);
    auto unknown = s.names();
    unknown[3] = "Bogus";
    KpiFrame u;
    u.names = unknown;
    try {
      conform_to_schema(u, s);
      FAIL("expected schema error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("Bogus") != std::string::npos);
    }
  }

  TEST_CASE("IQR bounds") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    auto b = iqr_bounds(v);
    CHECK(b.q1 == doctest::Approx(9.9).epsilon(1e-12));
    CHECK(b.q3 == doctest::Approx(89.1).epsilon(1e-12));
    CHECK(b.iqr() == doctest::Approx(79.2).epsilon(1e-12));
    CHECK(b.lower == doctest::Approx(-108.9).epsilon(1e-12));
    CHECK(b.upper == doctest::Approx(207.9).epsilon(1e-12));
    CHECK(b.q1 == oracle::percentile(v, 0.1));

    auto flat = iqr_bounds(std::vector<double>(10, 4.0));
    CHECK(flat.q1 == 4.0);
    CHECK(flat.lower == 4.0);
    CHECK(flat.upper == 4.0);
    CHECK(flat.contains(4.0));

    v.push_back(10000);
    b = iqr_bounds(v);
    const double q1 = oracle::percentile(v, 0.1), q3 = oracle::percentile(v, 0.9);
    CHECK(b.upper == doctest::Approx(q3 + 1.5 * (q3 - q1)));
    CHECK_FALSE(b.contains(10000));

    KpiFrame f;
    f.names = {"x"};
    for (int i = 0; i <= 100; ++i) {
      std::vector<std::optional<float>> row{float(i == 100 ? 10000 : i)};
      f.append_row(i, row);
    }
    auto [pruned, dropped] = prune_outliers(f, channel_bounds(f));
    CHECK(dropped == 1);
    CHECK(pruned.rows() == 100);
    // Reusing the same bounds removes nothing more.
    auto [again, dropped_again] = prune_outliers(pruned, channel_bounds(f));
    CHECK(dropped_again == 0);
    CHECK(again.cells == pruned.cells);

    CHECK_THROWS_AS(iqr_bounds(std::vector<double>{1.0}), Error);
  }

  TEST_CASE("pad_and_filter keeps a subset of input rows") {
    SyntheticOptions o;
    o.kind = SyntheticKind::kBursty;
    o.rows = 400;
    o.seed = 3;
    const auto raw = generate_synthetic(o);
    const auto schema = KpiSchema::oran_default();
    const auto aligned = moving_average_align(streams_from_frame(conform_to_schema(raw, schema)), 20, 20);
    const auto r = pad_and_filter(aligned, schema);
    CHECK(r.rows_in == aligned.rows());
    CHECK(r.frame.rows() + r.dropped_missing + r.dropped_iqr == aligned.rows());
    std::size_t j = 0;
    for (std::size_t i = 0; i < r.frame.rows(); ++i) {
      while (j < aligned.rows() && aligned.timestamps[j] != r.frame.timestamps[i]) ++j;
      REQUIRE(j < aligned.rows());
      for (std::size_t c = 0; c < schema.size(); ++c) {
        const auto& src = aligned.cell(j, c);
        if (src)
          CHECK(*r.frame.cell(i, c) == *src);
        else
          CHECK(*r.frame.cell(i, c) == -1.0f);
      }
    }
    CHECK_FALSE(r.frame.has_missing());
  }

  TEST_CASE("build_sequences follows the gap rule") {
    // Five evenly spaced rows with n_seq = 3: targets are rows 3 and 4.
    auto f = regular_frame(5, 2, 20, 1);
    auto d = build_sequences(f, 3, 20);
    CHECK(d.size() == 2);
    CHECK(d.target_rows == std::vector<std::size_t>{3, 4});
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 2; ++c)
          CHECK(d.window(i)[r * 2 + c] == *f.cell(d.target_rows[i] - 3 + r, c));
    }

    // One doubled spacing in the middle of ten rows.
    KpiFrame g;
    g.names = {"a"};
    for (int r = 0; r < 10; ++r) {
      std::vector<std::optional<float>> row{float(r)};
      g.append_row(r < 5 ? r * 20 : r * 20 + 20, row);
    }
    d = build_sequences(g, 3, 20);
    CHECK(d.target_rows == enumerate_targets(g.timestamps, 3, 20));
    CHECK(d.target_rows == std::vector<std::size_t>{3, 4, 8, 9});

    d = build_sequences(regular_frame(4, 1, 20, 2), 1, 20);
    CHECK(d.size() == 3);
    CHECK(build_sequences(regular_frame(3, 1, 20, 2), 3, 20).size() == 0);
  }

  TEST_CASE("build_sequences matches brute force on random gapped frames") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t rows = 1 + rng.below(1000);
      const std::size_t n_seq = 1 + rng.below(12);
      KpiFrame f;
      f.names = {"a", "b"};
      std::int64_t t = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::optional<float>> row{float(rng.normal()), float(r)};
        f.append_row(t, row);
        t += rng.bernoulli(0.05) ? 20 * (2 + rng.below(3)) : 20;
      }
      const auto d = build_sequences(f, n_seq, 20);
      const auto expected = enumerate_targets(f.timestamps, n_seq, 20);
      REQUIRE(d.target_rows == expected);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t target = expected[i];
        CHECK(d.target_timestamps[i] == f.timestamps[target]);
        CHECK(d.target(i)[0] == *f.cell(target, 0));
        CHECK(d.target(i)[1] == float(target));
        for (std::size_t r = 0; r < n_seq; ++r) {
          CHECK(d.window(i)[r * 2 + 1] == float(target - n_seq + r));
          if (r > 0)
            CHECK(f.timestamps[target - n_seq + r] - f.timestamps[target - n_seq + r - 1] == 20);
        }
      }
    }
  }

  TEST_CASE("scalers") {
    KpiFrame f;
    f.names = {"x", "flat", "delay"};
    const float xs[] = {2, 4, 6};
    const float delays[] = {-1, 30, 50};
    for (int r = 0; r < 3; ++r) {
      std::vector<std::optional<float>> row{xs[r], 7.0f, delays[r]};
      f.append_row(r * 20, row);
    }
    const auto s = fit_scalers(f);
    CHECK(s[0].mean == doctest::Approx(4.0));
    CHECK(s[0].std == doctest::Approx(std::sqrt(8.0 / 3.0)));
    CHECK_FALSE(s[0].clamped);
    CHECK(s[1].std == 1.0);
    CHECK(s[1].clamped);
    CHECK(s[2].mean == doctest::Approx(79.0 / 3.0));

    std::vector<float> rows;
    for (int r = 0; r < 3; ++r) rows.insert(rows.end(), {xs[r], 7.0f, delays[r]});
    auto z = rows;
    apply_scalers(z, s);
    CHECK(z[1] == 0.0f);
    CHECK(z[4] == 0.0f);
    CHECK(z[2] == doctest::Approx((-1.0 - 79.0 / 3.0) / s[2].std));
    invert_scalers(z, s);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(z[i] - rows[i]) < 1e-5);

    CHECK_THROWS_AS(check_scaler_channels(s, {"x", "flat"}), Error);
    CHECK_NOTHROW(check_scaler_channels(s, {"x", "flat", "delay"}));
  }

  TEST_CASE("scaler roundtrip on realistic magnitudes") {
    SyntheticOptions o;
    o.kind = SyntheticKind::kBursty;
    o.rows = 300;
    o.missing_rate = 0;
    o.outlier_rate = 0;
    const auto f = generate_synthetic(o);
    const auto s = fit_scalers(f);
    std::vector<float> v;
    for (const auto& c : f.cells) v.push_back(*c);
    auto z = v;
    apply_scalers(z, s);
    invert_scalers(z, s);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(std::abs(z[i] - v[i]) <= 1e-5 * std::max(1.0f, std::abs(v[i])));
  }

  TEST_CASE("csv roundtrip and parsing") {
    std::istringstream in("timestamp_ms,a,b\n0,1.5,\n20,,2\n40,3,4\n");
    const auto f = read_kpi_csv(in);
    CHECK(f.names == std::vector<std::string>{"a", "b"});
    CHECK(f.rows() == 3);
    CHECK_FALSE(f.cell(0, 1).has_value());
    CHECK(*f.cell(2, 1) == 4.0f);
    std::ostringstream out;
    write_kpi_csv(out, f);
    std::istringstream back(out.str());
    const auto g = read_kpi_csv(back);
    CHECK(g.cells == f.cells);
    CHECK(g.timestamps == f.timestamps);

    std::istringstream bad_header("time,a\n0,1\n");
    CHECK_THROWS_AS(read_kpi_csv(bad_header), Error);
    std::istringstream unsorted("timestamp_ms,a\n20,1\n0,1\n");
    CHECK_THROWS_AS(read_kpi_csv(unsorted), Error);
  }

  TEST_CASE("preprocess counts match the brute-force oracle") {
    const auto dir = testing::scratch_dir("pipeline_oracle");
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SyntheticOptions o;
      o.kind = SyntheticKind::kBursty;
      o.rows = 1000;
      o.seed = seed;
      o.missing_rate = 0.05;
      o.outlier_rate = 0.02;
      const auto raw = generate_synthetic(o);
      const auto path = (dir / "raw.csv").string();
      {
        std::ofstream out(path);
        write_kpi_csv(out, raw);
      }
      PreprocessOptions p;
      p.n_seq = 8;
      const auto res = preprocess({read_kpi_csv_file(path)}, KpiSchema::oran_default(), p);
      const auto expect = oracle::run(oracle::read_csv(path), "Packet Delay", 20, 20, 8, 20);
      CHECK(res.summary.aligned_rows == expect.aligned);
      CHECK(res.summary.imputed_rows == expect.imputed);
      CHECK(res.summary.dropped_missing == expect.dropped_missing);
      CHECK(res.summary.dropped_iqr == expect.dropped_iqr);
      CHECK(res.summary.kept_rows == expect.kept);
      CHECK(res.summary.samples == expect.samples);
      CHECK(res.frame.timestamps == expect.kept_ts);
      CHECK(res.summary.dropped_missing > 0);
      CHECK(res.summary.dropped_iqr > 0);
    }
  }

  TEST_CASE("clean input drops nothing") {
    SyntheticOptions o;
    o.kind = SyntheticKind::kSinusoid;
    o.rows = 200;
    const auto raw = generate_synthetic(o);
    PreprocessOptions p;
    p.n_seq = 4;
    const auto res = preprocess({raw}, KpiSchema::generic(raw.names), p);
    CHECK(res.summary.dropped_missing == 0);
    CHECK(res.summary.dropped_iqr == 0);
    CHECK(res.summary.samples == 196);
    CHECK(res.summary.channels == 3);

    // Too few rows for a single sample.
    KpiFrame tiny = regular_frame(3, 2, 20, 5);
    p.n_seq = 4;
    CHECK_THROWS_AS(preprocess({tiny}, KpiSchema::generic(tiny.names), p), Error);
  }
}
