// CSV rendering: numeric formatting, RFC-4180 quoting, fixed column schemas,
// and byte-level determinism of rendered sweeps.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpselect/report.hpp"
#include "dpselect/risk_engine.hpp"

namespace {

using namespace dpselect;

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find("\r\n", start);
    EXPECT_NE(end, std::string::npos) << "line without CRLF terminator";
    if (end == std::string::npos) break;
    lines.push_back(text.substr(start, end - start));
    start = end + 2;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.s = 2;
  cfg.n = 400;
  cfg.a = 2.5;
  cfg.sigma = 1.0;
  cfg.alpha = 1.0;
  cfg.mechanism = Mechanism::LOCAL;
  cfg.selector = SelectorKind::PLUS;
  cfg.policy.kind = PolicyKind::LARGE_A;
  cfg.trials = 4;
  cfg.seed = 11;
  return cfg;
}

TEST(FormatDouble, TwelveSignificantDigits) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(4.0), "4");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(CsvEscape, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("has,comma"), "\"has,comma\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("line\nbreak"), "\"line\nbreak\"");
  EXPECT_EQ(csv_escape(""), "");
}

TEST(CsvLine, JoinsWithCrlf) {
  EXPECT_EQ(csv_line({"a", "b", "c"}), "a,b,c\r\n");
  EXPECT_EQ(csv_line({"x,y", "z"}), "\"x,y\",z\r\n");
}

TEST(SweepCsv, HeaderIsStable) {
  EXPECT_STREQ(sweep_csv_header(),
               "axis_name,axis_value,d,s,n,alpha,a,sigma,mechanism,selector,"
               "tau,mean_loss,std_error,trials,lb_local,ub_matched,fano_er,"
               "fano_afr,a_star_local,a_star_global,flags\r\n");
}

TEST(SweepCsv, OneLinePerRowWithFullSchema) {
  const auto rows = sweep(small_config(), SweepAxis::A, {1.0, 2.5});
  const std::string csv = render_sweep_csv(rows);
  const auto lines = split_lines(csv);
  ASSERT_EQ(lines.size(), 3u);

  const auto header = split_fields(lines[0]);
  ASSERT_EQ(header.size(), 21u);
  EXPECT_EQ(header.front(), "axis_name");
  EXPECT_EQ(header.back(), "flags");

  const auto fields = split_fields(lines[1]);
  ASSERT_EQ(fields.size(), 21u);
  EXPECT_EQ(fields[0], "a");
  EXPECT_EQ(fields[1], "1");
  EXPECT_EQ(fields[2], "10");
  EXPECT_EQ(fields[3], "2");
  EXPECT_EQ(fields[4], "400");
  EXPECT_EQ(fields[8], "local");
  EXPECT_EQ(fields[9], "plus");
  EXPECT_EQ(fields[10], format_double(rows[0].tau));
  EXPECT_EQ(fields[11], format_double(rows[0].estimate.mean_normalized_loss));
  EXPECT_EQ(fields[13], "4");
  EXPECT_EQ(fields[14], format_double(rows[0].lb_local));
  EXPECT_EQ(fields[15], format_double(rows[0].ub_matched));
}

TEST(SweepCsv, ByteIdenticalAcrossRunsAndThreadCounts) {
  const auto cfg = small_config();
  const std::string first =
      render_sweep_csv(sweep(cfg, SweepAxis::A, {0.5, 1.0, 2.0}, 1));
  const std::string second =
      render_sweep_csv(sweep(cfg, SweepAxis::A, {0.5, 1.0, 2.0}, 1));
  const std::string threaded =
      render_sweep_csv(sweep(cfg, SweepAxis::A, {0.5, 1.0, 2.0}, 8));
  EXPECT_EQ(first, second);
  EXPECT_EQ(first, threaded);
}

TEST(SweepCsv, ErrorRowsCarryTheMessage) {
  auto cfg = small_config();
  cfg.mechanism = Mechanism::GLOBAL;
  const auto rows = sweep(cfg, SweepAxis::D, {3.0, 2.0});
  const std::string csv = render_sweep_csv(rows);
  const auto lines = split_lines(csv);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_NE(lines[2].find("error: "), std::string::npos);
  EXPECT_NE(lines[2].find("nan"), std::string::npos);
}

TEST(SweepCsv, FlagsWithCommasAreQuoted) {
  SweepRow row;
  row.axis = SweepAxis::A;
  row.axis_value = 1.0;
  row.cfg = small_config();
  row.flags = {"first, with comma", "second"};
  const std::string line = sweep_row_csv(row);
  EXPECT_NE(line.find("\"first, with comma; second\""), std::string::npos);
}

TEST(BoundsCsv, SingleRowWithEveryEvaluator) {
  const auto cfg = small_config();
  const std::string csv = render_bounds_csv(cfg);
  const auto lines = split_lines(csv);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0],
            "d,s,n,alpha,a,sigma,regime,lb_local,ub_local_plus,"
            "ub_local_signed,ub_global_plus,ub_global_signed,fano_er,"
            "fano_afr,a_star_local,a_star_global,L,flags");

  const auto fields = split_fields(lines[1]);
  ASSERT_EQ(fields.size(), 18u);
  EXPECT_EQ(fields[6], "large_a");

  const auto noise = make_gaussian();
  const auto in = make_bound_input(cfg.n, cfg.d, cfg.s, cfg.a, cfg.sigma,
                                   cfg.alpha, noise, Regime::LARGE_A);
  EXPECT_EQ(fields[7], format_double(lower_bound_local(in)));
  const double plus = upper_bound_local(in, Regime::LARGE_A, Variant::PLUS);
  EXPECT_EQ(fields[8], format_double(plus));
  EXPECT_EQ(fields[9], format_double(2.0 * plus));
  EXPECT_EQ(fields[16], format_double(0.5 * std::expm1(2.0)));
}

TEST(BoundsCsv, GlobalColumnsDegradeGracefully) {
  auto cfg = small_config();
  cfg.d = 2;
  cfg.s = 1;
  const std::string csv = render_bounds_csv(cfg);
  EXPECT_NE(csv.find("global bound unavailable"), std::string::npos);
  EXPECT_NE(csv.find("nan"), std::string::npos);
}

TEST(KdCsv, TableAgainstAsymptote) {
  const std::string csv = render_kd_csv(1, 10);
  const auto lines = split_lines(csv);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], "d,kd,asymptote,ratio,flags");

  const auto row3 = split_fields(lines[3]);
  ASSERT_EQ(row3.size(), 5u);
  EXPECT_EQ(row3[0], "3");
  EXPECT_EQ(row3[1], "2");
  const double asym3 = std::sqrt(std::atan(1.0) * 2.0) * std::sqrt(3.0);
  EXPECT_EQ(row3[2], format_double(asym3));
  EXPECT_EQ(row3[3], format_double(2.0 / asym3));
  EXPECT_EQ(row3[4], "");

  // d = 2 has no scaling constant: the row stays, with nan and a reason.
  const auto row2 = split_fields(lines[2]);
  EXPECT_EQ(row2[0], "2");
  EXPECT_EQ(row2[1], "nan");
  EXPECT_NE(lines[2].find("compute_kd"), std::string::npos);

  EXPECT_THROW(render_kd_csv(5, 4), std::invalid_argument);
  EXPECT_THROW(render_kd_csv(0, 4), std::invalid_argument);
}

}  // namespace
