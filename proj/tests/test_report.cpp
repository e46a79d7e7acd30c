#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "test_graphs.hpp"

using namespace heatk;

TEST(Report, FormatDoubleRoundTrips) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  for (double v : {1.0 / 3.0, 2.718281828459045, 1e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Report, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Report, ParametersJsonIsSortedAndValid) {
  const auto s = parameters_json({{"z", 1.5}, {"a", std::numeric_limits<double>::infinity()}});
  EXPECT_EQ(s, R"({"a":"inf","z":1.5})");
  EXPECT_EQ(nlohmann::json::parse(s)["z"], 1.5);
}

TEST(Report, KernelCsvIsSorted) {
  std::vector<KernelRow> rows{{2, 0, 1, 0.1, 0, "exact"}, {1, 1, 0, 0.2, 0, "exact"}, {1, 0, 1, 0.3, 0, "exact"}};
  std::ostringstream os;
  write_kernel_csv(os, rows);
  EXPECT_EQ(os.str(), "t,x,y,p,truncation_error,domain_tag\n1,0,1,0.3,0,exact\n1,1,0,0.2,0,exact\n2,0,1,0.1,0,exact\n");
}

TEST(Report, SummaryCountsAndWorstSlack) {
  std::vector<BoundReport> rows{make_upper_report("thm31", "a", 1.0, 2.0, LambdaMode::zero),
                                make_upper_report("thm31", "b", 1.0, 1.5, LambdaMode::exact),
                                make_lower_report("thm32", "c", 1.0, 2.0, LambdaMode::zero)};
  const auto j = summary_json(rows);
  EXPECT_EQ(j["passed"], 2);
  EXPECT_EQ(j["failed"], 1);
  EXPECT_EQ(j["theorems"]["thm31"]["worst_instance"], "b");
  EXPECT_EQ(j["theorems"]["thm32"]["worst_slack"], -1.0);
  std::ostringstream os;
  write_bounds_csv(os, rows);
  EXPECT_NE(os.str().find("thm31,b,1,1.5,0.5,true,exact,{}\n"), std::string::npos);
  EXPECT_NE(os.str().find("thm32,c,1,2,-1,false,zero,{}\n"), std::string::npos);
}

TEST(Report, CertificateTolerance) {
  EXPECT_TRUE(make_upper_report("x", "", 1.0 + 0.5e-9, 1.0, LambdaMode::zero).passed);
  EXPECT_FALSE(make_upper_report("x", "", 1.0 + 2e-9, 1.0, LambdaMode::zero).passed);
}
