#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "nmguard/error.hpp"
#include "nmguard/ingest.hpp"
#include "nmguard/rng.hpp"

using namespace nmguard;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("nmguard-ingest-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

RawMeterRow row(const std::string& id, MeterCategory cat, double fill, double c_max = 3.0,
                Date date = Date(2011, 1, 1)) {
  return {id, cat, date, std::vector<double>(48, fill), c_max};
}

std::string meter_line(const std::string& id, const std::string& cat, int values, double fill = 0.1) {
  std::string s = id + ",3," + cat + ",2011-01-01";
  for (int i = 0; i < values; ++i) s += "," + std::to_string(fill);
  return s + "\n";
}

}  // namespace

TEST(LoadMeterCsv, WellFormedRows) {
  TempDir dir;
  write_text(dir / "m.csv", meter_csv_header() + "\n" + meter_line("A", "consumption", 48) +
                               meter_line("A", "generation", 48));
  const auto result = load_meter_csv(dir / "m.csv");
  EXPECT_EQ(result.rows.size(), 2u);
  EXPECT_TRUE(result.rejects.empty());
  EXPECT_EQ(result.rows[1].category, MeterCategory::Generation);
}

TEST(LoadMeterCsv, ShortRowIsRejectedWithReason) {
  TempDir dir;
  write_text(dir / "m.csv", meter_csv_header() + "\n" + meter_line("A", "consumption", 47));
  const auto result = load_meter_csv(dir / "m.csv");
  EXPECT_TRUE(result.rows.empty());
  ASSERT_EQ(result.rejects.size(), 1u);
  EXPECT_EQ(result.rejects[0].line, 2u);
  EXPECT_NE(result.rejects[0].reason.find("expected 48 values"), std::string::npos);
}

TEST(LoadMeterCsv, HeaderOnlyIsEmpty) {
  TempDir dir;
  write_text(dir / "m.csv", meter_csv_header() + "\n");
  const auto result = load_meter_csv(dir / "m.csv");
  EXPECT_TRUE(result.rows.empty());
  EXPECT_TRUE(result.rejects.empty());
}

TEST(LoadMeterCsv, BadHeaderIsHardErrorOnLineOne) {
  TempDir dir;
  write_text(dir / "m.csv", "customer_id,c_max\n");
  try {
    load_meter_csv(dir / "m.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  write_text(dir / "empty.csv", "");
  EXPECT_THROW(load_meter_csv(dir / "empty.csv"), DataError);
}

TEST(LoadMeterCsv, MissingCellsLoadAsNaN) {
  TempDir dir;
  std::string line = "A,3,consumption,2011-01-01,";
  for (int i = 1; i < 48; ++i) line += ",0.1";
  write_text(dir / "m.csv", meter_csv_header() + "\n" + line + "\n");
  const auto result = load_meter_csv(dir / "m.csv");
  ASSERT_EQ(result.rows.size(), 1u);
  EXPECT_TRUE(std::isnan(result.rows[0].values[0]));
}

TEST(LoadMeterCsv, WriteThenLoadIsExact) {
  TempDir dir;
  Rng rng(3);
  std::vector<RawMeterRow> rows;
  for (int i = 0; i < 20; ++i) {
    RawMeterRow r = row("C" + std::to_string(i), i % 2 ? MeterCategory::Generation : MeterCategory::Consumption, 0.0);
    for (auto& v : r.values) v = rng.uniform(0.0, 2.0);
    rows.push_back(r);
  }
  write_meter_csv(dir / "m.csv", rows);
  const auto back = load_meter_csv(dir / "m.csv");
  ASSERT_EQ(back.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(back.rows[i].values, rows[i].values);
}

TEST(LoadWeatherCsv, WellFormedShortAndEmpty) {
  TempDir dir;
  std::string good = "L1,2011-01-01";
  for (int i = 0; i < 48; ++i) good += ",1";
  std::string shorter = "L1,2011-01-02";
  for (int i = 0; i < 40; ++i) shorter += ",1";
  write_text(dir / "w.csv", weather_csv_header() + "\n" + good + "\n" + good + "\n");
  EXPECT_EQ(load_weather_csv(dir / "w.csv").rows.size(), 2u);
  write_text(dir / "w.csv", weather_csv_header() + "\n" + shorter + "\n");
  const auto bad = load_weather_csv(dir / "w.csv");
  EXPECT_TRUE(bad.rows.empty());
  ASSERT_EQ(bad.rejects.size(), 1u);
  EXPECT_EQ(bad.rejects[0].line, 2u);
  write_text(dir / "w.csv", weather_csv_header() + "\n");
  EXPECT_TRUE(load_weather_csv(dir / "w.csv").rows.empty());
}

TEST(Clean, NegativeGenerationDropsDay) {
  auto gen = row("A", MeterCategory::Generation, 0.1);
  gen.values[10] = -0.1;
  const std::vector<RawMeterRow> rows{row("A", MeterCategory::Consumption, 0.2), gen};
  const auto out = clean(rows);
  EXPECT_TRUE(out.rows.empty());
  EXPECT_EQ(out.dropped.negative_generation, 1u);
}

TEST(Clean, HourlyGenerationOverCapDropsDay) {
  auto gen = row("A", MeterCategory::Generation, 0.1, 3.0);
  gen.values[24] = 1.6;
  gen.values[25] = 1.6;  // 3.2 kWh in one hour against a 3.0 cap
  const std::vector<RawMeterRow> rows{row("A", MeterCategory::Consumption, 0.2, 3.0), gen};
  const auto out = clean(rows);
  EXPECT_TRUE(out.rows.empty());
  EXPECT_EQ(out.dropped.generation_over_cap, 1u);
}

TEST(Clean, ValidDayIsKept) {
  const std::vector<RawMeterRow> rows{row("A", MeterCategory::Consumption, 0.2),
                                      row("A", MeterCategory::Generation, 0.1)};
  const auto out = clean(rows);
  EXPECT_EQ(out.rows.size(), 2u);
  EXPECT_EQ(out.dropped.total(), 0u);
}

TEST(Clean, MissingPartnerAndZeroConsumption) {
  const std::vector<RawMeterRow> lonely{row("A", MeterCategory::Consumption, 0.2)};
  EXPECT_EQ(clean(lonely).dropped.missing, 1u);
  const std::vector<RawMeterRow> zero{row("A", MeterCategory::Consumption, 0.0),
                                      row("A", MeterCategory::Generation, 0.1)};
  EXPECT_EQ(clean(zero).dropped.zero_consumption, 1u);
  CleanConfig keep;
  keep.drop_zero_consumption = false;
  EXPECT_EQ(clean(zero, keep).rows.size(), 2u);
}

TEST(Clean, IsIdempotent) {
  Rng rng(12);
  std::vector<RawMeterRow> rows;
  for (int c = 0; c < 6; ++c) {
    for (int d = 0; d < 10; ++d) {
      const Date date = Date(2011, 1, 1).plus_days(d);
      auto cons = row("C" + std::to_string(c), MeterCategory::Consumption, 0.0, 2.0, date);
      auto gen = row("C" + std::to_string(c), MeterCategory::Generation, 0.0, 2.0, date);
      for (auto& v : cons.values) v = rng.uniform01() < 0.01 ? std::nan("") : rng.uniform(0.0, 1.0);
      for (auto& v : gen.values) v = rng.uniform(-0.02, 1.05);
      rows.push_back(cons);
      if (rng.uniform01() > 0.05) rows.push_back(gen);
    }
  }
  const auto once = clean(rows);
  const auto twice = clean(once.rows);
  EXPECT_EQ(twice.dropped.total(), 0u);
  ASSERT_EQ(twice.rows.size(), once.rows.size());
  for (std::size_t i = 0; i < once.rows.size(); ++i) {
    EXPECT_EQ(twice.rows[i].customer_id, once.rows[i].customer_id);
    EXPECT_EQ(twice.rows[i].values, once.rows[i].values);
  }
  EXPECT_GT(once.dropped.total(), 0u);
}

TEST(NetAndAggregate, FirstHourArithmetic) {
  auto cons = row("A", MeterCategory::Consumption, 0.0);
  auto gen = row("A", MeterCategory::Generation, 0.1);
  cons.values[0] = 0.3;
  cons.values[1] = 0.2;
  const DaySeries d = net_and_aggregate(cons, gen);
  EXPECT_NEAR(d.readings[0], 0.3, 1e-15);
  EXPECT_EQ(d.readings.size(), 24u);
}

TEST(NetAndAggregate, ZerosAndNoonExport) {
  const DaySeries z = net_and_aggregate(row("A", MeterCategory::Consumption, 0.0), row("A", MeterCategory::Generation, 0.0));
  for (double v : z.readings) EXPECT_EQ(v, 0.0);
  auto gen = row("A", MeterCategory::Generation, 0.0);
  gen.values[24] = gen.values[25] = 1.0;
  EXPECT_LT(net_and_aggregate(row("A", MeterCategory::Consumption, 0.2), gen).readings[12], 0.0);
}

TEST(NetAndAggregate, MismatchedRowsAreErrors) {
  EXPECT_THROW(net_and_aggregate(row("A", MeterCategory::Consumption, 0.1), row("B", MeterCategory::Generation, 0.1)),
               DataError);
  EXPECT_THROW(net_and_aggregate(row("A", MeterCategory::Consumption, 0.1),
                                 row("A", MeterCategory::Generation, 0.1, 3.0, Date(2011, 1, 2))),
               DataError);
}

TEST(NetAndAggregate, LinearAndEnergyConserving) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    auto cons = row("A", MeterCategory::Consumption, 0.0);
    auto gen = row("A", MeterCategory::Generation, 0.0);
    for (auto& v : cons.values) v = rng.uniform(0.0, 2.0);
    for (auto& v : gen.values) v = rng.uniform(0.0, 2.0);
    const double s = rng.uniform(0.1, 10.0);
    auto cons_s = cons, gen_s = gen;
    for (auto& v : cons_s.values) v *= s;
    for (auto& v : gen_s.values) v *= s;
    const DaySeries base = net_and_aggregate(cons, gen);
    const DaySeries scaled = net_and_aggregate(cons_s, gen_s);
    for (std::size_t t = 0; t < 24; ++t) EXPECT_NEAR(scaled.readings[t], s * base.readings[t], 1e-12);
    const double total = std::accumulate(base.readings.begin(), base.readings.end(), 0.0);
    const double halves = std::accumulate(cons.values.begin(), cons.values.end(), 0.0) -
                          std::accumulate(gen.values.begin(), gen.values.end(), 0.0);
    EXPECT_NEAR(total, halves, 1e-9);
  }
}

TEST(BuildDaySeries, PairsRowsInCanonicalOrder) {
  const std::vector<RawMeterRow> rows{row("B", MeterCategory::Generation, 0.1), row("A", MeterCategory::Consumption, 0.3),
                                      row("B", MeterCategory::Consumption, 0.3), row("A", MeterCategory::Generation, 0.1)};
  const auto days = build_day_series(rows);
  ASSERT_EQ(days.size(), 2u);
  EXPECT_EQ(days[0].customer_id, "A");
  EXPECT_NEAR(days[1].readings[5], 0.4, 1e-12);
  const std::vector<RawMeterRow> lonely{row("A", MeterCategory::Consumption, 0.3)};
  EXPECT_THROW(build_day_series(lonely), DataError);
}

TEST(Profiles, LocationJoinAndDefaults) {
  const std::vector<RawMeterRow> rows{row("A", MeterCategory::Consumption, 0.3, 2.5), row("B", MeterCategory::Consumption, 0.3, 4.0)};
  const auto profiles = profiles_from_rows(rows, {{"A", "L7"}});
  ASSERT_EQ(profiles.size(), 2u);
  EXPECT_EQ(profiles[0].location_id, "L7");
  EXPECT_EQ(profiles[1].location_id, "B");
  EXPECT_EQ(profiles[1].c_max, 4.0);
}

TEST(DaysCsv, RoundTripIsExact) {
  TempDir dir;
  Rng rng(9);
  std::vector<DaySeries> days;
  for (int i = 0; i < 10; ++i) {
    DaySeries d{"C" + std::to_string(i), Date(2011, 3, 1).plus_days(i), std::vector<double>(24)};
    for (auto& v : d.readings) v = rng.uniform(-3.0, 3.0);
    days.push_back(d);
  }
  write_days_csv(dir / "d.csv", days);
  const auto back = load_days_csv(dir / "d.csv");
  ASSERT_EQ(back.size(), days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    EXPECT_EQ(back[i].readings, days[i].readings);
    EXPECT_EQ(back[i].date, days[i].date);
  }
}

TEST(ToMeterRows, SplitsHoursIntoEqualHalves) {
  std::vector<double> cons(24, 1.0), gen(24, 0.5);
  const auto rows = to_meter_rows({"A", 3.0, "L"}, Date(2011, 1, 1), cons, gen);
  ASSERT_EQ(rows.size(), 2u);
  const auto days = build_day_series(rows);
  ASSERT_EQ(days.size(), 1u);
  for (double v : days[0].readings) EXPECT_NEAR(v, 0.5, 1e-15);
}
