#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"
#include "nmguard/sample_csv.hpp"
#include "nmguard/types.hpp"

using namespace nmguard;

namespace {

// Sakamoto's day-of-week, shifted so Monday = 0.
int weekday_oracle(int y, int m, int d) {
  static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
  if (m < 3) y -= 1;
  const int sunday0 = (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
  return (sunday0 + 6) % 7;
}

int season_oracle(int month) {
  switch (month) {
    case 12: case 1: case 2: return 0;
    case 3: case 4: case 5: return 1;
    case 6: case 7: case 8: return 2;
    default: return 3;
  }
}

FeatureSample random_sample(Rng& rng) {
  FeatureSample s;
  for (auto& f : s.features) f = rng.uniform(-5.0, 900.0);
  s.features[kDayIndex] = static_cast<double>(rng.below(7));
  s.features[kSeasonIndex] = static_cast<double>(rng.below(4));
  s.label = rng.below(2) ? Label::Malicious : Label::Benign;
  s.provenance = s.label == Label::Malicious ? Provenance::attack(1 + static_cast<int>(rng.below(4)))
                                             : Provenance::synthetic();
  return s;
}

}  // namespace

TEST(EncodeDaySeason, ReferenceDates) {
  EXPECT_EQ(encode_day_season(Date(2010, 7, 1)), (DaySeason{3, 2}));
  EXPECT_EQ(encode_day_season(Date(2013, 1, 15)), (DaySeason{1, 0}));
  EXPECT_EQ(encode_day_season(Date(2011, 4, 4)), (DaySeason{0, 1}));
}

TEST(EncodeDaySeason, AgreesWithCalendarOracleOverADecade) {
  for (Date d(2010, 1, 1); d < Date(2021, 1, 1); d = d.plus_days(1)) {
    const auto ymd = d.ymd();
    const int y = static_cast<int>(ymd.year());
    const int m = static_cast<int>(static_cast<unsigned>(ymd.month()));
    const int day = static_cast<int>(static_cast<unsigned>(ymd.day()));
    const DaySeason code = encode_day_season(d);
    ASSERT_EQ(code.day, weekday_oracle(y, m, day)) << d.iso();
    ASSERT_EQ(code.season, season_oracle(m)) << d.iso();
    ASSERT_EQ(code, encode_day_season(Date::parse(d.iso())));
  }
}

TEST(Date, ParseAndFormat) {
  EXPECT_EQ(Date::parse("2012-02-29").iso(), "2012-02-29");
  EXPECT_EQ(Date(2011, 12, 31).plus_days(1), Date(2012, 1, 1));
  EXPECT_THROW(Date::parse("2011-02-29"), DataError);
  EXPECT_THROW(Date::parse("2011/02/01"), DataError);
  EXPECT_THROW(Date::parse("tomorrow"), DataError);
}

TEST(ValidateDay, ZerosAreAdmissible) {
  const DaySeries s{"A", Date(2011, 1, 1), std::vector<double>(24, 0.0)};
  EXPECT_TRUE(validate_day(s, {"A", 2.0, "L"}).ok());
}

TEST(ValidateDay, ReadingBelowCapIsReported) {
  DaySeries s{"A", Date(2011, 1, 1), std::vector<double>(24, 0.0)};
  s.readings[12] = -3.0;
  const auto report = validate_day(s, {"A", 2.0, "L"});
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("reading below -c_max"), std::string::npos);
}

TEST(ValidateDay, WrongLengthIsReported) {
  const DaySeries s{"A", Date(2011, 1, 1), std::vector<double>(23, 0.0)};
  const auto report = validate_day(s, {"A", 2.0, "L"});
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("length != 24"), std::string::npos);
}

TEST(ValidateDay, CustomerMismatchIsHardError) {
  const DaySeries s{"A", Date(2011, 1, 1), std::vector<double>(24, 0.0)};
  EXPECT_THROW(validate_day(s, {"B", 2.0, "L"}), DataError);
}

TEST(ValidateDay, DoesNotMutateInputs) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    DaySeries s{"A", Date(2011, 1, 1), std::vector<double>(24)};
    for (auto& r : s.readings) r = rng.uniform(-4.0, 4.0);
    const CustomerProfile p{"A", 2.0, "L"};
    const DaySeries before = s;
    validate_day(s, p);
    EXPECT_EQ(s.readings, before.readings);
    EXPECT_EQ(s.date, before.date);
    EXPECT_EQ(p.c_max, 2.0);
  }
}

TEST(Provenance, TextRoundTrip) {
  for (const Provenance p : {Provenance::real(), Provenance::synthetic(), Provenance::adasyn(), Provenance::attack(1),
                             Provenance::attack(4)}) {
    EXPECT_EQ(Provenance::parse(p.str()), p);
  }
  EXPECT_EQ(Provenance::attack(3).str(), "attack3");
  EXPECT_EQ(Provenance::attack(2).label(), Label::Malicious);
  EXPECT_EQ(Provenance::adasyn().label(), Label::Benign);
  EXPECT_THROW(Provenance::parse("attack9"), DataError);
  EXPECT_EQ(parse_label(to_string(Label::Malicious)), Label::Malicious);
}

TEST(SampleCsv, HeaderLayout) {
  const std::string header = sample_csv_header();
  EXPECT_EQ(header.rfind("label,provenance,f0,f1,", 0), 0u);
  EXPECT_EQ(header.substr(header.size() - 4), ",f74");
}

TEST(SampleCsv, RoundTripOfQuantizedValuesIsExact) {
  // Values with at most nine significant digits (what meters and the CSV
  // itself produce) must come back to 1e-12.
  Rng rng(17);
  std::vector<FeatureSample> samples;
  for (int i = 0; i < 100; ++i) {
    FeatureSample s = random_sample(rng);
    for (auto& f : s.features) f = std::stod(csv::format_sig(f, kSampleCsvDigits));
    samples.push_back(s);
  }
  std::stringstream buf;
  write_samples_csv(buf, samples);
  const auto back = read_samples_csv(buf);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(back[i].label, samples[i].label);
    EXPECT_EQ(back[i].provenance, samples[i].provenance);
    for (std::size_t k = 0; k < kFeatureCount; ++k) EXPECT_NEAR(back[i].features[k], samples[i].features[k], 1e-12);
  }
}

TEST(SampleCsv, ArbitraryDoublesKeepNineSignificantDigits) {
  Rng rng(18);
  std::vector<FeatureSample> samples;
  for (int i = 0; i < 50; ++i) samples.push_back(random_sample(rng));
  std::stringstream buf;
  write_samples_csv(buf, samples);
  const auto back = read_samples_csv(buf);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double a = samples[i].features[k];
      EXPECT_LE(std::abs(back[i].features[k] - a), 5e-9 * std::abs(a) + 1e-300);
    }
  }
}

TEST(SampleCsv, MalformedRowNamesLine) {
  std::stringstream buf;
  buf << sample_csv_header() << "\nmalicious,attack1,1,2,3\n";
  try {
    read_samples_csv(buf);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CsvHelpers, SplitAndParse) {
  const auto parts = csv::split("a,,b");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
  double v = 0;
  EXPECT_TRUE(csv::parse_double("-1.5e3", v));
  EXPECT_EQ(v, -1500.0);
  EXPECT_FALSE(csv::parse_double("1.5x", v));
  EXPECT_EQ(csv::chomp("abc\r"), "abc");
  EXPECT_EQ(std::stod(csv::format_exact(0.1)), 0.1);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, MatchesStandardEngineBitStream) {
  std::mt19937_64 ref(5);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(rng.next(), ref());
}

TEST(Rng, DerivedStreamsDependOnEveryKey) {
  EXPECT_NE(Rng::derive(1, {2, 3}).next(), Rng::derive(1, {3, 2}).next());
  EXPECT_NE(Rng::derive(1, {2}).next(), Rng::derive(2, {2}).next());
  EXPECT_EQ(Rng::derive(1, {2, 3}).next(), Rng::derive(1, {2, 3}).next());
}

TEST(Rng, DrawRangesAndMoments) {
  Rng rng(2024);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Fnv1a, ReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
