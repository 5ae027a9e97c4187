// Data tables, perturbation strategies and the three fairness metrics.

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace fairgate;

static DataTable gender_table(std::vector<std::string> genders) {
  DataTable t;
  t.columns = {"gender"};
  for (auto& g : genders) t.rows.push_back({Value{std::move(g)}});
  return t;
}

static std::vector<std::string> column_strings(const DataTable& t,
                                               std::size_t col) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) out.push_back(value_to_string(row[col]));
  return out;
}

TEST_CASE("csv loader infers column types") {
  DataTable t = load_csv("name,age,score,flag\nada,30,1.5,true\nbob,41,2,false\n");
  REQUIRE(t.columns == std::vector<std::string>{"name", "age", "score", "flag"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == Value{std::string("ada")});
  CHECK(t.rows[0][1] == Value{std::int64_t(30)});
  CHECK(t.rows[0][2] == Value{1.5});
  CHECK(t.rows[1][2] == Value{2.0});  // whole column promoted to real
  CHECK(t.rows[0][3] == Value{true});
}

TEST_CASE("csv loader honours declared schema types") {
  SchemaDescriptor schema;
  schema.fields = {{"code", FieldType::String, {}}};
  DataTable t = load_csv("code\n007\n042\n", &schema);
  CHECK(t.rows[0][0] == Value{std::string("007")});  // not the integer 7
}

TEST_CASE("csv loader handles rfc4180 quoting") {
  DataTable t = load_csv("a,b\n\"x,y\",\"line\nbreak\"\n\"he said \"\"hi\"\"\",z\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == Value{std::string("x,y")});
  CHECK(t.rows[0][1] == Value{std::string("line\nbreak")});
  CHECK(t.rows[1][0] == Value{std::string("he said \"hi\"")});
}

TEST_CASE("csv loader rejects broken input") {
  CHECK_THROWS_MATCHES(load_csv("a,b\n1\n"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::MalformedDocument;
                       }));
  CHECK_THROWS_MATCHES(load_csv("a,A\n1,2\n"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::InvariantViolation;
                       }));
  CHECK_THROWS_AS(load_csv("a,b\n\"open,2\n"), Error);
  CHECK_THROWS_AS(load_csv(""), Error);
}

TEST_CASE("column lookup is normalization-insensitive") {
  DataTable t = load_csv("Zip_Code,Label\n53001,1\n");
  CHECK(t.column_index("zip code") == 0);
  CHECK(t.column_index("ZIP-CODE") == 0);
  CHECK_FALSE(t.column_index("zip"));
}

TEST_CASE("flip_binary swaps the two values and is an involution") {
  DataTable t = gender_table({"male", "female", "female", "male"});
  DataTable flipped = perturb_sensitive(t, "gender", PerturbStrategy::FlipBinary);
  CHECK(column_strings(flipped, 0) ==
        std::vector<std::string>{"female", "male", "male", "female"});
  DataTable twice =
      perturb_sensitive(flipped, "gender", PerturbStrategy::FlipBinary);
  CHECK(twice.rows == t.rows);
}

TEST_CASE("flip_binary requires exactly two distinct values") {
  DataTable three = gender_table({"a", "b", "c"});
  CHECK_THROWS_MATCHES(
      perturb_sensitive(three, "gender", PerturbStrategy::FlipBinary), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == Errc::NotPerturbable;
      }));
  DataTable one = gender_table({"a", "a"});
  CHECK_THROWS_AS(perturb_sensitive(one, "gender", PerturbStrategy::FlipBinary),
                  Error);
}

TEST_CASE("rotate_categorical advances each value cyclically in sorted order") {
  DataTable t = gender_table({"c", "a", "b", "c"});
  DataTable rotated =
      perturb_sensitive(t, "gender", PerturbStrategy::RotateCategorical);
  // sorted order a,b,c: a->b, b->c, c->a
  CHECK(column_strings(rotated, 0) ==
        std::vector<std::string>{"a", "b", "c", "a"});
  CHECK_THROWS_AS(perturb_sensitive(gender_table({"only", "only"}), "gender",
                                    PerturbStrategy::RotateCategorical),
                  Error);
}

TEST_CASE("resample_empirical is seed-deterministic and never self-samples") {
  DataTable t = gender_table({"v0", "v1", "v2", "v3", "v4", "v5"});
  DataTable a = perturb_sensitive(t, "gender", PerturbStrategy::ResampleEmpirical, 9);
  DataTable b = perturb_sensitive(t, "gender", PerturbStrategy::ResampleEmpirical, 9);
  CHECK(a.rows == b.rows);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(a.rows[r][0] != t.rows[r][0]);  // all values distinct, so a hit
                                          // would mean self-sampling
  }
  DataTable c = perturb_sensitive(t, "gender", PerturbStrategy::ResampleEmpirical, 10);
  CHECK(a.rows != c.rows);  // different seed, 1/5^6 false-failure chance
}

TEST_CASE("perturbation rejects unknown columns") {
  CHECK_THROWS_MATCHES(perturb_sensitive(gender_table({"a", "b"}), "ghost",
                                         PerturbStrategy::FlipBinary),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::InvalidValue;
                       }));
}

TEST_CASE("output_deviation on binary outcomes is the disagreement fraction") {
  CHECK(output_deviation({0, 1, 1, 0}, {0, 1, 1, 1}) == 0.25);
  CHECK(output_deviation({1, 1}, {1, 1}) == 0.0);
  CHECK(output_deviation({0, 0, 0, 0}, {1, 1, 1, 1}) == 1.0);
}

TEST_CASE("output_deviation on reals is range-normalized mean movement") {
  CHECK(output_deviation({0.0, 10.0}, {5.0, 5.0}) == 0.5);
  CHECK(output_deviation({3.0, 3.0}, {3.0, 3.0}) == 0.0);  // zero range
  CHECK(output_deviation({2.0, 4.0}, {2.0, 4.0}) == 0.0);
}

TEST_CASE("output_deviation validates its inputs") {
  CHECK_THROWS_MATCHES(output_deviation({1, 0}, {1}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::LengthMismatch;
                       }));
  CHECK_THROWS_MATCHES(output_deviation({}, {}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::InvalidValue;
                       }));
}

TEST_CASE("disparate impact hits the 0.4/0.8 oracle") {
  // 5 male rows with 4 positives, 5 female rows with 2 positives
  DataTable t = gender_table({"male", "male", "male", "male", "male", "female",
                              "female", "female", "female", "female"});
  std::vector<double> outcomes{1, 1, 1, 1, 0, 1, 1, 0, 0, 0};
  auto di = disparate_impact(t, outcomes, "gender", {"male"});
  REQUIRE(di);
  CHECK(*di == 0.5);
  auto oracle = testsupport::oracle_di(column_strings(t, 0), outcomes, "male");
  REQUIRE(oracle);
  CHECK(*di == *oracle);
}

TEST_CASE("disparate impact edge conventions") {
  DataTable t = gender_table({"male", "male", "female", "female"});

  // nobody positive on either side: vacuous parity
  auto di = disparate_impact(t, {0, 0, 0, 0}, "gender", {"male"});
  REQUIRE(di);
  CHECK(*di == 1.0);

  // privileged rate zero with unprivileged positives: undefined
  CHECK_FALSE(disparate_impact(t, {0, 0, 1, 0}, "gender", {"male"}));

  // min over several unprivileged groups
  DataTable multi = gender_table({"male", "male", "female", "female", "x", "x",
                                  "x", "x"});
  di = disparate_impact(multi, {1, 1, 1, 1, 1, 0, 0, 0}, "gender", {"male"});
  REQUIRE(di);
  CHECK(*di == 0.25);  // x rate 0.25 / male rate 1.0

  CHECK_THROWS_MATCHES(disparate_impact(t, {0, 0, 0, 0}, "gender", {"ghost"}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::EmptyGroup;
                       }));
  CHECK_THROWS_MATCHES(disparate_impact(t, {0.5, 0, 0, 0}, "gender", {"male"}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::InvalidValue;
                       }));
}

TEST_CASE("disparate mistreatment hits the hand-built confusion oracle") {
  DataTable t = gender_table({"male", "male", "male", "male", "female",
                              "female", "female", "female"});
  std::vector<double> labels{0, 0, 1, 1, 0, 0, 1, 1};
  std::vector<double> outcomes{1, 0, 1, 1, 0, 0, 1, 0};
  // male: FPR 1/2, FNR 0/2; female: FPR 0/2, FNR 1/2
  auto gaps = disparate_mistreatment(t, outcomes, labels, "gender", {"male"});
  REQUIRE(gaps.fpr_gap);
  REQUIRE(gaps.fnr_gap);
  CHECK(*gaps.fpr_gap == 0.5);
  CHECK(*gaps.fnr_gap == 0.5);

  auto oracle = testsupport::oracle_gaps(column_strings(t, 0), outcomes, labels,
                                         "male");
  CHECK(gaps.fpr_gap == oracle.fpr_gap);
  CHECK(gaps.fnr_gap == oracle.fnr_gap);
}

TEST_CASE("mistreatment rates with empty denominators are not applicable") {
  DataTable t = gender_table({"male", "male", "female", "female"});
  // all labels positive: no actual negatives anywhere, FPR undefined
  auto gaps = disparate_mistreatment(t, {1, 1, 1, 0}, {1, 1, 1, 1}, "gender",
                                     {"male"});
  CHECK_FALSE(gaps.fpr_gap);
  REQUIRE(gaps.fnr_gap);
  CHECK(*gaps.fnr_gap == 0.5);

  CHECK_THROWS_MATCHES(
      disparate_mistreatment(t, {1, 1, 1, 1}, {1, 1, 1, 1}, "gender", {"ghost"}),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == Errc::EmptyGroup;
      }));
}

TEST_CASE("randomized tables agree with the independent oracles") {
  std::mt19937_64 rng(2026);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  for (int iter = 0; iter < 60; ++iter) {
    int n = pick(4, 40);
    std::vector<std::string> groups;
    std::vector<double> outcomes, labels;
    bool has_priv = false, has_unpriv = false;
    for (int i = 0; i < n; ++i) {
      std::string g = pick(0, 2) == 0 ? "priv" : ("u" + std::to_string(pick(0, 1)));
      (g == "priv" ? has_priv : has_unpriv) = true;
      groups.push_back(g);
      outcomes.push_back(pick(0, 1));
      labels.push_back(pick(0, 1));
    }
    if (!has_priv || !has_unpriv) continue;
    DataTable t = gender_table(groups);

    auto di = disparate_impact(t, outcomes, "gender", {"priv"});
    auto di_oracle = testsupport::oracle_di(groups, outcomes, "priv");
    REQUIRE(di.has_value() == di_oracle.has_value());
    if (di) CHECK(*di == Catch::Approx(*di_oracle).margin(1e-12));

    auto gaps = disparate_mistreatment(t, outcomes, labels, "gender", {"priv"});
    auto gaps_oracle = testsupport::oracle_gaps(groups, outcomes, labels, "priv");
    REQUIRE(gaps.fpr_gap.has_value() == gaps_oracle.fpr_gap.has_value());
    REQUIRE(gaps.fnr_gap.has_value() == gaps_oracle.fnr_gap.has_value());
    if (gaps.fpr_gap) {
      CHECK(*gaps.fpr_gap == Catch::Approx(*gaps_oracle.fpr_gap).margin(1e-12));
    }
    if (gaps.fnr_gap) {
      CHECK(*gaps.fnr_gap == Catch::Approx(*gaps_oracle.fnr_gap).margin(1e-12));
    }

    std::vector<double> outcomes2;
    for (int i = 0; i < n; ++i) outcomes2.push_back(pick(0, 1));
    CHECK(output_deviation(outcomes, outcomes2) ==
          Catch::Approx(testsupport::oracle_deviation(outcomes, outcomes2))
              .margin(1e-12));
  }
}
