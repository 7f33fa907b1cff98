#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "diffbound/dataset.hpp"
#include "diffbound/rng.hpp"
#include "support/oracles.hpp"

using namespace diffbound;

namespace {

std::string temp_path(const char* name) {
  return std::string("diffbound_test_") + name + ".csv";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("load_csv parses a small file by column name") {
  const auto path = temp_path("basic");
  write_file(path,
             "y,z1,z2,x1\n"
             "1.5,1,0,0.2\n"
             "2.5,0,1,-0.3\n"
             "0.5,1,1,1.0\n"
             "3.25,0,0,2.5\n");
  CsvSchema schema;
  schema.x = {"x1"};
  const Dataset d = load_csv(path, schema);
  CHECK(d.n() == 4);
  CHECK(d.n_covariates() == 1);
  CHECK(d.y()[0] == 1.5);
  CHECK(d.z1()[1] == 0);
  CHECK(d.z2()[1] == 1);
  CHECK(d.x()(3, 0) == 2.5);
  std::remove(path.c_str());
}

TEST_CASE("load_csv survives reordered columns") {
  const auto path = temp_path("reordered");
  write_file(path,
             "x1,z2,y,z1\n"
             "0.2,0,1.5,1\n"
             "-0.3,1,2.5,0\n");
  CsvSchema schema;
  schema.x = {"x1"};
  const Dataset d = load_csv(path, schema);
  CHECK(d.y()[0] == 1.5);
  CHECK(d.z1()[0] == 1);
  std::remove(path.c_str());
}

TEST_CASE("load_csv reads five covariate columns") {
  const auto path = temp_path("wide");
  write_file(path,
             "y,z1,z2,x1,x2,x3,x4,x5\n"
             "1,1,0,1,2,3,4,5\n"
             "2,0,1,5,4,3,2,1\n");
  CsvSchema schema;
  schema.x = {"x1", "x2", "x3", "x4", "x5"};
  const Dataset d = load_csv(path, schema);
  CHECK(d.n_covariates() == 5);
  CHECK(d.x()(1, 4) == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("load_csv error paths name the offending location") {
  CsvSchema schema;
  schema.x = {"x1"};

  SUBCASE("treatment value outside {0,1}") {
    const auto path = temp_path("badz");
    write_file(path, "y,z1,z2,x1\n1,1,0,0.5\n2,2,1,0.5\n");
    CHECK_THROWS_WITH_AS(load_csv(path, schema),
                         doctest::Contains("row 3"), Error);
    CHECK_THROWS_WITH_AS(load_csv(path, schema),
                         doctest::Contains("outside {0,1}"), Error);
    std::remove(path.c_str());
  }
  SUBCASE("missing column") {
    const auto path = temp_path("missing");
    write_file(path, "y,z1,x1\n1,1,0.5\n");
    CHECK_THROWS_WITH_AS(load_csv(path, schema),
                         doctest::Contains("missing column 'z2'"), Error);
    std::remove(path.c_str());
  }
  SUBCASE("non-numeric cell") {
    const auto path = temp_path("text");
    write_file(path, "y,z1,z2,x1\noops,1,0,0.5\n");
    CHECK_THROWS_WITH_AS(load_csv(path, schema),
                         doctest::Contains("column 'y'"), Error);
    std::remove(path.c_str());
  }
  SUBCASE("empty file") {
    const auto path = temp_path("empty");
    write_file(path, "");
    CHECK_THROWS_AS(load_csv(path, schema), Error);
    std::remove(path.c_str());
  }
  SUBCASE("true/false is not coerced") {
    const auto path = temp_path("boolean");
    write_file(path, "y,z1,z2,x1\n1,true,0,0.5\n");
    CHECK_THROWS_AS(load_csv(path, schema), Error);
    std::remove(path.c_str());
  }
}

TEST_CASE("drop-missing mode skips incomplete rows, strict mode rejects them") {
  const auto path = temp_path("missing_rows");
  write_file(path,
             "y,z1,z2,x1,extra\n"
             "1.5,1,0,0.2,ignored\n"
             ",0,1,-0.3,\n"
             "2.5,0,1,,px\n"
             "3.5,0,1,1.1,\n");
  CsvSchema schema;
  schema.x = {"x1"};
  CHECK_THROWS_AS(load_csv(path, schema), Error);
  const Dataset d = load_csv(path, schema, true);
  CHECK(d.n() == 2);  // rows 3 and 4 dropped, the unmapped 'extra' ignored
  CHECK(d.y()[1] == 3.5);
  std::remove(path.c_str());
}

TEST_CASE("write_csv then load_csv round-trips at 17 significant digits") {
  Rng rng(11);
  const Dataset d = oracles::random_dataset(rng, 60, 3);
  CsvSchema schema;
  schema.x = {"x1", "x2", "x3"};
  const auto path = temp_path("roundtrip");
  write_csv(path, d, schema);
  const Dataset back = load_csv(path, schema);
  REQUIRE(back.n() == d.n());
  CHECK((back.y() - d.y()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.x() - d.x()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.z1() == d.z1());
  CHECK(back.z2() == d.z2());
  std::remove(path.c_str());
}

TEST_CASE("dataset constructor enforces the invariants") {
  CHECK_THROWS_AS(Dataset(Eigen::VectorXd(0), {}, {}, Eigen::MatrixXd(0, 1)),
                  Error);
  Eigen::VectorXd y(2);
  y << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Dataset(y, {0, 1}, {1, 0}, Eigen::MatrixXd::Zero(2, 1)),
                  Error);
  Eigen::VectorXd ok(2);
  ok << 1.0, 2.0;
  CHECK_THROWS_AS(Dataset(ok, {0, 2}, {1, 0}, Eigen::MatrixXd::Zero(2, 1)),
                  Error);
  CHECK_THROWS_AS(Dataset(ok, {0, 1}, {1, 0}, Eigen::MatrixXd::Zero(2, 0)),
                  Error);
}

TEST_CASE("cell_counts matches the examples") {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  SUBCASE("two differential cells") {
    const Dataset d(y, {1, 1, 0, 0}, {0, 0, 1, 1}, Eigen::MatrixXd::Zero(4, 1));
    const CellCounts c = cell_counts(d);
    CHECK(c.n10 == 2);
    CHECK(c.n01 == 2);
    CHECK(c.n00 == 0);
    CHECK(c.n11 == 0);
  }
  SUBCASE("all concordant") {
    const Dataset d(Eigen::VectorXd::Zero(3), {1, 1, 1}, {1, 1, 1},
                    Eigen::MatrixXd::Zero(3, 1));
    const CellCounts c = cell_counts(d);
    CHECK(c.n11 == 3);
    CHECK(c.n00 + c.n01 + c.n10 == 0);
  }
}

TEST_CASE("cell_counts partitions n for random binary vectors") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng.index(40));
    Eigen::VectorXd y(n);
    std::vector<int> z1(static_cast<std::size_t>(n)), z2(static_cast<std::size_t>(n));
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) {
      y[i] = rng.normal();
      x(i, 0) = rng.normal();
      z1[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
      z2[static_cast<std::size_t>(i)] = rng.bernoulli(0.6) ? 1 : 0;
    }
    const Dataset d(y, z1, z2, x);
    CHECK(cell_counts(d).total() == n);
  }
}

TEST_CASE("validate flags the structural failure modes") {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(20, 1);

  SUBCASE("z1 identical to z2 leaves both differential cells empty") {
    std::vector<int> z(20, 0);
    for (int i = 0; i < 10; ++i) z[static_cast<std::size_t>(i)] = 1;
    const Dataset d(y, z, z, x);
    const ValidationReport report = validate(d);
    CHECK_FALSE(report.ok);
    bool found = false;
    for (const auto& m : report.messages) {
      if (m.text.find("empty differential cells") != std::string::npos) {
        found = true;
      }
    }
    CHECK(found);
  }

  SUBCASE("balanced cells of at least 10 rows produce a clean report") {
    Eigen::VectorXd yy = Eigen::VectorXd::Zero(40);
    Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(40, 1);
    std::vector<int> z1(40), z2(40);
    for (int i = 0; i < 40; ++i) {
      z1[static_cast<std::size_t>(i)] = i % 2;
      z2[static_cast<std::size_t>(i)] = (i / 2) % 2;
    }
    const ValidationReport report = validate(Dataset(yy, z1, z2, xx));
    CHECK(report.ok);
    CHECK(report.messages.empty());
  }

  SUBCASE("a small differential cell is a warning, not an error") {
    // n10 = 3, everything else ample
    std::vector<int> z1, z2;
    for (int i = 0; i < 3; ++i) { z1.push_back(1); z2.push_back(0); }
    for (int i = 0; i < 12; ++i) { z1.push_back(0); z2.push_back(1); }
    for (int i = 0; i < 12; ++i) { z1.push_back(1); z2.push_back(1); }
    for (int i = 0; i < 13; ++i) { z1.push_back(0); z2.push_back(0); }
    const Dataset d(Eigen::VectorXd::Zero(40), z1, z2,
                    Eigen::MatrixXd::Zero(40, 1));
    const ValidationReport report = validate(d);
    CHECK(report.ok);
    REQUIRE(report.messages.size() == 1);
    CHECK(report.messages[0].severity == Severity::Warning);
  }

  SUBCASE("constant z2 is an error") {
    std::vector<int> z1(20), z2(20, 1);
    for (int i = 0; i < 20; ++i) z1[static_cast<std::size_t>(i)] = i % 2;
    CHECK_FALSE(validate(Dataset(y, z1, z2, x)).ok);
  }
}

TEST_CASE("validate does not mutate its input") {
  Rng rng(3);
  const Dataset d = oracles::random_dataset(rng, 50, 2);
  const Eigen::VectorXd y_before = d.y();
  const Eigen::MatrixXd x_before = d.x();
  (void)validate(d);
  CHECK((d.y() - y_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d.x() - x_before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("load_binary_items reads item columns strictly") {
  const auto path = temp_path("items");
  write_file(path,
             "smoker,drugs,fat,alcohol\n"
             "1,0,1,0\n"
             "0,1,1,1\n"
             "1,1,0,0\n");
  const Eigen::MatrixXi items =
      load_binary_items(path, {"smoker", "drugs", "alcohol"});
  CHECK(items.rows() == 3);
  CHECK(items.cols() == 3);
  CHECK(items(1, 2) == 1);
  CHECK_THROWS_AS(load_binary_items(path, {"nope"}), Error);
  std::remove(path.c_str());
}
