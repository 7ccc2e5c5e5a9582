#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "cace/csv.hpp"

using namespace cace;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& name, const std::string& contents)
      : path("csv_fixture_" + name + ".csv") {
    std::ofstream out(path, std::ios::binary);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

ColumnRoles basic_roles() {
  ColumnRoles roles;
  roles.treatment_assigned = "z";
  roles.treatment_received = "w";
  roles.outcome = "y";
  roles.covariates = {"age"};
  return roles;
}

}  // namespace

TEST_CASE("raw parsing, quoting, and column lookup") {
  const TempCsv f("raw",
                  "a,b,c\n"
                  "1,\"hello, world\",3\r\n"
                  "4,\"say \"\"hi\"\"\",6\n");
  const CsvTable t = read_csv(f.path);
  REQUIRE(t.header.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "hello, world");
  CHECK(t.rows[0][2] == "3");  // carriage return stripped
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("nope"), MissingColumn);
}

TEST_CASE("ragged rows are rejected with a line number") {
  const TempCsv f("ragged", "a,b\n1,2\n3\n");
  try {
    read_csv(f.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("missing file raises an I/O error") {
  CHECK_THROWS_AS(read_csv("does_not_exist_anywhere.csv"), IoError);
}

TEST_CASE("dataset ingestion with a numeric covariate") {
  const TempCsv f("basic",
                  "z,w,y,age\n"
                  "1,1,2.5,30\n"
                  "1,0,1.0,40\n"
                  "0,0,0.5,50\n"
                  "0,0,1.5,60\n");
  const IngestResult r = ingest_csv(f.path, basic_roles());
  CHECK(r.data.n() == 4);
  CHECK(r.data.k() == 1);
  CHECK(r.data.z.sum() == 2);
  CHECK(r.data.w_obs.sum() == 1);
  CHECK(r.data.y_obs[2] == doctest::Approx(0.5));
  CHECK(r.data.x(3, 0) == doctest::Approx(60.0));
  REQUIRE(r.covariate_names.size() == 1);
  CHECK(r.covariate_names[0] == "age");
}

TEST_CASE("treatment columns must be binary") {
  const TempCsv f("nonbinary", "z,w,y,age\n2,1,1.0,30\n0,0,0.5,40\n");
  CHECK_THROWS_AS(ingest_csv(f.path, basic_roles()), NonBinaryTreatment);
}

TEST_CASE("missing cells in role columns are rejected with their line") {
  const TempCsv f("missing", "z,w,y,age\n1,1,2.0,30\n0,0,,40\n");
  try {
    ingest_csv(f.path, basic_roles());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("role names must be distinct and present") {
  const TempCsv f("roles", "z,w,y,age\n1,1,2.0,30\n0,0,1.0,40\n");
  ColumnRoles dup = basic_roles();
  dup.outcome = "z";
  CHECK_THROWS_AS(ingest_csv(f.path, dup), ValidationError);
  ColumnRoles absent = basic_roles();
  absent.covariates = {"height"};
  CHECK_THROWS_AS(ingest_csv(f.path, absent), MissingColumn);
}

TEST_CASE("categorical covariates expand to indicators dropping the first level") {
  const TempCsv f("categ",
                  "z,w,y,age,eth\n"
                  "1,1,2.0,30,white\n"
                  "1,0,1.0,40,black\n"
                  "0,0,0.5,50,other\n"
                  "0,0,1.5,60,white\n");
  ColumnRoles roles = basic_roles();
  roles.covariates = {"age", "eth"};
  const IngestResult r = ingest_csv(f.path, roles);
  // levels sorted: black (dropped), other, white
  REQUIRE(r.covariate_names.size() == 3);
  CHECK(r.covariate_names[0] == "age");
  CHECK(r.covariate_names[1] == "eth=other");
  CHECK(r.covariate_names[2] == "eth=white");
  CHECK(r.data.x(0, 1) == doctest::Approx(0.0));
  CHECK(r.data.x(0, 2) == doctest::Approx(1.0));
  CHECK(r.data.x(1, 1) == doctest::Approx(0.0));
  CHECK(r.data.x(1, 2) == doctest::Approx(0.0));
  CHECK(r.data.x(2, 1) == doctest::Approx(1.0));
  CHECK(r.data.x(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("plain covariate matrix reader") {
  const TempCsv f("mat", "x1,x2\n1,2\n3,4\n5,6\n");
  std::vector<std::string> names;
  const Matrix x = read_covariate_matrix(f.path, &names);
  REQUIRE(x.rows() == 3);
  REQUIRE(x.cols() == 2);
  CHECK(x(2, 1) == doctest::Approx(6.0));
  REQUIRE(names.size() == 2);
  CHECK(names[0] == "x1");
  CHECK(names[1] == "x2");

  const TempCsv bad("matbad", "x1\n1\nabc\n");
  CHECK_THROWS_AS(read_covariate_matrix(bad.path), ParseError);
}
