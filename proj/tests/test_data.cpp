#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "jr/data.hpp"
#include "jr/datagen.hpp"
#include "jr/rng.hpp"

using namespace jr;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/jr_test_" + name) {}
  ~TempFile() {
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
  }
};

Dataset tiny_dataset() {
  Dataset ds;
  ds.n_features = 3;
  ds.feature_names = {"hr", "bp", "temp"};
  PatientJourney a;
  a.id = "a";
  a.label = 1;
  a.values = DenseMatrix(3, 2);
  a.mask = DenseMatrix(3, 2, 1.0);
  a.values(0, 0) = 58.0;
  a.values(0, 1) = 55.0;
  a.values(1, 0) = 120.0;
  a.mask(1, 1) = 0.0;
  a.values(2, 0) = 36.5;
  a.values(2, 1) = 37.0;
  a.times = {0.0, 1.5};
  PatientJourney b;
  b.id = "b";
  b.label = 0;
  b.values = DenseMatrix(3, 1);
  b.mask = DenseMatrix(3, 1, 1.0);
  b.values(0, 0) = 60.0;
  b.mask(1, 0) = 0.0;
  b.values(2, 0) = 36.0;
  ds.journeys = {a, b};
  return ds;
}

}  // namespace

TEST_CASE("load_dataset reads a hand-written fixture with masks from nulls") {
  TempFile f("fixture.jsonl");
  {
    std::ofstream out(f.path);
    out << R"({"id": "x", "label": 1, "features": [[1.0, null, 3.0], [4.0, 5.0, null]]})" << "\n";
    out << R"({"id": "y", "label": 0, "times": [0.0, 2.0, 5.0], "features": [[1, 2, 3], [null, null, null], [7, 8, 9]]})" << "\n";
  }
  const Dataset ds = load_dataset(f.path);
  REQUIRE(ds.size() == 2);
  CHECK(ds.n_features == 3);
  const auto& x = ds.journeys[0];
  CHECK(x.length() == 2);
  // On-disk rows are records (T x N); internal is N x T.
  CHECK(x.values(0, 0) == 1.0);
  CHECK(x.values(0, 1) == 4.0);
  CHECK(x.mask(1, 0) == 0.0);
  CHECK(x.values(1, 0) == 0.0);
  CHECK(x.mask(2, 1) == 0.0);
  const auto& y = ds.journeys[1];
  CHECK(y.times.size() == 3);
  CHECK(y.mask(0, 1) == 0.0);
  CHECK(y.mask(1, 1) == 0.0);
  CHECK(y.mask(2, 1) == 0.0);
}

TEST_CASE("load_dataset rejects a wrong-length feature row naming the journey") {
  TempFile f("badrow.jsonl");
  {
    std::ofstream out(f.path);
    out << R"({"id": "ok", "label": 0, "features": [[1.0, 2.0]]})" << "\n";
    out << R"({"id": "bad", "label": 0, "features": [[1.0, 2.0], [1.0]]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("bad"),
                       std::runtime_error);
}

TEST_CASE("load_dataset reports malformed line numbers") {
  TempFile f("malformed.jsonl");
  {
    std::ofstream out(f.path);
    out << R"({"id": "ok", "label": 0, "features": [[1.0]]})" << "\n";
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("line 2"),
                       std::runtime_error);
}

TEST_CASE("save then load round-trips structurally") {
  TempFile f("roundtrip.jsonl");
  GenConfig cfg;
  cfg.n_patients = 20;
  cfg.n_features = 4;
  cfg.t_min = 3;
  cfg.t_max = 9;
  cfg.missing_rate = 0.4;
  cfg.seed = 77;
  const Dataset ds = generate(cfg);
  save_dataset(ds, f.path);
  const Dataset back = load_dataset(f.path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.n_features == ds.n_features);
  CHECK(back.feature_names == ds.feature_names);
  for (std::size_t p = 0; p < ds.size(); ++p) {
    const auto& a = ds.journeys[p];
    const auto& b = back.journeys[p];
    CHECK(a.id == b.id);
    CHECK(a.label == b.label);
    REQUIRE(a.length() == b.length());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      CHECK(a.mask.data[i] == b.mask.data[i]);
      CHECK(a.values.data[i] == b.values.data[i]);  // 17 digits: bitwise
    }
  }
}

TEST_CASE("split sizes follow the floor rule") {
  GenConfig cfg;
  cfg.n_patients = 100;
  cfg.n_features = 2;
  cfg.t_min = 3;
  cfg.t_max = 4;
  cfg.seed = 1;
  const Dataset ds = generate(cfg);
  const SplitResult s = split_dataset(ds, 0.70, 0.15, 0.15, 5);
  CHECK(s.train.size() == 70);
  CHECK(s.val.size() == 15);
  CHECK(s.test.size() == 15);

  Dataset small = ds;
  small.journeys.resize(10);
  const SplitResult s10 = split_dataset(small, 0.70, 0.15, 0.15, 5);
  CHECK(s10.train.size() == 7);
  CHECK(s10.val.size() == 1);
  CHECK(s10.test.size() == 2);

  small.journeys.resize(9);
  CHECK_THROWS_AS(split_dataset(small, 0.70, 0.15, 0.15, 5), std::invalid_argument);
}

TEST_CASE("split is an exact partition and deterministic by seed") {
  GenConfig cfg;
  cfg.n_patients = 57;
  cfg.n_features = 2;
  cfg.t_min = 3;
  cfg.t_max = 4;
  cfg.seed = 2;
  const Dataset ds = generate(cfg);

  const SplitResult a = split_dataset(ds, 0.70, 0.15, 0.15, 9);
  const SplitResult b = split_dataset(ds, 0.70, 0.15, 0.15, 9);
  std::set<std::string> ids;
  for (const Dataset* part : {&a.train, &a.val, &a.test}) {
    for (const auto& j : part->journeys) ids.insert(j.id);
  }
  CHECK(ids.size() == ds.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.journeys[i].id == b.train.journeys[i].id);
  }

  const SplitResult c = split_dataset(ds, 0.70, 0.15, 0.15, 10);
  bool differs = false;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    differs |= (a.train.journeys[i].id != c.train.journeys[i].id);
  }
  CHECK(differs);
}

TEST_CASE("fit_normalizer observed-only statistics") {
  Dataset ds;
  ds.n_features = 1;
  ds.feature_names = {"f0"};
  PatientJourney j;
  j.id = "j";
  j.values = DenseMatrix(1, 4);
  j.mask = DenseMatrix(1, 4, 1.0);
  j.values(0, 0) = 2.0;
  j.values(0, 1) = 4.0;
  j.values(0, 2) = 6.0;
  j.mask(0, 3) = 0.0;
  j.values(0, 3) = 0.0;
  ds.journeys = {j};
  const Normalizer n = fit_normalizer(ds, NormMode::zscore);
  CHECK(n.mean[0] == doctest::Approx(4.0));
  CHECK(n.stddev[0] == doctest::Approx(1.63299).epsilon(1e-5));  // population std
  CHECK(n.max_abs[0] == doctest::Approx(6.0));
}

TEST_CASE("fit_normalizer degenerate features use floors") {
  Dataset ds;
  ds.n_features = 2;
  ds.feature_names = {"missing", "constant"};
  PatientJourney j;
  j.id = "j";
  j.values = DenseMatrix(2, 2);
  j.mask = DenseMatrix(2, 2, 1.0);
  j.mask(0, 0) = 0.0;
  j.mask(0, 1) = 0.0;
  j.values(1, 0) = 5.0;
  j.values(1, 1) = 5.0;
  ds.journeys = {j};
  const Normalizer n = fit_normalizer(ds, NormMode::zscore);
  CHECK(n.mean[0] == 0.0);
  CHECK(n.stddev[0] == 1e-6);
  CHECK(n.warnings.size() == 1);
  CHECK(n.stddev[1] == 1e-6);  // constant feature hits the std floor
  CHECK(n.max_abs[1] == 5.0);
}

TEST_CASE("prepare_matrix paper_scale hand example") {
  Dataset ds = tiny_dataset();
  PatientJourney j;
  j.id = "w";
  j.label = 0;
  j.values = DenseMatrix(1, 3);
  j.mask = DenseMatrix(1, 3, 1.0);
  j.values(0, 0) = 58.0;
  j.mask(0, 1) = 0.0;
  j.values(0, 2) = 55.0;
  Dataset one;
  one.n_features = 1;
  one.feature_names = {"f"};
  one.journeys = {j};
  const Normalizer n = fit_normalizer(one, NormMode::paper_scale);
  const DenseMatrix x = prepare_matrix(j, n);
  CHECK(x(0, 0) == doctest::Approx(1.0));
  CHECK(x(0, 1) == 0.0);
  CHECK(x(0, 2) == doctest::Approx(0.94828).epsilon(1e-5));
}

TEST_CASE("prepare_matrix zscore centers observed training data, missing stays 0") {
  GenConfig cfg;
  cfg.n_patients = 50;
  cfg.n_features = 3;
  cfg.t_min = 4;
  cfg.t_max = 8;
  cfg.missing_rate = 0.3;
  cfg.seed = 3;
  const Dataset ds = generate(cfg);
  const Normalizer norm = fit_normalizer(ds, NormMode::zscore);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& j : ds.journeys) {
    const DenseMatrix x = prepare_matrix(j, norm);
    for (std::size_t f = 0; f < j.n_features(); ++f) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (j.mask(f, t) == 0.0) {
          CHECK(x(f, t) == 0.0);
        } else if (f == 0) {
          sum += x(f, t);
          ++count;
        }
      }
    }
  }
  CHECK(std::fabs(sum / count) < 1e-9);
}

TEST_CASE("normalizer fitted on train only differs when test leaks in") {
  GenConfig cfg;
  cfg.n_patients = 60;
  cfg.n_features = 2;
  cfg.t_min = 3;
  cfg.t_max = 6;
  cfg.missing_rate = 0.2;
  cfg.seed = 4;
  const Dataset ds = generate(cfg);
  const SplitResult s = split_dataset(ds, 0.70, 0.15, 0.15, 1);
  const Normalizer train_only = fit_normalizer(s.train, NormMode::zscore);
  Dataset leaked = s.train;
  for (const auto& j : s.test.journeys) leaked.journeys.push_back(j);
  const Normalizer with_test = fit_normalizer(leaked, NormMode::zscore);
  bool differs = false;
  for (std::size_t f = 0; f < ds.n_features; ++f) {
    differs |= (train_only.mean[f] != with_test.mean[f]);
  }
  CHECK(differs);
}
