#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fasc/dataset.hpp"

using namespace fasc;

namespace {

FactorMixtureSpec two_cluster_spec(int d, int r, double sigma) {
  FactorMixtureSpec s;
  s.centroids = Eigen::MatrixXd::Zero(2, d);
  s.centroids(0, 0) = 10.0;
  s.centroids(1, 0) = -10.0;
  s.loading = Eigen::MatrixXd::Zero(d, r);
  Rng rng(99);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < r; ++a) s.loading(i, a) = rng.normal();
  s.sigma = sigma;
  s.weights = Eigen::Vector2d(0.5, 0.5);
  s.centered = true;
  return s;
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("fasc_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

RawTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_table(in);
}

}  // namespace

TEST(Labels, ExternalIdsAreOneBased) {
  EXPECT_EQ(to_external({0, 2, 1}), (Labels{1, 3, 2}));
  EXPECT_EQ(from_external({1, 3, 2}), (Labels{0, 2, 1}));
  EXPECT_THROW(from_external({0}), ValidationError);
}

TEST(DatasetType, RejectsNonFiniteAndBadLabels) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
  x(1, 1) = std::nan("");
  EXPECT_THROW(Dataset{x}, ValidationError);
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(2, 2), Labels{0}), ValidationError);
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(2, 2), Labels{0, 3}, {}, 2), ValidationError);
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(0, 2)), ValidationError);
}

TEST(SpecType, InvariantsNameTheViolation) {
  auto s = two_cluster_spec(4, 1, 1.0);
  s.weights = Eigen::Vector2d(0.5, 0.6);
  try {
    s.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sum to 1"), std::string::npos);
  }
  s = two_cluster_spec(4, 1, 1.0);
  s.centroids(0, 1) = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);  // declared centered but mean != 0
  s = two_cluster_spec(4, 1, -1.0);
  EXPECT_THROW(generate(s, 3, 1), ValidationError);
}

TEST(Generate, DegenerateNoiselessCase) {
  FactorMixtureSpec s;
  s.centroids = Eigen::MatrixXd::Zero(1, 3);
  s.loading = Eigen::MatrixXd::Zero(3, 0);
  s.sigma = 0.0;
  s.weights = Eigen::VectorXd::Ones(1);
  const Dataset d = generate(s, 5, 42);
  EXPECT_EQ(d.x(), Eigen::MatrixXd::Zero(5, 3));
  EXPECT_EQ(to_external(*d.labels()), Labels(5, 1));
}

TEST(Generate, ToyModelShape) {
  const Dataset d = generate(two_cluster_spec(100, 3, 1.0), 200, 1);
  EXPECT_EQ(d.n(), 200);
  EXPECT_EQ(d.d(), 100);
  EXPECT_EQ(d.num_classes(), 2);
}

TEST(Generate, Deterministic) {
  const auto s = two_cluster_spec(10, 2, 0.5);
  const Dataset a = generate(s, 50, 7), b = generate(s, 50, 7), c = generate(s, 50, 8);
  EXPECT_EQ(std::memcmp(a.x().data(), b.x().data(), sizeof(double) * a.x().size()), 0);
  EXPECT_EQ(*a.labels(), *b.labels());
  EXPECT_NE(a.x(), c.x());
}

TEST(Generate, RowsFollowTheModel) {
  const auto s = two_cluster_spec(6, 2, 0.3);
  const Realization r = generate_realization(s, 40, 11);
  // x − μ_y − B f is the idiosyncratic noise; its scale must be σ
  Eigen::MatrixXd eps = r.data.x() - r.factors * s.loading.transpose();
  for (int i = 0; i < 40; ++i) eps.row(i) -= s.centroids.row((*r.data.labels())[i]);
  const double sd = std::sqrt(eps.squaredNorm() / eps.size());
  EXPECT_NEAR(sd, 0.3, 0.06);
}

TEST(Generate, MomentsAndFactorScores) {
  FactorMixtureSpec s;
  const int d = 8, r = 3, n = 20000;
  Rng rng(5);
  s.centroids.resize(3, d);
  for (int j = 0; j < 3; ++j)
    for (int c = 0; c < d; ++c) s.centroids(j, c) = rng.normal();
  s.weights = Eigen::Vector3d(0.2, 0.3, 0.5);
  const Eigen::RowVectorXd mean = s.weights.transpose() * s.centroids;
  s.centroids.rowwise() -= mean;
  s.centered = true;
  s.loading.resize(d, r);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < r; ++a) s.loading(i, a) = rng.normal();
  s.sigma = 0.3;

  const Realization real = generate_realization(s, n, 2024);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.loading);
  const double b_norm = svd.singularValues()(0);
  // centroid spread enters the row scatter as well
  const double mu_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(s.centroids).singularValues()(0);
  const double sigma_total = std::sqrt(b_norm * b_norm + mu_norm * mu_norm + s.sigma * s.sigma);
  EXPECT_LE(real.data.x().colwise().mean().norm(), 4.0 * sigma_total / std::sqrt(n) * std::sqrt(d));

  const Eigen::MatrixXd f = real.factors;
  const Eigen::MatrixXd cov = f.transpose() * f / n;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      if (a != b) EXPECT_LE(std::abs(cov(a, b)), 0.05);

  std::vector<int> counts(3, 0);
  for (int l : *real.data.labels()) ++counts[l];
  for (int j = 0; j < 3; ++j) {
    const double p = s.weights(j);
    EXPECT_NEAR(counts[j] / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n)) << "class " << j;
  }
}

TEST(PaperScenario, StrongRecipe) {
  const Dims dims{1000, 100, 5, 3};
  const auto [data, spec] = generate_paper_scenario("strong", 0.01, dims, 3);
  EXPECT_EQ(data.n(), 1000);
  EXPECT_EQ(data.d(), 100);
  EXPECT_EQ(spec.K(), 5);
  EXPECT_EQ(spec.r(), 3);
  EXPECT_DOUBLE_EQ(spec.sigma, 0.01);
  EXPECT_LE((spec.centroids.transpose() * spec.weights).norm(), 1e-12);
  // rows of B ~ N(0, I_3): ‖B‖_F² / (d r) ≈ 1
  EXPECT_NEAR(spec.loading.squaredNorm() / 300.0, 1.0, 0.25);
}

TEST(PaperScenario, WeakLoadingIsScaledByRootD) {
  const Dims dims{1000, 100, 5, 3};
  const auto strong = paper_scenario_spec(ScenarioKind::strong, 0.5, dims, 9);
  const auto weak = paper_scenario_spec(ScenarioKind::weak, 0.5, dims, 9);
  EXPECT_LE((weak.loading * 10.0 - strong.loading).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(weak.centroids, strong.centroids);
}

TEST(PaperScenario, ZeroSigmaLeavesOnlyFactorVariation) {
  const Dims dims{60, 12, 3, 2};
  const auto spec = paper_scenario_spec(ScenarioKind::strong, 0.0, dims, 4);
  const Realization r = generate_realization(spec, 60, 17);
  for (int i = 0; i < 60; ++i) {
    const Eigen::RowVectorXd rest = r.data.x().row(i) - spec.centroids.row((*r.data.labels())[i]) -
                                    r.factors.row(i) * spec.loading.transpose();
    EXPECT_LE(rest.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PaperScenario, UnknownNameFails) {
  EXPECT_THROW(parse_scenario_kind("medium"), ValidationError);
}

TEST(SplitHalves, EvenOddAndRoundTrip) {
  Eigen::MatrixXd x(5, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const Dataset d(x, Labels{0, 1, 0, 1, 1});
  const auto [a, b] = split_halves(d);
  EXPECT_EQ(a.n(), 2);
  EXPECT_EQ(b.n(), 3);
  EXPECT_EQ(*a.labels(), (Labels{0, 1}));
  EXPECT_EQ(concat_rows(a, b).x(), x);
  EXPECT_EQ(*concat_rows(a, b).labels(), *d.labels());

  const auto [c, e] = split_halves(Dataset(x.topRows(4)));
  EXPECT_EQ(c.x(), x.topRows(2));
  EXPECT_EQ(e.x(), x.middleRows(2, 2));
  EXPECT_THROW(split_halves(Dataset(x.topRows(1))), ValidationError);
}

TEST(Csv, IdentityCleaning) {
  const auto path = temp_file("identity.csv", "a,b\n1,2\n3,4.5\n-1,1e3\n");
  const LoadResult r = load_csv(path, std::nullopt, CleaningRule{});
  Eigen::MatrixXd want(3, 2);
  want << 1, 2, 3, 4.5, -1, 1000;
  EXPECT_EQ(r.data.x(), want);
  EXPECT_FALSE(r.data.labels().has_value());
  EXPECT_EQ(r.report.rows_kept, 3u);
  EXPECT_EQ(r.report.rows_dropped, 0u);
  EXPECT_EQ(r.data.feature_names(), (std::vector<std::string>{"a", "b"}));
}

TEST(Csv, DropsColumnsRowsAndCentralizes) {
  const auto path =
      temp_file("clean.csv", "id;x;y;class\n1;1;NA;c1\n2;2;4;c2\n3;;5;c1\n4;4;6;c2\n5;6;8;c1\n");
  CleaningRule rule{{"id"}, true, true, {}};
  std::ostringstream diag;
  const LoadResult r = load_csv(path, "class", rule, 0, &diag);
  EXPECT_EQ(r.data.n(), 3);
  EXPECT_EQ(r.data.d(), 2);
  EXPECT_EQ(r.report.rows_dropped, 2u);
  EXPECT_EQ(r.report.cols_dropped, 1u);
  EXPECT_LE(r.data.x().colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.label_names, (std::vector<std::string>{"c1", "c2"}));
  EXPECT_EQ(*r.data.labels(), (Labels{1, 1, 0}));
  EXPECT_NE(diag.str().find("rows_kept=3"), std::string::npos);
}

TEST(Csv, ErrorsCarryCoordinates) {
  const auto path = temp_file("bad.csv", "a,b\n1,2\n3,oops\n");
  try {
    load_csv(path, std::nullopt, CleaningRule{});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(load_csv(path, std::string("label"), CleaningRule{}), ValidationError);
  EXPECT_THROW(load_csv(temp_file("ok.csv", "a,b\n1,2\n"), std::nullopt, CleaningRule{{"zzz"}, false, false, {}}),
               ValidationError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", std::nullopt, CleaningRule{}), IoError);
}

TEST(Csv, MissingWithoutRowDropIsAnError) {
  const auto path = temp_file("missing.csv", "a,b\n1,NaN\n");
  EXPECT_THROW(load_csv(path, std::nullopt, CleaningRule{}), ParseError);
}

TEST(Csv, DelimiterDetectionAndQuotes) {
  const RawTable t = parse("# comment\n\"a,1\",b\n\"x, y\",2\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a,1", "b"}));
  EXPECT_EQ(t.rows[0][0], "x, y");
  EXPECT_EQ(t.line[0], 3u);
  EXPECT_THROW(parse("a,b;c\n1,2;3\n"), ValidationError);
}

TEST(Csv, DropLabelValues) {
  const RawTable t = parse("k,v\narc,1\nbct,2\nphg,3\nbct,4\n");
  CleaningReport rep;
  const RawTable c = clean_table(t, std::string("k"), CleaningRule{{}, false, false, {"arc", "phg"}}, &rep);
  EXPECT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(rep.rows_dropped, 2u);
}

TEST(Csv, CleaningIsIdempotent) {
  const RawTable t = parse("id,x,y,class\n1,1,NA,a\n2,2,4,b\n3,,5,a\n4,4,6,b\n5,7,8,c\n");
  const CleaningRule rule{{"id"}, true, false, {"c"}};
  const RawTable once = clean_table(t, std::string("class"), rule);
  // the dropped column is gone after one pass, so the second pass keeps the rest of the rule
  const RawTable twice = clean_table(once, std::string("class"), CleaningRule{{}, true, false, {"c"}});
  EXPECT_EQ(once, twice);

  const LoadResult a = table_to_dataset(once, std::string("class"), true);
  const LoadResult b = table_to_dataset(once, std::string("class"), true);
  const Dataset recentered = b.data.with_features(b.data.x().rowwise() - b.data.x().colwise().mean());
  EXPECT_LE((a.data.x() - recentered.x()).cwiseAbs().maxCoeff(), 1e-15);
}
