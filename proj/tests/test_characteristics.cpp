#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "malgo/characteristics.hpp"

using namespace malgo;

TEST_CASE("ingest parses the documented header and keeps duplicates") {
  std::istringstream in(
      "config_id,v1,v2,v3,target\n"
      "1,0.1,0.2,0.3,1.5\n"
      "1,0.1,0.2,0.3,1.8\n"  // same voltages, different measured value
      "2,-0.5,0.0,0.5,2.0\n");
  auto records = ingest_char_csv(in);
  REQUIRE(records.size() == 3);
  CHECK(records[0].target == 1.5);
  CHECK(records[1].target == 1.8);
  CHECK(records[0].v1 == records[1].v1);
  auto counts = per_config_counts(records);
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 1);
}

TEST_CASE("ingest of an empty file yields an empty list") {
  std::istringstream in("");
  CHECK(ingest_char_csv(in).empty());
}

TEST_CASE("ingest rejects unknown columns") {
  std::istringstream in("config_id,v1,v2,v3,g_factor\n1,0,0,0,1\n");
  CHECK_THROWS_WITH_AS(ingest_char_csv(in),
                       doctest::Contains("unknown column 'g_factor'"), std::runtime_error);
}

TEST_CASE("ingest reports malformed rows with their line number") {
  std::istringstream in(
      "config_id,v1,v2,v3,target\n"
      "1,0.1,0.2,0.3,1.5\n"
      "1,0.1,oops,0.3,1.5\n");
  CHECK_THROWS_WITH_AS(ingest_char_csv(in), doctest::Contains("line 3"), std::runtime_error);

  std::istringstream missing(
      "config_id,v1,v2,v3,target\n"
      "1,0.1,0.2,0.3\n");
  CHECK_THROWS_WITH_AS(ingest_char_csv(missing), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("two-record z-scoring gives plus and minus one") {
  std::vector<CharRecord> records = {{1, 0.0, 1.0, 2.0, 1.0}, {1, 1.0, 3.0, 4.0, 3.0}};
  auto [normed, stats] = normalize(records);
  CHECK(normed[0].target == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(normed[1].target == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normed[0].v1 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(stats.per_config.at(1)[3].mean == doctest::Approx(2.0));
  CHECK(stats.per_config.at(1)[3].std == doctest::Approx(1.0));
}

TEST_CASE("de-normalization inverts normalization to 1e-12") {
  SurrogateConfig cfg;
  cfg.counts = {20, 15};
  cfg.seed = 5;
  auto records = generate_surrogate(cfg);
  auto [normed, stats] = normalize(records);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CharRecord back = stats.denormalize(normed[i]);
    CHECK(std::abs(back.v1 - records[i].v1) < 1e-12);
    CHECK(std::abs(back.v2 - records[i].v2) < 1e-12);
    CHECK(std::abs(back.v3 - records[i].v3) < 1e-12);
    CHECK(std::abs(back.target - records[i].target) < 1e-12);
  }
}

TEST_CASE("normalized columns have zero mean and unit std per configuration") {
  SurrogateConfig cfg;
  cfg.counts = {40, 25, 30};
  cfg.seed = 9;
  auto [normed, stats] = normalize(generate_surrogate(cfg));
  for (int config : {1, 2, 3}) {
    double mean = 0, var = 0;
    int n = 0;
    for (const auto& r : normed)
      if (r.config_id == config) {
        mean += r.target;
        ++n;
      }
    mean /= n;
    for (const auto& r : normed)
      if (r.config_id == config) var += (r.target - mean) * (r.target - mean);
    var /= n;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-12);
  }
}

TEST_CASE("normalization is strictly per configuration") {
  std::vector<CharRecord> records = {{1, 0, 0, 0, 1},  {1, 1, 1, 1, 3},
                                     {2, 10, 10, 10, 100}, {2, 11, 12, 13, 300}};
  auto [normed, stats] = normalize(records);
  // perturbing config 2 must not move config 1's stats
  std::vector<CharRecord> perturbed = records;
  perturbed[2].target = 500;
  perturbed[3].v1 = -20;
  auto [normed2, stats2] = normalize(perturbed);
  for (int c = 0; c < 4; ++c) {
    CHECK(stats.per_config.at(1)[static_cast<std::size_t>(c)].mean ==
          stats2.per_config.at(1)[static_cast<std::size_t>(c)].mean);
    CHECK(stats.per_config.at(1)[static_cast<std::size_t>(c)].std ==
          stats2.per_config.at(1)[static_cast<std::size_t>(c)].std);
  }
}

TEST_CASE("normalize rejects zero-variance columns naming config and column") {
  std::vector<CharRecord> records = {{3, 0.5, 1.0, 2.0, 7.0}, {3, 0.5, 2.0, 3.0, 8.0}};
  try {
    normalize(records);
    FAIL("expected std::domain_error");
  } catch (const std::domain_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("v1") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  std::vector<CharRecord> single = {{1, 0, 0, 0, 1}};
  CHECK_THROWS_AS(normalize(single), std::invalid_argument);
}

TEST_CASE("build_char_split puts ceil(7% of 125) = 9 points into adaptation") {
  SurrogateConfig cfg = SurrogateConfig::for_kind(SurrogateKind::GFactor);
  auto [normed, stats] = normalize(generate_surrogate(cfg));
  DatasetSplit split = build_char_split(normed, 0.07, 11);
  CHECK(split.train.size() == 260 + 84);
  CHECK(split.adapt_ids.size() == 1);
  int last = split.adapt_ids.front();
  CHECK(last == 3);
  CHECK(split.adapt.at(last).size() == 9);
  CHECK(split.test.at(last).size() == 116);
  CHECK(split.train_ids == std::vector<int>{1, 2});
  for (const auto& t : split.train) CHECK(t.x.size() == 3);
  for (const auto& t : split.train) CHECK(t.y.size() == 1);
}

TEST_CASE("build_char_split rejects degenerate fractions") {
  SurrogateConfig cfg;
  cfg.counts = {30, 20};
  auto [normed, stats] = normalize(generate_surrogate(cfg));
  CHECK_THROWS_AS(build_char_split(normed, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_char_split(normed, 0.0, 1), std::invalid_argument);
  std::vector<CharRecord> one_config = {{1, 0, 0, 0, 1}, {1, 1, 1, 1, 2}};
  CHECK_THROWS_AS(build_char_split(one_config, 0.1, 1), std::invalid_argument);
}

TEST_CASE("build_char_split is deterministic and keeps adapt/test disjoint") {
  SurrogateConfig cfg;
  cfg.counts = {30, 25};
  cfg.seed = 3;
  auto [normed, stats] = normalize(generate_surrogate(cfg));
  DatasetSplit a = build_char_split(normed, 0.2, 42);
  DatasetSplit b = build_char_split(normed, 0.2, 42);
  int last = a.adapt_ids.front();
  REQUIRE(a.adapt.at(last).size() == b.adapt.at(last).size());
  for (std::size_t i = 0; i < a.adapt.at(last).size(); ++i)
    CHECK(a.adapt.at(last)[i].x == b.adapt.at(last)[i].x);
  for (const auto& ad : a.adapt.at(last))
    for (const auto& te : a.test.at(last)) CHECK(ad.x != te.x);
}

TEST_CASE("surrogate generator reproduces the documented dataset sizes") {
  auto g = generate_surrogate(SurrogateConfig::for_kind(SurrogateKind::GFactor));
  auto counts_g = per_config_counts(g);
  CHECK(counts_g[1] == 260);
  CHECK(counts_g[2] == 84);
  CHECK(counts_g[3] == 125);

  auto r = generate_surrogate(SurrogateConfig::for_kind(SurrogateKind::Rabi));
  auto counts_r = per_config_counts(r);
  CHECK(counts_r[1] == 215);
  CHECK(counts_r[2] == 33);
  CHECK(counts_r[3] == 97);
}

TEST_CASE("surrogate is deterministic in the seed and noise responds to the knob") {
  SurrogateConfig a;
  a.counts = {50, 40};
  a.seed = 7;
  auto ra = generate_surrogate(a);
  auto rb = generate_surrogate(a);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].target == rb[i].target);

  SurrogateConfig quiet = a;
  quiet.noise = 0.0;
  SurrogateConfig loud = a;
  loud.noise = 0.05;
  auto rq = generate_surrogate(quiet);
  auto rl = generate_surrogate(loud);
  bool differs = false;
  for (std::size_t i = 0; i < rq.size(); ++i) differs |= (rq[i].target != rl[i].target);
  CHECK(differs);
}

TEST_CASE("char csv writer and ingest round-trip") {
  SurrogateConfig cfg;
  cfg.counts = {10, 8};
  cfg.seed = 13;
  auto records = generate_surrogate(cfg);
  std::ostringstream out;
  write_char_csv(out, records);
  std::istringstream in(out.str());
  auto back = ingest_char_csv(in);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].config_id == records[i].config_id);
    CHECK(back[i].v1 == records[i].v1);
    CHECK(back[i].target == records[i].target);
  }
}

TEST_CASE("model predictions are invariant under de-normalize then normalize") {
  SurrogateConfig scfg;
  scfg.counts = {40, 30, 25};
  scfg.seed = 31;
  auto [normed, stats] = normalize(generate_surrogate(scfg));
  DenseNet net(NetworkSpec::characteristics());
  Eigen::VectorXd theta = net.init_params(8);
  std::mt19937_64 rng(4);
  Eigen::VectorXd eta = testutil::random_vector(rng, 7);
  for (std::size_t i = 0; i < 10; ++i) {
    const CharRecord& r = normed[i * 7];
    CharRecord round_trip = [&] {
      CharRecord denorm = stats.denormalize(r);
      const auto& s = stats.per_config.at(denorm.config_id);
      CharRecord back = denorm;
      back.v1 = (denorm.v1 - s[0].mean) / s[0].std;
      back.v2 = (denorm.v2 - s[1].mean) / s[1].std;
      back.v3 = (denorm.v3 - s[2].mean) / s[2].std;
      back.target = (denorm.target - s[3].mean) / s[3].std;
      return back;
    }();
    Eigen::VectorXd a = net.forward(theta, Eigen::Vector3d(r.v1, r.v2, r.v3), eta);
    Eigen::VectorXd b = net.forward(
        theta, Eigen::Vector3d(round_trip.v1, round_trip.v2, round_trip.v3), eta);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("a single ablation cell reproduces a manual pipeline run") {
  SurrogateConfig scfg;
  scfg.counts = {60, 40, 30};
  scfg.seed = 21;
  auto records = generate_surrogate(scfg);

  TrainSchedule sched = TrainSchedule::characteristics_defaults();
  sched.total_epochs = 30;
  sched.noise_until = 5;
  sched.freeze_from = 25;
  AdaptConfig acfg = AdaptConfig::characteristics_defaults();

  std::vector<double> fractions = {0.2};
  auto rows = run_ablation(records, fractions, 1, sched, acfg, 77, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fraction == 0.2);
  CHECK(rows[0].seed == 0);

  // manual pipeline with the cell seed the ablation derives
  std::uint64_t cell_seed = derive_seed(77, "ablation-cell", 0);
  auto [normed, stats] = normalize(records);
  DatasetSplit split = build_char_split(normed, 0.2, cell_seed);
  auto [model, log] = train(split.train, NetworkSpec::characteristics(), sched, cell_seed);
  AdaptConfig manual = acfg;
  manual.seed = cell_seed;
  int last = split.adapt_ids.front();
  AdaptationResult res =
      adapt_and_evaluate(model, split.adapt.at(last), split.test.at(last), std::nullopt, manual);
  CHECK(rows[0].test_loss == res.test_loss);
}

TEST_CASE("ablation emits one row per fraction-seed cell") {
  SurrogateConfig scfg;
  scfg.counts = {40, 30, 25};
  scfg.seed = 2;
  auto records = generate_surrogate(scfg);
  TrainSchedule sched = TrainSchedule::characteristics_defaults();
  sched.total_epochs = 10;
  sched.noise_until = 2;
  sched.freeze_from = 9;
  std::vector<double> fractions = {0.1, 0.3};
  auto rows = run_ablation(records, fractions, 2, sched, AdaptConfig::characteristics_defaults(),
                           5, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].fraction == 0.1);
  CHECK(rows[1].fraction == 0.1);
  CHECK(rows[2].fraction == 0.3);
  CHECK(rows[3].fraction == 0.3);
  CHECK(rows[0].seed == 0);
  CHECK(rows[1].seed == 1);
}
