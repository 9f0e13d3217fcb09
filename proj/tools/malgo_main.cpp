// Command-line front end: dataset generation, training, adaptation,
// evaluation, benchmarking, ablation, surrogate data, and SVG plots.

#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "malgo/pipeline.hpp"

namespace {

struct ConfigBinding {
  CLI::Option* opt;
  std::function<void(const std::string&)> apply;
};

using Bindings = std::map<std::string, ConfigBinding>;

// Config file keys mirror the long flag names; flags passed on the command
// line win over file values; unknown keys are rejected.
void apply_config(const std::string& path, const Bindings& bindings) {
  if (path.empty()) return;
  malgo::KeyValueConfig cfg = malgo::KeyValueConfig::parse_file(path);
  std::set<std::string> allowed;
  for (const auto& [k, b] : bindings) allowed.insert(k);
  cfg.require_known(allowed);
  for (const auto& [k, v] : cfg.entries()) {
    const ConfigBinding& b = bindings.at(k);
    if (b.opt == nullptr || b.opt->count() == 0) b.apply(v);
  }
}

std::uint64_t to_u64(const std::string& s) { return std::stoull(s); }
int to_int(const std::string& s) { return std::stoi(s); }
double to_double(const std::string& s) { return std::stod(s); }
bool to_bool(const std::string& s) { return s == "true" || s == "1" || s == "yes"; }

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  double v;
  while (ss >> v) out.push_back(v);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meta-learning of quantum dynamics and spin-qubit characteristics"};
  app.require_subcommand(1);

  // ------------------------------------------------------------------ generate
  auto* gen = app.add_subcommand("generate", "sample systems and write a dataset file");
  std::string gen_config, gen_family = "closed", gen_out = "out";
  malgo::GenerateOptions gopt;
  bool gen_csv = false;
  auto* go_cfg = gen->add_option("--config", gen_config, "key-value config file");
  Bindings gen_bind;
  gen_bind["family"] = {gen->add_option("--family", gen_family, "closed|open|heisenberg"),
                        [&](const std::string& v) { gen_family = v; }};
  gen_bind["train_systems"] = {gen->add_option("--train-systems", gopt.n_train_sys),
                               [&](const std::string& v) { gopt.n_train_sys = to_int(v); }};
  gen_bind["adapt_systems"] = {gen->add_option("--adapt-systems", gopt.n_adapt_sys),
                               [&](const std::string& v) { gopt.n_adapt_sys = to_int(v); }};
  gen_bind["adapt_points"] = {gen->add_option("--adapt-points", gopt.n_adapt_points),
                              [&](const std::string& v) { gopt.n_adapt_points = to_int(v); }};
  gen_bind["traj"] = {gen->add_option("--traj", gopt.n_traj),
                      [&](const std::string& v) { gopt.n_traj = to_int(v); }};
  gen_bind["steps"] = {gen->add_option("--steps", gopt.n_steps),
                       [&](const std::string& v) { gopt.n_steps = to_int(v); }};
  gen_bind["dt"] = {gen->add_option("--dt", gopt.dt),
                    [&](const std::string& v) { gopt.dt = to_double(v); }};
  gen_bind["seed"] = {gen->add_option("--seed", gopt.seed),
                      [&](const std::string& v) { gopt.seed = to_u64(v); }};
  gen_bind["out"] = {gen->add_option("--out", gen_out, "output directory"),
                     [&](const std::string& v) { gen_out = v; }};
  gen_bind["csv"] = {gen->add_flag("--csv", gen_csv, "also export tuples as CSV"),
                     [&](const std::string& v) { gen_csv = to_bool(v); }};
  gen->callback([&] {
    apply_config(gen_config, gen_bind);
    auto fam = malgo::family_from_name(gen_family);
    if (!fam) throw std::invalid_argument("generate: family must be closed|open|heisenberg");
    gopt.family = *fam;
    gopt.out_dir = gen_out;
    gopt.csv_export = gen_csv;
    auto out = malgo::run_generate(gopt);
    std::cout << "wrote " << out.dataset_path << " (" << malgo::dataset_tuple_count(out.split)
              << " tuples)\n";
    if (!out.csv_path.empty()) std::cout << "wrote " << out.csv_path << "\n";
  });

  // --------------------------------------------------------------------- train
  auto* tr = app.add_subcommand("train", "bilevel meta-training on a dataset");
  std::string tr_config;
  malgo::TrainOptions topt;
  tr->add_option("--config", tr_config, "key-value config file");
  Bindings tr_bind;
  tr_bind["data"] = {tr->add_option("--data", topt.data_path, "dataset file")->required(),
                     [&](const std::string& v) { topt.data_path = v; }};
  tr_bind["method"] = {tr->add_option("--method", topt.method, "malgo|imode"),
                       [&](const std::string& v) { topt.method = v; }};
  tr_bind["epochs"] = {tr->add_option("--epochs", topt.total_epochs),
                       [&](const std::string& v) { topt.total_epochs = to_int(v); }};
  tr_bind["noise_until"] = {tr->add_option("--noise-until", topt.noise_until),
                            [&](const std::string& v) { topt.noise_until = to_int(v); }};
  tr_bind["freeze_from"] = {tr->add_option("--freeze-from", topt.freeze_from),
                            [&](const std::string& v) { topt.freeze_from = to_int(v); }};
  tr_bind["batch"] = {tr->add_option("--batch", topt.batch_size),
                      [&](const std::string& v) { topt.batch_size = to_int(v); }};
  tr_bind["s_theta"] = {tr->add_option("--s-theta", topt.s_theta),
                        [&](const std::string& v) { topt.s_theta = to_int(v); }};
  tr_bind["s_eta"] = {tr->add_option("--s-eta", topt.s_eta),
                      [&](const std::string& v) { topt.s_eta = to_int(v); }};
  tr_bind["lr_theta"] = {tr->add_option("--lr-theta", topt.lr_theta),
                         [&](const std::string& v) { topt.lr_theta = to_double(v); }};
  tr_bind["lr_eta"] = {tr->add_option("--lr-eta", topt.lr_eta),
                       [&](const std::string& v) { topt.lr_eta = to_double(v); }};
  tr_bind["seed"] = {tr->add_option("--seed", topt.seed),
                     [&](const std::string& v) { topt.seed = to_u64(v); }};
  tr_bind["out"] = {tr->add_option("--out", topt.out_dir, "output directory"),
                    [&](const std::string& v) { topt.out_dir = v; }};
  tr->callback([&] {
    apply_config(tr_config, tr_bind);
    auto out = malgo::run_train(topt);
    std::cout << "parameters: " << malgo::DenseNet(out.model.spec).param_count() << "\n"
              << "final training loss: " << out.log.entries.back().loss << "\n"
              << "wrote " << out.model_path << " and " << out.trainlog_path << "\n";
  });

  // --------------------------------------------------------------------- adapt
  auto* ad = app.add_subcommand("adapt", "adapt a trained model to unseen systems");
  std::string ad_config;
  malgo::AdaptOptions aopt;
  ad->add_option("--config", ad_config, "key-value config file");
  Bindings ad_bind;
  ad_bind["model"] = {ad->add_option("--model", aopt.model_path)->required(),
                      [&](const std::string& v) { aopt.model_path = v; }};
  ad_bind["data"] = {ad->add_option("--data", aopt.data_path)->required(),
                     [&](const std::string& v) { aopt.data_path = v; }};
  ad_bind["restarts"] = {ad->add_option("--restarts", aopt.n_restarts),
                         [&](const std::string& v) { aopt.n_restarts = to_int(v); }};
  ad_bind["epochs"] = {ad->add_option("--epochs", aopt.max_epochs),
                       [&](const std::string& v) { aopt.max_epochs = to_int(v); }};
  ad_bind["seed"] = {ad->add_option("--seed", aopt.seed),
                     [&](const std::string& v) { aopt.seed = to_u64(v); }};
  ad_bind["threads"] = {ad->add_option("--threads", aopt.threads),
                        [&](const std::string& v) { aopt.threads = to_int(v); }};
  ad_bind["out"] = {ad->add_option("--out", aopt.out_dir),
                    [&](const std::string& v) { aopt.out_dir = v; }};
  ad->callback([&] {
    apply_config(ad_config, ad_bind);
    auto out = malgo::run_adapt(aopt);
    std::cout << "adapted " << out.results.size() << " systems; wrote " << out.results_path
              << "\n";
  });

  // ---------------------------------------------------------------------- eval
  auto* ev = app.add_subcommand("eval", "evaluate an adapted model on the test split");
  std::string ev_config;
  malgo::EvalOptions eopt;
  ev->add_option("--config", ev_config, "key-value config file");
  Bindings ev_bind;
  ev_bind["model"] = {ev->add_option("--model", eopt.model_path)->required(),
                      [&](const std::string& v) { eopt.model_path = v; }};
  ev_bind["data"] = {ev->add_option("--data", eopt.data_path)->required(),
                     [&](const std::string& v) { eopt.data_path = v; }};
  ev_bind["out"] = {ev->add_option("--out", eopt.out_dir),
                    [&](const std::string& v) { eopt.out_dir = v; }};
  ev->callback([&] {
    apply_config(ev_config, ev_bind);
    auto out = malgo::run_eval(eopt);
    std::cout << "evaluated " << out.results.size() << " systems; wrote " << out.eval_path << "\n";
  });

  // ----------------------------------------------------------------- benchmark
  auto* bm = app.add_subcommand("benchmark", "run malgo/imode/mlp over repeated seeds");
  std::string bm_config, bm_family = "closed";
  malgo::BenchmarkOptions bopt;
  bm->add_option("--config", bm_config, "key-value config file");
  Bindings bm_bind;
  bm_bind["family"] = {
      bm->add_option("--family", bm_family, "closed|open|heisenberg|char-g|char-rabi"),
      [&](const std::string& v) { bm_family = v; }};
  bm_bind["runs"] = {bm->add_option("--runs", bopt.n_runs),
                     [&](const std::string& v) { bopt.n_runs = to_int(v); }};
  bm_bind["epochs"] = {bm->add_option("--epochs", bopt.total_epochs),
                       [&](const std::string& v) { bopt.total_epochs = to_int(v); }};
  bm_bind["noise"] = {bm->add_option("--noise", bopt.surrogate_noise),
                      [&](const std::string& v) { bopt.surrogate_noise = to_double(v); }};
  bm_bind["seed"] = {bm->add_option("--seed", bopt.seed),
                     [&](const std::string& v) { bopt.seed = to_u64(v); }};
  bm_bind["threads"] = {bm->add_option("--threads", bopt.threads),
                        [&](const std::string& v) { bopt.threads = to_int(v); }};
  bm_bind["out"] = {bm->add_option("--out", bopt.out_dir),
                    [&](const std::string& v) { bopt.out_dir = v; }};
  bm->callback([&] {
    apply_config(bm_config, bm_bind);
    bopt.family = malgo::ExperimentFamily::from_name(bm_family);
    auto out = malgo::run_benchmark(bopt);
    std::cout << "wrote " << out.csv_path << " and " << out.summary_path << "\n";
  });

  // -------------------------------------------------------------------- ablate
  auto* ab = app.add_subcommand("ablate", "adaptation-set-size ablation (characteristics)");
  std::string ab_config, ab_family = "char-g";
  malgo::AblateOptions abopt;
  ab->add_option("--config", ab_config, "key-value config file");
  Bindings ab_bind;
  ab_bind["family"] = {ab->add_option("--family", ab_family, "char-g|char-rabi"),
                       [&](const std::string& v) { ab_family = v; }};
  ab_bind["data"] = {ab->add_option("--data", abopt.data_csv, "characteristics CSV (optional)"),
                     [&](const std::string& v) { abopt.data_csv = v; }};
  ab_bind["fractions"] = {ab->add_option("--fractions", abopt.fractions)->delimiter(','),
                          [&](const std::string& v) { abopt.fractions = to_doubles(v); }};
  ab_bind["seeds"] = {ab->add_option("--seeds", abopt.n_seeds),
                      [&](const std::string& v) { abopt.n_seeds = to_int(v); }};
  ab_bind["epochs"] = {ab->add_option("--epochs", abopt.total_epochs),
                       [&](const std::string& v) { abopt.total_epochs = to_int(v); }};
  ab_bind["noise"] = {ab->add_option("--noise", abopt.surrogate_noise),
                      [&](const std::string& v) { abopt.surrogate_noise = to_double(v); }};
  ab_bind["seed"] = {ab->add_option("--seed", abopt.seed),
                     [&](const std::string& v) { abopt.seed = to_u64(v); }};
  ab_bind["threads"] = {ab->add_option("--threads", abopt.threads),
                        [&](const std::string& v) { abopt.threads = to_int(v); }};
  ab_bind["out"] = {ab->add_option("--out", abopt.out_dir),
                    [&](const std::string& v) { abopt.out_dir = v; }};
  ab->callback([&] {
    apply_config(ab_config, ab_bind);
    abopt.family = malgo::ExperimentFamily::from_name(ab_family);
    auto out = malgo::run_ablate(abopt);
    std::cout << "wrote " << out.csv_path << " and " << out.summary_path << "\n";
  });

  // ----------------------------------------------------------------- surrogate
  auto* su = app.add_subcommand("surrogate", "generate synthetic characteristics data");
  std::string su_config, su_family = "char-g";
  malgo::SurrogateOptions sopt;
  su->add_option("--config", su_config, "key-value config file");
  Bindings su_bind;
  su_bind["family"] = {su->add_option("--family", su_family, "char-g|char-rabi"),
                       [&](const std::string& v) { su_family = v; }};
  su_bind["noise"] = {su->add_option("--noise", sopt.noise),
                      [&](const std::string& v) { sopt.noise = to_double(v); }};
  su_bind["seed"] = {su->add_option("--seed", sopt.seed),
                     [&](const std::string& v) { sopt.seed = to_u64(v); }};
  su_bind["out"] = {su->add_option("--out", sopt.out_dir),
                    [&](const std::string& v) { sopt.out_dir = v; }};
  su->callback([&] {
    apply_config(su_config, su_bind);
    sopt.family = malgo::ExperimentFamily::from_name(su_family);
    auto out = malgo::run_surrogate(sopt);
    std::cout << "wrote " << out.csv_path << " (" << out.records.size() << " records)\n";
  });

  // ---------------------------------------------------------------------- plot
  auto* pl = app.add_subcommand("plot", "render a CSV as a static SVG");
  malgo::PlotOptions popt;
  pl->add_option("--kind", popt.kind, "etatraj|benchmark|ablation")->required();
  pl->add_option("--in", popt.csv_path, "input CSV")->required();
  pl->add_option("--out", popt.svg_path, "output SVG path")->required();
  pl->callback([&] {
    malgo::run_plot(popt);
    std::cout << "wrote " << popt.svg_path << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
