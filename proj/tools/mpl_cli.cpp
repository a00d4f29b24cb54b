// Command-line front end: fit, sample, experiment, summarize, check-entropy.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "mpl/mpl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 3;
constexpr int kExitEmpty = 4;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw mpl::PreconditionError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

mpl::models::ModelParams load_params(const fs::path& p) {
  std::istringstream is(slurp(p));
  return mpl::models::read_params(is);
}

std::vector<mpl::State> load_samples(const fs::path& p) {
  std::istringstream is(slurp(p));
  return mpl::read_samples_csv(is);
}

mpl::WeightScheme load_scheme(const std::string& arg, std::size_t q) {
  if (fs::exists(arg)) {
    std::istringstream is(slurp(arg));
    return mpl::read_scheme(is, q);
  }
  return mpl::scheme_by_name(arg, q);
}

// Writes to path, or stdout when path is empty or "-".
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mpl::PreconditionError("cannot write " + path);
  write(out);
}

struct FitArgs {
  std::string family = "fvbm";
  std::string data;
  std::string scheme = "native";
  std::size_t r = 0;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::size_t max_iter = 500;
  double grad_tol = 1e-8;
  unsigned threads = 1;
  std::string out;
};

int run_fit(const FitArgs& a) {
  const auto data = load_samples(a.data);
  if (data.empty()) throw mpl::PreconditionError("data file has no rows");
  const std::size_t q = data.front().size();
  mpl::FitConfig cfg;
  cfg.seed = {a.seed, 0};
  cfg.restarts = a.restarts;
  cfg.max_iter = a.max_iter;
  cfg.grad_tol = a.grad_tol;
  cfg.threads = a.threads;
  const auto family = mpl::parse_family(a.family);
  mpl::FitReport rep;
  if (family == mpl::Family::tabular) {
    const auto scheme = load_scheme(a.scheme == "native" ? "ml" : a.scheme, q);
    rep = mpl::fit_mpl_tabular(mpl::SupportSpec::binary(q), data, scheme, cfg);
  } else {
    const mpl::ModelShape shape{family, q, a.r};
    const mpl::ObjectiveSpec obj = a.scheme == "native"
                                       ? mpl::ObjectiveSpec{mpl::NativeObjective{}}
                                       : mpl::ObjectiveSpec{load_scheme(a.scheme, q)};
    rep = mpl::fit_mpl(shape, data, obj, cfg);
  }
  emit(a.out, [&](std::ostream& os) { mpl::write_fit_report(os, rep); });
  std::cerr << "status " << mpl::to_string(rep.status) << '\n';
  return rep.converged() ? kExitOk : kExitNotConverged;
}

struct SampleArgs {
  std::string params;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  bool gibbs = false;
  std::size_t burn_in = 1000;
  std::size_t sweeps = 1;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  const auto text = slurp(a.params);
  std::istringstream is(text);
  const auto params = mpl::models::read_params(is);
  const mpl::SeedSpec seed{a.seed, a.replicate};
  std::vector<mpl::State> data;
  if (a.gibbs) {
    const mpl::GibbsConfig g{a.burn_in, a.sweeps};
    if (const auto* f = std::get_if<mpl::models::FvbmParams>(&params))
      data = mpl::sample_gibbs(*f, a.n, g, seed);
    else if (const auto* r = std::get_if<mpl::models::RbmParams>(&params))
      data = mpl::sample_gibbs(*r, a.n, g, seed);
    else
      throw mpl::PreconditionError("gibbs sampling needs an fvbm or rbm parameter file");
  } else {
    data = mpl::sample_exact(mpl::models::joint_table(params), a.n, seed);
  }
  const std::size_t q = mpl::models::visible_count(params);
  emit(a.out, [&](std::ostream& os) { mpl::write_samples_csv(os, q, data); });
  if (!a.out.empty() && a.out != "-") {
    std::ofstream meta(a.out + ".meta", std::ios::binary);
    mpl::write_metadata(meta, {
                                  {"generator", mpl::kGeneratorId},
                                  {"family", mpl::models::family_name(params)},
                                  {"params_fnv1a64", mpl::hex64(mpl::fnv1a64(text))},
                                  {"master_seed", std::to_string(a.seed)},
                                  {"replicate", std::to_string(a.replicate)},
                                  {"method", a.gibbs ? "gibbs" : "exact"},
                                  {"n", std::to_string(a.n)},
                              });
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  auto cfg = mpl::load_experiment_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  fs::path out = a.out ? fs::path(*a.out) : fs::path(cfg.out);
  if (!a.out && out.is_relative()) out = fs::current_path() / out;
  const auto res = mpl::run_experiment(cfg);
  mpl::write_experiment(out, res);
  std::size_t nonconverged = 0;
  for (const auto& r : res.records) nonconverged += r.fit_status != "converged";
  std::cout << "records " << (out / "records.csv").string() << '\n'
            << "cells " << res.records.size() << '\n'
            << "nonconverged " << nonconverged << '\n';
  return kExitOk;
}

struct SummarizeArgs {
  std::string records;
  std::string out;
  std::string plot;
};

int run_summarize(const SummarizeArgs& a) {
  std::istringstream is(slurp(a.records));
  const auto summary = mpl::summarize(mpl::read_records_csv(is));
  if (summary.status == mpl::SummaryStatus::empty) {
    std::cout << "status empty\n";
    return kExitEmpty;
  }
  emit(a.out, [&](std::ostream& os) { mpl::write_summary_csv(os, summary); });
  if (!a.plot.empty()) emit(a.plot, [&](std::ostream& os) { mpl::write_plot_data(os, summary); });
  std::cerr << "all_terms_monotone " << (summary.all_terms_monotone ? "yes" : "no") << '\n';
  return kExitOk;
}

struct EntropyArgs {
  std::string params;
  std::string scheme;
  std::string config;
  bool right_weighted = false;
};

int run_check_entropy(const EntropyArgs& a) {
  mpl::models::ModelParams params;
  mpl::WeightScheme scheme;
  if (!a.config.empty()) {
    const auto cfg = mpl::load_experiment_config(a.config);
    params = mpl::make_truth(cfg);
    scheme = mpl::experiment_scheme(cfg);
  } else {
    if (a.params.empty()) throw mpl::PreconditionError("need --params or --config");
    params = load_params(a.params);
    const auto q = mpl::models::visible_count(params);
    scheme = a.scheme.empty() ? mpl::scheme_ml(q) : load_scheme(a.scheme, q);
  }
  const auto f = mpl::models::joint_table(params);
  const auto rep = mpl::entropy_term_bound_check(f, scheme);
  const auto form = a.right_weighted ? mpl::EntropyForm::right_weighted : mpl::EntropyForm::displayed;
  std::cout.precision(17);
  std::cout << "pseudo_entropy " << mpl::pseudo_entropy(f, scheme, form) << '\n'
            << "bound " << rep.bound << '\n'
            << "summands " << rep.summands << '\n'
            << "max_term " << rep.max_term << '\n'
            << "min_term " << rep.min_term << '\n'
            << "terms_in_range " << (rep.all_in_range ? "yes" : "no") << '\n'
            << "finite " << (rep.finite ? "yes" : "no") << '\n';
  return rep.finite ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum pseudolikelihood estimation for discrete models"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model to a samples CSV");
  fit->add_option("--data", fa.data, "Samples CSV (header x1..xq)")->required();
  fit->add_option("--family", fa.family, "categorical | fvbm | rbm | tabular");
  fit->add_option("--r", fa.r, "RBM hidden units");
  fit->add_option("--scheme", fa.scheme, "native, a scheme name, or a scheme file");
  fit->add_option("--seed", fa.seed, "Seed for restart perturbations");
  fit->add_option("--restarts", fa.restarts, "Restart count (0: family default)");
  fit->add_option("--max-iter", fa.max_iter, "Iteration cap per restart");
  fit->add_option("--grad-tol", fa.grad_tol, "Gradient-norm tolerance on the mean objective");
  fit->add_option("--threads", fa.threads, "Concurrent restarts");
  fit->add_option("--out", fa.out, "Report file (default stdout)");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw samples from a parameter file");
  sample->add_option("--params", sa.params, "Model parameter file")->required();
  sample->add_option("--n", sa.n, "Number of draws");
  sample->add_option("--seed", sa.seed, "Master seed");
  sample->add_option("--replicate", sa.replicate, "Replicate index");
  sample->add_flag("--gibbs", sa.gibbs, "Systematic-scan Gibbs instead of exact sampling");
  sample->add_option("--burn-in", sa.burn_in, "Gibbs burn-in sweeps");
  sample->add_option("--sweeps", sa.sweeps, "Gibbs sweeps per retained draw");
  sample->add_option("--out", sa.out, "Samples CSV (default stdout); metadata goes to <out>.meta");

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "Run a consistency experiment");
  exp->add_option("--config", ea.config, "Experiment config file")->required();
  exp->add_option("--seed", ea.seed, "Override the master seed");
  exp->add_option("--out", ea.out, "Override the output directory");
  exp->add_option("--threads", ea.threads, "Override the worker count");

  SummarizeArgs ma;
  auto* summ = app.add_subcommand("summarize", "Median and IQR of a records CSV");
  summ->add_option("records", ma.records, "records.csv")->required();
  summ->add_option("--out", ma.out, "Summary CSV (default stdout)");
  summ->add_option("--plot", ma.plot, "Optional plot-data CSV");

  EntropyArgs ha;
  auto* ent = app.add_subcommand("check-entropy", "Pseudo-entropy and its term bound");
  ent->add_option("--params", ha.params, "Model parameter file");
  ent->add_option("--scheme", ha.scheme, "Scheme name or file (default ml)");
  ent->add_option("--config", ha.config, "Use an experiment config's truth and scheme");
  ent->add_flag("--right-weighted", ha.right_weighted, "Weight conditional rows by the right marginal");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fit) return run_fit(fa);
    if (*sample) return run_sample(sa);
    if (*exp) return run_experiment_cmd(ea);
    if (*summ) return run_summarize(ma);
    if (*ent) return run_check_entropy(ha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
