// chebydyn: command-line front end for the chebydyn library.
//
//   chebydyn map      --N 3 --a -pi/9 --verify-conjugation
//   chebydyn density  --N 3 --a -pi/9 --exact
//   chebydyn spectrum --N 3 --n-max 3
//   chebydyn corr     --N 2 --a 0 --tuple 1,0,0 --seed 1
//   chebydyn cml zeros --type 2A --a 0 --target snnc --seed 1 --out zeros.csv
//   chebydyn replay zeros.csv.meta.json --out again.csv
//
// Exit codes: 0 success, 2 domain or usage error, 3 guard violation, 1 other failure.
// With --out, every run also writes <out>.meta.json holding the resolved
// configuration; `replay` re-runs from it.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "chebydyn/chebydyn.hpp"
#include "chebydyn/serialize.hpp"

namespace {

using chebydyn::format_real;
using nlohmann::json;

constexpr int kExitDomain = 2;
constexpr int kExitGuard = 3;

// Shared state of one invocation.
struct Context {
  std::vector<std::string> command;
  CLI::App* app = nullptr;
  std::string out;
  int threads = 0;
  json config = json::object();
  json results = json::object();
};

bool is_flag(const CLI::Option* opt) { return opt->get_type_size_max() == 0; }

// Every option of the subcommand with its given or default value; --out is not part of the config.
json capture_config(const CLI::App& app) {
  json config = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    std::string name = opt->get_single_name();
    if (name == "help" || name == "out" || opt->get_lnames().empty()) continue;
    if (is_flag(opt)) {
      config[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      config[name] = opt->results().front();
    } else if (!opt->get_default_str().empty()) {
      config[name] = opt->get_default_str();
    } else {
      config[name] = nullptr;
    }
  }
  return config;
}

void add_common(CLI::App* sub, Context& ctx) {
  sub->add_option("--out", ctx.out, "Output file (stdout when omitted); also writes <out>.meta.json");
  sub->add_option("--threads", ctx.threads, "Worker threads (0: CHEBYDYN_THREADS, then hardware)");
}

CLI::Option* add_seed(CLI::App* sub, std::uint64_t& seed) {
  return sub->add_option("--seed", seed, "Master seed (auto-generated and recorded when omitted)");
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t seed, Context& ctx) {
  if (opt->count() == 0) {
    std::random_device device;
    seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  }
  ctx.config["seed"] = std::to_string(seed);
  return seed;
}

void emit(Context& ctx, const std::string& body, const std::string& format) {
  if (ctx.out.empty()) {
    std::cout << body;
    if (!body.empty() && body.back() != '\n') std::cout << '\n';
    return;
  }
  chebydyn::atomic_write(ctx.out, body);
  json meta = {{"format_version", chebydyn::kFormatVersion},
               {"command", ctx.command},
               {"config", ctx.config},
               {"output", ctx.out},
               {"format", format},
               {"results", ctx.results}};
  chebydyn::atomic_write(ctx.out + ".meta.json", meta.dump(2) + "\n");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw chebydyn::DomainError("cannot parse integer list: " + text);
    }
  }
  if (out.empty()) throw chebydyn::DomainError("empty integer list");
  return out;
}

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 1) throw chebydyn::DomainError("grid needs at least one point");
  if (points == 1) return {lo};
  if (!(hi > lo)) throw chebydyn::DomainError("grid needs max > min");
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(i + 1 == points ? hi : lo + (hi - lo) * i / (points - 1));
  return grid;
}

double parse_angle(int order, const std::string& token) { return chebydyn::MapSpec::parse(order, token).shift(); }

// CLI11 reads "--a -pi/9" as two options; glue such negative values to their key.
std::vector<std::string> glue_negative_values(int argc, char** argv) {
  static const std::regex negative(R"(^-(\d|\.|\d*\*?pi))");
  std::vector<std::string> args(argv, argv + argc);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& s = args[i];
    if (s.rfind("--", 0) == 0 && s.find('=') == std::string::npos && i + 1 < args.size() &&
        std::regex_search(args[i + 1], negative)) {
      out.push_back(s + "=" + args[i + 1]);
      ++i;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

int run(std::vector<std::string> args);

// ---- map ----------------------------------------------------------------

void setup_map(CLI::App& app, Context& ctx) {
  auto* sub = app.add_subcommand("map", "Orbit of T_{N,a}, or the conjugation residual");
  add_common(sub, ctx);
  auto order = std::make_shared<int>(2);
  auto a = std::make_shared<std::string>("0");
  auto x0 = std::make_shared<double>(0.0);
  auto steps = std::make_shared<int>(10);
  auto verify = std::make_shared<bool>(false);
  auto samples = std::make_shared<int>(10000);
  sub->add_option("--N", *order, "Map order")->required();
  sub->add_option("--a", *a, "Shift angle, e.g. -pi/9 or -0.35");
  sub->add_option("--x0", *x0, "Initial point in [-1, 1]");
  sub->add_option("--steps", *steps, "Number of iterations");
  sub->add_flag("--verify-conjugation", *verify, "Report max |h(T(x)) - g(h(x))|");
  sub->add_option("--samples", *samples, "Evenly spaced points for --verify-conjugation");
  sub->callback([=, &ctx] {
    ctx.config = capture_config(*sub);
    auto spec = chebydyn::MapSpec::parse(*order, *a);
    std::ostringstream body;
    if (*verify) {
      double err = chebydyn::verify_conjugation(spec, *samples);
      ctx.results["max_error"] = err;
      body << "N,a,samples,max_error\n" << spec.order() << ',' << spec.angle_token() << ',' << *samples << ','
           << format_real(err) << '\n';
    } else {
      auto path = chebydyn::orbit(spec, *x0, *steps);
      body << "n,x\n";
      for (std::size_t n = 0; n < path.size(); ++n) body << n << ',' << format_real(path[n]) << '\n';
    }
    emit(ctx, body.str(), "csv");
  });
}

// ---- density ------------------------------------------------------------

void setup_density(CLI::App& app, Context& ctx) {
  auto* sub = app.add_subcommand("density", "Exact invariant step density or histogram estimate");
  add_common(sub, ctx);
  struct Args {
    int order = 2;
    std::string a = "0";
    bool exact = false, histogram = false;
    std::string orientation = "mirrored";
    std::int64_t traj = 10000, steps = 11000, burn = 1000;
    int bins = 1000;
    std::uint64_t seed = 0;
  };
  auto p = std::make_shared<Args>();
  sub->add_option("--N", p->order, "Map order")->required();
  sub->add_option("--a", p->a, "Shift angle");
  sub->add_flag("--exact", p->exact, "Exact rational density from the Markov partition (default)");
  sub->add_flag("--histogram", p->histogram, "Long-run histogram of x_n");
  sub->add_option("--orientation", p->orientation, "canonical (h = arccos(-x)/pi) or mirrored (arccos(x)/pi)")
      ->check(CLI::IsMember({"canonical", "mirrored"}));
  sub->add_option("--traj", p->traj, "Histogram trajectories");
  sub->add_option("--steps", p->steps, "Steps per trajectory, including burn-in");
  sub->add_option("--burn", p->burn, "Burn-in steps per trajectory");
  sub->add_option("--bins", p->bins, "Histogram bins on [-1, 1]");
  auto* seed = add_seed(sub, p->seed);
  sub->callback([=, &ctx] {
    ctx.config = capture_config(*sub);
    if (p->exact && p->histogram) throw chebydyn::DomainError("choose one of --exact and --histogram");
    auto spec = chebydyn::MapSpec::parse(p->order, p->a);
    if (p->histogram) {
      chebydyn::HistogramProtocol protocol{p->traj, p->steps, p->burn, p->bins, resolve_seed(seed, p->seed, ctx)};
      auto h = chebydyn::histogram_estimate(spec, protocol, chebydyn::resolve_thread_count(ctx.threads));
      emit(ctx, chebydyn::histogram_csv(h), "csv");
      return;
    }
    auto orientation =
        p->orientation == "canonical" ? chebydyn::Orientation::kCanonical : chebydyn::Orientation::kMirrored;
    auto unit = chebydyn::exact_step_density(spec, orientation);
    auto sums = unit.renormalized(chebydyn::Normalization::kUnitCellSum);
    json body = chebydyn::to_json(unit);
    json cell_sums = json::array();
    for (const auto& v : sums.values()) cell_sums.push_back(chebydyn::to_string(v));
    body["N"] = spec.order();
    body["a"] = spec.angle_token();
    body["orientation"] = p->orientation;
    body["cells"] = unit.partition().cell_count();
    body["cell_sum_values"] = cell_sums;
    body["plateaus"] = chebydyn::to_json(sums.plateaus());
    ctx.results["cells"] = unit.partition().cell_count();
    emit(ctx, body.dump(2) + "\n", "json");
  });
}

// ---- spectrum -----------------------------------------------------------

void setup_spectrum(CLI::App& app, Context& ctx) {
  auto* sub = app.add_subcommand("spectrum", "Transfer-operator eigenpairs and semi-conjugacy checks");
  add_common(sub, ctx);
  struct Args {
    int order = 0, n_max = 3, q = 1, m = 2, points = 500;
    std::string semi_conj;
    bool shifted = false;
    std::string format = "csv";
  };
  auto p = std::make_shared<Args>();
  sub->add_option("--N", p->order, "Map order (a = 0)");
  sub->add_option("--n-max", p->n_max, "Largest eigen index n");
  sub->add_option("--semi-conj", p->semi_conj, "Check a semi-conjugacy identity: even (--q, --m) or odd (--N, --m)")
      ->check(CLI::IsMember({"even", "odd"}));
  sub->add_flag("--shifted", p->shifted, "Shifted even family on T_{2q,-pi/m}");
  sub->add_option("--q", p->q, "Half order for the shifted even family");
  sub->add_option("--m", p->m, "Shift denominator, a = -pi/m");
  sub->add_option("--points", p->points, "Interior grid points for residuals");
  sub->add_option("--format", p->format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->callback([=, &ctx] {
    ctx.config = capture_config(*sub);
    if (!p->semi_conj.empty()) {
      auto variant = p->semi_conj == "even" ? chebydyn::SemiConjugacy::kEven : chebydyn::SemiConjugacy::kOdd;
      int first = variant == chebydyn::SemiConjugacy::kEven ? p->q : p->order;
      double r = chebydyn::semi_conjugacy_check(variant, first, p->m, 10000);
      ctx.results["residual"] = r;
      std::ostringstream body;
      body << "variant,first,m,residual\n" << p->semi_conj << ',' << first << ',' << p->m << ',' << format_real(r) << '\n';
      emit(ctx, body.str(), "csv");
      return;
    }
    if (p->n_max < 0) throw chebydyn::DomainError("n-max must be >= 0");
    std::vector<std::pair<chebydyn::EigenPair, chebydyn::MapSpec>> pairs;
    if (p->shifted) {
      auto spec = chebydyn::MapSpec::exact(2 * p->q, 1, p->m);
      for (int n = 0; n <= p->n_max; ++n) pairs.emplace_back(chebydyn::eigenfunction_shifted_even(p->q, p->m, n), spec);
    } else {
      if (p->order < 2) throw chebydyn::DomainError("N must be ≥ 2");
      chebydyn::MapSpec spec(p->order, 0.0);
      for (int n = 0; n <= p->n_max; ++n) {
        pairs.emplace_back(chebydyn::eigenfunction_ordinary(p->order, n), spec);
        if (p->order % 2 && n >= 1)
          pairs.emplace_back(chebydyn::eigenfunction_ordinary(p->order, n, chebydyn::EigenBranch::kEuler), spec);
      }
    }
    json rows = json::array();
    std::ostringstream body;
    body << "n,branch,lambda,degree,residual\n";
    for (const auto& [pair, spec] : pairs) {
      double r = chebydyn::eigen_residual(spec, pair, p->points);
      json row = chebydyn::to_json(pair);
      row["residual"] = r;
      rows.push_back(row);
      body << pair.n() << ',' << chebydyn::to_string(pair.branch()) << ',' << chebydyn::to_string(pair.lambda()) << ','
           << pair.descriptor().degree << ',' << format_real(r) << '\n';
    }
    if (p->format == "json") emit(ctx, rows.dump(2) + "\n", "json"); else emit(ctx, body.str(), "csv");
  });
}

// ---- corr ---------------------------------------------------------------

void setup_corr(CLI::App& app, Context& ctx) {
  auto* sub = app.add_subcommand("corr", "Higher-order correlations, tuple counts and two-point laws");
  add_common(sub, ctx);
  struct Args {
    int order = 2;
    std::string a = "0", tuple;
    std::int64_t samples = 1'000'000;
    std::uint64_t seed = 0;
    bool count = false, twopoint = false;
    std::string support = "chebyshev";
    int max_k = 8, support_size = 3, r = 2, n_max = 4, k = 0;
    std::uint64_t support_seed = 1;
  };
  auto p = std::make_shared<Args>();
  sub->add_option("--N", p->order, "Map order")->required();
  sub->add_option("--a", p->a, "Shift angle");
  sub->add_option("--tuple", p->tuple, "Times n_1,...,n_r");
  sub->add_option("--samples", p->samples, "Monte Carlo samples (0 skips Monte Carlo)");
  auto* seed = add_seed(sub, p->seed);
  sub->add_flag("--count", p->count, "Count tuples in {0..n-max}^r with a surviving delta term");
  sub->add_option("--support", p->support, "chebyshev, sawtooth or random")
      ->check(CLI::IsMember({"chebyshev", "sawtooth", "random"}));
  sub->add_option("--max-k", p->max_k, "Largest Fourier index for sawtooth/random supports");
  sub->add_option("--support-size", p->support_size, "Positive indices in a random support");
  sub->add_option("--support-seed", p->support_seed, "Seed for a random support");
  sub->add_option("--r", p->r, "Tuple length for --count");
  sub->add_option("--n-max", p->n_max, "Largest time for --count");
  sub->add_flag("--twopoint-nary", p->twopoint, "Two-point law of the N-ary shift at lag --k");
  sub->add_option("--k", p->k, "Lag for --twopoint-nary");
  sub->callback([=, &ctx] {
    ctx.config = capture_config(*sub);
    std::ostringstream body;
    if (p->twopoint) {
      auto published = chebydyn::twopoint_nary_shift(p->order, p->k);
      auto corrected = chebydyn::nary_shift_autocovariance(p->order, p->k);
      body << "N,k,twopoint,twopoint_value,autocovariance,autocovariance_value\n"
           << p->order << ',' << p->k << ',' << chebydyn::to_string(published) << ','
           << format_real(chebydyn::to_double(published)) << ',' << chebydyn::to_string(corrected) << ','
           << format_real(chebydyn::to_double(corrected)) << '\n';
      ctx.results["twopoint"] = chebydyn::to_string(published);
      emit(ctx, body.str(), "csv");
      return;
    }
    if (p->count) {
      chebydyn::FourierSupport support = p->support == "chebyshev" ? chebydyn::FourierSupport::chebyshev()
                                         : p->support == "sawtooth"
                                             ? chebydyn::FourierSupport::sawtooth(p->max_k)
                                             : chebydyn::FourierSupport::random(p->support_seed, p->max_k, p->support_size);
      auto n = chebydyn::count_nonzero_tuples(support, p->order, p->r, p->n_max);
      ctx.results["count"] = n;
      body << "support,N,r,n_max,count\n" << p->support << ',' << p->order << ',' << p->r << ',' << p->n_max << ',' << n << '\n';
      emit(ctx, body.str(), "csv");
      return;
    }
    if (p->tuple.empty()) throw chebydyn::DomainError("corr needs --tuple, --count or --twopoint-nary");
    auto spec = chebydyn::MapSpec::parse(p->order, p->a);
    auto times = parse_int_list(p->tuple);
    body << "tuple,analytic_value,mc_estimate,mc_stderr,n_solutions\n" << join(times, ' ') << ',';
    if (chebydyn::star_condition(spec)) {
      auto s = chebydyn::spin_sum_correlation(spec, times);
      body << format_real(s.value) << ',';
      ctx.results["analytic_value"] = s.value;
      ctx.results["n_solutions"] = s.solutions;
      if (p->samples > 0) {
        auto mc = chebydyn::correlation_monte_carlo(spec, times, p->samples, resolve_seed(seed, p->seed, ctx),
                                                    {true, chebydyn::resolve_thread_count(ctx.threads)});
        body << format_real(mc.estimate) << ',' << format_real(mc.std_error) << ',';
      } else {
        body << "na,na,";
      }
      body << s.solutions << '\n';
    } else {
      body << "na,";
      if (p->samples > 0) {
        auto mc = chebydyn::correlation_monte_carlo(spec, times, p->samples, resolve_seed(seed, p->seed, ctx),
                                                    {true, chebydyn::resolve_thread_count(ctx.threads)});
        body << format_real(mc.estimate) << ',' << format_real(mc.std_error) << ",na\n";
      } else {
        body << "na,na,na\n";
      }
    }
    emit(ctx, body.str(), "csv");
  });
}

// ---- cml ----------------------------------------------------------------

struct LatticeArgs {
  std::string type = "2A";
  std::string a = "0";
  double c = 0.0;
  int sites = 5000, steps = 1000, burn = 100;
  std::uint64_t seed = 0;
};

void add_lattice_options(CLI::App* sub, LatticeArgs& p, bool with_c, bool with_a) {
  sub->add_option("--type", p.type, "Lattice type: order plus coupling, e.g. 2A, 3B-");
  if (with_a) sub->add_option("--a", p.a, "Shift angle");
  if (with_c) sub->add_option("--c", p.c, "Coupling strength in [0, 1]");
  sub->add_option("--J", p.sites, "Sites on the ring");
  sub->add_option("--K", p.steps, "Measured steps");
  sub->add_option("--burn", p.burn, "Discarded steps");
}

chebydyn::LatticeRun lattice_run(const LatticeArgs& p, std::uint64_t seed) {
  auto type = chebydyn::parse_lattice_type(p.type);
  chebydyn::LatticeRun run;
  run.spec = chebydyn::MapSpec::parse(type.order, p.a);
  run.coupling = type.coupling;
  run.c = p.c;
  run.sites = p.sites;
  run.steps = p.steps;
  run.burn_in = p.burn;
  run.seed = seed;
  return run;
}

void setup_cml(CLI::App& app, Context& ctx) {
  auto* cml = app.add_subcommand("cml", "Coupled map lattices");
  cml->require_subcommand(1);

  {
    auto* sub = cml->add_subcommand("run", "SNNC and TNNC of one lattice run");
    add_common(sub, ctx);
    auto p = std::make_shared<LatticeArgs>();
    add_lattice_options(sub, *p, true, true);
    auto* seed = add_seed(sub, p->seed);
    sub->callback([=, &ctx] {
      ctx.command = {"cml", "run"};
      ctx.config = capture_config(*sub);
      auto run = lattice_run(*p, resolve_seed(seed, p->seed, ctx));
      auto v = chebydyn::measure_snnc_tnnc(run);
      std::ostringstream body;
      body << "c,a,snnc,tnnc,snnc_stderr,tnnc_stderr\n" << format_real(run.c) << ',' << format_real(run.spec.shift())
           << ',' << format_real(v.snnc) << ',' << format_real(v.tnnc) << ',' << format_real(v.snnc_stderr) << ','
           << format_real(v.tnnc_stderr) << '\n';
      emit(ctx, body.str(), "csv");
    });
  }

  {
    auto* sub = cml->add_subcommand("scan", "SNNC/TNNC surface over a (c, a) grid");
    add_common(sub, ctx);
    struct Args {
      LatticeArgs lattice;
      double c_min = 0.0, c_max = 1.0;
      int c_points = 51, a_points = 33, restarts = 1;
      std::string a_min = "-pi/2", a_max = "0";
    };
    auto p = std::make_shared<Args>();
    add_lattice_options(sub, p->lattice, false, false);
    sub->add_option("--c-min", p->c_min, "Smallest coupling");
    sub->add_option("--c-max", p->c_max, "Largest coupling");
    sub->add_option("--c-points", p->c_points, "Coupling grid points");
    sub->add_option("--a-min", p->a_min, "Smallest shift angle");
    sub->add_option("--a-max", p->a_max, "Largest shift angle");
    sub->add_option("--a-points", p->a_points, "Shift grid points");
    sub->add_option("--restarts", p->restarts, "Independent runs per cell (>= 2 sets the ergodicity flag)");
    auto* seed = add_seed(sub, p->lattice.seed);
    sub->callback([=, &ctx] {
      ctx.command = {"cml", "scan"};
      ctx.config = capture_config(*sub);
      auto type = chebydyn::parse_lattice_type(p->lattice.type);
      auto a_grid = linear_grid(parse_angle(type.order, p->a_min), parse_angle(type.order, p->a_max), p->a_points);
      auto c_grid = linear_grid(p->c_min, p->c_max, p->c_points);
      chebydyn::ScanProtocol protocol{p->lattice.sites, p->lattice.steps, p->lattice.burn, p->restarts};
      auto s = chebydyn::scan_surface(type, a_grid, c_grid, protocol, resolve_seed(seed, p->lattice.seed, ctx),
                                      chebydyn::resolve_thread_count(ctx.threads));
      emit(ctx, chebydyn::surface_csv(s), "csv");
    });
  }

  {
    auto* sub = cml->add_subcommand("zeros", "Zero crossings of SNNC or TNNC in c");
    add_common(sub, ctx);
    struct Args {
      LatticeArgs lattice;
      std::string target = "snnc";
      double c_min = 0.0, c_max = 1.0;
      int c_points = 41;
    };
    auto p = std::make_shared<Args>();
    add_lattice_options(sub, p->lattice, false, true);
    sub->add_option("--target", p->target, "snnc or tnnc")->check(CLI::IsMember({"snnc", "tnnc"}));
    sub->add_option("--c-min", p->c_min, "Smallest coupling");
    sub->add_option("--c-max", p->c_max, "Largest coupling");
    sub->add_option("--c-points", p->c_points, "Coarse grid points before refinement");
    auto* seed = add_seed(sub, p->lattice.seed);
    sub->callback([=, &ctx] {
      ctx.command = {"cml", "zeros"};
      ctx.config = capture_config(*sub);
      auto type = chebydyn::parse_lattice_type(p->lattice.type);
      double a = parse_angle(type.order, p->lattice.a);
      auto target = p->target == "snnc" ? chebydyn::ZeroTarget::kSnnc : chebydyn::ZeroTarget::kTnnc;
      chebydyn::ScanProtocol protocol{p->lattice.sites, p->lattice.steps, p->lattice.burn, 1};
      auto zeros = chebydyn::zero_crossings(type, a, linear_grid(p->c_min, p->c_max, p->c_points), target, protocol,
                                            resolve_seed(seed, p->lattice.seed, ctx),
                                            chebydyn::resolve_thread_count(ctx.threads));
      json found = json::array();
      for (const auto& z : zeros) found.push_back(z.c_star);
      ctx.results["c_star"] = found;
      emit(ctx, chebydyn::zeros_csv(zeros), "csv");
    });
  }

  {
    auto* sub = cml->add_subcommand("pattern", "Space-time field dump");
    add_common(sub, ctx);
    struct Args {
      LatticeArgs lattice;
      std::string format = "binary";
    };
    auto p = std::make_shared<Args>();
    p->lattice.sites = 150;
    p->lattice.steps = 150;
    p->lattice.burn = 0;
    add_lattice_options(sub, p->lattice, true, true);
    sub->add_option("--format", p->format, "binary or csv")->check(CLI::IsMember({"binary", "csv"}));
    auto* seed = add_seed(sub, p->lattice.seed);
    sub->callback([=, &ctx] {
      ctx.command = {"cml", "pattern"};
      ctx.config = capture_config(*sub);
      if (p->format == "binary" && ctx.out.empty()) throw chebydyn::DomainError("binary pattern output needs --out");
      auto field = chebydyn::pattern_dump(lattice_run(p->lattice, resolve_seed(seed, p->lattice.seed, ctx)));
      emit(ctx, p->format == "binary" ? chebydyn::pattern_binary(field) : chebydyn::pattern_csv(field), p->format);
    });
  }

  {
    auto* sub = cml->add_subcommand("two-site", "Joint histogram of two symmetrically coupled maps");
    add_common(sub, ctx);
    struct Args {
      int order = 2;
      std::string a = "0";
      double c = 0.201;
      chebydyn::TwoSiteProtocol protocol;
    };
    auto p = std::make_shared<Args>();
    sub->add_option("--N", p->order, "Map order");
    sub->add_option("--a", p->a, "Shift angle");
    sub->add_option("--c", p->c, "Coupling strength in [0, 1]");
    sub->add_option("--traj", p->protocol.trajectories, "Trajectories");
    sub->add_option("--steps", p->protocol.steps, "Steps per trajectory, including burn-in");
    sub->add_option("--burn", p->protocol.burn_in, "Burn-in steps");
    sub->add_option("--bins", p->protocol.bins, "Bins per axis");
    sub->add_option("--diagonal-width", p->protocol.diagonal_width, "Band |x1 - x2| < w counted as synchronized");
    auto* seed = add_seed(sub, p->protocol.seed);
    sub->callback([=, &ctx] {
      ctx.command = {"cml", "two-site"};
      ctx.config = capture_config(*sub);
      auto protocol = p->protocol;
      protocol.seed = resolve_seed(seed, p->protocol.seed, ctx);
      auto h = chebydyn::two_site_run(p->c, chebydyn::MapSpec::parse(p->order, p->a), protocol,
                                      chebydyn::resolve_thread_count(ctx.threads));
      ctx.results["diagonal_fraction"] = h.diagonal_fraction();
      std::cerr << "diagonal fraction (|x1 - x2| < " << h.diagonal_width << "): " << h.diagonal_fraction() << "\n";
      emit(ctx, chebydyn::two_site_csv(h), "csv");
    });
  }
}

// ---- replay -------------------------------------------------------------

void setup_replay(CLI::App& app, std::vector<std::string>& forwarded) {
  auto* sub = app.add_subcommand("replay", "Re-run a computation from its .meta.json sidecar");
  auto meta_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  sub->add_option("meta", *meta_path, "Sidecar written by an earlier run")->required();
  sub->add_option("--out", *out, "Output file (defaults to the recorded one)");
  sub->callback([=, &forwarded] {
    json meta = json::parse(chebydyn::read_file(*meta_path));
    if (meta.value("format_version", "") != chebydyn::kFormatVersion)
      throw chebydyn::DomainError("unsupported metadata format: " + meta.value("format_version", std::string("?")));
    forwarded = {"chebydyn"};
    for (const auto& c : meta.at("command")) forwarded.push_back(c.get<std::string>());
    for (const auto& [key, value] : meta.at("config").items()) {
      if (value.is_null()) continue;
      if (value.is_boolean()) {
        if (value.get<bool>()) forwarded.push_back("--" + key);
      } else {
        forwarded.push_back("--" + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()));
      }
    }
    forwarded.push_back("--out=" + (out->empty() ? meta.at("output").get<std::string>() : *out));
  });
}

int run(std::vector<std::string> args) {
  CLI::App app{"Shifted Chebyshev maps: conjugacies, invariant densities, spectra, correlations, lattices"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Context ctx;
  std::vector<std::string> forwarded;
  setup_map(app, ctx);
  setup_density(app, ctx);
  setup_spectrum(app, ctx);
  setup_corr(app, ctx);
  setup_cml(app, ctx);
  setup_replay(app, forwarded);
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    if (sub->get_name() != "cml") sub->preparse_callback([&ctx, sub](std::size_t) { ctx.command = {sub->get_name()}; });

  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitDomain;
  }
  if (!forwarded.empty()) return run(forwarded);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(glue_negative_values(argc, argv));
  } catch (const chebydyn::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const chebydyn::GuardError& e) {
    std::cerr << "guard: " << e.what() << "\n";
    return kExitGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
