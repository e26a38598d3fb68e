/// bsmps: command-line driver for the block-sparse MPS library.
///
///   bsmps ranks       --K 16 [--seed S] [--banded d] [--local d]
///   bsmps rounding    [--K 20] [--N 6] [--seed S]
///   bsmps apply       --K 32 --op {one,two} [--eps e1 e2 ...] [--seed S]
///   bsmps groundstate (--file F | --preset hopping-chain --K k) --N n
///                     --solver {gd,rgd,als,dmrg2} [--check]
///   bsmps convert     --in A --out B --to {block,full}
///
/// Every command writes CSV (or JSON with --json) to --out or stdout.
/// Exit codes: 0 success, 2 validation failure, 3 parse error.

#include "report.hpp"

#include "bsmps/block_mps.hpp"
#include "bsmps/coeffs.hpp"
#include "bsmps/dense.hpp"
#include "bsmps/experiments.hpp"
#include "bsmps/io.hpp"
#include "bsmps/mpo.hpp"
#include "bsmps/solvers.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <optional>

namespace {

using namespace bsmps;
using cli::Report;

constexpr int kExitValidation = 2;
constexpr int kExitParse = 3;

struct OutputOptions {
  std::string out = "-";
  bool json = false;
};

void add_output(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out, "Output file ('-' for stdout)");
  cmd->add_flag("--json", o.json, "Write JSON instead of CSV");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ------------------------------------------------------------------ ranks

struct RanksArgs {
  int K = 0;
  std::uint64_t seed = 1;
  int banded = -1;
  int local = -1;
  OutputOptions o;
};

void run_ranks(const RanksArgs& a) {
  if (a.K < 2 || a.K % 2 != 0 || a.K > 40) throw ValidationError("ranks: K must be even with 2 <= K <= 40");
  Stopwatch sw;
  const RankTable t = rank_table(a.K, a.seed, {a.banded, a.local});
  Report r("ranks");
  r.param("K", a.K);
  r.param("banded", a.banded);
  r.param("local", a.local);
  r.set_seed(a.seed);
  r.set_columns({"operator", "k", "r_constructed", "r_compressed", "r_compressed_sym"});
  for (size_t k = 0; k < t.one_constructed.size(); ++k)
    r.row({"one", static_cast<int>(k + 1), t.one_constructed[k], t.one_compressed[k], t.one_compressed_sym[k]});
  for (size_t k = 0; k < t.two_constructed.size(); ++k)
    r.row({"two", static_cast<int>(k + 1), t.two_constructed[k], t.two_compressed[k], t.two_compressed_sym[k]});
  r.set_wall_time(sw.seconds());
  r.write(a.o.out, a.o.json);
}

// ---------------------------------------------------------------- rounding

struct RoundingArgs {
  int K = 20;
  int N = 6;
  std::uint64_t seed = 1;
  int exponents = 50;
  int rank = 6;
  OutputOptions o;
};

void run_rounding(const RoundingArgs& a) {
  Stopwatch sw;
  const auto rows = rounding_experiment(a.K, a.N, a.seed, a.exponents, a.rank);
  Report r("rounding");
  r.param("K", a.K);
  r.param("N", a.N);
  r.param("rank", a.rank);
  r.set_seed(a.seed);
  r.set_columns({"eps", "sigma_gap", "deviation_full", "deviation_block"});
  for (const RoundingRow& x : rows) r.row({x.eps, x.gap, x.dev_full, x.dev_block});
  r.set_wall_time(sw.seconds());
  r.write(a.o.out, a.o.json);
}

// ------------------------------------------------------------------- apply

struct ApplyArgs {
  int K = 32;
  std::string op = "one";
  std::vector<double> eps{0.0, 1e-16, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6};
  std::uint64_t seed = 1;
  OutputOptions o;
};

void run_apply(const ApplyArgs& a) {
  if (a.K < 2 || a.K % 2 != 0) throw ValidationError("apply: K must be even and >= 2");
  Stopwatch sw;
  const auto rows = apply_experiment(a.K, a.op == "two", a.eps, a.seed);
  Report r("apply");
  r.param("K", a.K);
  r.param("operator", a.op);
  r.set_seed(a.seed);
  r.set_columns({"eps", "k", "rank"});
  for (const ApplyRow& x : rows)
    for (size_t k = 0; k < x.ranks.size(); ++k) r.row({x.eps, static_cast<int>(k + 1), x.ranks[k]});
  r.set_wall_time(sw.seconds());
  r.write(a.o.out, a.o.json);
}

// ------------------------------------------------------------- groundstate

struct GroundArgs {
  std::string file;
  std::string preset;
  int K = 8;
  int N = -1;
  std::string solver = "dmrg2";
  bool check = false;
  int rank = 0;  // 0: solver default
  SolverConfig cfg;
  std::uint64_t seed = 1;
  OutputOptions o;
};

int run_groundstate(const GroundArgs& a) {
  Stopwatch sw;
  CoefficientFile c;
  if (!a.file.empty()) {
    c = read_coefficients(a.file);
  } else if (a.preset == "hopping-chain") {
    c.K = a.K;
    c.t = hopping_chain(a.K);
    c.v = TwoBodyCoeffs(a.K);
    c.v.finalize();
  } else {
    throw ParseError("groundstate: give --file or --preset hopping-chain");
  }
  const int K = c.K;
  if (K % 2 != 0) throw ValidationError("groundstate: the operator constructions need an even orbital count");
  if (a.N < 0 || a.N > K) throw ValidationError("groundstate: N must satisfy 0 <= N <= K");
  if (c.has_two_body && !c.v.is_hermitian(1e-10))
    throw ValidationError("groundstate: two-body coefficients do not define a symmetric operator");
  const SymMPO h = c.has_two_body ? sym_hamiltonian(c.t, c.v) : sym_compress(sym_from_onebody(c.t));

  // Default initial sizes: the two-site method grows its sectors from size 1;
  // the fixed-size methods start from the largest admissible sizes.
  Rng rng(a.seed);
  SizeRule rule = SizeRule::max_admissible();
  if (a.rank > 0)
    rule = SizeRule::constant(a.rank);
  else if (a.solver == "dmrg2" || a.solver == "gd")
    rule = SizeRule::constant(1);
  const BlockMPS x0 = random_block_mps(K, a.N, rule, rng);
  SolverConfig cfg = a.cfg;
  cfg.seed = a.seed;

  SolverResult res;
  if (a.solver == "gd")
    res = gradient_descent(h, x0, cfg);
  else if (a.solver == "rgd")
    res = riemannian_gd(h, x0, cfg);
  else if (a.solver == "als")
    res = als_one_site(h, x0, cfg);
  else
    res = dmrg_two_site(h, x0, cfg);

  // Module invariants before anything is written.
  res.x.validate();
  if (std::abs(particle_expectation(res.x) - a.N) > 1e-10)
    throw ValidationError("groundstate: particle number not conserved");

  Report r("groundstate");
  r.param("K", K);
  r.param("N", a.N);
  r.param("solver", a.solver);
  r.param("source", a.file.empty() ? a.preset : a.file);
  r.param("energy", res.energy);
  r.param("residual", res.residual);
  r.param("converged", res.converged);
  r.set_seed(a.seed);
  r.set_columns({"iteration", "energy", "residual", "max_rank", "particles"});
  for (const TraceRow& t : res.trace.rows) r.row({t.iteration, t.energy, t.residual, t.max_rank, t.particles});

  int status = 0;
  std::cerr << "energy " << cli::format_double(res.energy) << "  residual " << cli::format_double(res.residual)
            << (res.converged ? "  (converged)" : "  (not converged)") << '\n';
  if (a.check) {
    if (K > 10) throw ValidationError("groundstate: --check needs K <= 10");
    const DenseOperator d = c.has_two_body ? brute_force_hamiltonian(c.t, c.v) : brute_force_onebody(c.t);
    const double exact = sector_diagonalize(d, K, a.N).values(0);
    const double diff = std::abs(res.energy - exact);
    r.param("dense_energy", exact);
    r.param("energy_error", diff);
    std::cerr << "dense  " << cli::format_double(exact) << "  |dE| " << cli::format_double(diff) << '\n';
    if (diff > 1e-6) status = kExitValidation;
  }
  r.set_wall_time(sw.seconds());
  r.write(a.o.out, a.o.json);
  return status;
}

// ----------------------------------------------------------------- convert

struct ConvertArgs {
  std::string in, out, to;
  double tol = 1e-10;
  bool json = false;
};

void run_convert(const ConvertArgs& a) {
  const auto src = read_container(a.in);
  std::variant<FullMPS, BlockMPS> dst;
  if (a.to == "block") {
    const FullMPS* f = std::get_if<FullMPS>(&src);
    dst = f ? from_full(*f, a.tol) : std::get<BlockMPS>(src);
  } else {
    const BlockMPS* b = std::get_if<BlockMPS>(&src);
    dst = b ? to_full(*b) : std::get<FullMPS>(src);
  }
  write_container(a.out, dst);
  const std::vector<int> ranks = std::visit([](const auto& x) { return x.ranks(); }, dst);
  Report r("convert");
  r.param("in", a.in);
  r.param("out", a.out);
  r.param("to", a.to);
  r.set_columns({"bond", "rank"});
  for (size_t b = 1; b + 1 < ranks.size(); ++b) r.row({static_cast<int>(b), ranks[b]});
  r.write("-", a.json);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-sparse matrix product states with conserved particle number"};
  app.require_subcommand(1);

  RanksArgs ra;
  auto* ranks = app.add_subcommand("ranks", "Operator rank profiles (constructed and compressed)");
  ranks->add_option("--K", ra.K, "Number of orbitals (even)")->required();
  ranks->add_option("--seed", ra.seed, "Seed of the coefficient draw");
  ranks->add_option("--banded", ra.banded, "Bandwidth of the one-particle coefficients");
  ranks->add_option("--local", ra.local, "Index spread of the two-particle coefficients");
  add_output(ranks, ra.o);

  RoundingArgs ro;
  auto* rounding = app.add_subcommand("rounding", "Particle-number drift of full vs. block rounding");
  rounding->add_option("--K", ro.K, "Number of orbitals");
  rounding->add_option("--N", ro.N, "Particle number");
  rounding->add_option("--seed", ro.seed, "Seed of the random cores");
  rounding->add_option("--exponents", ro.exponents, "Largest e in eps = 2^-e");
  rounding->add_option("--rank", ro.rank, "Target rank");
  add_output(rounding, ro.o);

  ApplyArgs ap;
  auto* apply = app.add_subcommand("apply", "Output ranks after operator application and truncation");
  apply->add_option("--K", ap.K, "Number of orbitals (even)");
  apply->add_option("--op", ap.op, "Operator")->check(CLI::IsMember({"one", "two"}));
  apply->add_option("--eps", ap.eps, "Relative truncation tolerances (0: untruncated)");
  apply->add_option("--seed", ap.seed, "Seed of coefficients and input state");
  add_output(apply, ap.o);

  GroundArgs ga;
  auto* ground = app.add_subcommand("groundstate", "Ground state in a particle-number sector");
  auto* file_opt = ground->add_option("--file", ga.file, "Coefficient file");
  auto* preset_opt =
      ground->add_option("--preset", ga.preset, "Built-in model")->check(CLI::IsMember({"hopping-chain"}));
  file_opt->excludes(preset_opt);
  ground->add_option("--K", ga.K, "Orbitals of the preset model");
  ground->add_option("--N", ga.N, "Particle number")->required();
  ground->add_option("--solver", ga.solver, "Solver")->check(CLI::IsMember({"gd", "rgd", "als", "dmrg2"}));
  ground->add_flag("--check", ga.check, "Compare with dense sector diagonalization");
  ground->add_option("--rank", ga.rank, "Initial sector size cap (default: solver-specific)");
  ground->add_option("--max-iter", ga.cfg.max_iter, "Iterations or sweeps");
  ground->add_option("--tol", ga.cfg.tol, "Relative residual tolerance");
  ground->add_option("--eps", ga.cfg.eps, "Truncation tolerance");
  ground->add_option("--seed", ga.seed, "Seed of the initial state");
  add_output(ground, ga.o);

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert", "Convert between full and block containers");
  convert->add_option("--in", ca.in, "Input container")->required();
  convert->add_option("--out", ca.out, "Output container")->required();
  convert->add_option("--to", ca.to, "Target format")->required()->check(CLI::IsMember({"block", "full"}));
  convert->add_option("--tol", ca.tol, "Relative sector tolerance");
  convert->add_flag("--json", ca.json, "Report ranks as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*ranks) run_ranks(ra);
    if (*rounding) run_rounding(ro);
    if (*apply) run_apply(ap);
    if (*ground) return run_groundstate(ga);
    if (*convert) run_convert(ca);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
