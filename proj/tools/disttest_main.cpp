// disttest: membership testers for structured discrete distributions.
//
//   disttest test   --class pbd --n 100 --k 2 --eps 0.25 --seed 7 \
//                   [--spec spec.json | --samples draws.txt] --out report.json
//   disttest power  --class pbd --n-grid 64,256,1024 --eps-grid 0.25 \
//                   --trials 5 --seed 7 --out power.csv
//   disttest sample --spec spec.json --count 10000 --seed 7 --out draws.txt
//
// Exit codes for `test`: 0 accept, 1 reject, 2 usage/config error.

#include <chrono>
#include <iomanip>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "disttest/dist_spec.hpp"
#include "disttest/framework.hpp"
#include "disttest/ledger.hpp"
#include "disttest/logconcave.hpp"
#include "disttest/pmd.hpp"
#include "disttest/report.hpp"
#include "disttest/siirv.hpp"

namespace {

using namespace disttest;

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Serves samples from a flat file, in an order shuffled by the seed.
class FileReplaySampler final : public Sampler {
 public:
  FileReplaySampler(std::vector<std::int64_t> samples, std::uint64_t seed)
      : samples_(std::move(samples)) {
    if (samples_.empty()) throw ConfigError("sample file holds no draws");
    Rng rng(seed);
    for (std::size_t i = samples_.size(); i-- > 1;) {
      std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(samples_[i], samples_[j]);
    }
  }

  std::int64_t draw(Rng&) override {
    if (pos_ >= samples_.size())
      throw ConfigError("sample file exhausted before the tester finished");
    return samples_[pos_++];
  }

 private:
  std::vector<std::int64_t> samples_;
  std::size_t pos_ = 0;
};

std::vector<std::int64_t> read_sample_file_1d(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file: " + path);
  std::vector<std::int64_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(std::stoll(line));
  }
  return out;
}

DistSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("spec file is not valid JSON: ") + e.what());
  }
  try {
    return dist_spec_from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad spec file: ") + e.what());
  }
}

DistSpec default_instance(const std::string& klass, long n, int k) {
  if (klass == "pbd") return DistSpec::from_siirv(SiirvSpec::iid(n, 2, {0.5, 0.5}));
  if (klass == "siirv")
    return DistSpec::from_siirv(
        SiirvSpec::iid(n, k, std::vector<double>(k, 1.0 / static_cast<double>(k))));
  if (klass == "pmd")
    return DistSpec::from_pmd(
        PmdSpec::iid(n, k, std::vector<double>(k, 1.0 / static_cast<double>(k))));
  if (klass == "logconcave")
    return DistSpec::from_pmf(Pmf::binomial(n, 0.5), true);
  throw ConfigError("no default instance for class " + klass);
}

struct TestInvocation {
  std::string klass;
  long n = 100;
  int k = 2;
  double eps = 0.25;
  std::uint64_t seed = 1;
  std::string spec_path;
  std::string samples_path;
};

TestReport run_one(const TestInvocation& inv, const ConstantLedger& ledger) {
  if (inv.klass == "pbd" && inv.k != 2)
    throw ConfigError("class pbd requires k = 2 (field --k)");
  if ((inv.klass == "siirv" || inv.klass == "pmd") && inv.k < 2)
    throw ConfigError("field --k must be >= 2");
  if (inv.n < 1) throw ConfigError("field --n must be >= 1");
  Rng rng(inv.seed);
  if (inv.klass == "pmd") {
    if (!inv.samples_path.empty())
      throw ConfigError("sample-file input for PMD runs is not supported; use --spec");
    DistSpec spec = inv.spec_path.empty() ? default_instance("pmd", inv.n, inv.k)
                                          : load_spec(inv.spec_path);
    if (spec.kind != DistSpec::Kind::Pmd) throw ConfigError("class pmd needs a pmd spec");
    auto sampler = make_sampler_kd(spec);
    TestReport rep = test_pmd(*sampler, inv.n, inv.k, inv.eps, rng, ledger);
    rep.seed = inv.seed;
    return rep;
  }

  std::unique_ptr<Sampler> sampler;
  if (!inv.samples_path.empty()) {
    sampler = std::make_unique<FileReplaySampler>(read_sample_file_1d(inv.samples_path), inv.seed);
  } else {
    DistSpec spec = inv.spec_path.empty() ? default_instance(inv.klass, inv.n, inv.k)
                                          : load_spec(inv.spec_path);
    if (spec.kind == DistSpec::Kind::Pmd) throw ConfigError("1-D class given a pmd spec");
    sampler = make_sampler(spec);
  }

  TestReport rep;
  if (inv.klass == "pbd") {
    rep = test_siirv(*sampler, inv.n, 2, inv.eps, rng, ledger);
  } else if (inv.klass == "siirv") {
    rep = test_siirv(*sampler, inv.n, inv.k, inv.eps, rng, ledger);
  } else if (inv.klass == "logconcave") {
    rep = test_logconcave(*sampler, inv.n, inv.eps, rng, ledger);
  } else if (inv.klass.rfind("plugin:", 0) == 0) {
    std::string name = inv.klass.substr(7);
    auto it = plugin_registry().find(name);
    if (it == plugin_registry().end()) throw ConfigError("unknown plugin: " + name);
    ClassPlugin plugin = it->second(inv.n, inv.k, ledger);
    rep = test_class(*sampler, plugin, inv.eps, rng, ledger);
    rep.n = inv.n;
    rep.k = inv.k;
  } else {
    throw ConfigError("unknown class: " + inv.klass);
  }
  rep.seed = inv.seed;
  return rep;
}

int cmd_test(const TestInvocation& inv, const std::string& out_path) {
  ConstantLedger ledger = ConstantLedger::from_environment();
  TestReport rep = run_one(inv, ledger);
  std::string body = rep.to_json().dump(2) + "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << body;
  } else {
    std::cout << body;
  }
  return rep.accept ? 0 : 1;
}

std::vector<long> parse_grid(const std::string& csv) {
  std::vector<long> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

std::vector<double> parse_grid_d(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

int cmd_power(const std::string& klass, const std::string& n_grid, const std::string& eps_grid,
              int k, long trials, std::uint64_t seed, const std::string& spec_path,
              const std::string& out_path, bool with_norms) {
  if (trials < 1) throw ConfigError("power: trials must be >= 1");
  ConstantLedger ledger = ConstantLedger::from_environment();
  std::ostringstream csv;
  csv << "class,n,k,epsilon,m_total_mean,accept_rate,reject_stage_histogram,wall_ms";
  if (with_norms) csv << ",l2_sq";
  csv << "\n";
  for (long n : parse_grid(n_grid)) {
    for (double eps : parse_grid_d(eps_grid)) {
      double total_samples = 0;
      long accepts = 0;
      std::map<std::string, long> stages;
      auto t0 = std::chrono::steady_clock::now();
      for (long t = 0; t < trials; ++t) {
        TestInvocation inv;
        inv.klass = klass;
        inv.n = n;
        inv.k = k;
        inv.eps = eps;
        inv.seed = seed + static_cast<std::uint64_t>(t) * 1000003ull;
        inv.spec_path = spec_path;
        TestReport rep = run_one(inv, ledger);
        total_samples += static_cast<double>(rep.total_samples);
        if (rep.accept) {
          ++accepts;
        } else {
          ++stages[stage_name(rep.stage)];
        }
      }
      auto t1 = std::chrono::steady_clock::now();
      double wall_ms =
          std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() / 1000.0;
      std::ostringstream hist;
      bool sep = false;
      for (auto& [name, count] : stages) {
        if (sep) hist << ';';
        hist << name << ':' << count;
        sep = true;
      }
      csv << klass << ',' << n << ',' << k << ',' << eps << ','
          << total_samples / static_cast<double>(trials) << ','
          << static_cast<double>(accepts) / static_cast<double>(trials) << ','
          << (hist.str().empty() ? "-" : hist.str()) << ',' << wall_ms;
      if (with_norms) {
        // exact L2^2 norm of the planted instance (desk-computable specs only)
        DistSpec planted = spec_path.empty() ? default_instance(klass, n, k)
                                             : load_spec(spec_path);
        double l2_sq = 0;
        if (planted.kind == DistSpec::Kind::Pmd) {
          l2_sq = norms_for_lb(planted.pmd).l2_sq;
        } else {
          for (double wgt : planted.exact_pmf().weights) l2_sq += wgt * wgt;
        }
        csv << ',' << std::setprecision(17) << l2_sq;
      }
      csv << "\n";
    }
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << csv.str();
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int cmd_sample(const std::string& spec_path, long long count, std::uint64_t seed,
               const std::string& out_path) {
  if (count < 0) throw ConfigError("sample: count must be >= 0");
  DistSpec spec = load_spec(spec_path);
  std::ostringstream body;
  std::string canonical = to_json(spec).dump();
  body << "# disttest-sample spec_hash=" << fnv1a(canonical) << " seed=" << seed
       << " count=" << count << "\n";
  Rng rng(seed);
  if (spec.kind == DistSpec::Kind::Pmd) {
    auto sampler = make_sampler_kd(spec);
    std::vector<std::int64_t> x;
    for (long long i = 0; i < count; ++i) {
      sampler->draw(rng, x);
      for (std::size_t j = 0; j < x.size(); ++j) body << (j ? " " : "") << x[j];
      body << "\n";
    }
  } else {
    auto sampler = make_sampler(spec);
    for (long long i = 0; i < count; ++i) body << sampler->draw(rng) << "\n";
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << body.str();
  } else {
    std::cout << body.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier-sparsity membership testers for structured discrete distributions"};
  app.require_subcommand(1);

  TestInvocation inv;
  std::string out_path;
  auto* test = app.add_subcommand("test", "run one tester invocation");
  test->add_option("--class", inv.klass, "pbd|siirv|pmd|logconcave|plugin:<name>")->required();
  test->add_option("--n", inv.n, "class size parameter n");
  test->add_option("--k", inv.k, "summand support bound / dimension k");
  test->add_option("--eps", inv.eps, "distance parameter")->required();
  test->add_option("--seed", inv.seed, "64-bit RNG seed");
  test->add_option("--spec", inv.spec_path, "DistSpec JSON file to sample from");
  test->add_option("--samples", inv.samples_path, "flat sample file to replay");
  test->add_option("--out", out_path, "report output path (stdout if omitted)");

  std::string klass, n_grid = "100", eps_grid = "0.25", spec_path;
  int k = 2;
  long trials = 10;
  std::uint64_t seed = 1;
  std::string power_out;
  auto* power = app.add_subcommand("power", "Monte-Carlo power experiment over a grid");
  power->add_option("--class", klass, "tester class")->required();
  power->add_option("--n-grid", n_grid, "comma-separated n values");
  power->add_option("--eps-grid", eps_grid, "comma-separated epsilon values");
  power->add_option("--k", k, "k parameter");
  power->add_option("--trials", trials, "trials per grid point");
  power->add_option("--seed", seed, "base seed");
  power->add_option("--spec", spec_path, "instance spec (default: in-class instance)");
  power->add_option("--out", power_out, "CSV output path (stdout if omitted)");
  bool with_norms = false;
  power->add_flag("--with-norms", with_norms, "append the exact L2^2 norm of the planted instance");

  std::string sample_spec, sample_out;
  long long sample_count = 0;
  std::uint64_t sample_seed = 1;
  auto* sample = app.add_subcommand("sample", "draw samples from a spec into a file");
  sample->add_option("--spec", sample_spec, "DistSpec JSON file")->required();
  sample->add_option("--count", sample_count, "number of draws")->required();
  sample->add_option("--seed", sample_seed, "RNG seed");
  sample->add_option("--out", sample_out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
    if (test->parsed()) return cmd_test(inv, out_path);
    if (power->parsed())
      return cmd_power(klass, n_grid, eps_grid, k, trials, seed, spec_path, power_out, with_norms);
    if (sample->parsed()) return cmd_sample(sample_spec, sample_count, sample_seed, sample_out);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
