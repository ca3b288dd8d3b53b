// Acceptance suite: one PASS/FAIL line per criterion, also written to
// acceptance_report.txt in the working directory. Exits 0 once every
// criterion has been evaluated; --strict makes any FAIL a nonzero exit.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/formats.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "residpo/evalx.hpp"
#include "residpo/gradcheck.hpp"
#include "residpo/oracle.hpp"

using namespace residpo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> g_lines;

void report(int id, bool pass, const std::string& detail) {
  g_lines.push_back({id, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

// --- 1 ---------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  GradCheckOptions opts;
  opts.cases = 5;
  opts.probes = 64;
  const auto results = run_gradcheck_suite(opts);
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 60.0 && results.size() == 5;
  std::string detail;
  for (const auto& r : results) {
    ok = ok && r.passed && r.probes >= 64 * 5 && r.max_rel_error < 1e-4;
    detail += r.loss + " " + sci(r.max_rel_error) + ", ";
  }
  report(1, ok, "max relative error " + detail + "runtime " + fmt(elapsed, 1) + " s");
}

// --- 2 ---------------------------------------------------------------------

void identity_at_initialization() {
  Rng rng(2024);
  const auto ref = PolicyParams::init(77, 0.5);
  double dpo_dev = 0, residpo_dev = 0, rcl_dev = 0;
  double residpo_min = 1e9, residpo_max = -1e9;
  const LossHyperparams h;
  for (int p = 0; p < 100; ++p) {
    const auto s = gen_structures(1, {8, 40}, derive_seed(2024, "identity", {static_cast<std::uint64_t>(p)})).front();
    const auto logp = forward(ref, s);
    const auto w = sample(logp, {}, rng.next_u64());
    const auto l = sample(logp, {}, rng.next_u64());
    std::vector<double> pw, pl;
    for (int i = 0; i < s.length(); ++i) {
      pw.push_back(100 * rng.uniform());
      pl.push_back(100 * rng.uniform());
    }
    const auto tw = seq_log_prob(logp, w).per_residue;
    const auto tl = seq_log_prob(logp, l).per_residue;
    const PairBatchItem item{pw, pl, tw, tl, tw, tl};
    dpo_dev = std::max(dpo_dev, std::abs(dpo_loss(item, h) - std::log(2.0)));
    const auto r = residpo_loss(item, h);
    residpo_dev = std::max(residpo_dev, std::abs(r.total - std::log(2.0)));
    residpo_min = std::min(residpo_min, r.total);
    residpo_max = std::max(residpo_max, r.total);
    rcl_dev = std::max(rcl_dev, std::abs(rcl_loss(item, h)));
  }
  const bool dpo_ok = dpo_dev <= 1e-9;
  const bool rcl_ok = rcl_dev <= 1e-12;
  const bool residpo_ok = residpo_dev <= 1e-9;
  report(2, dpo_ok && rcl_ok && residpo_ok,
         "dpo |loss - log 2| max " + sci(dpo_dev) + (dpo_ok ? " ok" : " FAIL") + "; rcl |loss| max " + sci(rcl_dev) +
             (rcl_ok ? " ok" : " FAIL") + "; residpo |loss - log 2| max " + sci(residpo_dev) +
             (residpo_ok ? " ok" : " FAIL") + " (residpo ranges " + fmt(residpo_min, 4) + ".." +
             fmt(residpo_max, 4) +
             ": its preference term compares policy log-probabilities of winner and loser only, so it equals log 2 "
             "only when those coincide)");
}

// --- 3 ---------------------------------------------------------------------

void pair_construction() {
  Rng rng(3);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> means;
    for (int i = 0; i < 8; ++i) means.push_back(std::round(40 + 60 * rng.uniform()));
    const auto pool = test::pool_from_means(means);
    mismatches += test::as_set(relative_sampling(pool, 10)) != test::brute_relative(means, 10);
    mismatches += test::as_set(application_sampling(pool, 80, 75)) != test::brute_application(means, 80, 75);
    const auto want = test::brute_rejection(means, 3);
    const auto got = rejection_sampling(pool, 3, rng.next_u64());
    bool ok = got.size() == want.expected_count && test::as_set(got).size() == got.size();
    for (const auto& p : got) ok = ok && p.winner_index == want.winner && want.admissible.count(p.loser_index);
    mismatches += !ok;
  }
  const auto worked = test::pool_from_means({82, 76, 74, 60});
  const auto rel = relative_sampling(worked, 10).size();
  const auto app = application_sampling(worked, 80, 75).size();
  bool rej_ok = true;
  for (int k = 1; k <= 3; ++k) rej_ok = rej_ok && rejection_sampling(worked, k, 1).size() == static_cast<size_t>(k);
  const bool ok = mismatches == 0 && rel == 3 && app == 2 && rej_ok;
  report(3, ok,
         std::to_string(mismatches) + " mismatches against brute force over 100 pools; worked pool gives " +
             std::to_string(rel) + " relative / " + std::to_string(app) + " application / k rejection pairs" +
             (rej_ok ? "" : " (rejection count wrong)"));
}

// --- 4 ---------------------------------------------------------------------

void index_sets() {
  Rng rng(4);
  int mismatches = 0;
  int fallbacks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<double> w, l, ref;
    for (int i = 0; i < n; ++i) {
      w.push_back(100 * rng.uniform());
      l.push_back(100 * rng.uniform());
      ref.push_back(rng.uniform());
    }
    LossHyperparams h;
    h.alpha = 60 * rng.uniform();
    h.beta_thresh = 1 + 99 * rng.uniform();
    h.gamma = rng.uniform();
    bool fb = false;
    const auto want_i = test::brute_rpl_set(w, l, h.alpha, &fb);
    const auto got_i = rpl_index_set(w, l, h.alpha);
    mismatches += std::set<int>(got_i.positions.begin(), got_i.positions.end()) != want_i || got_i.fallback != fb;
    fallbacks += fb;
    const auto got_j = rcl_index_set(w, ref, h);
    mismatches += std::set<int>(got_j.begin(), got_j.end()) != test::brute_rcl_set(w, ref, h.beta_thresh, h.gamma);
  }
  report(4, mismatches == 0 && fallbacks > 0,
         std::to_string(mismatches) + " mismatches over 1000 random vectors (" + std::to_string(fallbacks) +
             " exercised the empty-set fallback)");
}

// --- 5, 6, 7, 9 -------------------------------------------------------------

void experiments() {
  const auto t0 = Clock::now();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const ExperimentConfig cfg;
  std::map<std::string, std::vector<EvalReport>> rows;
  std::map<std::string, std::vector<double>> efficiency;
  bool efficiency_complete = true;
  bool subsets_paired = true;
  bool backbone_ok = true;
  int checkpoints = 0;
  std::string errors;

  for (auto seed : seeds) {
    const auto exp = prepare_experiment(cfg, seed);
    for (const auto& r : ablate(exp, table1_grid())) {
      if (!r.report) {
        errors += r.cell.name + ": " + r.error + "; ";
        continue;
      }
      rows[r.cell.name].push_back(*r.report);
      backbone_ok = backbone_ok && r.report->backbone_success_rate >= r.report->success_rate;
      ++checkpoints;
    }
    try {
      const auto points = data_efficiency(exp, {25, 50, 100, 200});
      efficiency_complete = efficiency_complete && points.size() == 8;
      for (size_t i = 0; i + 1 < points.size(); i += 2) subsets_paired = subsets_paired && points[i].subset == points[i + 1].subset;
      for (const auto& p : points) {
        backbone_ok = backbone_ok && p.report.backbone_success_rate >= p.report.success_rate;
        ++checkpoints;
        efficiency[std::string(to_string(p.loss)) + "@" + std::to_string(p.n_structures)].push_back(p.plddt_accuracy);
      }
    } catch (const std::exception& e) {
      efficiency_complete = false;
      errors += std::string("data efficiency: ") + e.what() + "; ";
    }
    std::cout << "  seed " << seed << " done after " << fmt(seconds_since(t0), 0) << " s" << std::endl;
  }
  const double elapsed = seconds_since(t0);

  auto mean = [&](const std::string& row, double EvalReport::*field) {
    double sum = 0;
    for (const auto& r : rows[row]) sum += r.*field;
    return rows[row].size() == seeds.size() ? sum / static_cast<double>(seeds.size()) : std::nan("");
  };
  const double acc_ref = mean("reference", &EvalReport::plddt_accuracy);
  const double acc_dpo = mean("relative/dpo", &EvalReport::plddt_accuracy);
  const double acc_res = mean("relative/residpo", &EvalReport::plddt_accuracy);
  const double des_ref = mean("reference", &EvalReport::mean_design_plddt);
  const double des_res = mean("relative/residpo", &EvalReport::mean_design_plddt);
  const bool gap1 = acc_res - acc_dpo >= 1.0;
  const bool gap2 = acc_dpo - acc_ref >= 1.0;
  const bool gap3 = des_res - des_ref >= 2.0;
  std::string table;
  for (const auto& name : {"reference", "rejection/dpo", "application/dpo", "relative/dpo", "relative/rpl",
                           "relative/residpo"}) {
    table += std::string("\n    ") + name + ": acc " + fmt(mean(name, &EvalReport::plddt_accuracy), 2) + ", recovery " +
             fmt(mean(name, &EvalReport::seq_recovery), 2) + ", design pLDDT " +
             fmt(mean(name, &EvalReport::mean_design_plddt), 2) + ", success " +
             fmt(mean(name, &EvalReport::success_rate), 1) + "/" +
             fmt(mean(name, &EvalReport::backbone_success_rate), 1);
  }
  report(5, gap1 && gap2 && gap3,
         "3-seed pLDDT accuracy residpo " + fmt(acc_res, 2) + " vs dpo " + fmt(acc_dpo, 2) + " (gap " +
             fmt(acc_res - acc_dpo, 2) + (gap1 ? " ok" : " FAIL") + "), dpo vs reference " + fmt(acc_ref, 2) +
             " (gap " + fmt(acc_dpo - acc_ref, 2) + (gap2 ? " ok" : " FAIL") + "); design pLDDT residpo " +
             fmt(des_res, 2) + " vs reference " + fmt(des_ref, 2) + " (gap " + fmt(des_res - des_ref, 2) +
             (gap3 ? " ok" : " FAIL") + "); runtime " + fmt(elapsed, 0) + " s" + table +
             (errors.empty() ? "" : "\n    errors: " + errors));

  const double rec_res = mean("relative/residpo", &EvalReport::seq_recovery);
  const double rec_rpl = mean("relative/rpl", &EvalReport::seq_recovery);
  report(6, rec_res > rec_rpl,
         "3-seed recovery residpo " + fmt(rec_res, 3) + " vs rpl " + fmt(rec_rpl, 3));

  auto eff_mean = [&](const std::string& key) {
    double sum = 0;
    for (double v : efficiency[key]) sum += v;
    return efficiency[key].empty() ? std::nan("") : sum / static_cast<double>(efficiency[key].size());
  };
  std::string curve;
  for (int size : {25, 50, 100, 200}) {
    curve += " " + std::to_string(size) + ": dpo " + fmt(eff_mean("dpo@" + std::to_string(size)), 2) + " / residpo " +
             fmt(eff_mean("residpo@" + std::to_string(size)), 2) + ";";
  }
  const bool at50 = eff_mean("residpo@50") >= eff_mean("dpo@50");
  report(7, efficiency_complete && subsets_paired && at50,
         std::string(efficiency_complete ? "sweep complete" : "sweep incomplete") +
             (subsets_paired ? ", subsets paired" : ", subsets NOT paired") + "; residpo@50 " +
             fmt(eff_mean("residpo@50"), 2) + " vs dpo@50 " + fmt(eff_mean("dpo@50"), 2) + ";" + curve);

  report(9, backbone_ok && checkpoints == static_cast<int>(seeds.size() * (table1_grid().size() + 8)),
         "backbone rate >= sequence rate on " + std::to_string(checkpoints) + " evaluated checkpoints");
}

// --- 8 ---------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"residpo"};
  full.insert(full.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = cli::run(full, out, err);
  if (code != 0) std::cerr << "  command failed: " << args.front() << ": " << err.str();
  return code;
}

/// Runs every command once inside dir using relative paths.
bool run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cwd = fs::current_path();
  fs::current_path(dir);
  io::write_file("config.json",
                 R"({"n_structures": 30, "total_steps": 8, "batch_size": 4, "grad_accum": 2, "seeds": [1],
                     "sizes": [6, 12], "design_n_seqs": 4,
                     "pretrain": {"total_steps": 40, "batch_size": 4, "grad_accum": 2}})");
  for (const char* d : {"data", "ref", "val", "tuned", "eval", "ablate", "eff", "comp"}) fs::create_directories(d);
  const std::vector<std::vector<std::string>> steps{
      {"gen", "--config", "config.json", "--out", "data"},
      {"pretrain", "--config", "config.json", "--data", "data", "--out", "ref"},
      {"sample-score", "--checkpoint", "ref/checkpoint.json", "--data", "data", "--subset", "train", "--out", "data"},
      {"make-pairs", "--sequences", "data/sequences.jsonl", "--out", "data"},
      {"sample-score", "--checkpoint", "ref/checkpoint.json", "--data", "data", "--subset", "val", "--out", "val"},
      {"make-pairs", "--sequences", "val/sequences.jsonl", "--cap", "0", "--out", "val"},
      {"train", "--config", "config.json", "--data", "data", "--sequences", "data/sequences.jsonl", "--pairs",
       "data/pairs.jsonl", "--ref", "ref/checkpoint.json", "--out", "tuned"},
      {"eval", "--config", "config.json", "--checkpoint", "tuned/checkpoint.json", "--data", "data", "--sequences",
       "val/sequences.jsonl", "--pairs", "val/pairs.jsonl", "--out", "eval"},
      {"composition", "--ref", "ref/checkpoint.json", "--tuned", "tuned/checkpoint.json", "--data", "data", "--out",
       "comp"},
      {"ablate", "--config", "config.json", "--out", "ablate"},
      {"data-efficiency", "--config", "config.json", "--out", "eff"},
  };
  bool ok = true;
  for (const auto& s : steps) ok = ok && cli(s) == 0;
  fs::current_path(cwd);
  return ok;
}

void determinism() {
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const auto root = fs::temp_directory_path() / "residpo_acceptance_determinism";
  const bool ran = run_pipeline(root / "a") && run_pipeline(root / "b");
  size_t files = 0;
  std::vector<std::string> differing;
  if (ran) {
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), root / "a");
      ++files;
      const auto other = root / "b" / rel;
      if (!fs::exists(other) || io::read_file(entry.path()) != io::read_file(other)) differing.push_back(rel.string());
    }
  }
  fs::remove_all(root);
  std::string detail = ran ? std::to_string(files) + " files compared across two full command runs, " +
                                 std::to_string(differing.size()) + " differ"
                           : "a command failed";
  for (const auto& d : differing) detail += " " + d;
  report(8, ran && differing.empty() && files > 0, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  try {
    gradient_correctness();
    identity_at_initialization();
    pair_construction();
    index_sets();
    determinism();
    experiments();
  } catch (const std::exception& e) {
    std::cerr << "acceptance suite aborted: " << e.what() << "\n";
    return 1;
  }

  std::sort(g_lines.begin(), g_lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  std::ofstream file("acceptance_report.txt");
  int failed = 0;
  std::cout << "\nsummary\n";
  for (const auto& l : g_lines) {
    std::cout << (l.pass ? "PASS" : "FAIL") << " criterion " << l.id << "\n";
    file << (l.pass ? "PASS" : "FAIL") << " criterion " << l.id << ": " << l.detail << "\n";
    failed += !l.pass;
  }
  std::cout << g_lines.size() - static_cast<size_t>(failed) << " of " << g_lines.size() << " criteria pass\n";
  return strict && failed ? 2 : 0;
}
