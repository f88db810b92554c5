// Acceptance suite: prints one PASS/FAIL line per criterion.

#include "oracles.hpp"

#include "clqa/checkpoint.hpp"
#include "clqa/commands.hpp"
#include "clqa/dataset_io.hpp"
#include "clqa/metrics.hpp"
#include "clqa/objectives.hpp"
#include "clqa/summarizer.hpp"
#include "clqa/synthbench.hpp"
#include "clqa/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <set>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace clqa;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kCdfTolerance = 1e-6;
constexpr double kSrccTolerance = 1e-12;
constexpr double kWeightTolerance = 1e-12;
constexpr double kHardLimitTolerance = 1e-6;
constexpr double kFdStep = 1e-4;
constexpr double kFdTolerance = 1e-4;
constexpr int kGradientModels = 20;
constexpr double kUpperBoundSlack = 0.02;
constexpr double kOrderSpreadLimit = 0.08;
constexpr double kRoundTripTolerance = 1e-12;
constexpr int kSeeds = 5;
constexpr int kMajority = 4;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

// ---- criterion 1 -----------------------------------------------------------

Outcome numerics() {
  Outcome o;
  double cdf = 0;
  for (int i = 0; i < 1000; ++i) {
    const double z = -8.0 + 16.0 * i / 999.0;
    cdf = std::max(cdf, std::abs(std_normal_cdf(z) - oracle::normal_cdf(z)));
  }
  o.require(cdf <= kCdfTolerance, "normal cdf " + sci(cdf));

  bool grid = true;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double p = clamp_probability(i / 100.0), q = clamp_probability(j / 100.0);
      const double l = fidelity_loss(p, q);
      grid &= l >= 0 && l <= 1;
      grid &= (i == j) ? l < 1e-15 : l > 0;
    }
  }
  o.require(grid, "fidelity grid bounds / zero point");

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 2);
  double norm_err = 0, shift_err = 0, uniform_err = 0, hard_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector d(5);
    for (int i = 0; i < 5; ++i) d[i] = u(rng);
    for (double tau : {0.0, 1.0, 16.0, 1e4}) {
      const Vector w = adaptive_weights(d, tau);
      norm_err = std::max(norm_err, std::abs(w.sum() - 1.0));
      shift_err = std::max(shift_err, (w - adaptive_weights(Vector(d.array() + 0.5), tau)).cwiseAbs().maxCoeff());
    }
    uniform_err = std::max(uniform_err, (adaptive_weights(d, 0.0).array() - 0.2).abs().maxCoeff());
    hard_err = std::max(hard_err, (adaptive_weights(d, 1e6) - hard_weights(d)).cwiseAbs().maxCoeff());
  }
  o.require(norm_err <= kWeightTolerance, "softmin normalization " + sci(norm_err));
  o.require(shift_err <= kWeightTolerance, "softmin shift invariance " + sci(shift_err));
  o.require(uniform_err <= kWeightTolerance, "tau=0 uniformity " + sci(uniform_err));
  o.require(hard_err <= kHardLimitTolerance, "large-tau hard limit " + sci(hard_err));

  double srcc_err = 0;
  std::size_t compared = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> base(static_cast<std::size_t>(n)), perm;
    std::iota(base.begin(), base.end(), 1.0);
    perm = base;
    do {
      srcc_err = std::max(srcc_err, std::abs(srcc(Eigen::Map<const Vector>(base.data(), n),
                                                  Eigen::Map<const Vector>(perm.data(), n)) -
                                             oracle::classical_spearman(base, perm)));
      ++compared;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[static_cast<std::size_t>(i)] = gauss(rng);
      b[static_cast<std::size_t>(i)] = gauss(rng);
    }
    srcc_err = std::max(srcc_err, std::abs(srcc(Eigen::Map<const Vector>(a.data(), 8),
                                                Eigen::Map<const Vector>(b.data(), 8)) -
                                           oracle::classical_spearman(a, b)));
    ++compared;
  }
  o.require(srcc_err <= kSrccTolerance, "srcc " + sci(srcc_err));
  o.note("cdf err " + sci(cdf) + ", srcc err " + sci(srcc_err) + " over " + std::to_string(compared) + " cases");
  return o;
}

// ---- criterion 2 -----------------------------------------------------------

struct GradFixture {
  ContinualModel model;
  std::vector<QualitySample> samples;
  std::vector<RankedPair> pairs;
};

GradFixture grad_fixture(std::uint64_t seed, std::size_t heads) {
  GradFixture f;
  TrunkConfig c;
  c.input_dim = 4;
  c.layer_widths = {6, 5};
  c.frozen_prefix_layers = seed % 2;
  c.seed = seed;
  f.model = init_model(c);
  std::mt19937_64 rng(seed + 17);
  std::normal_distribution<double> gauss;
  for (auto& l : f.model.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.3 * gauss(rng);
  for (std::size_t h = 0; h < heads; ++h) f.model.add_head();
  TaskDataset task{"g", 4, {}, {}};
  for (int i = 0; i < 12; ++i) {
    QualitySample s{"s" + std::to_string(i), Vector(4), gauss(rng), 0.5 + 0.2 * std::abs(gauss(rng))};
    for (int j = 0; j < 4; ++j) s.features[j] = gauss(rng);
    task.train.push_back(s);
  }
  f.samples = task.train;
  f.pairs = build_pairs(task, {20, seed});
  return f;
}

double gradient_error(const GradFixture& f, const RegularizerState& state, const LossConfig& config) {
  std::vector<std::size_t> batch(f.pairs.size());
  std::iota(batch.begin(), batch.end(), 0);
  const auto analytic = minibatch_loss_and_gradient(f.model, f.samples, f.pairs, batch, state, config);
  std::function<double(const Vector&)> loss = [&](const Vector& p) {
    auto m = f.model;
    m.set_parameters(p);
    return minibatch_loss(m, f.samples, f.pairs, batch, state, config).total;
  };
  const auto frozen = f.model.layout().frozen_size;
  const Vector numeric = oracle::central_difference<Vector>(loss, f.model.parameters(), kFdStep, frozen);
  return oracle::relative_error(analytic.gradient, numeric);
}

Outcome gradients() {
  Outcome o;
  double worst_new = 0, worst_old = 0;
  std::map<std::string, double> worst_penalty;
  for (int i = 0; i < kGradientModels; ++i) {
    const auto seed = static_cast<std::uint64_t>(i);
    worst_new = std::max(worst_new, gradient_error(grad_fixture(seed, 1 + seed % 3), std::monostate{},
                                                   {1.0, Regularizer::none}));

    const auto f3 = grad_fixture(seed + 100, 3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<PseudoLabelSet> labels;
    for (std::size_t k = 0; k < 2; ++k) {
      PseudoLabelSet s{k, {}};
      for (std::size_t p = 0; p < f3.pairs.size(); ++p) s.labels.push_back(u(rng));
      labels.push_back(s);
    }
    worst_old = std::max(worst_old, gradient_error(f3, labels, {0.7, Regularizer::lwf}));

    for (auto method : {Regularizer::ewc, Regularizer::si, Regularizer::mas}) {
      const auto f = grad_fixture(seed + 200, 2);
      auto state = make_importance_state(method, f.model);
      std::uniform_real_distribution<double> b(0, 2);
      std::normal_distribution<double> g(0, 0.2);
      for (Eigen::Index j = 0; j < state.beta.size(); ++j) {
        state.beta[j] = b(rng);
        state.anchor[j] += g(rng);
      }
      auto& w = worst_penalty[to_string(method)];
      w = std::max(w, gradient_error(f, state, {3.0, method}));
      std::function<double(const Vector&)> pen = [&](const Vector& p) {
        auto m = f.model;
        m.set_parameters(p);
        return quadratic_penalty(m, state);
      };
      const Vector numeric = oracle::central_difference<Vector>(pen, f.model.parameters(), kFdStep);
      w = std::max(w, oracle::relative_error(quadratic_penalty_gradient(f.model, state), numeric));
    }
  }
  o.require(worst_new <= kFdTolerance, "l_new " + sci(worst_new));
  o.require(worst_old <= kFdTolerance, "l_new + lambda l_old " + sci(worst_old));
  std::string pen;
  for (const auto& [name, w] : worst_penalty) {
    o.require(w <= kFdTolerance, name + " penalty " + sci(w));
    pen += " " + name + " " + sci(w);
  }
  o.note(std::to_string(kGradientModels) + " models; max rel err l_new " + sci(worst_new) + ", lwf " +
         sci(worst_old) + ";" + pen);
  return o;
}

// ---- shared benchmark runs -------------------------------------------------

std::vector<TaskDataset> benchmark_tasks(std::uint64_t seed) {
  return generate_sequence(default_sequence_spec(seed)).tasks;
}

std::vector<MetricsRecord> run_methods(std::span<const TaskDataset> tasks, std::uint64_t seed,
                                       const std::vector<Method>& methods, const RunHooks& hooks = {}) {
  const auto setup = benchmark_setup(methods.front(), seed, tasks.front().dim);
  std::vector<WeightingConfig> ws;
  for (auto m : methods) ws.push_back(inference_weighting(m, setup.train.tau));
  return run_family(tasks, setup, training_family(methods.front()), ws, hooks).records;
}

// ---- criterion 3 -----------------------------------------------------------

Outcome equivalences() {
  Outcome o;
  const auto tasks = benchmark_tasks(0);
  const auto dim = tasks.front().dim;

  std::vector<Vector> mh_params, lwf_params, sl_params;
  auto collect = [](std::vector<Vector>& out) {
    RunHooks h;
    h.on_task = [&out](std::size_t, const ContinualModel& m, const RegularizerMemory&) { out.push_back(m.parameters()); };
    return h;
  };
  const auto mh = run_sequence(tasks, benchmark_setup(Method::MH_CL, 0, dim), collect(mh_params));
  auto lwf0 = benchmark_setup(Method::LwF, 0, dim);
  lwf0.train.lambda = 0.0;
  run_sequence(tasks, lwf0, collect(lwf_params));
  bool identical = lwf_params.size() == mh_params.size();
  for (std::size_t t = 0; identical && t < mh_params.size(); ++t) identical = lwf_params[t] == mh_params[t];
  o.require(identical, "lambda=0 LwF parameters differ from MH-CL");

  const auto sl = run_sequence(tasks, benchmark_setup(Method::SL, 0, dim), collect(sl_params));
  o.require(!sl_params.empty() && sl_params[0] == mh_params[0], "SL and MH-CL differ after task 1");
  o.require(sl.records[0].srcc.at(0, 0) == mh.records[0].srcc.at(0, 0), "SL and MH-CL task-1 SRCC differ");

  for (const auto* rec : {&mh.records[0], &sl.records[0]}) {
    o.require(rec->psr[0] == rec->srcc.at(0, 0), "PSR_1 != SRCC_1");
    double sum = 0;
    for (double p : rec->psr) sum += p;
    o.require(rec->mpsr == sum / static_cast<double>(rec->psr.size()), "MPSR != mean(PSR)");
  }

  std::size_t old_reads = 0, runs = 0;
  for (auto m : {Method::SL, Method::SH_CL, Method::MH_CL, Method::LwF_AW, Method::EWC, Method::SI, Method::MAS}) {
    RunHooks h;
    h.observer = [&](const AccessEvent& e) {
      if (e.phase == AccessEvent::Phase::training && e.dataset != e.current_task) ++old_reads;
      if (e.dataset > e.current_task) ++old_reads;
    };
    run_sequence(tasks, benchmark_setup(m, 0, dim), h);
    ++runs;
  }
  o.require(old_reads == 0, std::to_string(old_reads) + " reads of old training data");
  o.note("bit-identical lambda=0 LwF/MH-CL over " + std::to_string(mh_params.size()) + " tasks; " +
         std::to_string(old_reads) + " old-data reads across " + std::to_string(runs) + " continual runs");
  return o;
}

// ---- criteria 4-6 ----------------------------------------------------------

struct SeedRecords {
  MetricsRecord sl, jl, mh, mh_o, lwf, lwf_o, lwf_aw, lwf_sw, lwf_hw;
};

std::vector<SeedRecords> main_runs;

void ensure_main_runs() {
  if (!main_runs.empty()) return;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto tasks = benchmark_tasks(seed);
    SeedRecords r;
    r.sl = run_methods(tasks, seed, {Method::SL})[0];
    r.jl = run_methods(tasks, seed, {Method::JL})[0];
    auto mh = run_methods(tasks, seed, {Method::MH_CL, Method::MH_CL_O});
    r.mh = mh[0];
    r.mh_o = mh[1];
    auto lwf = run_methods(tasks, seed, {Method::LwF, Method::LwF_O, Method::LwF_AW, Method::LwF_SW, Method::LwF_HW});
    r.lwf = lwf[0];
    r.lwf_o = lwf[1];
    r.lwf_aw = lwf[2];
    r.lwf_sw = lwf[3];
    r.lwf_hw = lwf[4];
    main_runs.push_back(std::move(r));
  }
}

// Mean over old tasks of SRCC_k - SRCC_Tk.
double old_task_drop(const MetricsRecord& rec) {
  const std::size_t last = rec.srcc.tasks() - 1;
  double sum = 0;
  for (std::size_t k = 0; k < last; ++k) sum += rec.srcc.diagonal(k) - rec.srcc.at(last, k);
  return sum / static_cast<double>(last);
}

std::string list(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], 3);
  return s + ")";
}

Outcome forgetting() {
  ensure_main_runs();
  Outcome o;
  int beats_sl = 0, beats_mh = 0;
  double drop_lwf = 0, drop_mh = 0, drop_lwf_latest = 0, drop_mh_latest = 0;
  std::vector<double> aw, sl, mh;
  for (const auto& r : main_runs) {
    beats_sl += r.lwf_aw.mpsr > r.sl.mpsr;
    beats_mh += r.lwf_aw.mpsr > r.mh.mpsr;
    aw.push_back(r.lwf_aw.mpsr);
    sl.push_back(r.sl.mpsr);
    mh.push_back(r.mh.mpsr);
    drop_lwf += old_task_drop(r.lwf_o) / kSeeds;
    drop_mh += old_task_drop(r.mh_o) / kSeeds;
    drop_lwf_latest += old_task_drop(r.lwf) / kSeeds;
    drop_mh_latest += old_task_drop(r.mh) / kSeeds;
  }
  o.require(beats_sl >= kMajority, "LwF-AW > SL in " + std::to_string(beats_sl) + "/5");
  o.require(beats_mh >= kMajority, "LwF-AW > MH-CL in " + std::to_string(beats_mh) + "/5");
  o.require(drop_lwf < drop_mh, "old-task drop LwF " + fmt(drop_lwf) + " vs MH-CL " + fmt(drop_mh));
  o.note("MPSR LwF-AW " + list(aw) + " SL " + list(sl) + " MH-CL " + list(mh) + "; wins " +
         std::to_string(beats_sl) + "/5 and " + std::to_string(beats_mh) + "/5; old-task drop (own head) LwF " +
         fmt(drop_lwf) + " < MH-CL " + fmt(drop_mh) + "; latest head LwF " + fmt(drop_lwf_latest) + ", MH-CL " +
         fmt(drop_mh_latest));
  return o;
}

Outcome upper_bound() {
  ensure_main_runs();
  Outcome o;
  int ok = 0;
  std::vector<double> jl, aw;
  for (const auto& r : main_runs) {
    ok += r.jl.weighted_srcc >= r.lwf_aw.weighted_srcc - kUpperBoundSlack;
    jl.push_back(r.jl.weighted_srcc);
    aw.push_back(r.lwf_aw.weighted_srcc);
  }
  o.require(ok >= kMajority, "JL bound held in " + std::to_string(ok) + "/5");
  o.note("weighted SRCC JL " + list(jl) + " LwF-AW " + list(aw) + "; held in " + std::to_string(ok) + "/5");
  return o;
}

Outcome weighting_ablation() {
  ensure_main_runs();
  Outcome o;
  int vs_sw = 0, vs_hw = 0;
  std::vector<double> aw_m, sw_m, aw_w, hw_w;
  for (const auto& r : main_runs) {
    vs_sw += r.lwf_aw.mpsr >= r.lwf_sw.mpsr;
    vs_hw += r.lwf_aw.weighted_srcc >= r.lwf_hw.weighted_srcc;
    aw_m.push_back(r.lwf_aw.mpsr);
    sw_m.push_back(r.lwf_sw.mpsr);
    aw_w.push_back(r.lwf_aw.weighted_srcc);
    hw_w.push_back(r.lwf_hw.weighted_srcc);
  }
  o.require(vs_sw >= kMajority, "MPSR AW >= SW in " + std::to_string(vs_sw) + "/5");
  o.require(vs_hw >= kMajority, "weighted SRCC AW >= HW in " + std::to_string(vs_hw) + "/5");
  o.note("MPSR AW " + list(aw_m) + " SW " + list(sw_m) + " (" + std::to_string(vs_sw) + "/5); weighted SRCC AW " +
         list(aw_w) + " HW " + list(hw_w) + " (" + std::to_string(vs_hw) + "/5)");
  return o;
}

// ---- criterion 7 -----------------------------------------------------------

Outcome plug_compatibility() {
  Outcome o;
  const std::pair<Method, Method> pairs[] = {
      {Method::EWC, Method::EWC_AW}, {Method::SI, Method::SI_AW}, {Method::MAS, Method::MAS_AW}};
  std::map<Method, int> wins;
  std::map<Method, std::pair<double, double>> means;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto tasks = benchmark_tasks(seed);
    for (const auto& [base, aw] : pairs) {
      const auto recs = run_methods(tasks, seed, {base, aw});
      wins[base] += recs[1].mpsr > recs[0].mpsr;
      means[base].first += recs[0].mpsr / kSeeds;
      means[base].second += recs[1].mpsr / kSeeds;
    }
  }
  for (const auto& [base, aw] : pairs) {
    o.require(wins[base] >= kMajority, to_string(aw) + " > " + to_string(base) + " in " + std::to_string(wins[base]) + "/5");
    o.note(to_string(base) + " " + fmt(means[base].first) + " -> " + to_string(aw) + " " + fmt(means[base].second) +
           " (" + std::to_string(wins[base]) + "/5)");
  }
  return o;
}

// ---- criterion 8 -----------------------------------------------------------

Outcome order_robustness() {
  Outcome o;
  double spread_sum = 0;
  std::vector<double> spreads;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto tasks = benchmark_tasks(seed);
    double lo = 1e300, hi = -1e300;
    for (const auto& order : benchmark_orders(tasks.size())) {
      std::vector<TaskDataset> permuted;
      for (auto i : order) permuted.push_back(tasks[i]);
      const double m = run_methods(permuted, seed, {Method::LwF_AW})[0].mpsr;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    spreads.push_back(hi - lo);
    spread_sum += hi - lo;
  }
  const double mean_spread = spread_sum / kSeeds;
  o.require(mean_spread <= kOrderSpreadLimit, "mean MPSR spread " + fmt(mean_spread));
  o.note("LwF-AW MPSR spread per seed " + list(spreads) + ", mean " + fmt(mean_spread) + " (limit " +
         fmt(kOrderSpreadLimit, 2) + ")");
  return o;
}

// ---- criterion 9 -----------------------------------------------------------

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("clqa_accept_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Outcome persistence() {
  Outcome o;
  auto config = benchmark_run_config(0);
  config.methods = {Method::LwF_AW, Method::EWC_AW};
  config.seeds = {0};
  ScratchDir a, b;
  for (const auto* d : {&a, &b}) {
    cmd_gen(config, d->path);
    cmd_run(config, d->path);
  }
  std::size_t docs = 0;
  bool identical = true;
  for (const auto& e : fs::recursive_directory_iterator(a.path / "results")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path);
    identical &= fs::exists(b.path / rel) && read_file(e.path()) == read_file(b.path / rel);
    docs += e.path().extension() == ".json" && e.path().parent_path() == a.path / "results";
  }
  o.require(identical, "outputs differ between identical runs");
  o.require(docs == 2, std::to_string(docs) + " metrics documents");

  double worst = 0;
  std::size_t checkpoints = 0;
  std::vector<TaskDataset> tasks;
  for (const auto& n : config.task_names()) tasks.push_back(load_task(a.path / "data", n));
  for (const auto& e : fs::recursive_directory_iterator(a.path / "results" / "checkpoints")) {
    if (!e.is_regular_file()) continue;
    const auto ck = load_checkpoint(e.path());
    const auto copy_path = a.path / "roundtrip.json";
    save_checkpoint(copy_path, ck);
    const auto back = load_checkpoint(copy_path);
    for (const auto& task : tasks) {
      Matrix x(task.dim, static_cast<Eigen::Index>(task.test.size()));
      for (std::size_t i = 0; i < task.test.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = task.test[i].features;
      for (auto mode : {WeightingMode::adaptive, WeightingMode::hard, WeightingMode::uniform, WeightingMode::latest}) {
        const Vector p = predict_quality(ck.model, x, {16, mode});
        const Vector q = predict_quality(back.model, x, {16, mode});
        worst = std::max(worst, (p - q).cwiseAbs().maxCoeff());
      }
    }
    identical &= checkpoint_to_json(back) == checkpoint_to_json(ck);
    ++checkpoints;
  }
  o.require(checkpoints == 8, std::to_string(checkpoints) + " checkpoints");
  o.require(worst <= kRoundTripTolerance, "round-trip prediction error " + sci(worst));
  o.note(std::to_string(docs) + " metrics documents byte-identical across reruns; " + std::to_string(checkpoints) +
         " checkpoints, max prediction change " + sci(worst));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> known;
  CLI::App app{"Acceptance criteria"};
  app.add_option("--known-failure", known, "Criterion expected to fail; its FAIL does not affect the exit status");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(known.begin(), known.end());

  struct Criterion {
    int id;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  // 4-6 share one set of runs; their budget covers the shared work.
  const Criterion criteria[] = {
      {1, 10, numerics},          {2, 60, gradients},        {3, 120, equivalences},
      {4, 300, forgetting},       {5, 300, upper_bound},     {6, 300, weighting_ablation},
      {7, 480, plug_compatibility}, {8, 480, order_robustness}, {9, 60, persistence},
  };
  int failures = 0, unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(seconds < c.budget_seconds, "time budget " + fmt(c.budget_seconds, 0) + " s");
    failures += !o.pass;
    unexpected += !o.pass && !expected.contains(c.id);
    std::printf("criterion %d: %s (%.1f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria failed, %d not listed as known\n", failures, unexpected);
  return unexpected == 0 ? 0 : 1;
}
