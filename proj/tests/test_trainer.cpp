#include "doctest.h"

#include "clqa/synthbench.hpp"
#include "clqa/trainer.hpp"

#include <numeric>

using namespace clqa;

namespace {

std::vector<TaskDataset> small_stream(std::uint64_t seed, std::size_t tasks = 3) {
  auto spec = default_sequence_spec(seed, tasks);
  for (auto& t : spec.tasks) {
    t.n_train = 80;
    t.n_test = 40;
  }
  return generate_sequence(spec).tasks;
}

RunSetup small_setup(Method method, std::uint64_t seed, std::optional<Real> lambda = std::nullopt) {
  RunSetup base;
  base.trunk.input_dim = 32;
  base.trunk.layer_widths = {24, 12};
  base.trunk.frozen_prefix_layers = 1;
  base.pairs.pairs_per_task = 300;
  base.train = benchmark_train_config(method, 0);
  base.train.epochs = 4;
  base.train.warmup_epochs = 2;
  base.train.lr_decay_every = 2;
  base.train.kmeans_k = 8;
  base.train.lambda = lambda;
  return replicate_setup(base, method, seed);
}

std::vector<ContinualModel> snapshots_of(std::span<const TaskDataset> tasks, const RunSetup& setup) {
  std::vector<ContinualModel> out;
  RunHooks hooks;
  hooks.on_task = [&](std::size_t, const ContinualModel& m, const RegularizerMemory&) { out.push_back(m); };
  run_sequence(tasks, setup, hooks);
  return out;
}

void check_same_record(const MetricsRecord& a, const MetricsRecord& b) {
  REQUIRE(a.srcc.tasks() == b.srcc.tasks());
  for (std::size_t t = 0; t < a.srcc.tasks(); ++t)
    for (std::size_t k = 0; k <= t; ++k) CHECK(a.srcc.at(t, k) == b.srcc.at(t, k));
  CHECK(a.psr == b.psr);
  CHECK(a.mpsr == b.mpsr);
  CHECK(a.weighted_srcc == b.weighted_srcc);
}

}  // namespace

TEST_CASE("adam examples") {
  auto state = OptimizerState::zeros(1);
  Vector p = Vector::Zero(1);
  optimizer_step(state, p, Vector::Ones(1), 0.1);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(state.step == 1);

  auto zero = OptimizerState::zeros(3);
  Vector q(3);
  q << 1, 2, 3;
  const Vector before = q;
  optimizer_step(zero, q, Vector::Zero(3), 0.1);
  CHECK(q == before);
  CHECK(zero.step == 1);

  auto partial = OptimizerState::zeros(3);
  optimizer_step(partial, q, Vector::Ones(3), 0.1, 2);
  CHECK(q.head(2) == before.head(2));
  CHECK(q[2] != before[2]);
  CHECK(partial.first_moment.head(2).isZero());
  CHECK_THROWS_AS(optimizer_step(partial, q, Vector::Ones(2), 0.1), std::invalid_argument);

  auto s1 = OptimizerState::zeros(3), s2 = OptimizerState::zeros(3);
  Vector a = before, b = before;
  for (int i = 0; i < 5; ++i) {
    const Vector g = Vector::LinSpaced(3, -1.0 + i, 2.0 - i);
    optimizer_step(s1, a, g, 0.01);
    optimizer_step(s2, b, g, 0.01);
  }
  CHECK(a == b);
}

TEST_CASE("learning rate schedule and config validation") {
  TrainConfig c;
  CHECK(c.learning_rate(0) == 3e-4);
  CHECK(c.learning_rate(2) == 3e-4);
  CHECK(c.learning_rate(3) == doctest::Approx(3e-5));
  CHECK(c.learning_rate(8) == doctest::Approx(3e-6));
  CHECK(c.effective_lambda() == 1.0);
  c.method = Method::EWC;
  CHECK(c.effective_lambda() == 10000.0);
  c.method = Method::SI_AW;
  CHECK(c.effective_lambda() == 100.0);
  c.method = Method::MAS;
  CHECK(c.effective_lambda() == 10.0);
  c.lambda = 0.5;
  CHECK(c.effective_lambda() == 0.5);
  auto bad = c;
  bad.warmup_epochs = 20;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.lambda = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.lr_decay_factor = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("method table") {
  for (auto m : all_methods()) CHECK(method_from_string(to_string(m)) == m);
  CHECK(all_methods().size() == 17);
  CHECK_THROWS_AS(method_from_string("LwF-XW"), std::invalid_argument);
  CHECK(training_family(Method::LwF_AW) == training_family(Method::LwF_SW));
  CHECK(inference_weighting(Method::LwF_SW, 16).tau == 0.0);
  CHECK(inference_weighting(Method::LwF_AW, 16).mode == WeightingMode::adaptive);
  CHECK(inference_weighting(Method::LwF_HW, 16).mode == WeightingMode::hard);
  CHECK(inference_weighting(Method::MH_CL_O, 16).mode == WeightingMode::oracle);
  CHECK(inference_weighting(Method::EWC, 16).mode == WeightingMode::latest);
}

TEST_CASE("warm-up epochs leave the trunk untouched") {
  const auto tasks = small_stream(1);
  auto setup = small_setup(Method::LwF, 0);
  setup.train.epochs = 2;
  auto model = init_model(setup.trunk);
  const Vector trunk = model.parameters();
  RegularizerMemory memory;
  const auto pairs = task_pairs(tasks[0], setup.pairs);
  const auto log = train_task(model, tasks[0], pairs, setup.train, Regularizer::lwf, memory, 0);
  const auto lay = model.layout();
  CHECK(model.parameters().head(lay.trunk_size) == trunk);
  CHECK(model.heads.size() == 1);
  CHECK(model.summaries.size() == 1);
  CHECK(log.size() == 2);
  CHECK(log[0].phase == "warmup");
}

TEST_CASE("training reduces the loss") {
  const auto tasks = small_stream(2);
  auto setup = small_setup(Method::MH_CL, 1);
  setup.train.epochs = 6;
  auto model = init_model(setup.trunk);
  RegularizerMemory memory;
  const auto log = train_task(model, tasks[0], task_pairs(tasks[0], setup.pairs), setup.train,
                              Regularizer::none, memory, 0);
  REQUIRE(log.size() == 6);
  CHECK(log.back().mean_loss < log.front().mean_loss);
  CHECK(log.back().phase == "main");
  CHECK(log[4].lr < log[0].lr);
}

TEST_CASE("lambda zero turns every regularizer into plain multi-head training") {
  const auto tasks = small_stream(3);
  const auto base = snapshots_of(tasks, small_setup(Method::MH_CL, 4));
  for (auto m : {Method::LwF, Method::EWC, Method::SI, Method::MAS}) {
    const auto other = snapshots_of(tasks, small_setup(m, 4, 0.0));
    REQUIRE(other.size() == base.size());
    for (std::size_t t = 0; t < base.size(); ++t) CHECK(other[t].parameters() == base[t].parameters());
  }
}

TEST_CASE("separate learning matches multi-head training on the first task") {
  const auto tasks = small_stream(4);
  const auto sl = snapshots_of(tasks, small_setup(Method::SL, 5));
  const auto mh = snapshots_of(tasks, small_setup(Method::MH_CL, 5));
  CHECK(sl[0].parameters() == mh[0].parameters());
  const auto rs = run_sequence(tasks, small_setup(Method::SL, 5));
  const auto rm = run_sequence(tasks, small_setup(Method::MH_CL, 5));
  CHECK(rs.records[0].srcc.at(0, 0) == rm.records[0].srcc.at(0, 0));
  CHECK(rs.records[0].psr[0] == rs.records[0].srcc.at(0, 0));
  CHECK(sl.back().heads.size() == 1);
  CHECK(mh.back().heads.size() == 3);
}

TEST_CASE("one-task runs agree across methods") {
  const auto tasks = small_stream(5);
  const std::span<const TaskDataset> first(tasks.data(), 1);
  const auto ref = run_sequence(first, small_setup(Method::MH_CL, 6));
  for (auto m : {Method::SL, Method::SH_CL, Method::LwF, Method::LwF_AW, Method::LwF_O}) {
    const auto r = run_sequence(first, small_setup(m, 6));
    check_same_record(r.records[0], ref.records[0]);
    CHECK(r.model.parameters() == ref.model.parameters());
  }
  CHECK(ref.records[0].mpsr == ref.records[0].srcc.at(0, 0));
}

TEST_CASE("continual methods never read old training data") {
  const auto tasks = small_stream(6);
  for (auto m : {Method::SL, Method::SH_CL, Method::MH_CL, Method::LwF_AW, Method::EWC, Method::SI, Method::MAS}) {
    std::size_t old_reads = 0, train_reads = 0, future_reads = 0;
    RunHooks hooks;
    hooks.observer = [&](const AccessEvent& e) {
      if (e.dataset > e.current_task) ++future_reads;
      if (e.phase == AccessEvent::Phase::training) {
        ++train_reads;
        if (e.dataset != e.current_task) ++old_reads;
        CHECK(e.split == AccessEvent::Split::train);
      } else {
        CHECK(e.split == AccessEvent::Split::test);
      }
    };
    run_sequence(tasks, small_setup(m, 7), hooks);
    CHECK(old_reads == 0);
    CHECK(future_reads == 0);
    CHECK(train_reads == tasks.size());
  }
  std::size_t joint_reads = 0;
  RunHooks hooks;
  hooks.observer = [&](const AccessEvent& e) { joint_reads += e.phase == AccessEvent::Phase::training; };
  run_sequence(tasks, small_setup(Method::JL, 7), hooks);
  CHECK(joint_reads == tasks.size());
}

TEST_CASE("heads, summaries and the frozen prefix across a run") {
  const auto tasks = small_stream(7);
  const auto setup = small_setup(Method::LwF_AW, 8);
  const auto fresh = init_model(setup.trunk);
  const auto snaps = snapshots_of(tasks, setup);
  for (std::size_t t = 0; t < snaps.size(); ++t) {
    CHECK(snaps[t].heads.size() == t + 1);
    CHECK(snaps[t].summaries.size() == t + 1);
    CHECK(snaps[t].summaries[t].task_index == t);
    CHECK(snaps[t].summaries[t].k() == 8);
    CHECK(snaps[t].layers[0].weight == fresh.layers[0].weight);
    CHECK(snaps[t].layers[0].bias == fresh.layers[0].bias);
    CHECK_NOTHROW(snaps[t].validate());
  }
  CHECK(snaps[2].layers[1].weight != fresh.layers[1].weight);
}

TEST_CASE("quadratic methods carry importance between tasks") {
  const auto tasks = small_stream(8);
  for (auto m : {Method::EWC, Method::SI, Method::MAS}) {
    std::vector<Vector> betas;
    RunHooks hooks;
    hooks.on_task = [&](std::size_t, const ContinualModel& model, const RegularizerMemory& memory) {
      REQUIRE(memory.importance);
      CHECK(memory.importance->beta.size() == model.layout().plastic_trunk_size());
      CHECK(memory.importance->beta.minCoeff() >= 0.0);
      betas.push_back(memory.importance->beta);
    };
    run_sequence(tasks, small_setup(m, 9), hooks);
    REQUIRE(betas.size() == 3);
    CHECK((betas[1].array() >= betas[0].array()).all());
    CHECK(betas[2].sum() > betas[0].sum());
  }
}

TEST_CASE("runs are deterministic") {
  const auto tasks = small_stream(9);
  const auto a = run_sequence(tasks, small_setup(Method::LwF_AW, 10));
  const auto b = run_sequence(tasks, small_setup(Method::LwF_AW, 10));
  CHECK(a.model.parameters() == b.model.parameters());
  check_same_record(a.records[0], b.records[0]);
  const auto c = run_sequence(tasks, small_setup(Method::LwF_AW, 11));
  CHECK(c.model.parameters() != a.model.parameters());
}

TEST_CASE("one family run serves several weightings") {
  const auto tasks = small_stream(10);
  const auto setup = small_setup(Method::LwF, 12);
  const std::vector<WeightingConfig> ws{inference_weighting(Method::LwF, 16), inference_weighting(Method::LwF_AW, 16),
                                        inference_weighting(Method::LwF_O, 16)};
  const auto fam = run_family(tasks, setup, training_family(Method::LwF), ws);
  REQUIRE(fam.records.size() == 3);
  check_same_record(fam.records[1], run_sequence(tasks, small_setup(Method::LwF_AW, 12)).records[0]);
  check_same_record(fam.records[2], run_sequence(tasks, small_setup(Method::LwF_O, 12)).records[0]);
  CHECK_THROWS_AS(run_family(tasks, setup, training_family(Method::LwF), {}), std::invalid_argument);
}

TEST_CASE("heavy distillation anchors old heads") {
  const auto tasks = small_stream(11, 2);
  auto measure = [&](Real lambda) {
    auto setup = small_setup(Method::LwF, 13, lambda);
    auto model = init_model(setup.trunk);
    RegularizerMemory memory;
    train_task(model, tasks[0], task_pairs(tasks[0], setup.pairs), setup.train, Regularizer::lwf, memory, 0);
    const auto pairs = task_pairs(tasks[1], setup.pairs);
    const auto recorded = lwf_pseudo_labels(model, tasks[1].train, pairs, 1);
    train_task(model, tasks[1], pairs, setup.train, Regularizer::lwf, memory, 1);
    const auto after = lwf_pseudo_labels(model, tasks[1].train, pairs, 1);
    double diff = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) diff += std::abs(after[0].labels[i] - recorded[0].labels[i]);
    return diff / static_cast<double>(pairs.size());
  };
  const double anchored = measure(1e3);
  const double free = measure(0.0);
  CHECK(anchored <= 0.01);
  CHECK(free > anchored);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto tasks = small_stream(12);
  auto setup = small_setup(Method::MH_CL, 0);
  setup.trunk.input_dim = 31;
  CHECK_THROWS_AS(run_sequence(tasks, setup), std::invalid_argument);
  CHECK_THROWS_AS(run_sequence(std::span<const TaskDataset>{}, small_setup(Method::MH_CL, 0)), std::invalid_argument);
}
