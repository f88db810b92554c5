#include "clqa/commands.hpp"
#include "clqa/checkpoint.hpp"
#include "clqa/dataset_io.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace clqa {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMetricsKind = "clqa-metrics";

fs::path resolve(const fs::path& out, const fs::path& p) { return p.is_absolute() ? p : out / p; }

std::string family_tag(TrainingFamily f) {
  std::string kind;
  switch (f.kind) {
    case TrainingFamily::Kind::separate: kind = "separate"; break;
    case TrainingFamily::Kind::joint: kind = "joint"; break;
    case TrainingFamily::Kind::single_head: kind = "single-head"; break;
    case TrainingFamily::Kind::multi_head: kind = "multi-head"; break;
  }
  return kind + "-" + to_string(f.regularizer);
}

std::string cell_stem(Method method, std::uint64_t seed) {
  return to_string(method) + "_seed" + std::to_string(seed);
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string fixed(Real v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<TaskDataset> load_stream(const RunConfig& config, const fs::path& out) {
  const fs::path dir = resolve(out, config.data.dir);
  std::vector<TaskDataset> tasks;
  for (const auto& name : config.task_names()) {
    tasks.push_back(load_task(dir, name));
    tasks.back().validate();
    if (tasks.back().dim != tasks.front().dim) {
      throw std::invalid_argument("task '" + name + "' has feature dimension " +
                                  std::to_string(tasks.back().dim) + ", expected " +
                                  std::to_string(tasks.front().dim));
    }
  }
  return tasks;
}

}  // namespace

std::vector<fs::path> cmd_gen(const RunConfig& config, const fs::path& out) {
  if (!config.data.synthetic) throw std::invalid_argument("gen: config has no data.synthetic section");
  const auto sequence = generate_sequence(*config.data.synthetic);
  const fs::path dir = resolve(out, config.data.dir);
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (const auto& task : sequence.tasks) {
    std::ostringstream train, test;
    write_feature_table(train, task.train, task.dim);
    write_feature_table(test, task.test, task.dim);
    written.push_back(dir / (task.name + "_train.csv"));
    write_file_atomic(written.back(), train.str());
    written.push_back(dir / (task.name + "_test.csv"));
    write_file_atomic(written.back(), test.str());
  }
  written.push_back(dir / "manifest.json");
  write_file_atomic(written.back(), sequence.manifest);
  spdlog::info("gen: wrote {} tasks to {}", sequence.tasks.size(), dir.string());
  return written;
}

std::vector<CellResult> cmd_run(const RunConfig& config, const fs::path& out, const RunOptions& options) {
  const auto methods = options.methods.empty() ? config.methods : options.methods;
  const auto seeds = options.seeds.empty() ? config.seeds : options.seeds;
  if (methods.empty() || seeds.empty()) throw std::invalid_argument("run: no methods or seeds");
  const auto tasks = load_stream(config, out);
  const fs::path results = resolve(out, config.output_dir);
  fs::create_directories(results);

  std::vector<std::string> names;
  for (const auto& t : tasks) names.push_back(t.name);

  // Methods grouped by training family, in first-appearance order.
  std::vector<std::pair<TrainingFamily, std::vector<Method>>> groups;
  for (auto m : methods) {
    const auto f = training_family(m);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == f; });
    if (it == groups.end()) {
      groups.push_back({f, {m}});
    } else if (std::find(it->second.begin(), it->second.end(), m) == it->second.end()) {
      it->second.push_back(m);
    }
  }

  std::vector<CellResult> cells;
  for (auto seed : seeds) {
    for (const auto& [family, members] : groups) {
      std::vector<WeightingConfig> weightings;
      for (auto m : members) weightings.push_back(inference_weighting(m, config.weighting.tau));
      const RunSetup setup = cell_setup(config, members.front(), seed, tasks.front().dim);
      const std::string tag = family_tag(family) + "_seed" + std::to_string(seed);
      spdlog::info("run: {} ({} tasks, {} inference rules)", tag, tasks.size(), members.size());

      RunHooks hooks;
      if (options.checkpoints) {
        const fs::path ckdir = results / "checkpoints" / tag;
        fs::create_directories(ckdir);
        hooks.on_task = [&, ckdir](std::size_t t, const ContinualModel& model, const RegularizerMemory& memory) {
          Checkpoint ck{model, memory.importance, t + 1};
          save_checkpoint(ckdir / ("task" + std::to_string(t + 1) + ".json"), ck);
        };
      }
      const RunResult run = run_family(tasks, setup, family, weightings, hooks);

      std::string log;
      for (const auto& e : run.log) {
        nlohmann::ordered_json line;
        line["task"] = e.task + 1;
        line["task_name"] = family.kind == TrainingFamily::Kind::joint ? "joint" : names[e.task];
        line["epoch"] = e.epoch + 1;
        line["phase"] = e.phase;
        line["mean_loss"] = e.mean_loss;
        line["lr"] = e.lr;
        log += line.dump() + "\n";
      }
      fs::create_directories(results / "logs");
      write_file_atomic(results / "logs" / (tag + ".jsonl"), log);

      for (std::size_t i = 0; i < members.size(); ++i) {
        const Method m = members[i];
        const std::vector<std::pair<std::string, std::string>> meta = {
            {"kind", kMetricsKind}, {"method", to_string(m)}, {"seed", std::to_string(seed)},
            {"tasks", join(names, ",")}};
        CellResult cell{m, seed, run.records[i], results / (cell_stem(m, seed) + ".json")};
        write_file_atomic(cell.metrics_path, metrics_to_json(cell.record, meta));
        std::ostringstream table;
        write_srcc_table(table, cell.record.srcc, names);
        write_file_atomic(results / (cell_stem(m, seed) + "_srcc.csv"), table.str());
        spdlog::info("run: {} seed {}: MPSR {:.4f}, weighted SRCC {:.4f}", to_string(m), seed,
                     cell.record.mpsr, cell.record.weighted_srcc);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

Report build_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("report: " + dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  struct Acc {
    std::vector<Real> mpsr, wsrcc;
    std::vector<std::vector<Real>> psr;
  };
  std::map<std::string, Acc> by_method;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.value("kind", "") != kMetricsKind) continue;
    const MetricsRecord stored = metrics_from_json(text);
    const MetricsRecord rec = make_record(stored.srcc, stored.test_set_sizes);
    auto& acc = by_method[doc.at("method").get<std::string>()];
    acc.mpsr.push_back(rec.mpsr);
    acc.wsrcc.push_back(rec.weighted_srcc);
    acc.psr.push_back(rec.psr);
  }
  if (by_method.empty()) throw std::invalid_argument("report: no metrics documents in " + dir.string());

  auto rank = [](const std::string& name) {
    const auto& all = all_methods();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (to_string(all[i]) == name) return i;
    }
    return all.size();
  };
  std::vector<std::string> order;
  for (const auto& [name, acc] : by_method) order.push_back(name);
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });

  Report report;
  for (const auto& name : order) {
    const auto& acc = by_method.at(name);
    ReportRow row;
    row.method = name;
    row.seeds = acc.mpsr.size();
    auto stats = [](const std::vector<Real>& v, Real& mean, Real& lo, Real& hi) {
      mean = 0;
      for (Real x : v) mean += x;
      mean /= static_cast<Real>(v.size());
      lo = *std::min_element(v.begin(), v.end());
      hi = *std::max_element(v.begin(), v.end());
    };
    stats(acc.mpsr, row.mpsr_mean, row.mpsr_min, row.mpsr_max);
    stats(acc.wsrcc, row.wsrcc_mean, row.wsrcc_min, row.wsrcc_max);
    std::size_t length = 0;
    for (const auto& p : acc.psr) length = std::max(length, p.size());
    for (std::size_t t = 0; t < length; ++t) {
      Real sum = 0;
      std::size_t n = 0;
      for (const auto& p : acc.psr) {
        if (t < p.size()) {
          sum += p[t];
          ++n;
        }
      }
      row.psr_mean.push_back(sum / static_cast<Real>(n));
    }
    report.rows.push_back(std::move(row));
  }

  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.method.size());
  std::ostringstream t;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %5s  %-26s  %s\n", static_cast<int>(width), "method", "seeds",
                "MPSR mean [min, max]", "weighted SRCC mean [min, max]");
  t << line;
  for (const auto& r : report.rows) {
    const std::string m = fixed(r.mpsr_mean) + " [" + fixed(r.mpsr_min) + ", " + fixed(r.mpsr_max) + "]";
    const std::string w = fixed(r.wsrcc_mean) + " [" + fixed(r.wsrcc_min) + ", " + fixed(r.wsrcc_max) + "]";
    std::snprintf(line, sizeof(line), "%-*s  %5zu  %-26s  %s\n", static_cast<int>(width), r.method.c_str(),
                  r.seeds, m.c_str(), w.c_str());
    t << line;
  }
  report.table = t.str();
  report.svg = psr_plot_svg(report.rows);
  return report;
}

Report cmd_report(const fs::path& dir, const fs::path& out) {
  Report report = build_report(dir);
  fs::create_directories(out);
  write_file_atomic(out / "report.txt", report.table);
  write_file_atomic(out / "psr.svg", report.svg);
  return report;
}

std::string psr_plot_svg(const std::vector<ReportRow>& rows) {
  constexpr Real kWidth = 640, kHeight = 400;
  constexpr Real kLeft = 60, kRight = 170, kTop = 20, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::size_t length = 1;
  Real lo = 1, hi = 0;
  for (const auto& r : rows) {
    length = std::max(length, r.psr_mean.size());
    for (Real v : r.psr_mean) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi < lo) {
    lo = 0;
    hi = 1;
  }
  lo = std::floor(lo * 10) / 10;
  hi = std::ceil(hi * 10) / 10;
  if (hi - lo < 0.1) hi = lo + 0.1;
  const Real plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto x_of = [&](std::size_t t) {
    return kLeft + (length == 1 ? plot_w / 2 : plot_w * static_cast<Real>(t) / static_cast<Real>(length - 1));
  };
  auto y_of = [&](Real v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  for (std::size_t t = 0; t < length; ++t) {
    s << "<text x=\"" << x_of(t) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">" << t + 1
      << "</text>\n";
  }
  const int ticks = static_cast<int>(std::lround((hi - lo) / 0.1));
  for (int i = 0; i <= ticks; ++i) {
    const Real v = lo + 0.1 * i;
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">" << fixed(v, 1)
      << "</text>\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << y_of(v) << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << y_of(v)
      << "\" stroke=\"#dddddd\"/>\n";
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">task index t</text>\n";
  s << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + plot_h / 2 << ")\">PSR_t</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    const auto& r = rows[i];
    s << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t t = 0; t < r.psr_mean.size(); ++t) {
      s << (t ? " " : "") << fixed(x_of(t), 2) << "," << fixed(y_of(r.psr_mean[t]), 2);
    }
    s << "\"/>\n";
    for (std::size_t t = 0; t < r.psr_mean.size(); ++t) {
      s << "<circle cx=\"" << fixed(x_of(t), 2) << "\" cy=\"" << fixed(y_of(r.psr_mean[t]), 2)
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const Real ly = kTop + 10 + 18 * static_cast<Real>(i);
    const Real lx = kLeft + plot_w + 15;
    s << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly << "\" stroke=\""
      << color << "\" stroke-width=\"2\"/>\n";
    s << "<text class=\"legend\" x=\"" << lx + 26 << "\" y=\"" << ly + 4 << "\">" << r.method << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string cmd_inspect(const fs::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  const auto& m = ck.model;
  std::ostringstream s;
  s << "checkpoint " << path.string() << "\n";
  s << "tasks seen: " << ck.tasks_seen << "\n";
  s << "trunk: input " << m.config.input_dim << ", widths [";
  for (std::size_t i = 0; i < m.config.layer_widths.size(); ++i) s << (i ? ", " : "") << m.config.layer_widths[i];
  s << "], frozen prefix " << m.config.frozen_prefix_layers << " layer(s), seed " << m.config.seed << "\n";
  const auto layout = m.layout();
  s << "parameters: " << layout.total_size << " (frozen " << layout.frozen_size << ", trunk "
    << layout.trunk_size << ")\n";
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    s << "  layer " << l + 1 << ": " << m.layers[l].weight.rows() << "x" << m.layers[l].weight.cols()
      << "  |W| " << fixed(m.layers[l].weight.norm()) << "  |b| " << fixed(m.layers[l].bias.norm())
      << (l < m.config.frozen_prefix_layers ? "  (frozen)" : "") << "\n";
  }
  s << "heads: " << m.heads.size() << "\n";
  for (std::size_t h = 0; h < m.heads.size(); ++h) {
    s << "  head " << h + 1 << ": |psi| " << fixed(m.heads[h].norm()) << "\n";
  }
  s << "summaries: " << m.summaries.size() << "\n";
  for (const auto& sum : m.summaries) {
    s << "  task " << sum.task_index + 1 << ": " << sum.k() << " centroids of dim " << sum.dim()
      << ", mean centroid norm " << fixed(sum.k() ? sum.centroids.colwise().norm().mean() : 0.0) << "\n";
  }
  if (ck.importance) {
    const auto& imp = *ck.importance;
    s << "importance: " << to_string(imp.method) << " over " << imp.beta.size() << " parameters from offset "
      << imp.offset << ", sum " << imp.beta.sum() << ", max " << (imp.beta.size() ? imp.beta.maxCoeff() : 0.0)
      << "\n";
  }
  return s.str();
}

}  // namespace clqa
