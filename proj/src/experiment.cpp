// SPDX-License-Identifier: Apache-2.0
#include "tfmd/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>

#include "tfmd/error.hpp"
#include "tfmd/imbalance.hpp"

namespace tfmd {
namespace {

// SplitMix64 finalizer; decorrelates the per-purpose seed streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  return os;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

void close_checked(std::ofstream& os, const std::filesystem::path& path) {
  os.close();
  if (!os) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::size_t> labels_of(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.records[i].label);
  return out;
}

const char* kTableHeader =
    "accuracy,precision,recall,f1,auc,aupr,tail_precision,tail_recall,tail_f1";

std::string table_cells(const MetricsReport& r, const SubsetMacro& t) {
  return num(r.accuracy) + ',' + num(r.macro_precision) + ',' + num(r.macro_recall) +
         ',' + num(r.macro_f1) + ',' + num(r.macro_auc) + ',' + num(r.macro_aupr) +
         ',' + num(t.precision) + ',' + num(t.recall) + ',' + num(t.f1);
}

void write_table(const std::filesystem::path& path, const char* first_column,
                 const std::vector<TableRow>& rows) {
  std::ofstream os = open_out(path);
  os << first_column << ',' << kTableHeader << '\n';
  for (const TableRow& row : rows) {
    os << row.label << ',' << table_cells(row.report, row.tail) << '\n';
  }
  close_checked(os, path);
}

void log_row(std::ostream& log, const TableRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-6s acc=%.4f f1=%.4f auc=%.4f aupr=%.4f tail_f1=%.4f\n",
                row.label.c_str(), row.report.accuracy, row.report.macro_f1,
                row.report.macro_auc, row.report.macro_aupr, row.tail.f1);
  log << buf;
}

}  // namespace

Dataset resolve_dataset(const RunConfig& config) {
  if (!config.dataset_path.empty()) return read_dataset(config.dataset_path);
  DatasetSpec spec = config.generator;
  spec.seed = config.dataset_seed.value_or(config.seed);
  return generate_dataset(spec);
}

RunResult run_experiment(const RunConfig& config, const Dataset& data,
                         std::optional<FusionModel>* model_out) {
  config.validate();
  const std::vector<std::size_t> labels = data.labels();
  const Split split = make_split(labels, data.n_classes, config.split.train,
                                 config.split.test, config.split.stratified,
                                 derive_seed(config.seed, 1));
  const ClassStats train_stats =
      class_stats_from_labels(labels_of(data, split.train), data.n_classes);

  ModelConfig mc = config.model;
  mc.embed_dims = data.dims;
  mc.n_classes = data.n_classes;
  FusionModel model = FusionModel::init(mc, derive_seed(config.seed, 2));

  const LossSpec loss(config.loss_kind, config.loss, train_stats);
  OptimizerConfig optim = config.optim;
  optim.shuffle_seed = derive_seed(config.seed, 3);

  RunResult result;
  result.trace = train(model, data.records, split.train, split.val, loss, optim);
  const Matrix proba = predict_proba(model, data.records, split.test);
  result.report = evaluate(proba, labels_of(data, split.test));
  result.tail = macro_over(result.report,
                           tail_partition(train_stats, config.report_tail_threshold).is_tail);
  result.n_train = split.train.size();
  result.n_val = split.val.size();
  result.n_test = split.test.size();
  if (model_out) *model_out = std::move(model);
  return result;
}

Dataset cmd_gen(const RunConfig& config, std::ostream& log) {
  const Dataset data = resolve_dataset(config);
  ensure_dir(config.out);
  write_dataset(data, config.out / "dataset.tsv");

  const ClassStats stats = data.stats();
  const auto path = config.out / "class_counts.csv";
  std::ofstream os = open_out(path);
  os << "class,count\n";
  for (std::size_t c = 0; c < stats.counts().size(); ++c) {
    os << c << ',' << stats.counts()[c] << '\n';
  }
  close_checked(os, path);
  log << "records=" << data.records.size() << " classes=" << data.n_classes
      << " cir=" << num(stats.cir()) << '\n';
  return data;
}

RunResult cmd_train(const RunConfig& config, std::ostream& log) {
  const Dataset data = resolve_dataset(config);
  ensure_dir(config.out);
  {
    const auto path = config.out / "effective_config.txt";
    std::ofstream os = open_out(path);
    os << format_run_config(config);
    close_checked(os, path);
  }
  std::optional<FusionModel> model;
  const RunResult result = run_experiment(config, data, &model);

  {
    const auto path = config.out / "metrics.txt";
    std::ofstream os = open_out(path);
    os << "# generated_at=" << utc_timestamp() << '\n';
    write_summary(os, result.report);
    os << "tail_classes=" << result.tail.classes << '\n'
       << "tail_precision=" << num(result.tail.precision) << '\n'
       << "tail_recall=" << num(result.tail.recall) << '\n'
       << "tail_f1=" << num(result.tail.f1) << '\n'
       << "tail_auc=" << num(result.tail.auc) << '\n'
       << "tail_aupr=" << num(result.tail.aupr) << '\n'
       << "n_train=" << result.n_train << '\n'
       << "n_val=" << result.n_val << '\n'
       << "n_test=" << result.n_test << '\n'
       << "epochs_run=" << result.trace.epochs.size() << '\n'
       << "best_epoch=" << result.trace.best_epoch << '\n';
    close_checked(os, path);
  }
  {
    const auto path = config.out / "per_class.csv";
    std::ofstream os = open_out(path);
    write_per_class_csv(os, result.report);
    close_checked(os, path);
  }
  {
    const auto path = config.out / "trace.csv";
    std::ofstream os = open_out(path);
    os << "epoch,train_loss,train_accuracy,val_macro_f1\n";
    for (const EpochRecord& e : result.trace.epochs) {
      os << e.epoch << ',' << num(e.train_loss) << ',' << num(e.train_accuracy) << ','
         << num(e.val_macro_f1) << '\n';
    }
    close_checked(os, path);
  }
  save_checkpoint(*model, config.out / "model.ckpt");

  log << "accuracy=" << num(result.report.accuracy)
      << " macro_f1=" << num(result.report.macro_f1)
      << " tail_f1=" << num(result.tail.f1) << '\n';
  return result;
}

std::vector<TableRow> cmd_compare_losses(const RunConfig& config, std::ostream& log) {
  const Dataset data = resolve_dataset(config);
  ensure_dir(config.out);
  std::vector<TableRow> rows;
  for (LossKind kind : config.compare_losses) {
    RunConfig run = config;
    run.loss_kind = kind;
    const RunResult r = run_experiment(run, data);
    rows.push_back({std::string(to_string(kind)), r.report, r.tail});
    log_row(log, rows.back());
  }
  write_table(config.out / "compare_losses.csv", "loss", rows);
  return rows;
}

std::vector<TableRow> cmd_ablate(const RunConfig& config, std::ostream& log) {
  std::vector<ModalitySet> sets;
  for (const std::string& v : config.variants) sets.push_back(ModalitySet::parse(v));
  const Dataset data = resolve_dataset(config);
  ensure_dir(config.out);
  std::vector<TableRow> rows;
  for (const ModalitySet& set : sets) {
    RunConfig run = config;
    run.model.modalities = set;
    const RunResult r = run_experiment(run, data);
    rows.push_back({std::string(to_string(config.loss_kind)) + "-" + set.name(), r.report,
                    r.tail});
    log_row(log, rows.back());
  }
  write_table(config.out / "ablation.csv", "variant", rows);
  return rows;
}

std::vector<SweepPoint> cmd_sweep(const RunConfig& config, std::ostream& log) {
  config.sweep.validate();
  const Dataset data = resolve_dataset(config);
  ensure_dir(config.out);
  std::vector<SweepPoint> points;
  for (double value : config.sweep.grid) {
    SweepPoint point;
    point.value = value;
    for (std::size_t rep = 0; rep < config.sweep.repeats; ++rep) {
      RunConfig run = config;
      run.seed = config.seed + rep;
      switch (config.sweep.param) {
        case SweepParam::kBeta: run.loss.beta = value; break;
        case SweepParam::kTs: run.loss.tail_threshold = value; break;
        case SweepParam::kGamma: run.loss.gamma = value; break;
      }
      point.runs.push_back(run_experiment(run, data).report);
    }
    log << to_string(config.sweep.param) << '=' << num(value)
        << " mean_f1=";
    double f1 = 0.0;
    for (const auto& r : point.runs) f1 += r.macro_f1;
    log << num(f1 / static_cast<double>(point.runs.size())) << '\n';
    points.push_back(std::move(point));
  }

  const auto path = config.out / "sweep.csv";
  std::ofstream os = open_out(path);
  const char* names[] = {"accuracy", "precision", "recall", "f1", "auc", "aupr"};
  os << to_string(config.sweep.param) << ",repeats";
  for (const char* n : names) os << ',' << n << "_mean," << n << "_std";
  os << '\n';
  for (const SweepPoint& p : points) {
    os << num(p.value) << ',' << p.runs.size();
    for (int k = 0; k < 6; ++k) {
      auto pick = [k](const MetricsReport& r) {
        const double v[] = {r.accuracy, r.macro_precision, r.macro_recall,
                            r.macro_f1, r.macro_auc, r.macro_aupr};
        return v[k];
      };
      double mean = 0.0;
      for (const auto& r : p.runs) mean += pick(r);
      mean /= static_cast<double>(p.runs.size());
      double var = 0.0;
      for (const auto& r : p.runs) var += (pick(r) - mean) * (pick(r) - mean);
      const double sd = p.runs.size() > 1
                            ? std::sqrt(var / static_cast<double>(p.runs.size() - 1))
                            : 0.0;
      os << ',' << num(mean) << ',' << num(sd);
    }
    os << '\n';
  }
  close_checked(os, path);
  return points;
}

VanishingReport cmd_analyze(const RunConfig& config, std::ostream& log) {
  const double gamma = config.loss.gamma, beta = config.loss.beta;
  VanishingReport report;
  switch (config.loss_kind) {
    case LossKind::kFL: report = fl_vanishing_threshold(gamma); break;
    case LossKind::kTFL: report = tfl_vanishing_threshold(gamma, beta); break;
    default:
      fail(ErrorCode::kParameter, "analyze supports FL and TFL, not " +
                                      std::string(to_string(config.loss_kind)));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", report.crossover_p);
  log << "loss=" << to_string(report.loss_kind) << " gamma=" << num(gamma);
  if (report.loss_kind == LossKind::kTFL) log << " beta=" << num(beta);
  log << " crossover_p=" << buf
      << " in_unit_interval=" << (report.in_unit_interval ? "true" : "false") << '\n';

  ensure_dir(config.out);
  {
    const auto path = config.out / "vanishing.txt";
    std::ofstream os = open_out(path);
    os << "loss=" << to_string(report.loss_kind) << "\ngamma=" << num(gamma)
       << "\nbeta=" << num(report.loss_kind == LossKind::kTFL ? beta : 0.0)
       << "\ncrossover_p=" << num(report.crossover_p)
       << "\nin_unit_interval=" << (report.in_unit_interval ? "true" : "false") << '\n';
    close_checked(os, path);
  }
  const std::vector<double> grid = uniform_grid();
  const std::pair<const char*, CurveSpec> curves[] = {
      {"curve_ce.csv", CurveSpec{LossKind::kCE, gamma, beta, 1.0, true}},
      {"curve_fl.csv", CurveSpec{LossKind::kFL, gamma, beta, 1.0, true}},
      {"curve_tfl.csv", CurveSpec{LossKind::kTFL, gamma, beta, 1.0, true}},
  };
  for (const auto& [name, spec] : curves) {
    const auto path = config.out / name;
    std::ofstream os = open_out(path);
    write_curve_csv(os, curve_export(spec, grid));
    close_checked(os, path);
  }
  return report;
}

}  // namespace tfmd
