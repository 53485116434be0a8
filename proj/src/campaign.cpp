#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "dcrab/errors.hpp"
#include "dcrab/experiments.hpp"

namespace dcrab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestSchema = "dcrab-manifest/1";
constexpr int kTraceRows = 2000;

void write_file_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename Writer>
void write_text(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_file_atomically(path, out.str());
}

std::string run_name(const TargetSpec& t) {
  return "N" + std::to_string(t.n_qubits) + "_a" + std::to_string(t.excitations);
}

json row_to_json(const CampaignRow& row) {
  return {{"N", row.target.n_qubits},
          {"a", row.target.excitations},
          {"t_min", row.t_min ? json(*row.t_min) : json(nullptr)},
          {"infidelity", row.infidelity},
          {"seed", row.seed},
          {"converged", row.converged}};
}

CampaignRow row_from_json(const json& j) {
  CampaignRow row{};
  row.target = {j.at("N").get<int>(), j.at("a").get<int>()};
  if (!j.at("t_min").is_null()) row.t_min = j["t_min"].get<double>();
  row.infidelity = j.at("infidelity").get<double>();
  row.seed = j.at("seed").get<std::uint64_t>();
  row.converged = j.at("converged").get<bool>();
  return row;
}

void sort_rows(std::vector<CampaignRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const CampaignRow& a, const CampaignRow& b) {
    return std::pair(a.target.excitations, a.target.n_qubits) <
           std::pair(b.target.excitations, b.target.n_qubits);
  });
}

class Manifest {
 public:
  Manifest(fs::path directory, std::vector<CampaignRow> rows)
      : path_(directory / "manifest.json"), rows_(std::move(rows)) {}

  bool contains(const TargetSpec& t) const {
    return std::any_of(rows_.begin(), rows_.end(),
                       [&](const CampaignRow& r) { return r.target == t; });
  }

  void add(const CampaignRow& row) {
    std::lock_guard lock(mutex_);
    rows_.push_back(row);
    sort_rows(rows_);
    save();
  }

  void save() const {
    json runs = json::array();
    for (const CampaignRow& r : rows_) runs.push_back(row_to_json(r));
    write_file_atomically(path_, json{{"schema", kManifestSchema}, {"runs", runs}}.dump(2) + "\n");
  }

  std::vector<CampaignRow> rows() const { return rows_; }

 private:
  fs::path path_;
  std::vector<CampaignRow> rows_;
  mutable std::mutex mutex_;
};

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out.precision(12);
  out << "index,T,best_infidelity,success,restarts_used\n";
  for (const SweepPoint& p : points) {
    out << p.index << ',' << p.duration << ',' << p.best_infidelity << ','
        << (p.success ? 1 : 0) << ',' << p.restarts_used << '\n';
  }
}

CampaignRow run_target(const ExperimentConfig& config, const TargetSpec& target,
                       const fs::path& run_dir) {
  const ProblemFactory factory = [&](double duration, std::uint64_t seed) {
    ControlProblem p = config.problem(target, duration);
    p.seed = seed;
    return p;
  };
  const TminResult sweep =
      tmin_sweep(factory, config.target_seed(target), config.sweep_settings(),
                 config.dcrab_settings());

  fs::create_directories(run_dir);
  write_text(run_dir / "sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, sweep.points); });

  CampaignRow row{target, sweep.t_min, 1.0, config.target_seed(target), sweep.converged};
  if (!sweep.best) return row;

  const DcrabResult& best = *sweep.best;
  row.infidelity = best.record.final_infidelity;
  row.seed = best.record.seed;

  write_file_atomically(run_dir / "record.json", record_to_json(best.record));
  write_file_atomically(run_dir / "pulse.json", pulse_to_json(best.pulse));
  write_text(run_dir / "coefficients.csv",
             [&](std::ostream& out) { write_coefficients_csv(out, best.record); });
  write_text(run_dir / "pulse_shape.csv",
             [&](std::ostream& out) { write_pulse_shape_csv(out, best.pulse); });

  const ControlProblem problem = factory(best.pulse.duration(), best.record.seed);
  PropagationSettings trace_settings;
  trace_settings.n_steps = std::max(best.record.verification_steps, best.record.n_steps);
  trace_settings.record_stride = std::max(1, trace_settings.n_steps / kTraceRows);
  const EvolutionResult evolution =
      evolve(problem.drift, problem.control, [&](double t) { return best.pulse.evaluate(t); },
             problem.duration, problem.initial, trace_settings, &problem.target);
  write_text(run_dir / "trace.csv",
             [&](std::ostream& out) { write_trace_csv(out, *evolution.trace); });
  return row;
}

}  // namespace

std::vector<CampaignRow> read_manifest(const fs::path& directory) {
  const fs::path path = directory / "manifest.json";
  if (!fs::exists(path)) return {};
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open manifest");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": byte " + std::to_string(e.byte), e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != kManifestSchema) {
    throw UnsupportedVersionError(path.string() + ": /schema",
                                  std::string("expected ") + kManifestSchema);
  }
  std::vector<CampaignRow> rows;
  try {
    for (const json& r : doc.at("runs")) rows.push_back(row_from_json(r));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": /runs", e.what());
  }
  sort_rows(rows);
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<CampaignRow>& rows) {
  const auto old_precision = out.precision(12);
  out << "N,a,T_min,infidelity,seed\n";
  for (const CampaignRow& r : rows) {
    out << r.target.n_qubits << ',' << r.target.excitations << ',';
    if (r.t_min) {
      out << *r.t_min;
    } else {
      out << "NA";
    }
    out << ',' << r.infidelity << ',' << r.seed << '\n';
  }
  out.precision(old_precision);
}

std::vector<std::pair<double, double>> scaling_points(const std::vector<CampaignRow>& rows,
                                                      int excitations) {
  std::vector<std::pair<double, double>> out;
  for (const CampaignRow& r : rows) {
    if (r.target.excitations == excitations && r.converged && r.t_min) {
      out.emplace_back(static_cast<double>(r.target.n_qubits), *r.t_min);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CampaignSummary run_campaign(const ExperimentConfig& config) {
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir / "runs");
  Manifest manifest(dir, read_manifest(dir));
  write_file_atomically(dir / "config.json", config_to_json(config));

  CampaignSummary summary;
  summary.directory = dir;
  std::vector<TargetSpec> todo;
  for (const TargetSpec& t : config.targets) {
    if (manifest.contains(t) ||
        std::find(todo.begin(), todo.end(), t) != todo.end()) {
      summary.skipped.push_back(t);
    } else {
      todo.push_back(t);
    }
  }

  parallel_for(todo.size(), config.threads, [&](std::size_t i) {
    manifest.add(run_target(config, todo[i], dir / "runs" / run_name(todo[i])));
  });
  if (todo.empty()) manifest.save();

  summary.rows = manifest.rows();
  write_text(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, summary.rows); });
  return summary;
}

}  // namespace dcrab
