#include "noisenet/predict/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/rng.hpp"

namespace fs = std::filesystem;

namespace noisenet::predict {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

std::string_view label_name(Label l) { return l == Label::Prefail ? "prefail" : "stable"; }

Label parse_label(std::string_view s) {
  if (s == "prefail") return Label::Prefail;
  if (s == "stable") return Label::Stable;
  throw FormatError(fmt::format("unknown label '{}'", s));
}

std::set<std::pair<std::string, Timestamp>> Selection::capture_set() const {
  std::set<std::pair<std::string, Timestamp>> out;
  for (const auto& w : windows) out.emplace(w.sensor_id, w.t0);
  return out;
}

Selection select_windows(const monitor::YieldMatrix& matrix, std::uint64_t seed, const ExtractOptions& options) {
  if (options.lead_hours < 1) throw DomainError("lead time must be at least one hour");
  if (options.stability_hours < 1) throw DomainError("stability span must be at least one hour");
  Selection sel;
  sel.downtimes = detect_downtime(matrix, options.downtime_threshold_hours);
  const auto n_hours = static_cast<std::ptrdiff_t>(matrix.hours.size());
  std::map<Timestamp, std::ptrdiff_t> hour_pos;
  for (std::ptrdiff_t j = 0; j < n_hours; ++j) hour_pos[matrix.hours[j]] = j;

  for (std::size_t s = 0; s < matrix.sensors.size(); ++s) {
    const auto& sensor = matrix.sensors[s];
    const auto& row = matrix.cells[s];
    std::vector<WindowSpec> prefail;
    for (const auto& d : sel.downtimes) {
      if (d.sensor_id != sensor || !d.eligible) continue;
      const auto t0 = d.start - kHour * options.lead_hours;
      if (hour_pos.count(t0) == 0) continue;  // window before the observed range
      prefail.push_back({sensor, Label::Prefail, t0});
    }

    // Stable candidates: a 100% hour with stability_hours of 100% on both sides.
    std::vector<std::ptrdiff_t> full_run(n_hours + 1, 0);  // full_run[j] = 100% hours ending just before j
    for (std::ptrdiff_t j = 0; j < n_hours; ++j) full_run[j + 1] = row[j] == 100.0 ? full_run[j] + 1 : 0;
    std::vector<WindowSpec> candidates;
    const auto span = static_cast<std::ptrdiff_t>(options.stability_hours);
    for (std::ptrdiff_t j = span; j + span < n_hours; ++j) {
      if (full_run[j + 1 + span] >= 2 * span + 1) candidates.push_back({sensor, Label::Stable, matrix.hours[j]});
    }

    Rng rng(derive_seed(seed, fnv1a(sensor)));
    shuffle(candidates, rng);
    const auto take = std::min(prefail.size(), candidates.size());
    sel.prefail_per_sensor[sensor] = prefail.size();
    sel.stable_candidates[sensor] = candidates.size();
    if (take < prefail.size()) sel.shortfall[sensor] = prefail.size() - take;
    for (auto& w : prefail) sel.windows.push_back(std::move(w));
    for (std::size_t k = 0; k < take; ++k) sel.windows.push_back(std::move(candidates[k]));
  }
  std::sort(sel.windows.begin(), sel.windows.end(), [](const WindowSpec& a, const WindowSpec& b) {
    return std::tie(a.sensor_id, a.t0) < std::tie(b.sensor_id, b.t0);
  });
  return sel;
}

std::size_t Dataset::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(), [&](const Instance& i) { return i.label == l; }));
}

std::size_t Dataset::rows(Label l) const {
  std::size_t n = 0;
  for (const auto& i : instances) n += i.label == l ? i.rows.size() : 0;
  return n;
}

RowCollector::RowCollector(const Selection& selection) {
  for (const auto& w : selection.windows) {
    Instance inst;
    inst.id = dataset_.instances.size();
    inst.sensor_id = w.sensor_id;
    inst.label = w.label;
    inst.t0 = w.t0;
    slot_[{w.sensor_id, w.t0}] = inst.id;
    dataset_.instances.push_back(std::move(inst));
  }
}

void RowCollector::add(const node::TelemetryRecord& record) {
  const auto it = slot_.find({record.node_id, floor_hour(record.ts)});
  if (it == slot_.end()) return;
  auto& inst = dataset_.instances[it->second];
  inst.ts.push_back(record.ts);
  inst.rows.push_back(node::telemetry_values(record));
}

Dataset RowCollector::finish() {
  for (auto& inst : dataset_.instances) {
    std::vector<std::size_t> order(inst.ts.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return inst.ts[a] < inst.ts[b]; });
    std::vector<Timestamp> ts;
    std::vector<Features> rows;
    for (auto k : order) {
      ts.push_back(inst.ts[k]);
      rows.push_back(inst.rows[k]);
    }
    inst.ts = std::move(ts);
    inst.rows = std::move(rows);
  }
  return std::move(dataset_);
}

Dataset extract_instances(const monitor::YieldMatrix& matrix, const std::vector<node::TelemetryRecord>& telemetry,
                          std::uint64_t seed, const ExtractOptions& options) {
  RowCollector c(select_windows(matrix, seed, options));
  for (const auto& r : telemetry) c.add(r);
  return c.finish();
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  std::string inst = "instance_id,sensor_id,label,t0_ms,rows\n";
  std::string rows = "instance_id,ts_ms";
  for (auto v : node::kTelemetryVariables) fmt::format_to(std::back_inserter(rows), ",{}", v);
  rows.push_back('\n');
  for (const auto& i : dataset.instances) {
    fmt::format_to(std::back_inserter(inst), "{},{},{},{},{}\n", i.id, i.sensor_id, label_name(i.label),
                   to_unix_ms(i.t0), i.rows.size());
    for (std::size_t k = 0; k < i.rows.size(); ++k) {
      fmt::format_to(std::back_inserter(rows), "{},{}", i.id, to_unix_ms(i.ts[k]));
      for (double v : i.rows[k]) fmt::format_to(std::back_inserter(rows), ",{}", v);
      rows.push_back('\n');
    }
  }
  write_text_atomic(dir / "instances.csv", inst);
  write_text_atomic(dir / "rows.csv", rows);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  const auto inst_path = dir / "instances.csv";
  const auto rows_path = dir / "rows.csv";
  if (!fs::exists(inst_path)) throw IoError(inst_path.string(), "no such file");
  if (!fs::exists(rows_path)) throw IoError(rows_path.string(), "no such file");
  std::map<std::size_t, std::size_t> pos;
  std::vector<std::size_t> declared;
  {
    const auto text = read_text(inst_path);
    const auto lines = split(text, '\n');
    if (lines.empty() || lines[0] != "instance_id,sensor_id,label,t0_ms,rows") {
      throw FormatError(inst_path.string() + ": bad header");
    }
    for (std::size_t k = 1; k < lines.size(); ++k) {
      if (lines[k].empty()) continue;
      const auto c = split(lines[k], ',');
      if (c.size() != 5) throw FormatError(fmt::format("{}: line {} has {} columns", inst_path.string(), k + 1, c.size()));
      Instance i;
      i.id = static_cast<std::size_t>(parse_int(c[0]));
      i.sensor_id = std::string(c[1]);
      i.label = parse_label(c[2]);
      i.t0 = from_unix_ms(parse_int(c[3]));
      if (!pos.emplace(i.id, ds.instances.size()).second) {
        throw FormatError(fmt::format("{}: duplicate instance id {}", inst_path.string(), i.id));
      }
      declared.push_back(static_cast<std::size_t>(parse_int(c[4])));
      ds.instances.push_back(std::move(i));
    }
  }
  std::ifstream in(rows_path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 2 + kFeatures) throw FormatError(fmt::format("{}: line {} has {} columns", rows_path.string(), line_no, c.size()));
    const auto it = pos.find(static_cast<std::size_t>(parse_int(c[0])));
    if (it == pos.end()) throw FormatError(fmt::format("{}: line {} names an unknown instance", rows_path.string(), line_no));
    auto& i = ds.instances[it->second];
    i.ts.push_back(from_unix_ms(parse_int(c[1])));
    Features f{};
    for (std::size_t k = 0; k < kFeatures; ++k) f[k] = parse_double(c[2 + k]);
    i.rows.push_back(f);
  }
  for (std::size_t k = 0; k < ds.instances.size(); ++k) {
    if (ds.instances[k].rows.size() != declared[k]) {
      throw FormatError(fmt::format("instance {} declares {} rows but has {}", ds.instances[k].id, declared[k],
                                    ds.instances[k].rows.size()));
    }
  }
  return ds;
}

}  // namespace noisenet::predict
