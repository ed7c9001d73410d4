#include "agnc/experiments/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "agnc/errors.hpp"
#include "agnc/stats.hpp"

namespace agnc {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DomainError(fmt::format("bad number '{}'", s));
  return v;
}

int to_int(const std::string& s) { return static_cast<int>(std::lround(to_double(s))); }

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open {}", path.string()));
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(split_csv(line));
  }
  return out;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

std::vector<SummaryRow> ExperimentReport::summarize() const {
  std::vector<std::pair<std::string, std::string>> cells;
  for (const TrialRow& r : rows) {
    const std::pair key{r.condition, r.method};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  // Group by condition, keeping first appearance order of both keys.
  std::vector<std::string> conditions;
  for (const auto& c : cells) {
    if (std::find(conditions.begin(), conditions.end(), c.first) == conditions.end()) {
      conditions.push_back(c.first);
    }
  }

  std::vector<SummaryRow> out;
  for (const std::string& condition : conditions) {
    const std::size_t first = out.size();
    for (const auto& [cond, method] : cells) {
      if (cond != condition) continue;
      std::vector<double> times;
      int decided = 0;
      int successes = 0;
      std::vector<std::vector<double>> values(metric_names.size());
      for (const TrialRow& r : rows) {
        if (r.condition != cond || r.method != method) continue;
        if (r.flag != "degenerate") {
          ++decided;
          successes += (r.usable() && r.success) ? 1 : 0;
        }
        if (!r.usable()) continue;
        times.push_back(r.time_s);
        for (std::size_t k = 0; k < metric_names.size(); ++k) values[k].push_back(r.metrics[k]);
      }
      for (std::size_t k = 0; k < metric_names.size(); ++k) {
        SummaryRow s;
        s.condition = cond;
        s.method = method;
        s.metric = metric_names[k];
        s.count = static_cast<int>(values[k].size());
        s.p50 = percentile_nearest_rank(values[k], 50.0);
        s.p75 = percentile_nearest_rank(values[k], 75.0);
        s.p90 = percentile_nearest_rank(values[k], 90.0);
        s.success_rate = decided > 0 ? static_cast<double>(successes) / decided : 0.0;
        s.median_time_s = percentile_nearest_rank(times, 50.0);
        out.push_back(s);
      }
    }
    double fastest = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < out.size(); ++i) {
      if (out[i].median_time_s > 0.0) fastest = std::min(fastest, out[i].median_time_s);
    }
    for (std::size_t i = first; i < out.size(); ++i) {
      out[i].time_ratio = std::isfinite(fastest) ? out[i].median_time_s / fastest : 0.0;
    }
  }
  return out;
}

const SummaryRow* ExperimentReport::find(const std::vector<SummaryRow>& summary,
                                         const std::string& condition, const std::string& method,
                                         const std::string& metric) const {
  for (const SummaryRow& s : summary) {
    if (s.condition == condition && s.method == method && s.metric == metric) return &s;
  }
  return nullptr;
}

void ExperimentReport::write_rows(std::ostream& os) const {
  os << "condition,method,trial";
  for (const std::string& m : metric_names) os << ',' << m;
  os << ",iterations,converged,success,flag,time_s,time_per_iteration_s\n";
  for (const TrialRow& r : rows) {
    fmt::print(os, "{},{},{}", quote(r.condition), quote(r.method), r.trial);
    for (double v : r.metrics) fmt::print(os, ",{}", v);
    fmt::print(os, ",{},{},{},{},{},{}\n", r.iterations, int(r.converged), int(r.success),
               quote(r.flag), r.time_s, r.time_per_iteration_s);
  }
}

void ExperimentReport::write_summary(std::ostream& os, const std::vector<SummaryRow>& summary) const {
  os << "condition,method,metric,count,p50,p75,p90,success_rate,median_time_s,time_ratio\n";
  for (const SummaryRow& s : summary) {
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", quote(s.condition), quote(s.method),
               quote(s.metric), s.count, s.p50, s.p75, s.p90, s.success_rate, s.median_time_s,
               s.time_ratio);
  }
}

void ExperimentReport::write_stages(std::ostream& os) const {
  os << "condition,method,trial,";
  write_stage_csv_header(os);
  os << '\n';
  for (const StageRow& s : stages) {
    fmt::print(os, "{},{},{},", quote(s.condition), quote(s.method), s.trial);
    write_stage_csv_row(os, s.stage);
    os << '\n';
  }
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw DomainError(fmt::format("cannot write {}", (dir / name).string()));
    return f;
  };
  {
    auto f = open("rows.csv");
    write_rows(f);
  }
  {
    auto f = open("summary.csv");
    write_summary(f, summarize());
  }
  {
    auto f = open("stages.csv");
    write_stages(f);
  }
}

ExperimentReport ExperimentReport::load(const std::filesystem::path& dir) {
  ExperimentReport report;
  const auto rows = read_csv(dir / "rows.csv");
  if (rows.empty()) throw DomainError("rows.csv has no header");
  const auto& header = rows.front();
  constexpr std::size_t kFixed = 3;
  constexpr std::size_t kTail = 6;
  if (header.size() < kFixed + kTail) throw DomainError("rows.csv header too short");
  report.metric_names.assign(header.begin() + kFixed, header.end() - kTail);
  const std::size_t nm = report.metric_names.size();

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) {
      throw DomainError(fmt::format("rows.csv line {}: {} fields, expected {}", i + 1, f.size(),
                                    header.size()));
    }
    TrialRow r;
    r.condition = f[0];
    r.method = f[1];
    r.trial = to_int(f[2]);
    for (std::size_t k = 0; k < nm; ++k) r.metrics.push_back(to_double(f[kFixed + k]));
    std::size_t c = kFixed + nm;
    r.iterations = to_int(f[c++]);
    r.converged = to_int(f[c++]) != 0;
    r.success = to_int(f[c++]) != 0;
    r.flag = f[c++];
    r.time_s = to_double(f[c++]);
    r.time_per_iteration_s = to_double(f[c++]);
    report.rows.push_back(std::move(r));
  }

  const auto stored = read_csv(dir / "summary.csv");
  const std::vector<SummaryRow> recomputed = report.summarize();
  if (stored.size() != recomputed.size() + 1) {
    throw DomainError(fmt::format("summary.csv has {} rows, recomputed {}", stored.size() - 1,
                                  recomputed.size()));
  }
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    const auto& f = stored[i + 1];
    const SummaryRow& s = recomputed[i];
    const bool ok = f.size() == 10 && f[0] == s.condition && f[1] == s.method &&
                    f[2] == s.metric && to_int(f[3]) == s.count && same(to_double(f[4]), s.p50) &&
                    same(to_double(f[5]), s.p75) && same(to_double(f[6]), s.p90) &&
                    same(to_double(f[7]), s.success_rate) &&
                    same(to_double(f[8]), s.median_time_s) && same(to_double(f[9]), s.time_ratio);
    if (!ok) {
      throw DomainError(fmt::format("summary.csv line {} does not match the rows", i + 2));
    }
  }
  return report;
}

std::mt19937_64 trial_rng(std::uint64_t seed, int condition, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(condition), static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace agnc
