#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ne3/harness.hpp"

namespace ne3::harness {

std::string format_number(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.seed << ',' << r.episode << ',' << agents::to_string(r.phase) << ',' << format_number(r.ret) << ','
        << format_number(r.wall_ms) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
bool parse(const std::string& s, T& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string(), "cannot open CSV");
  std::string line;
  const auto where = [&](std::size_t n) { return path.string() + ":" + std::to_string(n); };
  if (!std::getline(in, line) || line != kCsvHeader)
    throw SchemaError(where(1), std::string("expected header '") + kCsvHeader + "'");
  std::vector<CsvRow> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto f = split(line);
    CsvRow r;
    if (f.size() != 5) throw SchemaError(where(n), "expected 5 fields");
    if (!parse(f[0], r.seed)) throw SchemaError(where(n), "bad seed '" + f[0] + "'");
    if (!parse(f[1], r.episode) || r.episode < 0) throw SchemaError(where(n), "bad episode '" + f[1] + "'");
    if (f[2] == "explore") r.phase = agents::Phase::Explore;
    else if (f[2] == "exploit") r.phase = agents::Phase::Exploit;
    else throw SchemaError(where(n), "bad phase '" + f[2] + "'");
    if (!parse(f[3], r.ret)) throw SchemaError(where(n), "bad return '" + f[3] + "'");
    if (!parse(f[4], r.wall_ms)) throw SchemaError(where(n), "bad wall_ms '" + f[4] + "'");
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> aggregate(const std::vector<std::vector<CsvRow>>& files) {
  // One series per (file, seed), in order of first appearance.
  std::vector<std::vector<const CsvRow*>> series;
  for (const auto& rows : files) {
    std::map<std::uint64_t, std::size_t> index;
    for (const auto& r : rows) {
      auto [it, fresh] = index.try_emplace(r.seed, series.size());
      if (fresh) series.emplace_back();
      series[it->second].push_back(&r);
    }
  }
  if (series.empty()) throw AlignmentError("no episodes to aggregate");
  const auto& grid = series.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i]->episode != static_cast<int>(i))
      throw AlignmentError("seed " + std::to_string(grid[i]->seed) + ": episodes are not contiguous from 0");
  }
  for (const auto& s : series) {
    if (s.size() != grid.size())
      throw AlignmentError("seed " + std::to_string(s.front()->seed) + " has " + std::to_string(s.size()) +
                           " episodes, expected " + std::to_string(grid.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i]->episode != grid[i]->episode || s[i]->phase != grid[i]->phase)
        throw AlignmentError("seed " + std::to_string(s[i]->seed) + " disagrees at episode " + std::to_string(grid[i]->episode));
    }
  }

  std::vector<SummaryRow> out;
  std::vector<double> values(series.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < series.size(); ++k) values[k] = series[k][i]->ret;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    SummaryRow row;
    row.episode = grid[i]->episode;
    row.phase = grid[i]->phase;
    row.median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    row.min = values.front();
    row.max = values.back();
    row.n_seeds = static_cast<int>(m);
    out.push_back(row);
  }
  return out;
}

std::vector<SummaryRow> aggregate(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw ConfigError("aggregate needs at least one CSV");
  std::vector<std::vector<CsvRow>> files;
  for (const auto& p : paths) files.push_back(read_csv(p));
  return aggregate(files);
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "episode,median,min,max,n_seeds\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << format_number(r.median) << ',' << format_number(r.min) << ',' << format_number(r.max)
        << ',' << r.n_seeds << '\n';
  }
}

void write_plot_data(std::ostream& out, const std::vector<LabeledInput>& inputs) {
  if (inputs.empty()) throw ConfigError("plot-data needs at least one labeled CSV");
  std::vector<std::vector<SummaryRow>> summaries;
  for (const auto& in : inputs) {
    if (in.label.empty() || in.label.find_first_of(",\n\r\"") != std::string::npos)
      throw ConfigError("method label '" + in.label + "' must be nonempty without commas, quotes or newlines");
    summaries.push_back(aggregate(std::vector<std::filesystem::path>{in.path}));
  }
  out << "method,episode,phase,median,min,max,n_seeds\n";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& r : summaries[i]) {
      out << inputs[i].label << ',' << r.episode << ',' << agents::to_string(r.phase) << ',' << format_number(r.median)
          << ',' << format_number(r.min) << ',' << format_number(r.max) << ',' << r.n_seeds << '\n';
    }
  }
}

}  // namespace ne3::harness
