#include "mlcd/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

namespace mlcd {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  const bool csv = line.find(',') != std::string_view::npos;
  std::size_t i = 0;
  while (i <= line.size()) {
    if (csv) {
      const std::size_t j = std::min(line.find(',', i), line.size());
      std::string_view field = line.substr(i, j - i);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
      }
      out.push_back(field);
      i = j + 1;
    } else {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

double parse_real(std::string_view token, int line_number) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw InputError(fmt::format("line {}: '{}' is not a number", line_number, token));
  }
  return value;
}

// Yields the tokenized non-blank, non-comment lines of a table with their
// line numbers; the first one is the header.
std::vector<std::pair<int, std::vector<std::string_view>>> read_table(std::istream& in,
                                                                      std::vector<std::string>& storage) {
  std::vector<std::pair<int, std::vector<std::string_view>>> rows;
  std::vector<int> numbers;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    storage.push_back(line);
    numbers.push_back(number);
  }
  // Tokenize after storage stops reallocating.
  for (std::size_t i = 0; i < storage.size(); ++i) rows.emplace_back(numbers[i], split(storage[i]));
  return rows;
}

std::string header_text(const std::vector<std::string_view>& fields) {
  std::string out;
  for (auto f : fields) {
    if (!out.empty()) out += ',';
    out += f;
  }
  return out;
}

}  // namespace

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_planner_trace(std::ostream& out, const std::vector<ScheduleEntry>& schedule,
                         TableFormat format) {
  const char* sep = format == TableFormat::kCsv ? "," : " ";
  const Eigen::Index n_pl = schedule.empty() ? 0 : schedule.front().alpha.size();
  out << 't';
  for (Eigen::Index l = 1; l <= n_pl; ++l) out << sep << "alpha_" << l;
  out << sep << "s_x" << sep << "s_y" << sep << "s_z" << sep << "objective" << sep << "kkt\n";
  for (const ScheduleEntry& e : schedule) {
    out << format_real(e.t);
    for (Eigen::Index l = 0; l < e.alpha.size(); ++l) out << sep << format_real(e.alpha[l]);
    for (int axis = 0; axis < 3; ++axis) out << sep << format_real(e.s[axis]);
    out << sep << format_real(e.objective) << sep << format_real(e.kkt.max()) << '\n';
  }
}

std::vector<ScheduleEntry> read_planner_trace(std::istream& in) {
  std::vector<std::string> storage;
  const auto rows = read_table(in, storage);
  if (rows.empty()) throw InputError("planner trace is empty");

  const auto& header = rows.front().second;
  const auto columns = static_cast<int>(header.size());
  const int n_pl = columns - 6;
  bool header_ok = n_pl >= 1 && header.front() == "t";
  for (int l = 1; header_ok && l <= n_pl; ++l) {
    header_ok = header[static_cast<std::size_t>(l)] == fmt::format("alpha_{}", l);
  }
  header_ok = header_ok && header[static_cast<std::size_t>(n_pl + 1)] == "s_x" &&
              header[static_cast<std::size_t>(n_pl + 2)] == "s_y" &&
              header[static_cast<std::size_t>(n_pl + 3)] == "s_z" &&
              header[static_cast<std::size_t>(n_pl + 4)] == "objective" &&
              header[static_cast<std::size_t>(n_pl + 5)] == "kkt";
  if (!header_ok) {
    throw InputError(fmt::format("unexpected planner trace header '{}'", header_text(header)));
  }
  if (rows.size() == 1) throw InputError("planner trace has no rows");

  std::vector<ScheduleEntry> schedule;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    if (static_cast<int>(fields.size()) != columns) {
      throw InputError(fmt::format("line {}: expected {} columns, found {}", line, columns,
                                   fields.size()));
    }
    ScheduleEntry e;
    e.t = parse_real(fields[0], line);
    e.alpha.resize(n_pl);
    for (int l = 0; l < n_pl; ++l) e.alpha[l] = parse_real(fields[static_cast<std::size_t>(l + 1)], line);
    for (int axis = 0; axis < 3; ++axis) {
      e.s[axis] = parse_real(fields[static_cast<std::size_t>(n_pl + 1 + axis)], line);
    }
    e.objective = parse_real(fields[static_cast<std::size_t>(n_pl + 4)], line);
    // Only the largest residual is recorded; it bounds all three.
    const double kkt = parse_real(fields[static_cast<std::size_t>(n_pl + 5)], line);
    e.kkt = {kkt, kkt, kkt};
    if (!schedule.empty() && !(e.t > schedule.back().t)) {
      throw InputError(fmt::format("line {}: time is not increasing", line));
    }
    schedule.push_back(std::move(e));
  }
  return schedule;
}

void write_trajectory(std::ostream& out, const TrajectoryTable& table, TableFormat format) {
  if (table.desired.size() != table.time.size() || table.actual.size() != table.time.size()) {
    throw InputError("trajectory table columns have different lengths");
  }
  const char* sep = format == TableFormat::kCsv ? "," : " ";
  out << "t" << sep << "agent_id" << sep << "x_des" << sep << "y_des" << sep << "z_des" << sep
      << "x_act" << sep << "y_act" << sep << "z_act\n";
  for (std::size_t k = 0; k < table.time.size(); ++k) {
    const std::string t = format_real(table.time[k]);
    const Positions& des = table.desired[k];
    const Positions& act = table.actual[k];
    for (Eigen::Index i = 0; i < des.rows(); ++i) {
      out << t << sep << (i + 1);
      for (int axis = 0; axis < 3; ++axis) out << sep << format_real(des(i, axis));
      for (int axis = 0; axis < 3; ++axis) out << sep << format_real(act(i, axis));
      out << '\n';
    }
  }
}

TrajectoryTable read_trajectory(std::istream& in) {
  std::vector<std::string> storage;
  const auto rows = read_table(in, storage);
  if (rows.empty()) throw InputError("trajectory file is empty");
  const std::vector<std::string_view> expected{"t",     "agent_id", "x_des", "y_des",
                                               "z_des", "x_act",    "y_act", "z_act"};
  if (rows.front().second != expected) {
    throw InputError(
        fmt::format("unexpected trajectory header '{}'", header_text(rows.front().second)));
  }

  // Rows sharing a timestamp form one step.
  TrajectoryTable table;
  std::vector<std::map<int, std::array<double, 6>>> steps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    if (fields.size() != expected.size()) {
      throw InputError(fmt::format("line {}: expected 8 columns, found {}", line, fields.size()));
    }
    const double t = parse_real(fields[0], line);
    const double id_value = parse_real(fields[1], line);
    const int id = static_cast<int>(id_value);
    if (id < 1 || static_cast<double>(id) != id_value) {
      throw InputError(fmt::format("line {}: invalid agent id", line));
    }
    if (table.time.empty() || t != table.time.back()) {
      if (!table.time.empty() && !(t > table.time.back())) {
        throw InputError(fmt::format("line {}: time is not increasing", line));
      }
      table.time.push_back(t);
      steps.emplace_back();
    }
    std::array<double, 6> values{};
    for (std::size_t c = 0; c < 6; ++c) values[c] = parse_real(fields[c + 2], line);
    if (!steps.back().emplace(id, values).second) {
      throw InputError(fmt::format("line {}: duplicate agent {} at t = {}", line, id, t));
    }
  }
  if (steps.empty()) throw InputError("trajectory file has no rows");

  const auto n = static_cast<Eigen::Index>(steps.front().size());
  for (const auto& step : steps) {
    if (static_cast<Eigen::Index>(step.size()) != n || step.rbegin()->first != n) {
      throw InputError("every trajectory step must list agents 1..N exactly once");
    }
    Positions des(n, 3), act(n, 3);
    for (const auto& [id, v] : step) {
      des.row(id - 1) << v[0], v[1], v[2];
      act.row(id - 1) << v[3], v[4], v[5];
    }
    table.desired.push_back(std::move(des));
    table.actual.push_back(std::move(act));
  }
  return table;
}

}  // namespace mlcd
