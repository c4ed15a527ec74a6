#include "stcl/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stcl/error.hpp"

namespace stcl {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw DataError("not a number in " + what + ": '" + text + "'");
  }
  return v;
}

}  // namespace

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  std::string available;
  for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
  throw DataError("no column '" + name + "' (available: " + available + ")");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const auto idx = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(parse_number(row.at(idx), "column " + name));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(f, line)) throw DataError(path.string() + " is empty");
  table.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

std::string to_csv_string(const CsvTable& table) {
  std::string out;
  auto put = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  put(table.header);
  for (const auto& row : table.rows) put(row);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << to_csv_string(table);
  if (!f) throw DataError("failed writing " + path.string());
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

double round_trip(double value, int digits) { return std::strtod(fixed(value, digits).c_str(), nullptr); }

CsvTable log_table(const TrainingLog& log) {
  CsvTable t;
  t.header = {"epoch", "stage", "train_loss", "val_loss", "ssim", "msssim", "psnr", "rmse", "accuracy"};
  for (const auto& r : log) {
    t.rows.push_back({std::to_string(r.epoch), std::to_string(r.stage), fixed(r.train_loss, kLogDigits),
                      fixed(r.val_loss, kLogDigits), fixed(r.ssim, kLogDigits), fixed(r.msssim, kLogDigits),
                      fixed(r.psnr, kLogDigits), fixed(r.rmse, kLogDigits), fixed(r.accuracy, kLogDigits)});
  }
  return t;
}

TrainingLog parse_log(const CsvTable& table) {
  const auto epoch = table.numeric_column("epoch");
  const auto stage = table.numeric_column("stage");
  const auto train = table.numeric_column("train_loss");
  const auto val = table.numeric_column("val_loss");
  const auto ssim = table.numeric_column("ssim");
  const auto msssim = table.numeric_column("msssim");
  const auto psnr = table.numeric_column("psnr");
  const auto rmse = table.numeric_column("rmse");
  const auto acc = table.numeric_column("accuracy");
  TrainingLog log;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    log.push_back({static_cast<std::size_t>(epoch[i]), static_cast<std::size_t>(stage[i]), train[i], val[i],
                   ssim[i], msssim[i], psnr[i], rmse[i], acc[i]});
  }
  return log;
}

LogRow as_logged(LogRow row) {
  for (double* v : {&row.train_loss, &row.val_loss, &row.ssim, &row.msssim, &row.psnr, &row.rmse, &row.accuracy}) {
    *v = round_trip(*v, kLogDigits);
  }
  return row;
}

}  // namespace stcl
