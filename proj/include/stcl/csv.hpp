#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace stcl {

/// Plain comma-separated table with a header row. No quoting: fields never
/// contain commas or newlines in the files this library writes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws DataError naming the available columns when `name` is absent.
  std::size_t column_index(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);

/// Fixed-point text with `digits` decimals ("-0.000000" is printed as "0.000000").
std::string fixed(double value, int digits);
/// The value a reader of fixed(value, digits) gets back.
double round_trip(double value, int digits);

inline constexpr int kLogDigits = 8;

/// One epoch of training as logged (stage 0 marks a plain, non-curriculum run).
struct LogRow {
  std::size_t epoch = 0;
  std::size_t stage = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double ssim = 0.0;
  double msssim = 0.0;
  double psnr = 0.0;
  double rmse = 0.0;
  double accuracy = 0.0;
};

using TrainingLog = std::vector<LogRow>;

/// Header epoch,stage,train_loss,val_loss,ssim,msssim,psnr,rmse,accuracy.
CsvTable log_table(const TrainingLog& log);
TrainingLog parse_log(const CsvTable& table);
/// Every real field rounded as it would be written to the log.
LogRow as_logged(LogRow row);

}  // namespace stcl
