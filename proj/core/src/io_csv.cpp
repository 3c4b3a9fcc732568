#include "metacog/io/csv.hpp"

#include <charconv>

namespace metacog::io {

std::string format_number(double v) {
  // %.17g equivalent via to_chars: shortest exact round-trip would vary in
  // width, so fix the precision for byte stability.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (res.ec != std::errc{}) throw NumericError("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
  if (!out_) throw ConfigError("csv: cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_)
    throw DimensionError("csv: row width mismatch in '" + path_ + "'");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_number(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw DimensionError("csv: row width mismatch in '" + path_ + "'");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

}  // namespace metacog::io
