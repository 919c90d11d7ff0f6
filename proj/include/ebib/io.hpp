#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ebib/models/types.hpp"
#include "ebib/samplers.hpp"

namespace ebib::io {

/// Rows of named real columns with a comment header of provenance lines.
struct ResultTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;  // written as "# key: value" lines

  void add_row(std::vector<double> row);
  std::string to_csv() const;
  const std::vector<double>& row(std::size_t i) const { return rows.at(i); }
  std::size_t column(const std::string& name) const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

/// Reads a CSV with header row: column "y" plus optional design columns x1..xd (any order).
Dataset read_dataset_csv(const std::string& path);

/// Reads a square matrix of nonnegative integers (no header).
Eigen::MatrixXi read_count_matrix_csv(const std::string& path);

/// One column per parameter, header from the chain names.
void write_chain_csv(const ChainOutput& chain, const std::string& path);

void write_text(const std::string& path, const std::string& content);

std::string format_double(double v);

}  // namespace ebib::io
