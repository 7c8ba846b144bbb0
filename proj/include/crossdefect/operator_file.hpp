#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "crossdefect/defect_operator.hpp"

namespace crossdefect {

class OperatorFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a grid-sampled operator (layout in docs/operator_file_format.md). Every block
/// becomes a sampled MatrixFunction on the Gauss-Legendre nodes named in the header;
/// the kernel is zero.
DefectOperator read_operator(std::istream& in);
DefectOperator read_operator_file(const std::filesystem::path& path);

/// Samples the blocks of `op` on n1 x n2 Gauss-Legendre nodes. The kernel is not written.
void write_operator(std::ostream& out, const DefectOperator& op, int n1, int n2);
void write_operator_file(const std::filesystem::path& path, const DefectOperator& op, int n1, int n2);

}  // namespace crossdefect
