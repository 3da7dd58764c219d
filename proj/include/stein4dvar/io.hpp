#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "stein4dvar/core.hpp"

namespace stein4dvar {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix Market reader for real "array" (general or symmetric) and
// "coordinate" (general or symmetric) files.
Matrix read_matrix_market(const std::filesystem::path& path);

// Dense "array real general" output with 17 significant digits.
void write_matrix_market(const std::filesystem::path& path, const Matrix& M, const std::string& comment = "");

// Block matrices are array files whose size line is "s N+1"; column j holds
// the block at time j. The comment line "% block rows=<s> times=<N+1>" is
// written for readers and checked when present.
void write_block(const std::filesystem::path& path, const Matrix& Z);
Matrix read_block(const std::filesystem::path& path, Index rows = -1);

// A system directory holds B.mtx, Q.mtx, R.mtx, H.mtx, M_1.mtx ... M_N.mtx,
// b.mtx (s x N+1) and d.mtx (p x N+1).
void save_system(const std::filesystem::path& dir, const SystemData& sys);
SystemData load_system(const std::filesystem::path& dir);

}  // namespace stein4dvar
