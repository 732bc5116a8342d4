#pragma once

#include <string>

#include "rlra/problem.hpp"
#include "rlra/solvers.hpp"

namespace rlra {

// Binary problem container. Layout: 8 magic bytes "RLRAPROB", a uint32
// format version, then a little-endian payload (sparse operators as
// upper-triangle triplets, dense factors column-major). The payload is a
// pure function of the problem data, so reassembling from the same config
// and seed reproduces the file byte for byte. Xi matrices and the K
// factorization are rebuilt on load. Requires a little-endian host.
void write_problem(const std::string& path, const ProblemData& pd);
ProblemData read_problem(const std::string& path);

// Dense matrix container sharing the same framing (magic "RLRADENS").
void write_dense(const std::string& path, const Matrix& a);
Matrix read_dense(const std::string& path);

// MatrixMarket array export for interop with external tooling.
void write_matrix_market(const std::string& path, const Matrix& a);

// Convergence history CSV. Header:
//   iteration,grad_p_norm,residual,functional,rank,step,inner_iters,seconds
// Doubles are printed with 17 significant digits, so a read of a written
// file reproduces the record exactly; a NaN residual becomes an empty field.
void write_convergence_csv(const std::string& path, const ConvergenceRecord& rec);
ConvergenceRecord read_convergence_csv(const std::string& path);

}  // namespace rlra
