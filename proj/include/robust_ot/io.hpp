#ifndef ROBUST_OT_IO_HPP_
#define ROBUST_OT_IO_HPP_

#include <cstdint>
#include <string>

#include "robust_ot/types.hpp"

namespace robust_ot {

// Vectors are single-column headerless CSV; matrices are headerless CSV rows.
// Parse failures throw ParseError with "file:line:column: message".
Vector read_vector_csv(const std::string& path);
Matrix read_matrix_csv(const std::string& path);

void write_vector_csv(const std::string& path, const Vector& v);
void write_matrix_csv(const std::string& path, const Matrix& m);

// 17-significant-digit round-trip formatting used by all CSV output.
std::string format_double(double x);

// FNV-1a, used for input hashes in run manifests and RNG stream derivation.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);

}  // namespace robust_ot

#endif  // ROBUST_OT_IO_HPP_
