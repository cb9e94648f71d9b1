#pragma once

#include "sqla/svt.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace sqla::io {

namespace fs = std::filesystem;

// Matrix Market: coordinate or array; real, integer, pattern or complex; general, symmetric,
// skew-symmetric or hermitian
Mat read_matrix_market(std::istream& is);
void write_matrix_market(std::ostream& os, const Mat& a, bool coordinate = false);

// "SQLA", u32 version, u64 rows, u64 cols, u32 flag (0 real, 1 complex), row-major doubles
inline constexpr std::uint32_t kBinaryVersion = 1;
Mat read_binary(std::istream& is);
// complex storage is chosen when any entry has a nonzero imaginary part
void write_binary(std::ostream& os, const Mat& a);

// binary if the file starts with the magic, Matrix Market otherwise
Mat read_matrix(const fs::path& p);
void write_matrix(const fs::path& p, const Mat& a);

// text: one value per line, "re" or "re im"; or the binary format with one column
Vec read_vector(const fs::path& p);
void write_vector_text(const fs::path& p, const Vec& v);

// flat key = value text, '#' starts a comment line
using Manifest = std::map<std::string, std::string>;
Manifest read_manifest(const fs::path& p);
void write_manifest(const fs::path& p, const Manifest& m);
std::string format_double(double x);
double manifest_double(const Manifest& m, const std::string& key);
index_t manifest_index(const Manifest& m, const std::string& key);

// S.txt, T.txt, core_u.bin, core_s.bin, core_fbar.bin and manifest.txt; the r x r core is kept
// in factored form
void save_rur(const fs::path& dir, const RurDecomposition& rur, const Manifest& extra = {});
// rebuilds the decomposition over the same matrix access; C is not restored
RurDecomposition load_rur(const fs::path& dir, const OversampledMatrix& a);

// S.txt, N.bin, D.bin, lambda.bin and manifest.txt
void save_eigen(const fs::path& dir, const EigenDecompApprox& e, const Manifest& extra = {});
EigenDecompApprox load_eigen(const fs::path& dir, const OversampledMatrix& a);

}  // namespace sqla::io
