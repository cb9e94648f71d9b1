#include "sqla/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sqla::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary format is little-endian");

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const fs::path& p, bool binary) {
  std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
  if (!is) fail(ErrorKind::Io, "cannot open " + p.string());
  return is;
}

std::ofstream open_out(const fs::path& p, bool binary) {
  std::ofstream os(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + p.string());
  return os;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(ErrorKind::Io, "binary matrix: truncated input");
  return v;
}

bool is_binary(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + p.string());
  std::array<char, 4> m{};
  is.read(m.data(), 4);
  return is.gcount() == 4 && std::memcmp(m.data(), "SQLA", 4) == 0;
}

Mat from_rvec(const RVec& v) { return v.cast<cplx>(); }

RVec to_rvec(const Mat& m) {
  require(m.cols() == 1, ErrorKind::Io, "expected a column vector");
  return m.col(0).real();
}

void write_bin(const fs::path& p, const Mat& a) {
  auto os = open_out(p, true);
  write_binary(os, a);
}

Mat read_bin(const fs::path& p) {
  auto is = open_in(p, true);
  return read_binary(is);
}

}  // namespace

Mat read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::Io, "matrix market: empty input");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") fail(ErrorKind::Io, "matrix market: bad header");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") fail(ErrorKind::Io, "matrix market: unknown format " + format);
  if (field != "real" && field != "integer" && field != "complex" && field != "pattern")
    fail(ErrorKind::Io, "matrix market: unknown field " + field);
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric" && symmetry != "hermitian")
    fail(ErrorKind::Io, "matrix market: unknown symmetry " + symmetry);
  if (format == "array" && field == "pattern") fail(ErrorKind::Io, "matrix market: pattern needs coordinate format");

  do {
    if (!std::getline(is, line)) fail(ErrorKind::Io, "matrix market: missing size line");
  } while (trim(line).empty() || trim(line)[0] == '%');
  std::istringstream ss(line);
  long long m = 0, n = 0, nnz = 0;
  ss >> m >> n;
  if (format == "coordinate") ss >> nnz;
  if (!ss || m < 0 || n < 0 || nnz < 0) fail(ErrorKind::Io, "matrix market: bad size line");

  const bool cx = field == "complex";
  auto read_value = [&](std::istream& in) -> cplx {
    if (field == "pattern") return 1.0;
    double re = 0.0, im = 0.0;
    if (!(in >> re)) fail(ErrorKind::Io, "matrix market: truncated entries");
    if (cx && !(in >> im)) fail(ErrorKind::Io, "matrix market: missing imaginary part");
    return {re, im};
  };
  auto mirror = [&](cplx v) -> cplx {
    if (symmetry == "symmetric") return v;
    if (symmetry == "skew-symmetric") return -v;
    return std::conj(v);
  };

  Mat a = Mat::Zero(m, n);
  if (format == "coordinate") {
    for (long long k = 0; k < nnz; ++k) {
      long long i = 0, j = 0;
      if (!(is >> i >> j)) fail(ErrorKind::Io, "matrix market: truncated entries");
      if (i < 1 || j < 1 || i > m || j > n) fail(ErrorKind::Io, "matrix market: index out of range");
      const cplx v = read_value(is);
      a(i - 1, j - 1) += v;
      if (symmetry != "general" && i != j) a(j - 1, i - 1) += mirror(v);
    }
    return a;
  }
  // array: column-major, lower triangle only when not general
  for (long long j = 0; j < n; ++j) {
    const long long start = symmetry == "general" ? 0 : (symmetry == "skew-symmetric" ? j + 1 : j);
    for (long long i = start; i < m; ++i) {
      const cplx v = read_value(is);
      a(i, j) = v;
      if (symmetry != "general" && i != j) a(j, i) = mirror(v);
    }
  }
  return a;
}

void write_matrix_market(std::ostream& os, const Mat& a, bool coordinate) {
  const bool cx = (a.imag().array() != 0.0).any();
  os << "%%MatrixMarket matrix " << (coordinate ? "coordinate" : "array") << " " << (cx ? "complex" : "real")
     << " general\n";
  os.precision(17);
  auto value = [&](cplx v) {
    os << v.real();
    if (cx) os << " " << v.imag();
  };
  if (coordinate) {
    index_t nnz = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) nnz += a(i, j) != 0.0;
    os << a.rows() << " " << a.cols() << " " << nnz << "\n";
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a(i, j) == 0.0) continue;
        os << i + 1 << " " << j + 1 << " ";
        value(a(i, j));
        os << "\n";
      }
  } else {
    os << a.rows() << " " << a.cols() << "\n";
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        value(a(i, j));
        os << "\n";
      }
  }
  if (!os) fail(ErrorKind::Io, "matrix market: write failed");
}

Mat read_binary(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "SQLA", 4) != 0)
    fail(ErrorKind::Io, "binary matrix: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kBinaryVersion) fail(ErrorKind::Io, "binary matrix: unsupported version " + std::to_string(version));
  const auto m = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  const auto flag = get<std::uint32_t>(is);
  if (flag > 1) fail(ErrorKind::Io, "binary matrix: bad real/complex flag");
  const std::uint64_t count = m * n * (flag ? 2 : 1);
  std::vector<double> buf(count);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(double))))
    fail(ErrorKind::Io, "binary matrix: truncated data");
  Mat a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::uint64_t k = 0;
  for (std::uint64_t i = 0; i < m; ++i)
    for (std::uint64_t j = 0; j < n; ++j) {
      const double re = buf[k++];
      const double im = flag ? buf[k++] : 0.0;
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = {re, im};
    }
  return a;
}

void write_binary(std::ostream& os, const Mat& a) {
  const bool cx = (a.imag().array() != 0.0).any();
  os.write("SQLA", 4);
  put<std::uint32_t>(os, kBinaryVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(a.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(a.cols()));
  put<std::uint32_t>(os, cx ? 1 : 0);
  std::vector<double> buf;
  buf.reserve(static_cast<size_t>(a.size()) * (cx ? 2 : 1));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      buf.push_back(a(i, j).real());
      if (cx) buf.push_back(a(i, j).imag());
    }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!os) fail(ErrorKind::Io, "binary matrix: write failed");
}

Mat read_matrix(const fs::path& p) {
  if (is_binary(p)) return read_bin(p);
  auto is = open_in(p, false);
  return read_matrix_market(is);
}

void write_matrix(const fs::path& p, const Mat& a) { write_bin(p, a); }

Vec read_vector(const fs::path& p) {
  if (is_binary(p)) {
    const Mat m = read_bin(p);
    require(m.cols() == 1, ErrorKind::Io, "binary vector must have one column: " + p.string());
    return m.col(0);
  }
  auto is = open_in(p, false);
  std::vector<cplx> vals;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '%') continue;
    std::istringstream ls(t);
    double re = 0.0, im = 0.0;
    if (!(ls >> re)) fail(ErrorKind::Io, "vector: malformed line '" + t + "'");
    if (!(ls >> im)) im = 0.0;
    vals.emplace_back(re, im);
  }
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

void write_vector_text(const fs::path& p, const Vec& v) {
  auto os = open_out(p, false);
  const bool cx = (v.imag().array() != 0.0).any();
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << v[i].real();
    if (cx) os << " " << v[i].imag();
    os << "\n";
  }
  if (!os) fail(ErrorKind::Io, "cannot write " + p.string());
}

Manifest read_manifest(const fs::path& p) {
  auto is = open_in(p, false);
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Io, p.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) fail(ErrorKind::Io, p.string() + ":" + std::to_string(lineno) + ": empty key");
    m[key] = trim(t.substr(eq + 1));
  }
  return m;
}

void write_manifest(const fs::path& p, const Manifest& m) {
  auto os = open_out(p, false);
  for (const auto& [k, v] : m) os << k << " = " << v << "\n";
  if (!os) fail(ErrorKind::Io, "cannot write " + p.string());
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double manifest_double(const Manifest& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) fail(ErrorKind::Io, "manifest: missing key " + key);
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorKind::Io, "manifest: " + key + " is not a number: " + it->second);
  }
}

index_t manifest_index(const Manifest& m, const std::string& key) {
  const double v = manifest_double(m, key);
  if (v < 0.0 || v != std::floor(v)) fail(ErrorKind::Io, "manifest: " + key + " is not a count");
  return static_cast<index_t>(v);
}

void save_rur(const fs::path& dir, const RurDecomposition& rur, const Manifest& extra) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "S.txt", false);
    write_sketch(os, rur.R.sketch());
  }
  {
    auto os = open_out(dir / "T.txt", false);
    write_sketch(os, rur.T);
  }
  write_bin(dir / "core_u.bin", rur.svd.u);
  write_bin(dir / "core_s.bin", from_rvec(rur.svd.s));
  write_bin(dir / "core_fbar.bin", rur.fbar_shift);
  Manifest m = extra;
  m["kind"] = "rur";
  m["function"] = rur.function.empty() ? "unnamed" : rur.function;
  m["eps"] = format_double(rur.eps);
  m["delta"] = format_double(rur.delta);
  m["r"] = std::to_string(rur.r());
  m["c"] = std::to_string(rur.c());
  m["n"] = std::to_string(rur.dim());
  m["seed"] = std::to_string(rur.seed);
  m["norm_mode"] = to_string(rur.norm);
  m["f0_re"] = format_double(rur.f0.real());
  m["f0_im"] = format_double(rur.f0.imag());
  m["fbar0_re"] = format_double(rur.fbar0.real());
  m["fbar0_im"] = format_double(rur.fbar0.imag());
  m["diag_r_norm"] = format_double(rur.diagnostics.r_norm);
  m["diag_fbar_norm"] = format_double(rur.diagnostics.fbar_norm);
  m["diag_sqrt_norm"] = format_double(rur.diagnostics.sqrt_norm);
  m["diag_eps_bar"] = format_double(rur.diagnostics.eps_bar);
  m["diag_exact"] = rur.diagnostics.exact ? "1" : "0";
  write_manifest(dir / "manifest.txt", m);
}

RurDecomposition load_rur(const fs::path& dir, const OversampledMatrix& a) {
  const Manifest m = read_manifest(dir / "manifest.txt");
  if (m.count("kind") == 0 || m.at("kind") != "rur") fail(ErrorKind::Io, dir.string() + " is not a RUR directory");
  RowSketch s, t;
  {
    auto is = open_in(dir / "S.txt", false);
    s = read_sketch(is);
  }
  {
    auto is = open_in(dir / "T.txt", false);
    t = read_sketch(is);
  }
  require(s.source == a.rows() && manifest_index(m, "n") == a.cols(), ErrorKind::Io,
          "load_rur: decomposition does not match the matrix shape");
  RurDecomposition out;
  out.R = SketchedMatrix(a, std::move(s));
  out.T = std::move(t);
  out.svd.u = read_bin(dir / "core_u.bin");
  out.svd.s = to_rvec(read_bin(dir / "core_s.bin"));
  const Mat fb = read_bin(dir / "core_fbar.bin");
  require(fb.cols() == 1 && out.svd.u.rows() == static_cast<Eigen::Index>(out.R.rows()) &&
              fb.rows() <= out.svd.u.cols(),
          ErrorKind::Io, "load_rur: inconsistent core factors");
  out.fbar_shift = fb.col(0);
  out.function = m.at("function");
  out.eps = manifest_double(m, "eps");
  out.delta = manifest_double(m, "delta");
  out.seed = static_cast<std::uint64_t>(std::stoull(m.at("seed")));
  out.norm = m.at("norm_mode") == "frobenius" ? NormMode::Frobenius : NormMode::Spectral;
  out.f0 = {manifest_double(m, "f0_re"), manifest_double(m, "f0_im")};
  out.fbar0 = {manifest_double(m, "fbar0_re"), manifest_double(m, "fbar0_im")};
  out.diagnostics.r_norm = manifest_double(m, "diag_r_norm");
  out.diagnostics.fbar_norm = manifest_double(m, "diag_fbar_norm");
  out.diagnostics.sqrt_norm = manifest_double(m, "diag_sqrt_norm");
  out.diagnostics.eps_bar = manifest_double(m, "diag_eps_bar");
  out.diagnostics.exact = m.at("diag_exact") == "1";
  return out;
}

void save_eigen(const fs::path& dir, const EigenDecompApprox& e, const Manifest& extra) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "S.txt", false);
    write_sketch(os, e.S);
  }
  write_bin(dir / "N.bin", e.N);
  write_bin(dir / "D.bin", from_rvec(e.D));
  write_bin(dir / "lambda.bin", from_rvec(e.lambda));
  Manifest m = extra;
  m["kind"] = "eigen";
  m["eps"] = format_double(e.eps);
  m["delta"] = format_double(e.delta);
  m["r"] = std::to_string(e.S.size());
  m["rank"] = std::to_string(e.rank());
  m["n"] = std::to_string(e.R.cols());
  m["seed"] = std::to_string(e.S.seed);
  m["f0_re"] = format_double(e.f0.real());
  m["f0_im"] = format_double(e.f0.imag());
  m["isometry_bound"] = format_double(e.isometry_bound);
  m["pool_samples"] = std::to_string(e.pool_samples);
  write_manifest(dir / "manifest.txt", m);
}

EigenDecompApprox load_eigen(const fs::path& dir, const OversampledMatrix& a) {
  const Manifest m = read_manifest(dir / "manifest.txt");
  if (m.count("kind") == 0 || m.at("kind") != "eigen")
    fail(ErrorKind::Io, dir.string() + " is not an eigen decomposition directory");
  EigenDecompApprox out;
  {
    auto is = open_in(dir / "S.txt", false);
    out.S = read_sketch(is);
  }
  require(out.S.source == a.rows() && manifest_index(m, "n") == a.cols(), ErrorKind::Io,
          "load_eigen: decomposition does not match the matrix shape");
  out.R = SketchedMatrix(a, out.S);
  out.N = read_bin(dir / "N.bin");
  out.D = to_rvec(read_bin(dir / "D.bin"));
  out.lambda = to_rvec(read_bin(dir / "lambda.bin"));
  require(out.N.rows() == out.D.size() && (out.D.size() == 0 || out.N.cols() == static_cast<Eigen::Index>(out.S.size())),
          ErrorKind::Io, "load_eigen: inconsistent factors");
  out.eps = manifest_double(m, "eps");
  out.delta = manifest_double(m, "delta");
  out.f0 = {manifest_double(m, "f0_re"), manifest_double(m, "f0_im")};
  out.isometry_bound = manifest_double(m, "isometry_bound");
  out.pool_samples = manifest_index(m, "pool_samples");
  return out;
}

}  // namespace sqla::io
