#include "rlra/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace rlra {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

constexpr char kProblemMagic[8] = {'R', 'L', 'R', 'A', 'P', 'R', 'O', 'B'};
constexpr char kDenseMagic[8] = {'R', 'L', 'R', 'A', 'D', 'E', 'N', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

// File problems are recoverable caller errors, not programming errors, so
// they throw Error rather than tripping RLRA_REQUIRE.
void io_check(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    io_check(out_.good(), "cannot open '" + path + "' for writing");
    path_ = path;
  }
  void raw(const void* p, std::size_t bytes) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void vec(const Vector& v) {
    i64(v.size());
    raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }
  void mat(const Matrix& a) {
    i64(a.rows());
    i64(a.cols());
    raw(a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
  }
  // Symmetric sparse matrix as its upper triangle in row-major order.
  void sparse_sym(const SparseSymMatrix& s) {
    std::vector<std::int64_t> rows, cols;
    std::vector<double> vals;
    for (Index i = 0; i < s.mat.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s.mat, i); it; ++it)
        if (it.col() >= it.row()) {
          rows.push_back(it.row());
          cols.push_back(it.col());
          vals.push_back(it.value());
        }
    i64(s.dim());
    i64(static_cast<std::int64_t>(vals.size()));
    raw(rows.data(), sizeof(std::int64_t) * rows.size());
    raw(cols.data(), sizeof(std::int64_t) * cols.size());
    raw(vals.data(), sizeof(double) * vals.size());
  }
  void close() {
    out_.flush();
    io_check(out_.good(), "write to '" + path_ + "' failed");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    io_check(in_.good(), "cannot open '" + path + "' for reading");
  }
  void raw(void* p, std::size_t bytes) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    io_check(in_.gcount() == static_cast<std::streamsize>(bytes),
                 "truncated container '" + path_ + "'");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t size() {
    const std::int64_t n = i64();
    io_check(n >= 0, "negative size in container '" + path_ + "'");
    return n;
  }
  Vector vec() {
    Vector v(size());
    raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    return v;
  }
  Matrix mat() {
    const std::int64_t rows = size();
    const std::int64_t cols = size();
    Matrix a(rows, cols);
    raw(a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
    return a;
  }
  SparseSymMatrix sparse_sym() {
    const std::int64_t dim = size();
    const std::int64_t nnz = size();
    std::vector<std::int64_t> rows(nnz), cols(nnz);
    std::vector<double> vals(nnz);
    raw(rows.data(), sizeof(std::int64_t) * rows.size());
    raw(cols.data(), sizeof(std::int64_t) * cols.size());
    raw(vals.data(), sizeof(double) * vals.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nnz));
    // Upper-triangle entries only; make_sparse_sym mirrors them itself.
    for (std::int64_t k = 0; k < nnz; ++k) {
      io_check(rows[k] >= 0 && cols[k] >= rows[k] && cols[k] < dim,
               "invalid sparse entry in container '" + path_ + "'");
      trips.emplace_back(rows[k], cols[k], vals[k]);
    }
    return make_sparse_sym(dim, trips);
  }
  void expect_magic(const char (&magic)[8]) {
    char got[8];
    raw(got, sizeof got);
    for (int i = 0; i < 8; ++i)
      io_check(got[i] == magic[i], "bad magic bytes in '" + path_ + "'");
  }
  void expect_version() {
    const std::uint32_t v = u32();
    io_check(v == kFormatVersion, "unsupported container version " + std::to_string(v) +
                                          " in '" + path_ + "'");
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_problem(const std::string& path, const ProblemData& pd) {
  Writer w(path);
  w.raw(kProblemMagic, sizeof kProblemMagic);
  w.u32(kFormatVersion);
  w.i64(pd.rows());
  w.i64(pd.cols());
  w.i64(pd.samples.samples.rows());
  for (const auto& term : pd.op.terms) w.sparse_sym(term);
  w.mat(pd.samples.samples);
  w.vec(pd.samples.weights);
  w.u32(pd.b.core.has_value() ? 1 : 0);
  w.mat(pd.b.left);
  if (pd.b.core) w.mat(*pd.b.core);
  w.mat(pd.b.right);
  w.sparse_sym(pd.k);
  w.u32(pd.nonlinearity.active() ? 1 : 0);
  if (pd.nonlinearity.active()) w.vec(pd.nonlinearity.w);
  w.close();
}

ProblemData read_problem(const std::string& path) {
  Reader r(path);
  r.expect_magic(kProblemMagic);
  r.expect_version();
  const std::int64_t m = r.size();
  const std::int64_t n = r.size();
  const std::int64_t p = r.size();

  ProblemData pd;
  pd.op.terms.reserve(static_cast<std::size_t>(p) + 1);
  for (std::int64_t i = 0; i <= p; ++i) {
    pd.op.terms.push_back(r.sparse_sym());
    io_check(pd.op.terms.back().dim() == m, "operator dimension mismatch in '" + path + "'");
  }
  pd.samples.samples = r.mat();
  pd.samples.weights = r.vec();
  io_check(pd.samples.samples.rows() == p && pd.samples.samples.cols() == n &&
                   pd.samples.weights.size() == n,
               "sample block shape mismatch in '" + path + "'");
  const bool has_core = r.u32() != 0;
  Matrix left = r.mat();
  if (has_core) {
    Matrix core = r.mat();
    pd.b = FactoredAmbient(std::move(left), std::move(core), r.mat());
  } else {
    pd.b = FactoredAmbient(std::move(left), r.mat());
  }
  io_check(pd.b.rows() == m && pd.b.cols() == n, "rhs shape mismatch in '" + path + "'");
  pd.k = r.sparse_sym();
  if (r.u32() != 0)
    pd.nonlinearity = NonlinearitySpec::lumped_quartic(r.vec());
  else
    pd.nonlinearity = NonlinearitySpec::none();

  pd.xi = build_xi_matrices(pd.samples);
  pd.kfac = spd_factorize(pd.k);
  validate_problem(pd);
  return pd;
}

void write_dense(const std::string& path, const Matrix& a) {
  Writer w(path);
  w.raw(kDenseMagic, sizeof kDenseMagic);
  w.u32(kFormatVersion);
  w.mat(a);
  w.close();
}

Matrix read_dense(const std::string& path) {
  Reader r(path);
  r.expect_magic(kDenseMagic);
  r.expect_version();
  return r.mat();
}

void write_matrix_market(const std::string& path, const Matrix& a) {
  std::ofstream out(path);
  io_check(out.good(), "cannot open '" + path + "' for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out << format_double(a(i, j)) << "\n";
  io_check(out.good(), "write to '" + path + "' failed");
}

void write_convergence_csv(const std::string& path, const ConvergenceRecord& rec) {
  std::ofstream out(path);
  io_check(out.good(), "cannot open '" + path + "' for writing");
  out << "iteration,grad_p_norm,residual,functional,rank,step,inner_iters,seconds\n";
  for (const IterationStat& s : rec.stats) {
    out << s.iteration << "," << format_double(s.grad_norm) << ",";
    if (!std::isnan(s.residual)) out << format_double(s.residual);
    out << "," << format_double(s.functional) << "," << s.rank << ","
        << format_double(s.step) << "," << s.inner_iters << "," << format_double(s.seconds)
        << "\n";
  }
  io_check(out.good(), "write to '" + path + "' failed");
}

ConvergenceRecord read_convergence_csv(const std::string& path) {
  std::ifstream in(path);
  io_check(in.good(), "cannot open '" + path + "' for reading");
  std::string line;
  io_check(std::getline(in, line) &&
                   line == "iteration,grad_p_norm,residual,functional,rank,step,inner_iters,"
                           "seconds",
               "unrecognized convergence CSV header in '" + path + "'");
  ConvergenceRecord rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    io_check(fields.size() == 8, "malformed convergence CSV row in '" + path + "'");
    IterationStat s;
    s.iteration = std::stoll(fields[0]);
    s.grad_norm = std::stod(fields[1]);
    s.residual =
        fields[2].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(fields[2]);
    s.functional = std::stod(fields[3]);
    s.rank = std::stoll(fields[4]);
    s.step = std::stod(fields[5]);
    s.inner_iters = std::stoll(fields[6]);
    s.seconds = std::stod(fields[7]);
    rec.append(s);
  }
  return rec;
}

}  // namespace rlra
