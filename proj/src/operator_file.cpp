#include "crossdefect/operator_file.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "crossdefect/quadrature.hpp"

namespace crossdefect {

namespace {

constexpr const char* kMagic = "crossdefect-operator";
constexpr int kVersion = 1;
constexpr std::array<const char*, 5> kBlocks{"A0", "A1", "B1", "A2", "B2"};

// Whitespace tokens with '#' comments stripped.
class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string token;
    while (!(line_ >> token)) {
      std::string text;
      if (!std::getline(in_, text)) throw OperatorFileError(std::string("unexpected end of file reading ") + what);
      ++line_no_;
      if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
      line_.clear();
      line_.str(text);
    }
    return token;
  }

  template <typename T>
  T number(const char* what) {
    const std::string token = next(what);
    std::istringstream s(token);
    T v{};
    if (!(s >> v) || !s.eof()) {
      throw OperatorFileError("line " + std::to_string(line_no_) + ": bad " + what + " '" + token + "'");
    }
    return v;
  }

  bool exhausted() {
    std::string token;
    if (line_ >> token) return false;
    std::string text;
    while (std::getline(in_, text)) {
      if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
      std::istringstream s(text);
      if (s >> token) return false;
    }
    return true;
  }

 private:
  std::istream& in_;
  std::istringstream line_;
  int line_no_ = 0;
};

std::array<Index, 2> block_shape(int block, Index m, Index m1, Index m2) {
  switch (block) {
    case 0: return {m, m};
    case 1: return {m, m1};
    case 2: return {m1, m};
    case 3: return {m, m2};
    default: return {m2, m};
  }
}

}  // namespace

DefectOperator read_operator(std::istream& in) {
  Tokens tok(in);
  if (tok.next("magic") != kMagic) throw OperatorFileError("missing 'crossdefect-operator' header");
  if (tok.number<int>("version") != kVersion) throw OperatorFileError("unsupported format version");
  const auto m = tok.number<long>("M");
  const auto m1 = tok.number<long>("M1");
  const auto m2 = tok.number<long>("M2");
  const auto n1 = tok.number<int>("n1");
  const auto n2 = tok.number<int>("n2");
  if (m < 1 || m1 < 0 || m2 < 0) throw OperatorFileError("need M >= 1 and M1, M2 >= 0");
  if (n1 < 1 || n2 < 1) throw OperatorFileError("node counts must be positive");

  const QuadratureRule r1 = gauss_legendre(n1);
  const QuadratureRule r2 = gauss_legendre(n2);
  std::array<MatrixFunction, 5> blocks;
  for (int b = 0; b < 5; ++b) {
    const auto [rows, cols] = block_shape(b, m, m1, m2);
    if (rows == 0 || cols == 0) {
      blocks[b] = MatrixFunction::zero(rows, cols);
      continue;
    }
    const std::string tag = tok.next("block tag");
    if (tag != kBlocks[b]) {
      throw OperatorFileError("expected block " + std::string(kBlocks[b]) + ", found '" + tag + "'");
    }
    SampledValues s{r1, r2, rows, cols, {}};
    s.values.reserve(static_cast<std::size_t>(n1) * n2);
    for (int node = 0; node < n1 * n2; ++node) {
      Matrix v(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          const double re = tok.number<double>("real part");
          const double im = tok.number<double>("imaginary part");
          v(r, c) = {re, im};
        }
      }
      if (!v.allFinite()) throw OperatorFileError(std::string("non-finite entry in block ") + kBlocks[b]);
      s.values.push_back(std::move(v));
    }
    blocks[b] = MatrixFunction::sampled(std::move(s));
  }
  if (!tok.exhausted()) throw OperatorFileError("trailing data after block B2");
  return {blocks[0], blocks[1], blocks[2], blocks[3], blocks[4], CompactKernel::zero(m, m)};
}

DefectOperator read_operator_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw OperatorFileError("cannot read operator file " + path.string());
  return read_operator(in);
}

void write_operator(std::ostream& out, const DefectOperator& op, int n1, int n2) {
  const QuadratureRule r1 = gauss_legendre(n1);
  const QuadratureRule r2 = gauss_legendre(n2);
  out << kMagic << ' ' << kVersion << '\n';
  out << op.M() << ' ' << op.M1() << ' ' << op.M2() << ' ' << n1 << ' ' << n2 << '\n';
  out << std::setprecision(17) << std::scientific;
  const std::array<const MatrixFunction*, 5> blocks{&op.a0(), &op.a1(), &op.b1(), &op.a2(), &op.b2()};
  for (int b = 0; b < 5; ++b) {
    const MatrixFunction& f = *blocks[b];
    if (f.empty()) continue;
    out << kBlocks[b] << '\n';
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        const Matrix v = f(r1.nodes[i], r2.nodes[j]);
        for (Index r = 0; r < v.rows(); ++r) {
          for (Index c = 0; c < v.cols(); ++c) {
            if (r + c > 0) out << ' ';
            out << v(r, c).real() << ' ' << v(r, c).imag();
          }
        }
        out << '\n';
      }
    }
  }
}

void write_operator_file(const std::filesystem::path& path, const DefectOperator& op, int n1, int n2) {
  std::ofstream out(path);
  if (!out) throw OperatorFileError("cannot write operator file " + path.string());
  write_operator(out, op, n1, n2);
  if (!out) throw OperatorFileError("write failed for " + path.string());
}

}  // namespace crossdefect
