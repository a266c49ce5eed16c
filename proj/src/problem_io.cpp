#include "fedexprox/problem_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "fedexprox/errors.hpp"

namespace fedexprox {
namespace {

constexpr std::array<char, 8> kMagic = {'F', 'X', 'P', 'R', 'O', 'B', '0', '1'};

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return out;
  } else {
    return v;
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void raw(const char* data, std::size_t len) {
    out_.write(data, static_cast<std::streamsize>(len));
    if (!out_) throw IoError("write failed: " + path_.string());
  }
  void u64(std::uint64_t v) {
    const std::uint64_t le = to_little(v);
    raw(reinterpret_cast<const char*>(&le), sizeof le);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string() + " for reading");
  }
  void raw(char* data, std::size_t len) {
    in_.read(data, static_cast<std::streamsize>(len));
    if (!in_) throw IoError("truncated problem file: " + path_.string());
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(reinterpret_cast<char*>(&v), sizeof v);
    return to_little(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

void save_problem(const FederatedProblem& p, const std::filesystem::path& path) {
  Writer w(path);
  w.raw(kMagic.data(), kMagic.size());
  const auto d = static_cast<std::uint64_t>(p.dim());
  w.u64(p.n_clients());
  w.u64(d);
  w.u64(p.seed());
  w.f64(p.spectrum().lambda_lo);
  w.f64(p.spectrum().lambda_hi);
  w.f64(p.spectrum().rank_fraction);
  for (Index j = 0; j < p.dim(); ++j) w.f64(p.x_star()[j]);
  for (const auto& c : p.clients()) {
    w.f64(c.c());
    for (Index j = 0; j < p.dim(); ++j) w.f64(c.b()[j]);
    for (Index r = 0; r < p.dim(); ++r) {
      for (Index col = 0; col < p.dim(); ++col) w.f64(c.A()(r, col));
    }
  }
}

FederatedProblem load_problem(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) throw IoError("not a problem dump (bad magic): " + path.string());
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  if (n == 0 || d == 0 || d > 100000 || n > 1000000) {
    throw IoError("implausible problem header in " + path.string());
  }
  const std::uint64_t seed = r.u64();
  Spectrum spectrum;
  spectrum.lambda_lo = r.f64();
  spectrum.lambda_hi = r.f64();
  spectrum.rank_fraction = r.f64();
  const auto dim = static_cast<Index>(d);
  Vector x_star(dim);
  for (Index j = 0; j < dim; ++j) x_star[j] = r.f64();
  std::vector<QuadraticClient> clients;
  clients.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double c = r.f64();
    Vector b(dim);
    for (Index j = 0; j < dim; ++j) b[j] = r.f64();
    Eigen::MatrixXd a(dim, dim);
    for (Index row = 0; row < dim; ++row) {
      for (Index col = 0; col < dim; ++col) a(row, col) = r.f64();
    }
    clients.emplace_back(SymMatrix::from_upper(a), std::move(b), c);
  }
  return FederatedProblem(std::move(clients), std::move(x_star), seed, spectrum);
}

}  // namespace fedexprox
