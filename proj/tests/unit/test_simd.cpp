#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>
#include <vector>

#include "kgalign/simd/kernels.hpp"

using namespace kgalign::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

// Textbook loop written out in the documented reduction order.
double reference_dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s[4] = {0, 0, 0, 0};
  const std::size_t body = x.size() / 4 * 4;
  for (std::size_t i = 0; i < body; ++i) s[i % 4] += x[i] * y[i];
  double total = (s[0] + s[2]) + (s[1] + s[3]);
  for (std::size_t i = body; i < x.size(); ++i) total += x[i] * y[i];
  return total;
}

}  // namespace

TEST_CASE("scalar kernel follows the documented reduction order") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 0; n <= 37; ++n) {
    const auto x = random_vector(rng, n);
    const auto y = random_vector(rng, n);
    CHECK(bits(dot_scalar(x.data(), y.data(), n)) == bits(reference_dot(x, y)));
  }
}

TEST_CASE("every available ISA is bit-identical to scalar") {
  std::mt19937_64 rng(12);
  for (const Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (!isa_available(isa)) continue;
    CAPTURE(to_string(isa));
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto x = random_vector(rng, n);
      const auto y = random_vector(rng, n);
      CHECK(bits(dot_for(isa)(x.data(), y.data(), n)) ==
            bits(dot_scalar(x.data(), y.data(), n)));
    }
    for (const std::size_t dim : {1u, 3u, 4u, 7u, 8u, 32u, 33u}) {
      const std::size_t rows = 9;
      const auto q = random_vector(rng, dim);
      const auto m = random_vector(rng, dim * rows);
      std::vector<double> a(rows), b(rows);
      dot_many_for(isa)(q.data(), m.data(), dim, rows, a.data());
      dot_many_scalar(q.data(), m.data(), dim, rows, b.data());
      CHECK(std::memcmp(a.data(), b.data(), rows * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("dot_many matches single dots row by row") {
  std::mt19937_64 rng(13);
  const std::size_t dim = 13, rows = 5;
  const auto q = random_vector(rng, dim);
  const auto m = random_vector(rng, dim * rows);
  std::vector<double> out(rows);
  dot_many_scalar(q.data(), m.data(), dim, rows, out.data());
  for (std::size_t r = 0; r < rows; ++r) {
    CHECK(bits(out[r]) == bits(dot_scalar(q.data(), m.data() + r * dim, dim)));
  }
}

TEST_CASE("scalar is always available and the active ISA is usable") {
  CHECK(isa_available(Isa::Scalar));
  CHECK(isa_available(active_isa()));
  CHECK(dot_for(Isa::Scalar) == &dot_scalar);
}
