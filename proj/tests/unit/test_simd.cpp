#include "doctest.h"

#include <limits>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "jtsmc/io.hpp"
#include "jtsmc/rng.hpp"
#include "jtsmc/scores.hpp"
#include "jtsmc/simd.hpp"

using namespace jtsmc;

namespace {

std::vector<double> normals(std::size_t n, Rng& rng) {
  boost::random::normal_distribution<double> z;
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

}  // namespace

TEST_CASE("every SIMD variant matches the scalar reference") {
  if (!simd::isa_supported(simd::Isa::avx2)) {
    MESSAGE("AVX2 not available; only the scalar path is exercised");
    return;
  }
#if defined(__x86_64__) || defined(__i386__)
  Rng rng = Rng::derive(41, 0);
  // Lengths around the vector width and its tails.
  for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 5ul, 7ul, 8ul, 15ul, 16ul, 17ul, 63ul, 1000ul, 4099ul}) {
    CAPTURE(n);
    const auto a = normals(n, rng), b = normals(n, rng);
    const double ref = simd::scalar::dot(a.data(), b.data(), n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(simd::avx2::dot(a.data(), b.data(), n) - ref) <= 1e-13 * (1.0 + mag));

    if (n > 0) {
      auto w = a;
      w[rng.below(static_cast<int>(n))] = 50.0;
      CHECK(simd::avx2::max_value(w.data(), n) == simd::scalar::max_value(w.data(), n));
      std::vector<double> zeros(n, -std::numeric_limits<double>::infinity());
      CHECK(simd::avx2::max_value(zeros.data(), n) == -std::numeric_limits<double>::infinity());
    }

    std::vector<std::uint32_t> col(n), k1(n), k2(n);
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = static_cast<std::uint32_t>(rng.below(7));
      k1[i] = k2[i] = static_cast<std::uint32_t>(rng.below(1000));
    }
    simd::scalar::accumulate_keys(k1.data(), col.data(), 49, n);
    simd::avx2::accumulate_keys(k2.data(), col.data(), 49, n);
    CHECK(k1 == k2);
  }
#endif
}

TEST_CASE("scores agree under each dispatch target") {
  Rng rng = Rng::derive(42, 0);
  DiscreteData d;
  d.cardinality = {2, 3, 4, 2, 3};
  d.columns.assign(5, {});
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 333; ++i) d.columns[j].push_back(static_cast<std::uint32_t>(rng.below(d.cardinality[j])));
  ContinuousData c;
  c.values.resize(57, 5);
  const auto flat = normals(57 * 5, rng);
  for (int i = 0; i < 57; ++i)
    for (int j = 0; j < 5; ++j) c.values(i, j) = flat[i * 5 + j];

  std::vector<std::vector<double>> results;
  for (auto isa : {simd::Isa::scalar, simd::Isa::avx2}) {
    if (!simd::isa_supported(isa)) continue;
    simd::force_isa(isa);
    CHECK(simd::active_isa() == isa);
    // Fresh models so the subset caches are filled under this target.
    const auto dm = ScoreModel::dirichlet(d, 1.0);
    const auto wm = ScoreModel::wishart(c, 5.0, Eigen::MatrixXd::Identity(5, 5));
    std::vector<double> r;
    for (std::uint64_t b = 1; b < 32; ++b) {
      r.push_back(dm.log_potential(NodeSet(b)));
      r.push_back(wm.log_potential(NodeSet(b)));
    }
    results.push_back(std::move(r));
  }
  simd::reset_isa();
  for (std::size_t k = 1; k < results.size(); ++k)
    for (std::size_t i = 0; i < results[0].size(); ++i)
      CHECK(results[k][i] == doctest::Approx(results[0][i]).epsilon(1e-12));
}

TEST_CASE("isa names") {
  CHECK(std::string(simd::isa_name(simd::Isa::scalar)) == "scalar");
  CHECK(std::string(simd::isa_name(simd::Isa::avx2)) == "avx2");
  CHECK(simd::isa_supported(simd::Isa::scalar));
}
