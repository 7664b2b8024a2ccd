#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "error.hpp"
#include "field.hpp"
#include "support.hpp"

using namespace fdi;
using namespace fdi::testing;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("stats of a constant field") {
  const auto f = make_field({4, 4}, std::vector<double>(16, 3.0));
  const auto s = field_stats(f);
  CHECK(s.mean == 3.0);
  CHECK(s.std == 0.0);
  CHECK(s.min == 3.0);
  CHECK(s.max == 3.0);
}

TEST_CASE("stats use the population deviation") {
  const auto s = field_stats(make_field({2, 1}, {-1.0, 1.0}));
  CHECK(s.mean == 0.0);
  CHECK(s.std == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("stats of sine samples match two-pass summation") {
  std::vector<double> v(64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * static_cast<double>(i) + 0.1);
  long double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double oracle = static_cast<double>(std::sqrt(ss / v.size()));
  const auto s = field_stats(make_field({8, 8}, v));
  CHECK(rel_diff(s.std, oracle) <= 1e-12);
  CHECK(rel_diff(s.mean, static_cast<double>(mean)) <= 1e-12);
  CHECK(s.min <= s.mean);
  CHECK(s.mean <= s.max);
}

TEST_SUITE("property") {
  TEST_CASE("stats are invariant to sample order") {
    auto v = random_values(300, 11);
    const auto a = field_stats(make_field({30, 10}, v));
    std::mt19937_64 gen(5);
    std::shuffle(v.begin(), v.end(), gen);
    const auto b = field_stats(make_field({10, 30}, v));
    CHECK(rel_diff(a.std, b.std) <= 1e-13);
    CHECK(std::abs(a.mean - b.mean) <= 1e-15);
    CHECK(a.min == b.min);
    CHECK(a.max == b.max);
  }

  TEST_CASE("write then read is bit exact") {
    TempDir dir("field");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::vector<std::vector<std::size_t>> shapes = {{3, 4}, {5, 2, 7}, {2, 3, 2, 5}};
      for (const auto& dims : shapes) {
        std::vector<double> spacings;
        for (std::size_t a = 0; a < dims.size(); ++a) spacings.push_back(0.1 * static_cast<double>(a + 1) + 1e-3 * seed);
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        const Field f(dims, spacings, default_labels(dims.size()), random_values(n, seed, -1e6, 1e6));
        const auto path = dir / ("f" + std::to_string(seed) + ".fdi");
        write_field(f, path);
        const Field g = read_field(path);
        CHECK(g == f);
        CHECK(std::memcmp(g.data().data(), f.data().data(), n * sizeof(double)) == 0);
      }
    }
  }

  TEST_CASE("trimming twice equals one trim with summed margins") {
    const auto f = random_field({12, 11, 10}, 3);
    const std::vector<Margin> m1{{1, 2}, {0, 1}, {2, 0}};
    const std::vector<Margin> m2{{2, 1}, {1, 1}, {1, 1}};
    const std::vector<Margin> sum{{3, 3}, {1, 2}, {3, 1}};
    CHECK(trim_interior(trim_interior(f, m1), m2) == trim_interior(f, sum));
  }
}

TEST_CASE("zero margins leave the field unchanged") {
  const auto f = random_field({6, 5}, 1);
  const std::vector<Margin> m(2);
  CHECK(trim_interior(f, m) == f);
}

TEST_CASE("trim arithmetic") {
  const auto f = random_field({10, 10}, 2);
  const std::vector<Margin> m{{2, 2}, {1, 1}};
  const auto g = trim_interior(f, m);
  CHECK(g.dims() == std::vector<std::size_t>{6, 8});
  CHECK(g.spacings() == f.spacings());
}

TEST_CASE("trimmed samples sit at shifted indices") {
  std::vector<double> counter(25);
  for (std::size_t i = 0; i < 25; ++i) counter[i] = static_cast<double>(i);
  const auto f = make_field({5, 5}, counter);
  for (std::size_t lo0 = 0; lo0 <= 1; ++lo0)
    for (std::size_t hi0 = 0; lo0 + hi0 <= 1; ++hi0)
      for (std::size_t lo1 = 0; lo1 <= 1; ++lo1)
        for (std::size_t hi1 = 0; lo1 + hi1 <= 1; ++hi1) {
          const std::vector<Margin> m{{lo0, hi0}, {lo1, hi1}};
          const auto g = trim_interior(f, m);
          for (std::size_t i = 0; i < g.dims()[0]; ++i)
            for (std::size_t j = 0; j < g.dims()[1]; ++j)
              CHECK(g[i * g.dims()[1] + j] == counter[(i + lo0) * 5 + j + lo1]);
        }
}

TEST_CASE("margins that leave fewer than four samples are rejected") {
  const auto f = random_field({10, 10}, 2);
  const std::vector<Margin> m{{4, 3}, {0, 0}};
  CHECK(kind_of([&] { trim_interior(f, m); }) == ErrorKind::degenerate_grid);
}

TEST_CASE("field invariants") {
  CHECK(kind_of([] { make_field({}, {}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { make_field({4}, {1, 2, 3, 4}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { make_field({2, 2}, {1, 2, 3}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { make_field({2, 2}, {1, 2, 3, NAN}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { make_field({2, 2}, {1, 2, 3, 4}, {1.0, 0.0}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { Field({2, 2}, {1, 1}, {Axis::t, Axis::x}, {1, 2, 3, 4}); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] {
          Field({1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {Axis::x, Axis::y, Axis::z, Axis::x, Axis::t}, {1});
        }) == ErrorKind::invalid_argument);
}

TEST_CASE("bad magic is a format error") {
  TempDir dir("magic");
  const auto path = dir / "bad.fdi";
  write_field(random_field({3, 4}, 1), path);
  {
    std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(0);
    io.write("XDI1", 4);
  }
  CHECK(kind_of([&] { read_field(path); }) == ErrorKind::format);
}

TEST_CASE("truncated payload is a format error naming the offset") {
  TempDir dir("trunc");
  const auto path = dir / "short.fdi";
  write_field(random_field({3, 4}, 1), path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  try {
    read_field(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::format);
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("empty dims in a file are rejected") {
  TempDir dir("empty");
  const auto path = dir / "empty.fdi";
  {
    std::ofstream out(path, std::ios::binary);
    out.write("FDI1", 4);
    const char zero = 0;
    out.write(&zero, 1);
  }
  CHECK(kind_of([&] { read_field(path); }) == ErrorKind::format);
}

TEST_CASE("missing file is an io error") {
  CHECK(kind_of([] { read_field("/nonexistent/dir/x.fdi"); }) == ErrorKind::io);
}

TEST_CASE("encode layout is little-endian with the documented header") {
  const Field f({2, 3}, {0.5, 0.25}, {Axis::x, Axis::t}, {1, 2, 3, 4, 5, 6});
  const auto bytes = encode_field(f);
  REQUIRE(bytes.size() == 4 + 1 + 2 * 8 + 2 * 8 + 2 + 6 * 8);
  CHECK(std::memcmp(bytes.data(), "FDI1", 4) == 0);
  CHECK(bytes[4] == 2);
  CHECK(bytes[5] == 2);
  CHECK(bytes[13] == 3);
  CHECK(bytes[37] == 0);
  CHECK(bytes[38] == 3);
  CHECK(decode_field(bytes) == f);
}

TEST_CASE("sidecar sits next to the bundle") {
  CHECK(sidecar_path("a/b/run.fdi") == std::filesystem::path("a/b/run.json"));
}
