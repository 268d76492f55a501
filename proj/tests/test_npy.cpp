#include <cstring>
#include <random>

#include "doctest.h"
#include "klsal/error.hpp"
#include "klsal/io.hpp"
#include "klsal/npy.hpp"
#include "test_support.hpp"

using namespace klsal;

namespace {

std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p) { return io::read_file(p); }

}  // namespace

TEST_CASE("reading reference files written by numpy") {
  const auto dir = testing::fixtures() / "npy";
  SUBCASE("1-D float64") {
    auto t = npy::load(dir / "f64_1d.npy");
    CHECK(t.shape() == Shape{2});
    CHECK(t.values() == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("float32 widened") {
    auto t = npy::load(dir / "f32_2x3.npy");
    CHECK(t.shape() == Shape{2, 3});
    const std::vector<float> expected{0.5f, -1.25f, 3.0f, 1e-3f, 7.0f, -2.5f};
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(t[i] == static_cast<double>(expected[i]));
  }
  SUBCASE("3-D") {
    auto t = npy::load(dir / "f64_3d.npy");
    CHECK(t.shape() == Shape{2, 3, 4});
    for (std::size_t i = 0; i < 24; ++i) CHECK(t[i] == static_cast<double>(i) / 8.0);
  }
  SUBCASE("scalar") {
    auto t = npy::load(dir / "f64_scalar.npy");
    CHECK(t.rank() == 0);
    CHECK(t[0] == 2.5);
  }
}

TEST_CASE("unsupported element types and layouts") {
  const auto dir = testing::fixtures() / "npy";
  CHECK_THROWS_AS(npy::load(dir / "be_f8.npy"), UnsupportedDType);
  CHECK_THROWS_AS(npy::load(dir / "i4.npy"), UnsupportedDType);
  CHECK_THROWS_AS(npy::load(dir / "fortran.npy"), UnsupportedDType);
}

TEST_CASE("malformed containers") {
  auto good = npy::write(Tensor({2}, {1.0, 2.0}));
  SUBCASE("wrong magic") {
    auto b = good;
    b[1] = 'X';
    CHECK_THROWS_AS(npy::read(b), MalformedContainer);
  }
  SUBCASE("version 2.0 rejected") {
    auto b = good;
    b[6] = 2;
    CHECK_THROWS_AS(npy::read(b), MalformedContainer);
  }
  SUBCASE("truncated payload") {
    auto b = good;
    b.pop_back();
    CHECK_THROWS_AS(npy::read(b), MalformedContainer);
  }
  SUBCASE("too short for a prelude") {
    std::vector<std::uint8_t> b(good.begin(), good.begin() + 5);
    CHECK_THROWS_AS(npy::read(b), MalformedContainer);
  }
  SUBCASE("header without shape") {
    std::string header = "{'descr': '<f8', 'fortran_order': False, }";
    header.append(64 - (10 + header.size() + 1) % 64, ' ');
    header.push_back('\n');
    std::vector<std::uint8_t> b(good.begin(), good.begin() + 8);
    b.push_back(static_cast<std::uint8_t>(header.size()));
    b.push_back(0);
    b.insert(b.end(), header.begin(), header.end());
    CHECK_THROWS_AS(npy::read(b), MalformedContainer);
  }
}

TEST_CASE("writer output") {
  SUBCASE("magic and version") {
    auto b = npy::write(Tensor({1}, {0.0}));
    const std::uint8_t prefix[] = {0x93, 'N', 'U', 'M', 'P', 'Y', 0x01, 0x00};
    REQUIRE(b.size() > sizeof(prefix));
    CHECK(std::memcmp(b.data(), prefix, sizeof(prefix)) == 0);
    const std::size_t header_len = b[8] | (b[9] << 8);
    CHECK((10 + header_len) % 64 == 0);
    CHECK(b[10 + header_len - 1] == '\n');
  }
  SUBCASE("byte-identical to numpy for a 2x2 array") {
    auto ours = npy::write(Tensor({2, 2}, {1, 2, 3, 4}));
    CHECK(ours == bytes_of(testing::fixtures() / "npy" / "f64_2x2.npy"));
  }
  SUBCASE("byte-identical to numpy for 1-D and 3-D arrays") {
    CHECK(npy::write(npy::load(testing::fixtures() / "npy" / "f64_1d.npy")) ==
          bytes_of(testing::fixtures() / "npy" / "f64_1d.npy"));
    CHECK(npy::write(npy::load(testing::fixtures() / "npy" / "f64_3d.npy")) ==
          bytes_of(testing::fixtures() / "npy" / "f64_3d.npy"));
  }
}

TEST_CASE("round trip is the bitwise identity") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> rank(0, 4), ext(1, 6);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int n = 0; n < 200; ++n) {
    Shape shape(rank(rng));
    for (auto& e : shape) e = ext(rng);
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) {
      // Arbitrary finite bit patterns, subnormals and signed zeros included.
      do {
        auto raw = bits(rng);
        std::memcpy(&v, &raw, sizeof v);
      } while (!std::isfinite(v));
    }
    Tensor t(shape, data);
    auto back = npy::read(npy::write(t));
    REQUIRE(back.shape() == t.shape());
    CHECK(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(double)) == 0);
  }
}
