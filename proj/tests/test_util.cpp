#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "satpose/util/csv.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/image.hpp"
#include "satpose/util/rng.hpp"
#include "satpose/util/thread_pool.hpp"
#include "satpose/util/toml.hpp"

using namespace satpose;

namespace {
std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "satpose_test" / name;
  std::filesystem::remove_all(dir);
  ensure_dir(dir);
  return dir;
}
}  // namespace

TEST_CASE("rng determinism and derivation") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::derive(7, 3);
  Rng d = Rng::derive(7, 3);
  CHECK(c.uniform() == d.uniform());
  CHECK(Rng::derive(7, 3).next_u64() != Rng::derive(7, 4).next_u64());
}

TEST_CASE("rng uniform and normal ranges") {
  Rng rng(1);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double g = rng.normal();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("parallel_for is bitwise-identical to serial") {
  const std::size_t n = 1000;
  std::vector<double> serial(n), parallel(n);
  set_worker_threads(1);
  parallel_for(n, [&](std::size_t i) { serial[i] = std::sin(static_cast<double>(i)) * 3.0; });
  set_worker_threads(0);
  parallel_for(n, [&](std::size_t i) { parallel[i] = std::sin(static_cast<double>(i)) * 3.0; });
  CHECK(serial == parallel);
  set_worker_threads(0);
}

TEST_CASE("toml parsing") {
  const auto t = TomlTable::parse(
      "# comment\n"
      "top = 3\n"
      "[train]\n"
      "lr = 1e-3\n"
      "name = \"run a\"  # inline\n"
      "flags = [1, 2.5, 3]\n"
      "deep = true\n");
  CHECK(t.get_int("top", 0) == 3);
  CHECK(t.get_double("train.lr", 0) == doctest::Approx(1e-3));
  CHECK(t.get_string("train.name", "") == "run a");
  CHECK(t.get_bool("train.deep", false));
  const auto arr = t.get_number_array("train.flags", {});
  REQUIRE(arr.size() == 3);
  CHECK(arr[1] == doctest::Approx(2.5));

  TomlTable o = t;
  o.set_override("train.lr=5.0");
  CHECK(o.get_double("train.lr", 0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(TomlTable::parse("oops\n"), ConfigError);
}

TEST_CASE("csv round trip") {
  CsvWriter w({"a", "b", "c"});
  w.add(std::string("x"));
  w.add(1.5);
  w.add(7LL);
  w.end_row();
  const auto dir = temp_dir("csv");
  w.save(dir / "t.csv");
  const CsvTable t = read_csv(dir / "t.csv");
  REQUIRE(t.header.size() == 3);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.column("b") == 1);
  CHECK(t.number(0, t.column("b")) == doctest::Approx(1.5));
}

TEST_CASE("png gray8 round trip") {
  Image8 img(33, 17);
  Rng rng(5);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.uniform_index(256));
  const auto dir = temp_dir("png");
  write_png_gray8(dir / "x.png", img);
  const Image8 back = read_png_gray8(dir / "x.png");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
}
