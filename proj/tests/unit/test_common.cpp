#include <catch_amalgamated.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/gzip.hpp"
#include "noisenet/common/hash.hpp"
#include "noisenet/common/rng.hpp"
#include "noisenet/common/tar.hpp"
#include "noisenet/common/time.hpp"

using namespace noisenet;

TEST_CASE("utc dates and ISO timestamps", "[common][time]") {
  const auto t = parse_iso8601("2017-05-31T23:59:59Z");
  CHECK(utc_date(t) == "2017-05-31");
  CHECK(utc_date(t + kSecond) == "2017-06-01");
  CHECK(iso8601(t) == "2017-05-31T23:59:59Z");
  CHECK(to_unix_ms(parse_iso8601("1970-01-02")) == 86'400'000);
  CHECK_THROWS_AS(parse_iso8601("2017-02-30"), FormatError);
  CHECK_THROWS_AS(parse_iso8601("yesterday"), FormatError);
}

TEST_CASE("duration strings", "[common][time]") {
  CHECK(parse_duration("30m") == 30 * kMinute);
  CHECK(parse_duration("1.5h") == 90 * kMinute);
  CHECK(parse_duration("5d") == 5 * kDay);
  CHECK(parse_duration("250ms") == Millis{250});
  CHECK_THROWS_AS(parse_duration("12"), FormatError);
  CHECK_THROWS_AS(parse_duration("3 weeks"), FormatError);
}

TEST_CASE("ustar round trip and corruption detection", "[common][tar]") {
  Rng rng(7);
  std::vector<tar::Member> members;
  for (int i = 0; i < 5; ++i) {
    tar::Member m{"file" + std::to_string(i) + ".bin", {}, 1'500'000'000 + i};
    m.data.resize(rng.below(2000));
    for (auto& b : m.data) b = static_cast<std::uint8_t>(rng());
    members.push_back(std::move(m));
  }
  const auto archive = tar::write(members);
  CHECK(archive.size() % 512 == 0);
  const auto back = tar::read(archive);
  REQUIRE(back.size() == members.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == members[i].name);
    CHECK(back[i].data == members[i].data);
    CHECK(back[i].mtime_s == members[i].mtime_s);
  }
  CHECK(tar::write(members) == archive);

  auto truncated = archive;
  truncated.resize(700);
  CHECK_THROWS_AS(tar::read(truncated), FormatError);
  auto bad_header = archive;
  bad_header[3] ^= 0x20;
  CHECK_THROWS_AS(tar::read(bad_header), FormatError);
}

TEST_CASE("gzip round trip is reproducible", "[common][gzip]") {
  std::vector<std::uint8_t> data(100'000);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i % 251);
  const auto z = gzip::compress(data);
  CHECK(z.size() < data.size());
  CHECK(gzip::compress(data) == z);
  CHECK(gzip::decompress(z) == data);
  auto cut = z;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(gzip::decompress(cut), FormatError);
}

TEST_CASE("sha256 known answer", "[common][hash]") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("rng helpers are deterministic and in range", "[common][rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) == b.below(7));
  }
  Rng n(1);
  double sum = 0, sum2 = 0;
  const int count = 200'000;
  for (int i = 0; i < count; ++i) {
    const double x = n.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / count) < 0.01);
  CHECK(std::abs(sum2 / count - 1.0) < 0.02);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}
