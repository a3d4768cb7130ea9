#include "mindplane/error.hpp"
#include "mindplane/osc.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>

using namespace mindplane;
using namespace mindplane::osc;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Independent OSC 1.0 encoder for building test datagrams byte by byte.
void put_string(Bytes& b, const std::string& s) {
  for (char c : s) b.push_back(static_cast<std::uint8_t>(c));
  b.push_back(0);
  while (b.size() % 4) b.push_back(0);
}

void put_u32(Bytes& b, std::uint32_t v) {
  b.push_back(v >> 24);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back(v & 0xff);
}

void put_float(Bytes& b, float f) { put_u32(b, std::bit_cast<std::uint32_t>(f)); }

Bytes muse_datagram(const std::string& band, std::vector<float> args) {
  Bytes b;
  put_string(b, "/muse/elements/" + band + "_absolute");
  put_string(b, "," + std::string(args.size(), 'f'));
  for (float f : args) put_float(b, f);
  return b;
}

} // namespace

TEST_CASE("hand-built Muse gamma datagram") {
  const auto bytes = muse_datagram("gamma", {0.1f, 0.8f, 0.7f, 0.2f});
  REQUIRE(bytes.size() == 32 + 8 + 16);
  const auto msg = parse_osc(bytes);
  CHECK(msg.address == "/muse/elements/gamma_absolute");
  CHECK(msg.type_tags == "ffff");
  CHECK(msg.args == std::vector<float>{0.1f, 0.8f, 0.7f, 0.2f});

  const auto r = decode_muse(msg);
  REQUIRE(r);
  CHECK(r->band == Band::gamma);
  CHECK(r->f7 == static_cast<double>(0.8f));
  CHECK(r->f8 == static_cast<double>(0.7f));
}

TEST_CASE("beta and alpha addresses decode to their band") {
  CHECK(decode_muse(parse_osc(muse_datagram("beta", {1, 2, 3, 4})))->band == Band::beta);
  CHECK(decode_muse(parse_osc(muse_datagram("alpha", {1, 2, 3, 4})))->band == Band::alpha);
}

TEST_CASE("unknown addresses and odd argument counts are ignored") {
  Bytes b;
  put_string(b, "/muse/unknown");
  put_string(b, ",f");
  put_float(b, 1.0f);
  const auto msg = parse_osc(b);
  CHECK(msg.address == "/muse/unknown");
  CHECK_FALSE(decode_muse(msg));
  CHECK_FALSE(decode_muse(parse_osc(muse_datagram("gamma", {1, 2, 3}))));
}

TEST_CASE("truncated arguments report the offset of the cut") {
  auto bytes = muse_datagram("gamma", {0.1f, 0.8f, 0.7f, 0.2f});
  bytes.resize(bytes.size() - 2);
  try {
    parse_osc(bytes);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 32 + 8 + 12);
  }
}

TEST_CASE("malformed datagrams") {
  CHECK_THROWS_AS(parse_osc(Bytes{}), ParseError);

  Bytes no_slash;
  put_string(no_slash, "muse");
  put_string(no_slash, ",");
  CHECK_THROWS_AS(parse_osc(no_slash), ParseError);

  Bytes unterminated{'/', 'a', 'b', 'c'};
  CHECK_THROWS_AS(parse_osc(unterminated), ParseError);

  Bytes blob;
  put_string(blob, "/x");
  put_string(blob, ",s");
  put_string(blob, "hi");
  try {
    parse_osc(blob);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);  // the 's' tag
  }

  auto trailing = muse_datagram("gamma", {1, 2, 3, 4});
  put_u32(trailing, 0);
  CHECK_THROWS_AS(parse_osc(trailing), ParseError);
}

TEST_CASE("integer arguments are widened") {
  Bytes b;
  put_string(b, "/n");
  put_string(b, ",if");
  put_u32(b, static_cast<std::uint32_t>(-7));
  put_float(b, 2.5f);
  const auto msg = parse_osc(b);
  CHECK(msg.type_tags == "if");
  CHECK(msg.args == std::vector<float>{-7.0f, 2.5f});
}

TEST_CASE("bundles yield their first message") {
  const auto first = muse_datagram("alpha", {1, 2, 3, 4});
  const auto second = muse_datagram("gamma", {5, 6, 7, 8});
  Bytes b;
  put_string(b, "#bundle");
  put_u32(b, 0);
  put_u32(b, 1);
  put_u32(b, static_cast<std::uint32_t>(first.size()));
  b.insert(b.end(), first.begin(), first.end());
  put_u32(b, static_cast<std::uint32_t>(second.size()));
  b.insert(b.end(), second.begin(), second.end());
  const auto msg = parse_osc(b);
  CHECK(msg.address == "/muse/elements/alpha_absolute");
  CHECK(msg.args[2] == 3.0f);
}

TEST_CASE("serialize then parse is the identity") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> len(1, 40), nargs(0, 9), ch('a', 'z');
  std::uniform_real_distribution<float> val(-1e6f, 1e6f);
  for (int k = 0; k < 500; ++k) {
    OscMessage m;
    m.address = "/";
    for (int i = len(rng); i > 0; --i) m.address += static_cast<char>(ch(rng));
    for (int i = nargs(rng); i > 0; --i) m.args.push_back(val(rng));
    m.type_tags = std::string(m.args.size(), 'f');
    const auto bytes = serialize_osc(m);
    CHECK(bytes.size() % 4 == 0);
    CHECK(parse_osc(bytes) == m);
  }
  // serialize matches the hand encoder
  OscMessage m{"/muse/elements/gamma_absolute", "ffff", {0.1f, 0.8f, 0.7f, 0.2f}};
  CHECK(serialize_osc(m) == muse_datagram("gamma", {0.1f, 0.8f, 0.7f, 0.2f}));
}

TEST_CASE("sample assembler waits for every band in use") {
  SampleAssembler gamma_only(ChannelSet::default_set());
  CHECK_FALSE(gamma_only.add({Band::alpha, 1, 2}));
  auto v = gamma_only.add({Band::gamma, 0.8, 0.7});
  REQUIRE(v);
  CHECK(*v == std::vector<double>{0.8, 0.7});

  SampleAssembler all(ChannelSet::all());
  CHECK_FALSE(all.add({Band::gamma, 1, 2}));
  CHECK_FALSE(all.add({Band::beta, 3, 4}));
  CHECK_FALSE(all.add({Band::gamma, 10, 20}));  // refresh before alpha arrives
  v = all.add({Band::alpha, 5, 6});
  REQUIRE(v);
  CHECK(*v == std::vector<double>{10, 20, 3, 4, 5, 6});
  CHECK_FALSE(all.add({Band::alpha, 5, 6}));
}
