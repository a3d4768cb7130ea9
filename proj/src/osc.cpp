#include "mindplane/osc.hpp"

#include "mindplane/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string_view>

namespace mindplane::osc {

namespace {

std::size_t padded(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> data, std::size_t base = 0)
      : data_(data), base_(base) {}

  std::size_t offset() const { return base_ + pos_; }
  bool done() const { return pos_ == data_.size(); }

  // OSC-string: ASCII, NUL-terminated, padded with NULs to a 4-byte boundary.
  std::string string(const char* what) {
    const auto* begin = data_.data() + pos_;
    const auto* end = data_.data() + data_.size();
    const auto* nul = std::find(begin, end, std::uint8_t{0});
    if (nul == end) throw ParseError(std::string("unterminated OSC ") + what, offset());
    const std::size_t len = static_cast<std::size_t>(nul - begin);
    const std::size_t total = padded(len + 1);
    if (pos_ + total > data_.size())
      throw ParseError(std::string("OSC ") + what + " padding runs past end", offset() + len);
    for (std::size_t i = len; i < total; ++i)
      if (begin[i] != 0) throw ParseError(std::string("bad OSC ") + what + " padding", offset() + i);
    std::string out(reinterpret_cast<const char*>(begin), len);
    pos_ += total;
    return out;
  }

  std::uint32_t u32(const char* what) {
    if (pos_ + 4 > data_.size())
      throw ParseError(std::string("truncated OSC ") + what, offset());
    const auto* p = data_.data() + pos_;
    pos_ += 4;
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  }

  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    if (pos_ + n > data_.size())
      throw ParseError(std::string("truncated OSC ") + what, offset());
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

private:
  std::span<const std::uint8_t> data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

OscMessage parse_at(std::span<const std::uint8_t> data, std::size_t base) {
  if (data.empty()) throw ParseError("empty OSC packet", base);
  Reader r(data, base);

  if (data[0] == '#') {
    const std::size_t start = r.offset();
    if (r.string("bundle tag") != "#bundle") throw ParseError("unknown OSC packet type", start);
    r.bytes(8, "bundle time tag");
    if (r.done()) throw ParseError("OSC bundle has no elements", r.offset());
    const std::uint32_t size = r.u32("bundle element size");
    if (size == 0 || size % 4 != 0) throw ParseError("bad OSC bundle element size", r.offset() - 4);
    const std::size_t element_offset = r.offset();
    return parse_at(r.bytes(size, "bundle element"), element_offset);
  }

  OscMessage msg;
  const std::size_t address_offset = r.offset();
  msg.address = r.string("address");
  if (msg.address.empty() || msg.address.front() != '/')
    throw ParseError("OSC address must start with '/'", address_offset);

  if (r.done()) return msg;  // old-style message without a type tag string
  const std::size_t tags_offset = r.offset();
  std::string tags = r.string("type tags");
  if (tags.empty() || tags.front() != ',') throw ParseError("OSC type tags must start with ','", tags_offset);
  msg.type_tags = tags.substr(1);

  for (std::size_t i = 0; i < msg.type_tags.size(); ++i) {
    const char tag = msg.type_tags[i];
    switch (tag) {
      case 'f':
        msg.args.push_back(std::bit_cast<float>(r.u32("float argument")));
        break;
      case 'i':
        msg.args.push_back(static_cast<float>(static_cast<std::int32_t>(r.u32("int argument"))));
        break;
      default:
        throw ParseError(std::string("unsupported OSC type tag '") + tag + "'",
                         tags_offset + 1 + i);
    }
  }
  if (!r.done()) throw ParseError("trailing bytes after OSC arguments", r.offset());
  return msg;
}

void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
  const std::size_t total = padded(s.size() + 1);
  out.insert(out.end(), total - s.size(), 0);
}

} // namespace

OscMessage parse_osc(std::span<const std::uint8_t> datagram) { return parse_at(datagram, 0); }

std::vector<std::uint8_t> serialize_osc(const OscMessage& msg) {
  if (msg.address.empty() || msg.address.front() != '/')
    throw ValidationError("OSC address must start with '/'");
  std::string tags = msg.type_tags;
  if (tags.empty()) tags.assign(msg.args.size(), 'f');
  if (tags.size() != msg.args.size() || tags.find_first_not_of('f') != std::string::npos)
    throw ValidationError("serialize_osc supports float arguments only");

  std::vector<std::uint8_t> out;
  put_string(out, msg.address);
  put_string(out, "," + tags);
  for (float f : msg.args) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int shift = 24; shift >= 0; shift -= 8)
      out.push_back(static_cast<std::uint8_t>(bits >> shift));
  }
  return out;
}

std::optional<BandReading> decode_muse(const OscMessage& msg) {
  static constexpr std::string_view kPrefix = "/muse/elements/";
  static constexpr std::string_view kSuffix = "_absolute";
  std::string_view a = msg.address;
  if (!a.starts_with(kPrefix) || !a.ends_with(kSuffix) || msg.args.size() != 4)
    return std::nullopt;
  a.remove_prefix(kPrefix.size());
  a.remove_suffix(kSuffix.size());

  BandReading r;
  if (a == "gamma") {
    r.band = Band::gamma;
  } else if (a == "beta") {
    r.band = Band::beta;
  } else if (a == "alpha") {
    r.band = Band::alpha;
  } else {
    return std::nullopt;
  }
  r.f7 = msg.args[1];
  r.f8 = msg.args[2];
  return r;
}

SampleAssembler::SampleAssembler(ChannelSet channels)
    : channels_(std::move(channels)),
      values_(channels_.size(), 0.0),
      fresh_(channels_.size(), false) {}

std::optional<std::vector<double>> SampleAssembler::add(const BandReading& r) {
  bool used = false;
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].band != r.band) continue;
    values_[i] = channels_[i].electrode == Electrode::F7 ? r.f7 : r.f8;
    fresh_[i] = true;
    used = true;
  }
  if (!used || std::find(fresh_.begin(), fresh_.end(), false) != fresh_.end()) return std::nullopt;
  std::fill(fresh_.begin(), fresh_.end(), false);
  return values_;
}

} // namespace mindplane::osc
