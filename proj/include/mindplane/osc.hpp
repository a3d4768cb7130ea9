#pragma once

#include "mindplane/signal_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mindplane::osc {

// One OSC 1.0 message. Integer arguments are widened to float on decode.
struct OscMessage {
  std::string address;
  std::string type_tags;  // without the leading ','
  std::vector<float> args;

  friend bool operator==(const OscMessage&, const OscMessage&) = default;
};

// Decodes one datagram. For a bundle the first contained message is returned.
// Throws ParseError carrying the byte offset of the defect.
OscMessage parse_osc(std::span<const std::uint8_t> datagram);

// Encodes a message with 'f' arguments (type_tags must be all 'f' or empty,
// in which case it is derived from args).
std::vector<std::uint8_t> serialize_osc(const OscMessage& msg);

// Band power for both forehead electrodes from one Muse *_absolute message.
struct BandReading {
  Band band = Band::gamma;
  double f7 = 0.0;
  double f8 = 0.0;
};

// Maps /muse/elements/{gamma,beta,alpha}_absolute with four args
// (TP9, AF7, AF8, TP10) to a reading: arg 1 -> F7, arg 2 -> F8.
// Any other address, or a different argument count, yields nullopt.
std::optional<BandReading> decode_muse(const OscMessage& msg);

// Collects per-band readings into full samples for a channel set. A sample is
// complete once every band the set uses has been updated since the previous
// sample.
class SampleAssembler {
public:
  explicit SampleAssembler(ChannelSet channels);

  // Returns the channel values once the sample is complete.
  std::optional<std::vector<double>> add(const BandReading& r);

  const ChannelSet& channels() const { return channels_; }

private:
  ChannelSet channels_;
  std::vector<double> values_;
  std::vector<bool> fresh_;
};

} // namespace mindplane::osc
