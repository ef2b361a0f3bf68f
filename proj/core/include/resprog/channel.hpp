#pragma once

#include <cstdint>
#include <iosfwd>

#include "resprog/model.hpp"

namespace resprog {

struct ChannelSpec {
  std::uint64_t seed = 1;
  /// When set, h[k][n][t] does not depend on t.
  bool coherent = true;
  /// Variance of each complex entry (E|h|^2).
  double variance = 1.0;
};

/// Draws i.i.d. circularly-symmetric Gaussian channel vectors. Each (user, subcarrier) pair owns
/// an independent stream, so extending the horizon leaves earlier slots untouched.
ChannelTensor generate_channels(const ChannelSpec& spec, const SystemConfig& cfg, int horizon);

/// One line per (k, n, t): "k n t re_0 im_0 re_1 im_1 ..." with 0-based indices.
void write_channel_dump(const ChannelTensor& channels, std::ostream& out);

}  // namespace resprog
