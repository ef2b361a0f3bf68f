#include "resprog/channel.hpp"

#include <iomanip>
#include <ostream>
#include <random>

namespace resprog {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, int k, int n) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(k));
  return splitmix64(s ^ (static_cast<std::uint64_t>(n) << 32));
}

}  // namespace

ChannelTensor generate_channels(const ChannelSpec& spec, const SystemConfig& cfg, int horizon) {
  if (horizon < 1 || horizon > cfg.horizon_cap) {
    throw HorizonError("channel horizon " + std::to_string(horizon) + " outside [1, " +
                       std::to_string(cfg.horizon_cap) + "]");
  }
  if (!(spec.variance > 0.0)) throw std::invalid_argument("channel variance must be positive");

  ChannelTensor h(cfg.num_users, cfg.num_subcarriers, horizon, cfg.num_tx_antennas,
                  spec.coherent);
  const double sigma = std::sqrt(spec.variance / 2.0);
  for (int k = 0; k < cfg.num_users; ++k) {
    for (int n = 0; n < cfg.num_subcarriers; ++n) {
      std::mt19937_64 rng(stream_seed(spec.seed, k, n));
      std::normal_distribution<double> gauss(0.0, sigma);
      for (int t = 0; t < horizon; ++t) {
        auto block = h.block(k, n, t);
        if (spec.coherent && t > 0) {
          block = h.block(k, n, 0);
          continue;
        }
        for (int a = 0; a < cfg.num_tx_antennas; ++a) {
          const double re = gauss(rng);
          const double im = gauss(rng);
          block[a] = cplx(re, im);
        }
      }
    }
  }
  return h;
}

void write_channel_dump(const ChannelTensor& channels, std::ostream& out) {
  out << "# k n t then (re, im) per antenna; coherent=" << (channels.coherent() ? 1 : 0) << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < channels.users(); ++k)
    for (int n = 0; n < channels.subcarriers(); ++n)
      for (int t = 0; t < channels.slots(); ++t) {
        out << k << ' ' << n << ' ' << t;
        for (const cplx z : channels.block(k, n, t)) out << ' ' << z.real() << ' ' << z.imag();
        out << '\n';
      }
}

}  // namespace resprog
