#include "noisenet/node/flac.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstring>
#include <limits>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::node::flac {

namespace {

constexpr int kBitsPerSample = 16;
constexpr int kMaxFixedOrder = 4;
constexpr int kMaxPartitionOrder = 6;
constexpr int kMaxRiceParam = 14;  // 15 is the escape code

template <typename T, unsigned Poly>
constexpr std::array<T, 256> crc_table() {
  constexpr int kTop = 8 * sizeof(T) - 8;
  std::array<T, 256> t{};
  for (unsigned i = 0; i < 256; ++i) {
    unsigned c = i << kTop;
    for (int b = 0; b < 8; ++b) c = (c & (0x80u << kTop)) ? (c << 1) ^ Poly : c << 1;
    t[i] = static_cast<T>(c);
  }
  return t;
}

constexpr auto kCrc8 = crc_table<std::uint8_t, 0x07>();
constexpr auto kCrc16 = crc_table<std::uint16_t, 0x8005>();

std::uint8_t crc8(const std::uint8_t* data, std::size_t n) {
  std::uint8_t crc = 0;
  for (std::size_t i = 0; i < n; ++i) crc = kCrc8[crc ^ data[i]];
  return crc;
}

std::uint16_t crc16(const std::uint8_t* data, std::size_t n) {
  std::uint16_t crc = 0;
  for (std::size_t i = 0; i < n; ++i) crc = static_cast<std::uint16_t>((crc << 8) ^ kCrc16[(crc >> 8) ^ data[i]]);
  return crc;
}

std::array<std::uint8_t, 16> pcm_md5(std::span<const std::int16_t> pcm) {
  std::vector<std::uint8_t> le(pcm.size() * 2);
  for (std::size_t i = 0; i < pcm.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(pcm[i]);
    le[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    le[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  std::array<std::uint8_t, 16> md5{};
  unsigned int len = 0;
  EVP_Digest(le.data(), le.size(), md5.data(), &len, EVP_md5(), nullptr);
  return md5;
}

class BitWriter {
 public:
  void put(std::uint64_t value, int bits) {
    if (bits > 32) {
      put(value >> 32, bits - 32);
      bits = 32;
    }
    if (bits == 0) return;
    acc_ = (acc_ << bits) | (value & ((1ULL << bits) - 1));
    used_ += bits;
    if (used_ >= 32) {
      used_ -= 32;
      const auto word = static_cast<std::uint32_t>(acc_ >> used_);
      bytes_.insert(bytes_.end(), {static_cast<std::uint8_t>(word >> 24), static_cast<std::uint8_t>(word >> 16),
                                   static_cast<std::uint8_t>(word >> 8), static_cast<std::uint8_t>(word)});
      acc_ &= (1ULL << used_) - 1;
    }
  }
  void put_bit(std::uint64_t bit) { put(bit, 1); }
  void put_signed(std::int64_t value, int bits) { put(static_cast<std::uint64_t>(value) & ((1ULL << bits) - 1), bits); }
  void put_unary_zeros(std::uint64_t zeros) {
    while (zeros >= 32) {
      put(0, 32);
      zeros -= 32;
    }
    put(1, static_cast<int>(zeros) + 1);
  }
  void align() {
    if (used_ % 8 != 0) put(0, 8 - used_ % 8);
  }
  /// Whole bytes written so far; pending bits stay in the accumulator.
  std::vector<std::uint8_t>& bytes() {
    while (used_ >= 8) {
      used_ -= 8;
      bytes_.push_back(static_cast<std::uint8_t>(acc_ >> used_));
    }
    acc_ &= (1ULL << used_) - 1;
    return bytes_;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t acc_ = 0;
  int used_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> data, std::size_t byte_pos) : data_(data), pos_(byte_pos * 8) {}

  std::uint64_t get(int bits) {
    if (bits == 0) return 0;
    const std::size_t byte = pos_ / 8;
    const int offset = static_cast<int>(pos_ % 8);
    if (bits + offset <= 64 && byte + 8 <= data_.size()) {
      pos_ += static_cast<std::size_t>(bits);
      return (load64(byte) << offset) >> (64 - bits);
    }
    if (pos_ + static_cast<std::size_t>(bits) > data_.size() * 8) throw FormatError("FLAC stream truncated");
    std::uint64_t v = 0;
    while (bits > 0) {
      const int offset = static_cast<int>(pos_ % 8);
      const int take = std::min(bits, 8 - offset);
      const unsigned byte = data_[pos_ / 8];
      v = (v << take) | ((byte >> (8 - offset - take)) & ((1U << take) - 1));
      pos_ += static_cast<std::size_t>(take);
      bits -= take;
    }
    return v;
  }
  std::uint64_t get_bit() { return get(1); }
  /// Rice-coded value with parameter k: unary quotient, then k remainder bits.
  std::uint64_t get_rice(int k) {
    const std::size_t byte = pos_ / 8;
    if (byte + 8 <= data_.size()) {
      const int offset = static_cast<int>(pos_ % 8);
      const std::uint64_t window = load64(byte) << offset;
      if (window != 0) {
        const int zeros = __builtin_clzll(window);
        if (zeros + 1 + k <= 64 - offset) {
          pos_ += static_cast<std::size_t>(zeros + 1 + k);
          const std::uint64_t rest = k == 0 ? 0 : (window << (zeros + 1)) >> (64 - k);
          return (static_cast<std::uint64_t>(zeros) << k) | rest;
        }
      }
    }
    const auto q = get_unary();
    return (q << k) | get(k);
  }
  std::int64_t get_signed(int bits) {
    const auto u = get(bits);
    if (bits > 0 && (u >> (bits - 1)) & 1U) return static_cast<std::int64_t>(u) - (std::int64_t{1} << bits);
    return static_cast<std::int64_t>(u);
  }
  std::uint64_t get_unary() {
    std::uint64_t zeros = 0;
    for (;;) {
      if (pos_ >= data_.size() * 8) throw FormatError("FLAC stream truncated");
      const int offset = static_cast<int>(pos_ % 8);
      const unsigned rest = static_cast<unsigned>(data_[pos_ / 8] << offset) & 0xFFu;
      if (rest == 0) {
        zeros += static_cast<std::uint64_t>(8 - offset);
        pos_ += static_cast<std::size_t>(8 - offset);
        continue;
      }
      const int lead = __builtin_clz(rest) - 24;
      zeros += static_cast<std::uint64_t>(lead);
      pos_ += static_cast<std::size_t>(lead) + 1;
      return zeros;
    }
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }
  std::size_t byte_pos() const { return pos_ / 8; }

 private:
  std::uint64_t load64(std::size_t byte) const {
    std::uint64_t v;
    std::memcpy(&v, data_.data() + byte, 8);
    return __builtin_bswap64(v);
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_;
};

void put_utf8(BitWriter& w, std::uint32_t v) {
  if (v < 0x80) {
    w.put(v, 8);
  } else if (v < 0x800) {
    w.put(0xC0 | (v >> 6), 8);
    w.put(0x80 | (v & 0x3F), 8);
  } else if (v < 0x10000) {
    w.put(0xE0 | (v >> 12), 8);
    w.put(0x80 | ((v >> 6) & 0x3F), 8);
    w.put(0x80 | (v & 0x3F), 8);
  } else {
    w.put(0xF0 | (v >> 18), 8);
    w.put(0x80 | ((v >> 12) & 0x3F), 8);
    w.put(0x80 | ((v >> 6) & 0x3F), 8);
    w.put(0x80 | (v & 0x3F), 8);
  }
}

std::uint64_t get_utf8(BitReader& r) {
  const auto first = r.get(8);
  int extra = 0;
  std::uint64_t v = 0;
  if ((first & 0x80) == 0) return first;
  if ((first & 0xE0) == 0xC0) { extra = 1; v = first & 0x1F; }
  else if ((first & 0xF0) == 0xE0) { extra = 2; v = first & 0x0F; }
  else if ((first & 0xF8) == 0xF0) { extra = 3; v = first & 0x07; }
  else if ((first & 0xFC) == 0xF8) { extra = 4; v = first & 0x03; }
  else if ((first & 0xFE) == 0xFC) { extra = 5; v = first & 0x01; }
  else throw FormatError("bad UTF-8 frame number");
  for (int i = 0; i < extra; ++i) {
    const auto b = r.get(8);
    if ((b & 0xC0) != 0x80) throw FormatError("bad UTF-8 continuation");
    v = (v << 6) | (b & 0x3F);
  }
  return v;
}

std::uint64_t zigzag(std::int64_t v);

/// Zigzag-folded fixed-predictor residual of the given order.
void fixed_residual(std::span<const std::int32_t> x, int order, std::vector<std::uint64_t>& out) {
  const std::size_t n = x.size();
  out.resize(n - static_cast<std::size_t>(order));
  auto* r = out.data();
  const auto* p = x.data();
  switch (order) {
    case 0: for (std::size_t i = 0; i < n; ++i) r[i] = zigzag(p[i]); break;
    case 1: for (std::size_t i = 1; i < n; ++i) r[i - 1] = zigzag(std::int64_t{p[i]} - p[i - 1]); break;
    case 2: for (std::size_t i = 2; i < n; ++i) r[i - 2] = zigzag(std::int64_t{p[i]} - 2LL * p[i - 1] + p[i - 2]); break;
    case 3:
      for (std::size_t i = 3; i < n; ++i) r[i - 3] = zigzag(std::int64_t{p[i]} - 3LL * p[i - 1] + 3LL * p[i - 2] - p[i - 3]);
      break;
    case 4:
      for (std::size_t i = 4; i < n; ++i) {
        r[i - 4] = zigzag(std::int64_t{p[i]} - 4LL * p[i - 1] + 6LL * p[i - 2] - 4LL * p[i - 3] + p[i - 4]);
      }
      break;
  }
}

std::uint64_t zigzag(std::int64_t v) { return v >= 0 ? static_cast<std::uint64_t>(v) << 1 : (static_cast<std::uint64_t>(-v) << 1) - 1; }

struct RicePlan {
  int partition_order = 0;
  std::vector<int> params;
  std::uint64_t bits = std::numeric_limits<std::uint64_t>::max();
};

/// Rice parameter and estimated bit cost for a partition of n values summing to `sum`.
std::pair<int, std::uint64_t> best_rice(std::uint64_t sum, std::size_t n) {
  int best_k = 0;
  std::uint64_t best_bits = std::numeric_limits<std::uint64_t>::max();
  for (int k = 0; k <= kMaxRiceParam; ++k) {
    // sum >> k undercounts the unary part by at most n; same for every k.
    const std::uint64_t bits = (static_cast<std::uint64_t>(k) + 1) * n + (sum >> k);
    if (bits < best_bits) {
      best_bits = bits;
      best_k = k;
    }
  }
  return {best_k, best_bits};
}

/// Partition order and parameters for a residual of a block of `block` samples.
RicePlan plan_rice(const std::vector<std::uint64_t>& folded, std::size_t block, int order) {
  int max_p = 0;
  while (max_p < kMaxPartitionOrder && ((block >> (max_p + 1)) << (max_p + 1)) == block &&
         (block >> (max_p + 1)) > static_cast<std::size_t>(order)) {
    ++max_p;
  }
  if ((block >> max_p) <= static_cast<std::size_t>(order)) return {};
  // Partition sums at the finest order, merged pairwise for coarser ones.
  std::vector<std::uint64_t> sums(std::size_t{1} << max_p, 0);
  const std::size_t fine_len = block >> max_p;
  std::size_t pos = 0;
  for (std::size_t part = 0; part < sums.size(); ++part) {
    const std::size_t n = part == 0 ? fine_len - static_cast<std::size_t>(order) : fine_len;
    for (std::size_t i = pos; i < pos + n; ++i) sums[part] += folded[i];
    pos += n;
  }
  RicePlan best;
  for (int p = max_p; p >= 0; --p) {
    const std::size_t part_len = block >> p;
    RicePlan plan;
    plan.partition_order = p;
    plan.bits = 2 + 4;
    for (std::size_t part = 0; part < sums.size(); ++part) {
      const std::size_t n = part == 0 ? part_len - static_cast<std::size_t>(order) : part_len;
      const auto [k, bits] = best_rice(sums[part], n);
      plan.params.push_back(k);
      plan.bits += 4 + bits;
    }
    if (plan.bits < best.bits) best = std::move(plan);
    if (p > 0) {
      std::vector<std::uint64_t> merged(sums.size() / 2);
      for (std::size_t i = 0; i < merged.size(); ++i) merged[i] = sums[2 * i] + sums[2 * i + 1];
      sums = std::move(merged);
    }
  }
  return best;
}

int guess_fixed_order(std::span<const std::int32_t> x) {
  if (x.size() <= static_cast<std::size_t>(4 * kMaxFixedOrder)) return -1;
  std::array<std::uint64_t, kMaxFixedOrder + 1> sum{};
  for (std::size_t i = kMaxFixedOrder; i < x.size(); ++i) {
    const std::int64_t e0 = x[i];
    const std::int64_t e1 = e0 - x[i - 1];
    const std::int64_t e2 = e1 - (std::int64_t{x[i - 1]} - x[i - 2]);
    const std::int64_t e3 = e2 - (std::int64_t{x[i - 1]} - 2LL * x[i - 2] + x[i - 3]);
    const std::int64_t e4 = e3 - (std::int64_t{x[i - 1]} - 3LL * x[i - 2] + 3LL * x[i - 3] - x[i - 4]);
    sum[0] += static_cast<std::uint64_t>(std::abs(e0));
    sum[1] += static_cast<std::uint64_t>(std::abs(e1));
    sum[2] += static_cast<std::uint64_t>(std::abs(e2));
    sum[3] += static_cast<std::uint64_t>(std::abs(e3));
    sum[4] += static_cast<std::uint64_t>(std::abs(e4));
  }
  return static_cast<int>(std::min_element(sum.begin(), sum.end()) - sum.begin());
}

void encode_subframe(BitWriter& w, std::span<const std::int32_t> x) {
  const bool constant = std::all_of(x.begin(), x.end(), [&](std::int32_t v) { return v == x[0]; });
  if (constant) {
    w.put(0, 1);
    w.put(0b000000, 6);
    w.put(0, 1);
    w.put_signed(x[0], kBitsPerSample);
    return;
  }
  int best_order = -1;
  RicePlan best_plan;
  std::vector<std::uint64_t> best_folded;
  std::vector<std::uint64_t> folded;
  auto consider = [&](int order) {
    fixed_residual(x, order, folded);
    auto plan = plan_rice(folded, x.size(), order);
    if (plan.params.empty()) return;
    const auto total = plan.bits + static_cast<std::uint64_t>(order) * kBitsPerSample;
    if (best_order < 0 || total < best_plan.bits + static_cast<std::uint64_t>(best_order) * kBitsPerSample) {
      best_order = order;
      best_plan = std::move(plan);
      best_folded.swap(folded);
    }
  };
  // Orders are ranked by total absolute residual and only the best is Rice
  // planned, unless the block is too short to rank or to partition.
  if (const int guess = guess_fixed_order(x); guess >= 0) consider(guess);
  if (best_order < 0) {
    for (int order = 0; order <= kMaxFixedOrder && static_cast<std::size_t>(order) < x.size(); ++order) consider(order);
  }
  const std::uint64_t verbatim_bits = static_cast<std::uint64_t>(x.size()) * kBitsPerSample;
  if (best_order < 0 || best_plan.bits + static_cast<std::uint64_t>(best_order) * kBitsPerSample >= verbatim_bits) {
    w.put(0, 1);
    w.put(0b000001, 6);
    w.put(0, 1);
    for (auto v : x) w.put_signed(v, kBitsPerSample);
    return;
  }
  w.put(0, 1);
  w.put(0b001000 | static_cast<unsigned>(best_order), 6);
  w.put(0, 1);
  for (int i = 0; i < best_order; ++i) w.put_signed(x[static_cast<std::size_t>(i)], kBitsPerSample);
  w.put(0b00, 2);
  w.put(static_cast<unsigned>(best_plan.partition_order), 4);
  std::size_t pos = 0;
  const std::size_t part_len = x.size() >> best_plan.partition_order;
  for (std::size_t part = 0; part < best_plan.params.size(); ++part) {
    const int k = best_plan.params[part];
    w.put(static_cast<unsigned>(k), 4);
    const std::size_t n = part == 0 ? part_len - static_cast<std::size_t>(best_order) : part_len;
    for (std::size_t i = pos; i < pos + n; ++i) {
      const auto u = best_folded[i];
      const auto q = u >> k;
      if (q + 1 + static_cast<std::uint64_t>(k) <= 32) {
        // Unary quotient and binary remainder in one write.
        w.put((1ULL << k) | (u & ((1ULL << k) - 1)), static_cast<int>(q) + 1 + k);
      } else {
        w.put_unary_zeros(q);
        if (k > 0) w.put(u & ((1ULL << k) - 1), k);
      }
    }
    pos += n;
  }
}

int sample_rate_code(int rate) {
  switch (rate) {
    case 88200: return 0b0001;
    case 176400: return 0b0010;
    case 192000: return 0b0011;
    case 8000: return 0b0100;
    case 16000: return 0b0101;
    case 22050: return 0b0110;
    case 24000: return 0b0111;
    case 32000: return 0b1000;
    case 44100: return 0b1001;
    case 48000: return 0b1010;
    case 96000: return 0b1011;
    default: return 0;  // taken from STREAMINFO
  }
}

std::uint32_t decode_block_size(std::uint32_t code, BitReader& r) {
  if (code == 1) return 192;
  if (code >= 2 && code <= 5) return 576u << (code - 2);
  if (code == 6) return static_cast<std::uint32_t>(r.get(8)) + 1;
  if (code == 7) return static_cast<std::uint32_t>(r.get(16)) + 1;
  if (code >= 8) return 256u << (code - 8);
  throw FormatError("reserved FLAC block size code");
}

void decode_residual(BitReader& r, std::size_t block, int order, std::vector<std::int64_t>& out) {
  const auto method = r.get(2);
  if (method > 1) throw FormatError("reserved FLAC residual coding method");
  const int param_bits = method == 0 ? 4 : 5;
  const std::uint64_t escape = method == 0 ? 15 : 31;
  const int partition_order = static_cast<int>(r.get(4));
  const std::size_t part_len = block >> partition_order;
  if ((part_len << partition_order) != block || part_len < static_cast<std::size_t>(order)) {
    throw FormatError("invalid FLAC partition order");
  }
  for (int part = 0; part < (1 << partition_order); ++part) {
    const std::size_t n = part == 0 ? part_len - static_cast<std::size_t>(order) : part_len;
    const auto k = r.get(param_bits);
    if (k == escape) {
      const int raw_bits = static_cast<int>(r.get(5));
      for (std::size_t i = 0; i < n; ++i) out.push_back(r.get_signed(raw_bits));
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const auto u = r.get_rice(static_cast<int>(k));
        out.push_back((u & 1U) ? -static_cast<std::int64_t>((u + 1) >> 1) : static_cast<std::int64_t>(u >> 1));
      }
    }
  }
}

void decode_subframe(BitReader& r, std::size_t block, std::vector<std::int16_t>& out) {
  if (r.get(1) != 0) throw FormatError("FLAC subframe padding bit set");
  const auto type = r.get(6);
  if (r.get(1) != 0) throw FormatError("FLAC wasted-bits subframes are not supported");
  auto emit = [&](std::int64_t v) {
    if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max()) {
      throw FormatError("FLAC sample out of 16-bit range");
    }
    out.push_back(static_cast<std::int16_t>(v));
  };
  if (type == 0) {
    const auto v = r.get_signed(kBitsPerSample);
    for (std::size_t i = 0; i < block; ++i) emit(v);
  } else if (type == 1) {
    for (std::size_t i = 0; i < block; ++i) emit(r.get_signed(kBitsPerSample));
  } else if (type >= 8 && type <= 12) {
    const int order = static_cast<int>(type - 8);
    // Warm-up samples, then residuals, restored to samples in place.
    std::vector<std::int64_t> x;
    x.reserve(block);
    for (int i = 0; i < order; ++i) x.push_back(r.get_signed(kBitsPerSample));
    decode_residual(r, block, order, x);
    auto* v = x.data();
    const std::size_t n = x.size();
    switch (order) {
      case 1: for (std::size_t i = 1; i < n; ++i) v[i] += v[i - 1]; break;
      case 2: for (std::size_t i = 2; i < n; ++i) v[i] += 2 * v[i - 1] - v[i - 2]; break;
      case 3: for (std::size_t i = 3; i < n; ++i) v[i] += 3 * v[i - 1] - 3 * v[i - 2] + v[i - 3]; break;
      case 4: for (std::size_t i = 4; i < n; ++i) v[i] += 4 * v[i - 1] - 6 * v[i - 2] + 4 * v[i - 3] - v[i - 4]; break;
      default: break;
    }
    for (auto s : x) emit(s);
  } else {
    throw FormatError(fmt::format("unsupported FLAC subframe type {}", type));
  }
}

}  // namespace

std::vector<std::uint8_t> encode(std::span<const std::int16_t> pcm, int sample_rate_hz, std::uint32_t block_size) {
  if (block_size < 16 || block_size > 65535) throw DomainError("FLAC block size must be in [16, 65535]");
  if (sample_rate_hz <= 0 || sample_rate_hz >= (1 << 20)) throw DomainError("invalid sample rate");

  BitWriter w;
  for (char c : std::string_view("fLaC")) w.put(static_cast<std::uint8_t>(c), 8);
  w.put(1, 1);  // last metadata block
  w.put(0, 7);  // STREAMINFO
  w.put(34, 24);
  const auto last_block = pcm.empty() ? block_size : static_cast<std::uint32_t>((pcm.size() - 1) % block_size + 1);
  const auto min_block = pcm.size() > block_size ? std::min(block_size, last_block) : last_block;
  w.put(std::max<std::uint32_t>(16, std::min(min_block, block_size)), 16);
  w.put(block_size, 16);
  w.put(0, 24);
  w.put(0, 24);
  w.put(static_cast<std::uint32_t>(sample_rate_hz), 20);
  w.put(0, 3);
  w.put(kBitsPerSample - 1, 5);
  w.put(pcm.size(), 36);
  for (auto b : pcm_md5(pcm)) w.put(b, 8);

  std::uint32_t frame_number = 0;
  for (std::size_t start = 0; start < pcm.size(); start += block_size, ++frame_number) {
    const std::size_t n = std::min<std::size_t>(block_size, pcm.size() - start);
    const std::size_t frame_begin = w.bytes().size();
    w.put(0b11111111111110, 14);
    w.put(0, 1);
    w.put(0, 1);  // fixed block size
    int bs_code = 0b0111;
    for (std::uint32_t c = 8; c <= 15; ++c) {
      if (n == (256u << (c - 8))) bs_code = static_cast<int>(c);
    }
    const int sr_code = sample_rate_code(sample_rate_hz);
    w.put(static_cast<unsigned>(bs_code), 4);
    w.put(static_cast<unsigned>(sr_code), 4);
    w.put(0b0000, 4);  // mono
    w.put(0b100, 3);   // 16 bits per sample
    w.put(0, 1);
    put_utf8(w, frame_number);
    if (bs_code == 0b0111) w.put(n - 1, 16);
    w.put(crc8(w.bytes().data() + frame_begin, w.bytes().size() - frame_begin), 8);

    std::vector<std::int32_t> x(pcm.begin() + static_cast<std::ptrdiff_t>(start),
                                pcm.begin() + static_cast<std::ptrdiff_t>(start + n));
    encode_subframe(w, x);
    w.align();
    w.put(crc16(w.bytes().data() + frame_begin, w.bytes().size() - frame_begin), 16);
  }
  return std::move(w.bytes());
}

Decoded decode(std::span<const std::uint8_t> stream) {
  if (stream.size() < 42 || std::string_view(reinterpret_cast<const char*>(stream.data()), 4) != "fLaC") {
    throw FormatError("not a FLAC stream");
  }
  BitReader r(stream, 4);
  Decoded out;
  std::uint64_t total_samples = 0;
  std::array<std::uint8_t, 16> md5{};
  bool last = false;
  bool have_info = false;
  while (!last) {
    last = r.get(1) != 0;
    const auto type = r.get(7);
    const auto len = r.get(24);
    if (type == 0) {
      if (len != 34) throw FormatError("bad STREAMINFO length");
      r.get(16);
      r.get(16);
      r.get(24);
      r.get(24);
      out.sample_rate_hz = static_cast<int>(r.get(20));
      if (r.get(3) != 0) throw FormatError("only mono FLAC is supported");
      if (r.get(5) != kBitsPerSample - 1) throw FormatError("only 16-bit FLAC is supported");
      total_samples = r.get(36);
      for (auto& b : md5) b = static_cast<std::uint8_t>(r.get(8));
      have_info = true;
    } else {
      for (std::uint64_t i = 0; i < len; ++i) r.get(8);
    }
  }
  if (!have_info) throw FormatError("FLAC stream has no STREAMINFO");
  out.samples.reserve(total_samples);

  while (out.samples.size() < total_samples) {
    const std::size_t frame_begin = r.byte_pos();
    if (r.get(14) != 0b11111111111110) throw FormatError("lost FLAC frame sync");
    r.get(1);
    r.get(1);
    const auto bs_code = static_cast<std::uint32_t>(r.get(4));
    const auto sr_code = r.get(4);
    if (r.get(4) != 0) throw FormatError("only mono FLAC is supported");
    const auto ss_code = r.get(3);
    if (ss_code != 0b100 && ss_code != 0) throw FormatError("only 16-bit FLAC is supported");
    r.get(1);
    get_utf8(r);
    const auto block = decode_block_size(bs_code, r);
    if (sr_code == 0b1100) r.get(8);
    else if (sr_code == 0b1101 || sr_code == 0b1110) r.get(16);
    const auto header_crc = crc8(stream.data() + frame_begin, r.byte_pos() - frame_begin);
    if (r.get(8) != header_crc) throw FormatError("FLAC frame header CRC mismatch");
    decode_subframe(r, block, out.samples);
    r.align();
    const auto frame_crc = crc16(stream.data() + frame_begin, r.byte_pos() - frame_begin);
    if (r.get(16) != frame_crc) throw FormatError("FLAC frame CRC mismatch");
  }
  if (out.samples.size() != total_samples) throw FormatError("FLAC sample count mismatch");
  if (pcm_md5(out.samples) != md5) throw FormatError("FLAC MD5 mismatch");
  return out;
}

}  // namespace noisenet::node::flac
