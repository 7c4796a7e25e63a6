#pragma once

// Hash-chained record of game state transitions.
//
//   hash = SHA-256(index as 8 BE bytes || prev_hash || payload bytes || nonce as 8 BE bytes)
//
// Payloads are canonical protocol payloads (see protocol.hpp), normally a
// StatusReport with server-side healths filled in, or a CaptureVerdict.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyberduel/common.hpp"

namespace cyberduel::ledger {

using Digest = std::array<std::uint8_t, 32>;

inline constexpr unsigned kMaxDifficulty = 24;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& d);
Digest digest_from_hex(const std::string& hex);

struct LedgerBlock {
  std::uint64_t index = 0;
  Digest prev_hash{};
  std::string payload;
  std::uint64_t nonce = 0;
  Digest hash{};

  bool operator==(const LedgerBlock&) const = default;
};

Digest block_digest(std::uint64_t index, const Digest& prev_hash, std::string_view payload,
                    std::uint64_t nonce);

// True iff the digest starts with `bits` zero bits.
bool meets_difficulty(const Digest& d, unsigned bits);

// Index 0, all-zero prev_hash, empty payload.
LedgerBlock genesis(unsigned difficulty_bits = 0);

// Searches nonces 0, 1, 2, ... for the first that meets the difficulty.
LedgerBlock make_block(const LedgerBlock& prev, std::string payload, unsigned difficulty_bits);

struct ChainCheck {
  bool valid = true;
  std::optional<std::size_t> first_bad_index;
};

ChainCheck verify_chain(std::span<const LedgerBlock> blocks, unsigned difficulty_bits = 0);

// Longest valid chain; equal lengths go to the lexicographically lowest tip
// hash. Throws Rejected when no peer chain is valid.
std::vector<LedgerBlock> resolve(const std::vector<std::vector<LedgerBlock>>& peers,
                                 unsigned difficulty_bits = 0);

std::string encode_block(const LedgerBlock& b);
LedgerBlock decode_block(const std::string& payload);

// Append-only chain, optionally mirrored to a file of framed blocks.
class Ledger {
 public:
  explicit Ledger(unsigned difficulty_bits = 0, std::optional<std::filesystem::path> file = std::nullopt);

  // Reads every framed block of `file`; throws Error on a truncated or
  // undecodable record.
  static Ledger load(const std::filesystem::path& file, unsigned difficulty_bits = 0);

  const LedgerBlock& append(std::string payload);
  const std::vector<LedgerBlock>& blocks() const { return blocks_; }
  unsigned difficulty_bits() const { return bits_; }
  ChainCheck verify() const { return verify_chain(blocks_, bits_); }

 private:
  void write(const LedgerBlock& b);

  unsigned bits_;
  std::optional<std::filesystem::path> file_;
  std::vector<LedgerBlock> blocks_;
};

}  // namespace cyberduel::ledger
