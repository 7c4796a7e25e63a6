#include "cyberduel/ledger.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "cyberduel/common.hpp"
#include "cyberduel/protocol.hpp"

namespace cyberduel::ledger {

namespace {

void put_be64(std::uint64_t v, std::uint8_t* out) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

void check_bits(unsigned bits) {
  if (bits > kMaxDifficulty) throw Rejected("difficulty must be in [0, 24]");
}

}  // namespace

Digest sha256(std::string_view bytes) {
  Digest d{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
    throw Error("sha256 failed");
  return d;
}

std::string to_hex(const Digest& d) { return hex_encode(d.data(), d.size()); }

Digest digest_from_hex(const std::string& hex) {
  if (!is_lower_hex(hex, 64)) throw Error("digest must be 64 lowercase hex chars");
  Digest d{};
  auto nibble = [](char c) { return c <= '9' ? c - '0' : c - 'a' + 10; };
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

Digest block_digest(std::uint64_t index, const Digest& prev_hash, std::string_view payload,
                    std::uint64_t nonce) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha256 context allocation failed");
  std::uint8_t be[8];
  Digest d{};
  unsigned int len = 0;
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1;
  put_be64(index, be);
  ok = ok && EVP_DigestUpdate(ctx, be, sizeof be) == 1;
  ok = ok && EVP_DigestUpdate(ctx, prev_hash.data(), prev_hash.size()) == 1;
  ok = ok && EVP_DigestUpdate(ctx, payload.data(), payload.size()) == 1;
  put_be64(nonce, be);
  ok = ok && EVP_DigestUpdate(ctx, be, sizeof be) == 1;
  ok = ok && EVP_DigestFinal_ex(ctx, d.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("sha256 failed");
  return d;
}

bool meets_difficulty(const Digest& d, unsigned bits) {
  std::size_t i = 0;
  for (; bits >= 8; bits -= 8, ++i)
    if (d[i] != 0) return false;
  if (bits == 0) return true;
  return (d[i] >> (8 - bits)) == 0;
}

namespace {

LedgerBlock mine(std::uint64_t index, const Digest& prev, std::string payload, unsigned bits) {
  check_bits(bits);
  LedgerBlock b;
  b.index = index;
  b.prev_hash = prev;
  b.payload = std::move(payload);
  for (std::uint64_t nonce = 0;; ++nonce) {
    b.hash = block_digest(b.index, b.prev_hash, b.payload, nonce);
    if (meets_difficulty(b.hash, bits)) {
      b.nonce = nonce;
      return b;
    }
  }
}

}  // namespace

LedgerBlock genesis(unsigned difficulty_bits) { return mine(0, Digest{}, "", difficulty_bits); }

LedgerBlock make_block(const LedgerBlock& prev, std::string payload, unsigned difficulty_bits) {
  return mine(prev.index + 1, prev.hash, std::move(payload), difficulty_bits);
}

ChainCheck verify_chain(std::span<const LedgerBlock> blocks, unsigned difficulty_bits) {
  if (blocks.empty()) throw Rejected("chain must contain at least one block");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const Digest expected_prev = i == 0 ? Digest{} : blocks[i - 1].hash;
    const bool ok = b.index == i && b.prev_hash == expected_prev &&
                    block_digest(b.index, b.prev_hash, b.payload, b.nonce) == b.hash &&
                    meets_difficulty(b.hash, difficulty_bits);
    if (!ok) return {false, i};
  }
  return {true, std::nullopt};
}

std::vector<LedgerBlock> resolve(const std::vector<std::vector<LedgerBlock>>& peers,
                                 unsigned difficulty_bits) {
  const std::vector<LedgerBlock>* best = nullptr;
  for (const auto& chain : peers) {
    if (chain.empty() || !verify_chain(chain, difficulty_bits).valid) continue;
    if (!best || chain.size() > best->size() ||
        (chain.size() == best->size() && chain.back().hash < best->back().hash))
      best = &chain;
  }
  if (!best) throw Rejected("no valid chain among peers");
  return *best;
}

std::string encode_block(const LedgerBlock& b) {
  nlohmann::json j;
  j["index"] = b.index;
  j["prev_hash"] = to_hex(b.prev_hash);
  j["payload"] = b.payload;
  j["nonce"] = b.nonce;
  j["hash"] = to_hex(b.hash);
  return j.dump();
}

LedgerBlock decode_block(const std::string& payload) {
  try {
    const auto j = nlohmann::json::parse(payload);
    LedgerBlock b;
    b.index = j.at("index").get<std::uint64_t>();
    b.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
    b.payload = j.at("payload").get<std::string>();
    b.nonce = j.at("nonce").get<std::uint64_t>();
    b.hash = digest_from_hex(j.at("hash").get<std::string>());
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad ledger block: ") + e.what());
  }
}

Ledger::Ledger(unsigned difficulty_bits, std::optional<std::filesystem::path> file)
    : bits_(difficulty_bits), file_(std::move(file)) {
  check_bits(bits_);
  blocks_.push_back(genesis(bits_));
  if (file_) {
    std::ofstream(*file_, std::ios::binary | std::ios::trunc);
    write(blocks_.back());
  }
}

Ledger Ledger::load(const std::filesystem::path& file, unsigned difficulty_bits) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open ledger " + file.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  Ledger out(difficulty_bits);
  out.blocks_.clear();
  protocol::FrameReader reader;
  reader.feed(bytes);
  while (auto p = reader.next()) out.blocks_.push_back(decode_block(*p));
  if (reader.buffered() != 0) throw Error("ledger " + file.string() + " ends with a truncated block");
  if (out.blocks_.empty()) throw Error("ledger " + file.string() + " is empty");
  out.file_ = file;
  return out;
}

const LedgerBlock& Ledger::append(std::string payload) {
  blocks_.push_back(make_block(blocks_.back(), std::move(payload), bits_));
  if (file_) write(blocks_.back());
  return blocks_.back();
}

void Ledger::write(const LedgerBlock& b) {
  std::ofstream out(*file_, std::ios::binary | std::ios::app);
  out << protocol::frame(encode_block(b));
  if (!out) throw Error("cannot append to ledger " + file_->string());
}

}  // namespace cyberduel::ledger
