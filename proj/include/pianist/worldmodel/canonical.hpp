#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pianist/worldmodel/types.hpp"

namespace pianist {

/// Compact JSON with lexicographically sorted object keys. This byte string
/// is the payload format shared by traces, fixtures and the model protocol.
std::string canonical_dump(const Json& value);

/// Stable 64-bit digest (BLAKE2b-64) of a value's canonical serialization.
std::uint64_t state_digest(const Json& value);

/// Stable 128-bit digest (BLAKE2b-128) of raw bytes, as 32 lowercase hex chars.
std::string digest128_hex(std::string_view bytes);

/// Hex rendering of a 64-bit digest (16 chars, zero padded).
std::string digest_hex(std::uint64_t digest);

/// Mixes a base seed with stream coordinates into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

} // namespace pianist
