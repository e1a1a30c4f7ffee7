#include "pianist/worldmodel/canonical.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include <sodium.h>

namespace pianist {
namespace {

template <std::size_t N>
std::array<unsigned char, N> blake2b(std::string_view bytes)
{
    static_assert(N >= crypto_generichash_BYTES_MIN && N <= crypto_generichash_BYTES_MAX);
    static const bool ready = sodium_init() >= 0;
    if (!ready)
        throw std::runtime_error("libsodium failed to initialise");
    std::array<unsigned char, N> out{};
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()),
                       bytes.size(), nullptr, 0);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::string canonical_dump(const Json& value)
{
    // nlohmann::json stores objects in std::map, so keys are already sorted.
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::uint64_t state_digest(const Json& value)
{
    // generichash has a 16-byte minimum output; the digest is its 8-byte prefix.
    auto full = blake2b<16>(canonical_dump(value));
    std::uint64_t digest = 0;
    for (int i = 0; i < 8; ++i)
        digest = (digest << 8) | full[static_cast<std::size_t>(i)];
    return digest;
}

std::string digest128_hex(std::string_view bytes)
{
    auto raw = blake2b<16>(bytes);
    std::string hex(raw.size() * 2, '0');
    sodium_bin2hex(hex.data(), hex.size() + 1, raw.data(), raw.size());
    return hex;
}

std::string digest_hex(std::uint64_t digest)
{
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(digest));
    return buffer;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

} // namespace pianist
