#include "peerloop/common/ids.hpp"

#include <openssl/sha.h>

#include <fmt/format.h>

namespace peerloop {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string IdGenerator::next() {
    const std::uint64_t n = counter_.fetch_add(1);
    return fmt::format("{:016x}", splitmix64(seed_ + n));
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char b : digest) out += fmt::format("{:02x}", b);
    return out;
}

}  // namespace peerloop
