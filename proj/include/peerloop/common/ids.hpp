#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace peerloop {

std::uint64_t splitmix64(std::uint64_t x);

/// Opaque id source. splitmix64 is a bijection on 64-bit words, so distinct
/// counter values always map to distinct ids.
class IdGenerator {
public:
    explicit IdGenerator(std::uint64_t seed) : seed_(seed) {}

    std::string next();

private:
    std::uint64_t seed_;
    std::atomic<std::uint64_t> counter_{0};
};

std::string sha256_hex(std::string_view data);

}  // namespace peerloop
