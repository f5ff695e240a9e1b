#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace spsdr {

/// Independent generator for the stream identified by (seed, keys...). Each
/// 64-bit value is split into two 32-bit words for std::seed_seq.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (keys.size() + 1));
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) {
        push(k);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace spsdr
