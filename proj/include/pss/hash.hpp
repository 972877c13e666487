#pragma once

#include <cstdint>
#include <string_view>

namespace pss {

// FNV-1a, 64-bit. Stable across platforms; used for content identity keys.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view data) {
        for (unsigned char c : data) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a64& update(char c) { return update(std::string_view(&c, 1)); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view data) {
    return Fnv1a64().update(data).digest();
}

} // namespace pss
