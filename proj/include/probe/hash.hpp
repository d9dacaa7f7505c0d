#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace probe {

// FNV-1a 64. Used for artifact staleness checks and checkpoint integrity,
// not for security.
class Fnv1a64 {
public:
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    uint64_t digest() const { return h_; }

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string out(16, '0');
        uint64_t h = h_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<size_t>(i)] = k[h & 0xF];
            h >>= 4;
        }
        return out;
    }

private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hash_hex(std::string_view bytes) {
    Fnv1a64 h;
    h.update(bytes);
    return h.hex();
}

// Hash of a file's contents; throws std::runtime_error if unreadable.
std::string hash_file_hex(const std::string& path);

}  // namespace probe
