#include "evolvr/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

namespace evolvr {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int out_len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &out_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::string hex(out_len * 2, '\0');
    static const char* digits = "0123456789abcdef";
    for (unsigned int i = 0; i < out_len; ++i) {
        hex[2 * i] = digits[out[i] >> 4];
        hex[2 * i + 1] = digits[out[i] & 0xf];
    }
    return hex;
}

std::string prompt_digest(std::string_view system_text, std::string_view user_text) {
    std::string joined;
    joined.reserve(system_text.size() + 1 + user_text.size());
    joined.append(system_text);
    joined.push_back('\x1e');
    joined.append(user_text);
    return sha256_hex(joined);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t master, std::string_view a, std::string_view b) {
    char raw[8];
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<char>((master >> (8 * i)) & 0xff);
    std::uint64_t h = fnv1a64(std::string_view(raw, 8));
    h = fnv1a64(a, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(b, h);
    return h;
}

}  // namespace evolvr
