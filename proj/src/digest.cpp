#include "hazguard/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace hazguard {

namespace {

std::array<unsigned char, 8> length_frame(std::size_t n) {
    std::array<unsigned char, 8> out{};
    for (int i = 7; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<unsigned char>(n & 0xff);
        n >>= 8;
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::span<const std::string_view> fields) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256_hex: digest init failed");
    }
    for (std::string_view field : fields) {
        const std::array<unsigned char, 8> frame = length_frame(field.size());
        if (EVP_DigestUpdate(ctx.get(), frame.data(), frame.size()) != 1 ||
            EVP_DigestUpdate(ctx.get(), field.data(), field.size()) != 1) {
            throw std::runtime_error("sha256_hex: digest update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &digest_len) != 1) {
        throw std::runtime_error("sha256_hex: digest final failed");
    }

    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string base64_encode(std::span<const unsigned char> bytes) {
    if (bytes.empty()) return "";
    // EVP_EncodeBlock writes 4 output bytes per 3 input bytes plus a NUL.
    std::string out((bytes.size() + 2) / 3 * 4, '\0');
    const int written =
        EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                        static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::string request_digest(std::span<const unsigned char> image_bytes, std::string_view prompt,
                           std::string_view model_name) {
    const std::string_view image =
        image_bytes.empty()
            ? std::string_view{}
            : std::string_view(reinterpret_cast<const char*>(image_bytes.data()),
                               image_bytes.size());
    const std::array<std::string_view, 3> fields = {image, prompt, model_name};
    return sha256_hex(fields);
}

}  // namespace hazguard
