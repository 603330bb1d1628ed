#include "remove_eval/digest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>

#include "remove_eval/error.hpp"

namespace remove_eval {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw Error(ErrorCode::Configuration, "sha256 unavailable");
        }
    }

    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[md[i] >> 4]);
            out.push_back(kHex[md[i] & 0xF]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string image_content_digest(const RgbImage& image) {
    Sha256 h;
    const std::int32_t dims[2] = {image.width, image.height};
    h.update(dims, sizeof(dims));
    std::vector<std::uint8_t> q(image.data.size());
    std::transform(image.data.begin(), image.data.end(), q.begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    h.update(q.data(), q.size());
    return h.hex();
}

}  // namespace remove_eval
