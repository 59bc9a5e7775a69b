#include "simharness/digest.hpp"

#include "simharness/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace simharness
{
    std::string sha256_hex(std::string_view bytes)
    {
        std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
            EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
            EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
        {
            throw Error("sha256 computation failed");
        }
        static constexpr char hex[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i)
        {
            out.push_back(hex[md[i] >> 4]);
            out.push_back(hex[md[i] & 0xf]);
        }
        return out;
    }
} // namespace simharness
