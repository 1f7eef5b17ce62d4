#include "maxsim/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace maxsim {

namespace {

EVP_MD_CTX* as_ctx(void* p) { return static_cast<EVP_MD_CTX*>(p); }

}  // namespace

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(as_ctx(ctx_), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 init failed");
  }
}

Sha256::~Sha256() {
  if (ctx_ != nullptr) EVP_MD_CTX_free(as_ctx(ctx_));
}

Sha256& Sha256::update(std::string_view bytes) {
  if (EVP_DigestUpdate(as_ctx(ctx_), bytes.data(), bytes.size()) != 1) {
    throw std::runtime_error("SHA-256 update failed");
  }
  return *this;
}

Sha256& Sha256::field(std::string_view bytes) {
  field_u64(bytes.size());
  return update(bytes);
}

Sha256& Sha256::field_u64(uint64_t value) {
  std::array<unsigned char, 8> le{};
  for (int i = 0; i < 8; ++i) le[static_cast<size_t>(i)] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  if (EVP_DigestUpdate(as_ctx(ctx_), le.data(), le.size()) != 1) {
    throw std::runtime_error("SHA-256 update failed");
  }
  return *this;
}

std::string Sha256::hex() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(as_ctx(ctx_), out.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 final failed");
  }
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(digits[out[i] >> 4]);
    hex.push_back(digits[out[i] & 0xf]);
  }
  return hex;
}

std::string sha256_hex(std::string_view bytes) { return Sha256().update(bytes).hex(); }

}  // namespace maxsim
