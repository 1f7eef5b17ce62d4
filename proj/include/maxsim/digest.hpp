#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace maxsim {

/// Incremental SHA-256, used for cache keys and config/prompt fingerprints.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  /// Length-prefixed field update, so ("ab","c") and ("a","bc") differ.
  Sha256& field(std::string_view bytes);
  Sha256& field_u64(uint64_t value);

  /// Finalizes and returns the lowercase hex digest. The object is spent.
  std::string hex();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace maxsim
