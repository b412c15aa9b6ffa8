#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace bodyschema {

// Incremental SHA-256, used for cache keys and artifact manifests.
class ContentHasher {
 public:
  ContentHasher();
  ~ContentHasher();
  ContentHasher(const ContentHasher&) = delete;
  ContentHasher& operator=(const ContentHasher&) = delete;
  ContentHasher(ContentHasher&&) noexcept;
  ContentHasher& operator=(ContentHasher&&) noexcept;

  ContentHasher& update(std::span<const std::byte> bytes);
  ContentHasher& update(std::string_view text);

  template <typename T>
    requires std::is_arithmetic_v<T>
  ContentHasher& update_value(T value) {
    return update(std::as_bytes(std::span<const T, 1>(&value, 1)));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  ContentHasher& update_values(std::span<const T> values) {
    return update(std::as_bytes(values));
  }

  std::string hex_digest();
  std::uint64_t digest64();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);

}  // namespace bodyschema
